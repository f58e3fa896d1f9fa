/*
 * Copyright 2026 The semnav Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SEMNAV_METRICS_HPP_
#define SEMNAV_METRICS_HPP_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gridworld.hpp"
#include "learner.hpp"
#include "planner.hpp"

namespace semnav {

// Mean of -log pi(u*) over all steps. Throws Error(kInvalidArgument) on
// empty input or mismatched lengths.
double nll(std::span<const Policy> policies, std::span<const int> expert_controls);

// Fraction of steps where the lowest-id argmax of pi equals u*.
double accuracy(std::span<const Policy> policies, std::span<const int> expert_controls);

// Reached the goal in at most 2 * expert_steps moves. Collisions and
// timeouts are failures.
bool trajectory_success(const RolloutResult& rollout, int expert_steps);

// Modified Hausdorff distance between two state sequences, cell units.
// Throws Error(kInvalidArgument) if either is empty.
double mhd(std::span<const State> a, std::span<const State> b);

struct DemoReport {
  std::string env_id;
  int expert_steps = 0;
  int scored_steps = 0;
  int fallback_steps = 0;
  double nll = 0.0;
  double acc = 0.0;
  std::string outcome;
  int rollout_steps = 0;
  bool success = false;
  double mhd = 0.0;
};

struct EvalReport {
  double nll = 0.0;
  double acc = 0.0;
  double traj_succ_rate = 0.0;
  double mhd = 0.0;
  int total_steps = 0;
  std::vector<DemoReport> demos;
};

struct EvalOptions {
  PolicyOptions policy;
  SensorParams sensor;
  // Rollout budget as a multiple of the expert length.
  double horizon_factor = 2.0;
  int threads = 1;
};

// Scores every demo (steps the planner cannot handle fall back to the
// uniform policy) and rolls the learned policy out from each start.
EvalReport evaluate(std::span<const Example> examples, const ThetaParams& theta,
                    const EvalOptions& options, const Logger& log = {});

void write_report_table(std::ostream& out, const EvalReport& report);
std::string report_json(const EvalReport& report);

}  // namespace semnav

#endif  // SEMNAV_METRICS_HPP_
