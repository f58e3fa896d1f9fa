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

#ifndef SEMNAV_COMMANDS_HPP_
#define SEMNAV_COMMANDS_HPP_

#include <filesystem>

#include "dataset.hpp"
#include "learner.hpp"
#include "metrics.hpp"
#include "run_config.hpp"

namespace semnav {

// Each command checks its paths before doing any work and reports failures
// as semnav::Error.

struct GenSummary {
  int environments = 0;
  int steps = 0;
  double mean_obstacle_fraction = 0.0;
};

GenSummary cmd_gen(const RunConfig& config, const std::filesystem::path& out,
                   const Logger& log = {});

struct TrainSummary {
  bool converged = false;
  int epochs = 0;
  double final_nll = 0.0;
  double final_acc = 0.0;
  std::size_t num_params = 0;
};

// Writes the checkpoint and a line-delimited training log (defaults to
// <checkpoint>.log.jsonl). The checkpoint is written even when training
// stops at max_epochs.
TrainSummary cmd_train(const RunConfig& config, const std::filesystem::path& dataset,
                       const std::filesystem::path& checkpoint,
                       const std::filesystem::path& log_path = {}, const Logger& log = {});

// Writes report.txt and report.json into out.
EvalReport cmd_eval(const RunConfig& config, const std::filesystem::path& dataset,
                    const std::filesystem::path& checkpoint, const std::filesystem::path& out,
                    const Logger& log = {});

struct RolloutSummary {
  std::string env_id;
  RolloutOutcome outcome = RolloutOutcome::kTimeout;
  int steps = 0;
  int expert_steps = 0;
  bool success = false;
  double mhd = 0.0;
};

// Rolls out on dataset entry config.rollout_demo. Writes trajectory.csv,
// outcome.json, ground_truth.csv and, when enabled, per-step posterior and
// cost grids under grids/.
RolloutSummary cmd_rollout(const RunConfig& config, const std::filesystem::path& dataset,
                           const std::filesystem::path& checkpoint,
                           const std::filesystem::path& out, const Logger& log = {});

ValidationReport cmd_validate(const std::filesystem::path& dataset);

}  // namespace semnav

#endif  // SEMNAV_COMMANDS_HPP_
