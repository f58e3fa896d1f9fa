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

#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "error.hpp"
#include "json.hpp"

namespace semnav {

namespace {

void check_lengths(std::span<const Policy> policies, std::span<const int> controls) {
  if (policies.empty() || policies.size() != controls.size()) {
    throw Error(ErrorCode::kInvalidArgument, "need one policy per expert control");
  }
}

double directed_mean_distance(std::span<const State> from, std::span<const State> to) {
  double total = 0.0;
  for (const State& a : from) {
    double best = kInfinity;
    for (const State& b : to) {
      best = std::min(best, std::hypot(double(a.i - b.i), double(a.j - b.j)));
    }
    total += best;
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

double nll(std::span<const Policy> policies, std::span<const int> expert_controls) {
  check_lengths(policies, expert_controls);
  double total = 0.0;
  for (std::size_t t = 0; t < policies.size(); ++t) {
    total -= std::log(policies[t].probs[expert_controls[t]]);
  }
  return total / static_cast<double>(policies.size());
}

double accuracy(std::span<const Policy> policies, std::span<const int> expert_controls) {
  check_lengths(policies, expert_controls);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < policies.size(); ++t) {
    hits += argmax_control(policies[t]) == expert_controls[t];
  }
  return static_cast<double>(hits) / static_cast<double>(policies.size());
}

bool trajectory_success(const RolloutResult& rollout, int expert_steps) {
  return rollout.outcome == RolloutOutcome::kReachedGoal &&
         rollout.controls.size() <= 2 * static_cast<std::size_t>(expert_steps);
}

double mhd(std::span<const State> a, std::span<const State> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "trajectories must be non-empty");
  }
  return std::max(directed_mean_distance(a, b), directed_mean_distance(b, a));
}

EvalReport evaluate(std::span<const Example> examples, const ThetaParams& theta,
                    const EvalOptions& options, const Logger& log) {
  if (examples.empty()) throw Error(ErrorCode::kInvalidArgument, "test set is empty");
  std::vector<DemoReport> demos(examples.size());
  std::vector<double> nll_sums(examples.size());
  std::vector<int> correct(examples.size());

  const std::size_t workers =
      std::min<std::size_t>(std::max(options.threads, 1), examples.size());
  auto run = [&](std::size_t k) {
    const Example& example = examples[k];
    const EnvironmentSpec& env = *example.env;
    const Demonstration& demo = *example.demo;
    DemoReport& report = demos[k];
    report.env_id = demo.env_id;
    report.expert_steps = static_cast<int>(demo.steps.size());

    const DemoEvaluation scored =
        evaluate_demo(example, theta, options.policy, false, false, log, true);
    report.scored_steps = scored.steps;
    report.fallback_steps = scored.skipped;
    nll_sums[k] = scored.nll_sum;
    correct[k] = scored.correct;
    if (scored.steps > 0) {
      report.nll = scored.nll_sum / scored.steps;
      report.acc = static_cast<double>(scored.correct) / scored.steps;
    }

    const int budget =
        static_cast<int>(std::ceil(options.horizon_factor * report.expert_steps));
    const ObservationSource observe = [&](State x) {
      return simulate_scan(x, env, options.sensor);
    };
    const RolloutResult result =
        rollout(env, observe, demo.start, demo.goal, theta, budget, options.policy);
    report.outcome = to_string(result.outcome);
    report.rollout_steps = static_cast<int>(result.controls.size());
    report.success = trajectory_success(result, report.expert_steps);
    const std::vector<State> expert = demo.state_sequence();
    report.mhd = mhd(result.states, expert);
  };
  if (workers <= 1) {
    for (std::size_t k = 0; k < examples.size(); ++k) run(k);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < examples.size(); k += workers) run(k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  EvalReport report;
  double nll_total = 0.0;
  long correct_total = 0;
  int successes = 0;
  double mhd_total = 0.0;
  for (std::size_t k = 0; k < demos.size(); ++k) {
    nll_total += nll_sums[k];
    correct_total += correct[k];
    report.total_steps += demos[k].scored_steps;
    successes += demos[k].success;
    mhd_total += demos[k].mhd;
  }
  if (report.total_steps > 0) {
    report.nll = nll_total / report.total_steps;
    report.acc = static_cast<double>(correct_total) / report.total_steps;
  }
  report.traj_succ_rate = static_cast<double>(successes) / demos.size();
  report.mhd = mhd_total / demos.size();
  report.demos = std::move(demos);
  return report;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %6s %6s %9s %8s %6s %8s %-13s %7s\n", "env",
                "steps", "fall", "nll", "acc", "roll", "mhd", "outcome", "success");
  out << line;
  for (const DemoReport& d : report.demos) {
    std::snprintf(line, sizeof(line), "%-10s %6d %6d %9.4f %8.4f %6d %8.4f %-13s %7s\n",
                  d.env_id.c_str(), d.expert_steps, d.fallback_steps, d.nll, d.acc,
                  d.rollout_steps, d.mhd, d.outcome.c_str(), d.success ? "yes" : "no");
    out << line;
  }
  std::snprintf(line, sizeof(line),
                "\nNLL %.4f   Acc %.2f%%   Traj.Succ %.2f%%   MHD %.4f   (%zu demos, %d steps)\n",
                report.nll, 100.0 * report.acc, 100.0 * report.traj_succ_rate, report.mhd,
                report.demos.size(), report.total_steps);
  out << line;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["nll"] = report.nll;
  j["acc"] = report.acc;
  j["traj_succ_rate"] = report.traj_succ_rate;
  j["mhd"] = report.mhd;
  j["total_steps"] = report.total_steps;
  nlohmann::ordered_json demos = nlohmann::ordered_json::array();
  for (const DemoReport& d : report.demos) {
    demos.push_back({{"env", d.env_id},
                     {"expert_steps", d.expert_steps},
                     {"scored_steps", d.scored_steps},
                     {"fallback_steps", d.fallback_steps},
                     {"nll", d.nll},
                     {"acc", d.acc},
                     {"outcome", d.outcome},
                     {"rollout_steps", d.rollout_steps},
                     {"success", d.success},
                     {"mhd", d.mhd}});
  }
  j["demos"] = std::move(demos);
  return j.dump(2) + "\n";
}

}  // namespace semnav
