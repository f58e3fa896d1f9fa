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

#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "checkpoint.hpp"
#include "error.hpp"
#include "json.hpp"

namespace semnav {

namespace fs = std::filesystem;

namespace {

void emit(const Logger& log, const std::string& message) {
  if (log) log(message);
}

// The directory may exist; otherwise its parent must.
void check_output_dir(const fs::path& dir) {
  if (dir.empty()) throw Error(ErrorCode::kInvalidArgument, "output path is empty");
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) {
      throw Error(ErrorCode::kIo, dir.string() + " exists and is not a directory");
    }
    return;
  }
  const fs::path parent = fs::absolute(dir, ec).parent_path();
  if (ec || !fs::is_directory(parent, ec)) {
    throw Error(ErrorCode::kIo, "parent directory of " + dir.string() + " does not exist");
  }
}

void make_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
}

void check_output_file(const fs::path& file) {
  if (file.empty()) throw Error(ErrorCode::kInvalidArgument, "output file path is empty");
  std::error_code ec;
  if (fs::is_directory(file, ec)) {
    throw Error(ErrorCode::kIo, file.string() + " is a directory");
  }
  const fs::path parent = fs::absolute(file, ec).parent_path();
  if (ec || !fs::is_directory(parent, ec)) {
    throw Error(ErrorCode::kIo, "parent directory of " + file.string() + " does not exist");
  }
}

void check_input_file(const fs::path& file) {
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) throw Error(ErrorCode::kIo, "cannot read " + file.string());
}

int dataset_classes(const Dataset& dataset) {
  const int k = dataset.envs.front().num_classes;
  for (const EnvironmentSpec& env : dataset.envs) {
    if (env.num_classes != k) {
      throw Error(ErrorCode::kValidation, "environments disagree on the number of classes");
    }
  }
  return k;
}

ThetaParams load_model(const fs::path& checkpoint, int num_classes) {
  ThetaParams theta = load_checkpoint(checkpoint);
  if (theta.psi.num_classes != num_classes) {
    throw Error(ErrorCode::kValidation, "checkpoint was trained for a different class count");
  }
  return theta;
}

}  // namespace

GenSummary cmd_gen(const RunConfig& config, const fs::path& out, const Logger& log) {
  validate_config(config);
  check_output_dir(out);
  const Dataset dataset = generate_dataset(generation_config(config));
  write_dataset(out, dataset);

  GenSummary summary;
  summary.environments = static_cast<int>(dataset.envs.size());
  double fraction = 0.0;
  for (std::size_t n = 0; n < dataset.envs.size(); ++n) {
    const EnvironmentSpec& env = dataset.envs[n];
    int obstacles = 0;
    for (int label : env.labels) obstacles += env.is_obstacle_class(label);
    fraction += static_cast<double>(obstacles) / env.num_cells();
    summary.steps += static_cast<int>(dataset.demos[n].steps.size());
  }
  summary.mean_obstacle_fraction = fraction / summary.environments;
  char line[160];
  std::snprintf(line, sizeof(line),
                "wrote %d environments, %d demonstrations, %d steps (mean obstacle fraction %.3f) to %s",
                summary.environments, summary.environments, summary.steps,
                summary.mean_obstacle_fraction, out.string().c_str());
  emit(log, line);
  return summary;
}

TrainSummary cmd_train(const RunConfig& config, const fs::path& dataset_dir,
                       const fs::path& checkpoint, const fs::path& log_path, const Logger& log) {
  validate_config(config);
  const fs::path log_file = log_path.empty() ? fs::path(checkpoint.string() + ".log.jsonl")
                                             : log_path;
  check_output_file(checkpoint);
  check_output_file(log_file);
  const Dataset dataset = load_dataset(dataset_dir);
  const int num_classes = dataset_classes(dataset);
  const std::vector<Example> examples = dataset.examples();

  ThetaParams theta = initial_theta(config, num_classes);
  emit(log, "training " + std::to_string(theta.size()) + " parameters on " +
                std::to_string(examples.size()) + " demonstrations");
  std::string records;
  const auto on_epoch = [&](const EpochRecord& r) {
    nlohmann::ordered_json j{{"epoch", r.epoch},
                             {"mean_nll", r.mean_nll},
                             {"acc", r.accuracy},
                             {"skipped", r.skipped},
                             {"wall_seconds", r.wall_seconds}};
    records += j.dump() + "\n";
    char line[128];
    std::snprintf(line, sizeof(line), "epoch %4d  nll %.5f  acc %.4f  (%.2fs)", r.epoch,
                  r.mean_nll, r.accuracy, r.wall_seconds);
    emit(log, line);
  };
  TrainResult result = train(examples, std::move(theta), train_config(config), log, on_epoch);
  save_checkpoint(checkpoint, result.theta);
  write_file(log_file, records);

  TrainSummary summary;
  summary.converged = result.converged;
  summary.epochs = static_cast<int>(result.log.size());
  summary.final_nll = result.log.back().mean_nll;
  summary.final_acc = result.log.back().accuracy;
  summary.num_params = result.theta.size();
  emit(log, std::string(summary.converged ? "converged" : "stopped at max epochs") + " after " +
                std::to_string(summary.epochs) + " epochs; checkpoint " + checkpoint.string());
  return summary;
}

EvalReport cmd_eval(const RunConfig& config, const fs::path& dataset_dir,
                    const fs::path& checkpoint, const fs::path& out, const Logger& log) {
  validate_config(config);
  check_input_file(checkpoint);
  check_output_dir(out);
  const Dataset dataset = load_dataset(dataset_dir);
  const ThetaParams theta = load_model(checkpoint, dataset_classes(dataset));

  EvalOptions options;
  options.policy = policy_options(config);
  options.sensor = dataset.manifest.sensor;
  options.horizon_factor = config.horizon_factor;
  options.threads = config.threads;
  const std::vector<Example> examples = dataset.examples();
  const EvalReport report = evaluate(examples, theta, options, log);

  make_output_dir(out);
  std::ostringstream table;
  write_report_table(table, report);
  write_file(out / "report.txt", table.str());
  write_file(out / "report.json", report_json(report));
  emit(log, table.str());
  return report;
}

RolloutSummary cmd_rollout(const RunConfig& config, const fs::path& dataset_dir,
                           const fs::path& checkpoint, const fs::path& out, const Logger& log) {
  validate_config(config);
  check_input_file(checkpoint);
  check_output_dir(out);
  const Dataset dataset = load_dataset(dataset_dir);
  const ThetaParams theta = load_model(checkpoint, dataset_classes(dataset));
  if (config.rollout_demo >= static_cast<int>(dataset.demos.size())) {
    throw Error(ErrorCode::kInvalidArgument,
                "rollout.demo " + std::to_string(config.rollout_demo) + " out of range (" +
                    std::to_string(dataset.demos.size()) + " demos)");
  }
  const EnvironmentSpec& env = dataset.envs[config.rollout_demo];
  const Demonstration& demo = dataset.demos[config.rollout_demo];

  make_output_dir(out);
  const fs::path grids = out / "grids";
  if (config.rollout_export) make_output_dir(grids);
  write_grid_csv(out / "ground_truth.csv", env.labels, env.width, env.height);

  const SensorParams sensor = dataset.manifest.sensor;
  const ObservationSource observe = [&](State x) { return simulate_scan(x, env, sensor); };
  const auto on_step = [&](const RolloutFrame& frame) {
    if (!config.rollout_export) return;
    char prefix[32];
    std::snprintf(prefix, sizeof(prefix), "step_%04d", frame.t);
    export_posterior(grids, prefix, *frame.posterior, env.width, env.height, env.num_classes);
    write_grid_csv(grids / (std::string(prefix) + "_cost.csv"), frame.cost->cell_cost,
                   env.width, env.height);
  };
  const int expert_steps = static_cast<int>(demo.steps.size());
  const int budget = static_cast<int>(std::ceil(config.horizon_factor * expert_steps));
  const RolloutResult result = rollout(env, observe, demo.start, demo.goal, theta, budget,
                                       policy_options(config), on_step);

  std::string trajectory = "t,i,j,control\n";
  for (std::size_t t = 0; t < result.states.size(); ++t) {
    const State s = result.states[t];
    const int u = t < result.controls.size() ? result.controls[t] : -1;
    trajectory += std::to_string(t) + "," + std::to_string(s.i) + "," + std::to_string(s.j) +
                  "," + std::to_string(u) + "\n";
  }
  write_file(out / "trajectory.csv", trajectory);

  RolloutSummary summary;
  summary.env_id = env.id;
  summary.outcome = result.outcome;
  summary.steps = static_cast<int>(result.controls.size());
  summary.expert_steps = expert_steps;
  summary.success = trajectory_success(result, expert_steps);
  summary.mhd = mhd(result.states, demo.state_sequence());
  nlohmann::ordered_json j{{"env", env.id},
                           {"start", {demo.start.i, demo.start.j}},
                           {"goal", {demo.goal.i, demo.goal.j}},
                           {"outcome", to_string(result.outcome)},
                           {"steps", summary.steps},
                           {"expert_steps", expert_steps},
                           {"fallback_steps", result.fallback_steps},
                           {"success", summary.success},
                           {"mhd", summary.mhd}};
  write_file(out / "outcome.json", j.dump(2) + "\n");
  char line[160];
  std::snprintf(line, sizeof(line), "env %s: %s after %d steps (expert %d), MHD %.4f",
                env.id.c_str(), to_string(result.outcome), summary.steps, expert_steps,
                summary.mhd);
  emit(log, line);
  return summary;
}

ValidationReport cmd_validate(const fs::path& dataset) { return validate_dataset(dataset); }

}  // namespace semnav
