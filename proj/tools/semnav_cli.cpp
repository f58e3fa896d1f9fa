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

// semnav command-line tool. Exit codes: 0 success, 1 usage error,
// 2 validation failure, 3 training did not converge, 4 i/o error,
// 5 unreachable goal, 6 generation failure, 7 internal error.

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semnav.h"

namespace {

struct Options {
  std::string config_path;
  std::optional<unsigned long long> seed;
  std::optional<int> threads;
  std::optional<std::string> endpoint_only;
  std::optional<std::string> encoder;
  std::optional<double> temperature;
  std::vector<std::string> overrides;
  std::string out;
  std::string dataset;
  std::string checkpoint;
  std::optional<int> demo;
  bool quiet = false;
};

void print_line(const char* message, void* /*user*/) { std::fprintf(stderr, "%s\n", message); }

int report(semnav_status status) {
  if (status != SEMNAV_OK) {
    std::fprintf(stderr, "semnav: %s: %s\n", semnav_status_string(status), semnav_last_error());
  }
  return static_cast<int>(status);
}

using ConfigPtr = std::unique_ptr<semnav_config, decltype(&semnav_config_destroy)>;

// Defaults, then the config file, then named flags, then --set overrides.
semnav_status build_config(const Options& options, ConfigPtr& config) {
  semnav_config* raw = nullptr;
  semnav_status status = semnav_config_create(&raw);
  if (status != SEMNAV_OK) return status;
  config.reset(raw);
  if (!options.quiet) semnav_config_set_logger(raw, print_line, nullptr);
  if (!options.config_path.empty()) {
    status = semnav_config_load(raw, options.config_path.c_str());
    if (status != SEMNAV_OK) return status;
  }
  std::vector<std::pair<std::string, std::string>> settings;
  if (options.seed) settings.emplace_back("seed", std::to_string(*options.seed));
  if (options.threads) settings.emplace_back("threads", std::to_string(*options.threads));
  if (options.endpoint_only) settings.emplace_back("map.endpoint_only", *options.endpoint_only);
  if (options.encoder) settings.emplace_back("map.encoder", *options.encoder);
  if (options.temperature) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", *options.temperature);
    settings.emplace_back("policy.temperature", buf);
  }
  if (options.demo) settings.emplace_back("rollout.demo", std::to_string(*options.demo));
  for (const std::string& item : options.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "semnav: --set expects key=value, got '%s'\n", item.c_str());
      return SEMNAV_ERR_USAGE;
    }
    settings.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  for (const auto& [key, value] : settings) {
    status = semnav_config_set(raw, key.c_str(), value.c_str());
    if (status != SEMNAV_OK) return status;
  }
  return SEMNAV_OK;
}

void add_common(CLI::App* cmd, Options& options) {
  cmd->add_option("--config", options.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", options.seed, "random seed");
  cmd->add_option("--threads", options.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--endpoint-only", options.endpoint_only,
                  "update only the cell holding each ray endpoint (true|false)");
  cmd->add_option("--encoder", options.encoder, "inverse observation model")
      ->check(CLI::IsMember({"linear", "network"}));
  cmd->add_option("--temperature", options.temperature, "Boltzmann policy temperature")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--set", options.overrides, "override a configuration key (key=value)");
  cmd->add_flag("-q,--quiet", options.quiet, "suppress progress messages");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn navigation costs from demonstrations with semantic observations"};
  app.require_subcommand(1);
  Options options;

  CLI::App* gen = app.add_subcommand("gen", "generate environments and expert demonstrations");
  add_common(gen, options);
  gen->add_option("--out", options.out, "dataset directory to create")->required();

  CLI::App* train = app.add_subcommand("train", "learn cost parameters from a dataset");
  add_common(train, options);
  train->add_option("--dataset", options.dataset, "training dataset directory")->required();
  train->add_option("--checkpoint", options.checkpoint, "checkpoint to write")->required();
  train->add_option("--out", options.out, "training log (default <checkpoint>.log.jsonl)");

  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a test dataset");
  add_common(eval, options);
  eval->add_option("--dataset", options.dataset, "test dataset directory")->required();
  eval->add_option("--checkpoint", options.checkpoint, "checkpoint to load")->required();
  eval->add_option("--out", options.out, "report directory")->required();

  CLI::App* roll = app.add_subcommand("rollout", "run the learned policy on one dataset entry");
  add_common(roll, options);
  roll->add_option("--dataset", options.dataset, "dataset directory")->required();
  roll->add_option("--checkpoint", options.checkpoint, "checkpoint to load")->required();
  roll->add_option("--out", options.out, "output directory")->required();
  roll->add_option("--demo", options.demo, "dataset entry index")->check(CLI::NonNegativeNumber);

  CLI::App* validate = app.add_subcommand("validate", "check every dataset invariant");
  validate->add_option("--dataset", options.dataset, "dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return SEMNAV_ERR_USAGE;
  }

  if (validate->parsed()) {
    int errors = 0;
    const semnav_status status =
        semnav_validate(options.dataset.c_str(), print_line, nullptr, &errors);
    if (status == SEMNAV_OK) std::printf("ok: %s\n", options.dataset.c_str());
    return report(status);
  }

  ConfigPtr config(nullptr, semnav_config_destroy);
  semnav_status status = build_config(options, config);
  if (status != SEMNAV_OK) return report(status);

  if (gen->parsed()) {
    semnav_gen_summary summary{};
    status = semnav_generate(config.get(), options.out.c_str(), &summary);
    if (status == SEMNAV_OK) {
      std::printf("environments %d\nsteps %d\nobstacle_fraction %.4f\n", summary.environments,
                  summary.steps, summary.mean_obstacle_fraction);
    }
  } else if (train->parsed()) {
    semnav_train_summary summary{};
    status = semnav_train(config.get(), options.dataset.c_str(), options.checkpoint.c_str(),
                          options.out.empty() ? nullptr : options.out.c_str(), &summary);
    if (status == SEMNAV_OK || status == SEMNAV_ERR_NOT_CONVERGED) {
      std::printf("epochs %d\nconverged %s\nnll %.6f\nacc %.6f\nparams %zu\n", summary.epochs,
                  summary.converged ? "yes" : "no", summary.final_nll, summary.final_acc,
                  summary.num_params);
    }
  } else if (eval->parsed()) {
    semnav_metrics metrics{};
    status = semnav_evaluate(config.get(), options.dataset.c_str(), options.checkpoint.c_str(),
                             options.out.c_str(), &metrics);
    if (status == SEMNAV_OK) {
      std::printf("nll %.6f\nacc %.6f\ntraj_succ_rate %.6f\nmhd %.6f\n", metrics.nll, metrics.acc,
                  metrics.traj_succ_rate, metrics.mhd);
    }
  } else if (roll->parsed()) {
    semnav_rollout_summary summary{};
    status = semnav_rollout(config.get(), options.dataset.c_str(), options.checkpoint.c_str(),
                            options.out.c_str(), &summary);
    if (status == SEMNAV_OK) {
      static const char* kOutcomes[] = {"reached_goal", "collision", "timeout"};
      std::printf("outcome %s\nsteps %d\nexpert_steps %d\nsuccess %s\nmhd %.6f\n",
                  kOutcomes[summary.outcome], summary.steps, summary.expert_steps,
                  summary.success ? "yes" : "no", summary.mhd);
    }
  }
  return report(status);
}
