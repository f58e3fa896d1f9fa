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

#ifndef SEMNAV_RUN_CONFIG_HPP_
#define SEMNAV_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cost_model.hpp"
#include "dataset.hpp"
#include "learner.hpp"
#include "semantic_map.hpp"

namespace semnav {

// Everything a command needs besides paths. Populated from a "key = value"
// file ('#' starts a comment) and then from command-line overrides.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;

  GenerationConfig gen;

  EncoderMode encoder = EncoderMode::kLinear;
  double map_epsilon = 1.0;
  bool endpoint_only = true;
  int map_hidden = 16;
  double lambda_free = 0.3;

  CostArchitecture cost;

  TrainConfig train;
  double temperature = 1.0;

  double horizon_factor = 2.0;  // rollout budget, multiples of the expert length
  int rollout_demo = 0;         // dataset entry used by the rollout command
  bool rollout_export = true;   // per-step posterior and cost CSV grids
};

// All recognized keys, in file order.
const std::vector<std::string>& config_keys();

// Throws Error(kInvalidArgument) for unknown keys or unparsable values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

void apply_config_text(RunConfig& config, const std::string& text);
// Throws Error(kIo) when the file cannot be read.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// Every key with its current value, parseable by apply_config_text.
std::string config_to_text(const RunConfig& config);

// Cross-field checks; throws Error(kInvalidArgument).
void validate_config(const RunConfig& config);

// Derived component settings. seed and temperature are shared.
GenerationConfig generation_config(const RunConfig& config);
TrainConfig train_config(const RunConfig& config);
PolicyOptions policy_options(const RunConfig& config);
ThetaParams initial_theta(const RunConfig& config, int num_classes);

}  // namespace semnav

#endif  // SEMNAV_RUN_CONFIG_HPP_
