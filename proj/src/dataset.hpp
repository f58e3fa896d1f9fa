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

#ifndef SEMNAV_DATASET_HPP_
#define SEMNAV_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gridworld.hpp"
#include "learner.hpp"

namespace semnav {

// Directory layout:
//   dataset.json     manifest (entries with start and goal, sensor, true
//                    cost, seed)
//   env_<id>.json    EnvironmentSpec
//   demo_<id>.jsonl  one step per line
struct DatasetEntry {
  std::string id;
  State start;
  State goal;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  SensorParams sensor;
  TrueCost true_cost;
  std::vector<DatasetEntry> entries;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<EnvironmentSpec> envs;
  std::vector<Demonstration> demos;

  // Views into envs/demos; invalidated when either vector reallocates.
  std::vector<Example> examples() const;
};

struct GenerationConfig {
  int count = 100;
  int width = 32;
  int height = 32;
  int num_classes = 2;
  std::uint64_t seed = 0;
  GeneratorParams generator;
  SensorParams sensor;
  TrueCost true_cost{{1.0, 5.0, 1.0}};
  // Euclidean start-goal separation, cells.
  double min_separation = 8.0;
  double max_separation = 20.0;
  int max_pair_attempts = 200;
};

void validate_generation_config(const GenerationConfig& config);

// One environment and one expert demo per entry, deterministic in seed.
Dataset generate_dataset(const GenerationConfig& config);

std::string environment_to_json(const EnvironmentSpec& env);
EnvironmentSpec environment_from_json(const std::string& text);
std::string demonstration_to_jsonl(const Demonstration& demo);
// The entry supplies env id, start and goal, which an empty demo cannot.
Demonstration demonstration_from_jsonl(const std::string& text, const DatasetEntry& entry,
                                       int num_classes);

// Throws Error(kIo) on filesystem failures.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
// Parses and validates every file; throws Error(kValidation) on the first
// violation.
Dataset load_dataset(const std::filesystem::path& dir);

struct ValidationReport {
  int environments = 0;
  int demonstrations = 0;
  int steps = 0;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

// Checks every file in the directory and collects all violations.
ValidationReport validate_dataset(const std::filesystem::path& dir);

// Reads a whole file; throws Error(kIo).
std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and a rename; throws Error(kIo).
void write_file(const std::filesystem::path& path, const std::string& contents);

// width x height values, one grid row per line, row j = 0 first.
void write_grid_csv(const std::filesystem::path& path, std::span<const double> values,
                    int width, int height);
void write_grid_csv(const std::filesystem::path& path, std::span<const int> values, int width,
                    int height);

// One CSV per class holding P(class k) plus <prefix>_argmax.csv.
void export_posterior(const std::filesystem::path& dir, const std::string& prefix,
                      std::span<const double> posterior, int width, int height,
                      int num_classes);

}  // namespace semnav

#endif  // SEMNAV_DATASET_HPP_
