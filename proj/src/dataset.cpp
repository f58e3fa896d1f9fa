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

#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "json.hpp"
#include "rng.hpp"

namespace semnav {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kManifestName = "dataset.json";
constexpr int kFormatVersion = 1;

std::string env_file(const std::string& id) { return "env_" + id + ".json"; }
std::string demo_file(const std::string& id) { return "demo_" + id + ".jsonl"; }

ordered_json state_json(State s) { return ordered_json::array({s.i, s.j}); }

State state_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::kValidation, "state must be [i, j]");
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

// Wraps parse and type errors from the JSON layer.
template <typename Fn>
auto parse_or_throw(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, what + ": " + e.what());
  }
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  ordered_json j;
  j["format"] = kFormatVersion;
  j["seed"] = manifest.seed;
  j["sensor"] = {{"num_rays", manifest.sensor.num_rays},
                 {"max_range", manifest.sensor.max_range},
                 {"label_noise", manifest.sensor.label_noise}};
  j["true_cost"] = manifest.true_cost.per_class;
  ordered_json entries = ordered_json::array();
  for (const DatasetEntry& e : manifest.entries) {
    entries.push_back({{"id", e.id}, {"start", state_json(e.start)}, {"goal", state_json(e.goal)}});
  }
  j["entries"] = std::move(entries);
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  return parse_or_throw(kManifestName, [&] {
    const json j = json::parse(text);
    if (j.at("format").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::kValidation, "unsupported dataset format");
    }
    DatasetManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    const json& sensor = j.at("sensor");
    m.sensor.num_rays = sensor.at("num_rays").get<int>();
    m.sensor.max_range = sensor.at("max_range").get<double>();
    m.sensor.label_noise = sensor.at("label_noise").get<double>();
    m.true_cost.per_class = j.at("true_cost").get<std::vector<double>>();
    for (const json& e : j.at("entries")) {
      m.entries.push_back(
          {e.at("id").get<std::string>(), state_from(e.at("start")), state_from(e.at("goal"))});
    }
    return m;
  });
}

// Checks that do not need a parsed environment.
void check_entry_id(const std::string& id) {
  if (id.empty() || id.find_first_of("/\\. ") != std::string::npos) {
    throw Error(ErrorCode::kValidation, "invalid dataset entry id '" + id + "'");
  }
}

}  // namespace

std::vector<Example> Dataset::examples() const {
  std::vector<Example> out;
  out.reserve(demos.size());
  for (std::size_t n = 0; n < demos.size(); ++n) out.push_back({&envs[n], &demos[n]});
  return out;
}

void validate_generation_config(const GenerationConfig& config) {
  const auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kInvalidArgument, why);
  };
  if (config.count < 1) fail("gen.count must be >= 1");
  if (config.width < 8 || config.height < 8) fail("grid must be at least 8x8");
  if (config.num_classes < 2) fail("gen.num_classes must be >= 2");
  if (static_cast<int>(config.true_cost.per_class.size()) != config.num_classes + 1) {
    fail("gen.true_cost needs num_classes + 1 entries");
  }
  for (double c : config.true_cost.per_class) {
    if (!(c > 0.0) || !std::isfinite(c)) fail("gen.true_cost entries must be positive");
  }
  if (!(config.min_separation >= 0.0 && config.max_separation >= config.min_separation)) {
    fail("separation bounds must satisfy 0 <= min <= max");
  }
  if (config.sensor.num_rays < 1 || !(config.sensor.max_range > 0.0)) {
    fail("sensor needs at least one ray and a positive range");
  }
  if (!(config.sensor.label_noise >= 0.0 && config.sensor.label_noise < 1.0)) {
    fail("sensor.noise must lie in [0, 1)");
  }
}

Dataset generate_dataset(const GenerationConfig& config) {
  validate_generation_config(config);
  Dataset dataset;
  dataset.manifest.seed = config.seed;
  dataset.manifest.sensor = config.sensor;
  dataset.manifest.true_cost = config.true_cost;
  Rng rng(config.seed);

  const int max_env_attempts = 8 * config.count + 32;
  int attempts = 0;
  while (static_cast<int>(dataset.demos.size()) < config.count) {
    if (++attempts > max_env_attempts) {
      throw Error(ErrorCode::kGenerationFailed,
                  "could not place enough start/goal pairs; relax the separation bounds");
    }
    const std::uint64_t env_seed = rng.next();
    EnvironmentSpec env = generate_environment(config.width, config.height,
                                               config.num_classes, env_seed, config.generator);
    char id[16];
    std::snprintf(id, sizeof(id), "%04zu", dataset.demos.size());
    env.id = id;

    std::vector<int> component;
    label_free_components(env, component);
    std::vector<int> size(env.num_cells(), 0);
    for (int c : component) {
      if (c >= 0) ++size[c];
    }
    const int largest = static_cast<int>(std::max_element(size.begin(), size.end()) - size.begin());
    std::vector<int> cells;
    for (int n = 0; n < env.num_cells(); ++n) {
      if (component[n] == largest) cells.push_back(n);
    }
    const int last = static_cast<int>(cells.size()) - 1;

    for (int k = 0; k < config.max_pair_attempts; ++k) {
      const State start = env.state(cells[rng.uniform_int(0, last)]);
      const State goal = env.state(cells[rng.uniform_int(0, last)]);
      const double separation = std::hypot(double(start.i - goal.i), double(start.j - goal.j));
      if (separation < config.min_separation || separation > config.max_separation) continue;
      dataset.demos.push_back(
          generate_expert_demo(env, start, goal, config.true_cost, config.sensor));
      dataset.manifest.entries.push_back({env.id, start, goal});
      dataset.envs.push_back(std::move(env));
      break;
    }
  }
  return dataset;
}

std::string environment_to_json(const EnvironmentSpec& env) {
  ordered_json j;
  j["id"] = env.id;
  j["width"] = env.width;
  j["height"] = env.height;
  j["resolution"] = env.resolution;
  j["num_classes"] = env.num_classes;
  j["obstacle_classes"] = env.obstacle_classes;
  j["ray_visible_classes"] = env.ray_visible_classes;
  j["seed"] = env.seed;
  j["labels"] = env.labels;
  return j.dump() + "\n";
}

EnvironmentSpec environment_from_json(const std::string& text) {
  return parse_or_throw("environment", [&] {
    const json j = json::parse(text);
    EnvironmentSpec env;
    env.id = j.at("id").get<std::string>();
    env.width = j.at("width").get<int>();
    env.height = j.at("height").get<int>();
    env.resolution = j.at("resolution").get<double>();
    env.num_classes = j.at("num_classes").get<int>();
    env.obstacle_classes = j.at("obstacle_classes").get<std::vector<int>>();
    env.ray_visible_classes = j.at("ray_visible_classes").get<std::vector<int>>();
    env.seed = j.at("seed").get<std::uint64_t>();
    env.labels = j.at("labels").get<std::vector<int>>();
    return env;
  });
}

std::string demonstration_to_jsonl(const Demonstration& demo) {
  std::string out;
  for (std::size_t t = 0; t < demo.steps.size(); ++t) {
    const DemoStep& step = demo.steps[t];
    ordered_json j;
    j["t"] = t;
    j["env"] = demo.env_id;
    j["state"] = state_json(step.state);
    j["control"] = step.control;
    j["goal"] = state_json(demo.goal);
    ordered_json points = ordered_json::array();
    for (std::size_t n = 0; n < step.scan.size(); ++n) {
      const Point2 p = step.scan.position(n);
      const auto y = step.scan.likelihood(n);
      points.push_back({{"p", {p.x, p.y}}, {"y", std::vector<double>(y.begin(), y.end())}});
    }
    j["points"] = std::move(points);
    out += j.dump();
    out += '\n';
  }
  return out;
}

Demonstration demonstration_from_jsonl(const std::string& text, const DatasetEntry& entry,
                                       int num_classes) {
  Demonstration demo;
  demo.env_id = entry.id;
  demo.start = entry.start;
  demo.goal = entry.goal;
  std::istringstream lines(text);
  std::string line;
  std::size_t t = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const std::string where = "demo " + entry.id + " line " + std::to_string(t + 1);
    parse_or_throw(where, [&] {
      const json j = json::parse(line);
      if (j.at("t").get<std::size_t>() != t) {
        throw Error(ErrorCode::kValidation, where + ": steps out of order");
      }
      if (j.at("env").get<std::string>() != entry.id) {
        throw Error(ErrorCode::kValidation, where + ": env id mismatch");
      }
      if (!(state_from(j.at("goal")) == entry.goal)) {
        throw Error(ErrorCode::kValidation, where + ": goal disagrees with the manifest");
      }
      DemoStep step;
      step.state = state_from(j.at("state"));
      step.control = j.at("control").get<int>();
      step.scan = SemanticPointCloud(num_classes);
      for (const json& point : j.at("points")) {
        const json& p = point.at("p");
        const auto y = point.at("y").get<std::vector<double>>();
        if (static_cast<int>(y.size()) != num_classes) {
          throw Error(ErrorCode::kValidation, where + ": likelihood length != K");
        }
        step.scan.add({p.at(0).get<double>(), p.at(1).get<double>()}, y);
      }
      demo.steps.push_back(std::move(step));
      return 0;
    });
    ++t;
  }
  return demo;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed: " + path.string());
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot move into place: " + path.string());
}

void write_dataset(const fs::path& dir, const Dataset& dataset) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "cannot create dataset directory " + dir.string());
  }
  for (std::size_t n = 0; n < dataset.envs.size(); ++n) {
    const std::string& id = dataset.manifest.entries[n].id;
    write_file(dir / env_file(id), environment_to_json(dataset.envs[n]));
    write_file(dir / demo_file(id), demonstration_to_jsonl(dataset.demos[n]));
  }
  // Last, so a partially written directory has no manifest.
  write_file(dir / kManifestName, manifest_to_json(dataset.manifest));
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "dataset directory not found: " + dir.string());
  }
  Dataset dataset;
  dataset.manifest = manifest_from_json(read_file(dir / kManifestName));
  if (dataset.manifest.entries.empty()) throw Error(ErrorCode::kValidation, "dataset is empty");
  for (const DatasetEntry& entry : dataset.manifest.entries) {
    check_entry_id(entry.id);
    EnvironmentSpec env = environment_from_json(read_file(dir / env_file(entry.id)));
    if (env.id != entry.id) {
      throw Error(ErrorCode::kValidation, "env file " + entry.id + " holds id " + env.id);
    }
    validate_environment(env);
    if (static_cast<int>(dataset.manifest.true_cost.per_class.size()) != env.num_classes + 1) {
      throw Error(ErrorCode::kValidation, "true cost length disagrees with env " + entry.id);
    }
    Demonstration demo = demonstration_from_jsonl(read_file(dir / demo_file(entry.id)), entry,
                                                  env.num_classes);
    validate_demonstration(demo, env);
    dataset.envs.push_back(std::move(env));
    dataset.demos.push_back(std::move(demo));
  }
  return dataset;
}

ValidationReport validate_dataset(const fs::path& dir) {
  ValidationReport report;
  DatasetManifest manifest;
  try {
    if (!fs::is_directory(dir)) {
      throw Error(ErrorCode::kIo, "dataset directory not found: " + dir.string());
    }
    manifest = manifest_from_json(read_file(dir / kManifestName));
  } catch (const Error& e) {
    report.errors.push_back(e.what());
    return report;
  }
  if (manifest.entries.empty()) report.errors.push_back("dataset is empty");
  for (const DatasetEntry& entry : manifest.entries) {
    try {
      check_entry_id(entry.id);
      const EnvironmentSpec env = environment_from_json(read_file(dir / env_file(entry.id)));
      if (env.id != entry.id) {
        throw Error(ErrorCode::kValidation, "env file " + entry.id + " holds id " + env.id);
      }
      validate_environment(env);
      ++report.environments;
      const Demonstration demo = demonstration_from_jsonl(
          read_file(dir / demo_file(entry.id)), entry, env.num_classes);
      validate_demonstration(demo, env);
      ++report.demonstrations;
      report.steps += static_cast<int>(demo.steps.size());
    } catch (const Error& e) {
      report.errors.push_back(std::string(e.what()));
    }
  }
  return report;
}

namespace {

template <typename T>
void write_grid(const fs::path& path, std::span<const T> values, int width, int height) {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kShapeMismatch, "grid export size mismatch");
  }
  std::string out;
  char cell[32];
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      if constexpr (std::is_floating_point_v<T>) {
        std::snprintf(cell, sizeof(cell), "%.17g", values[j * width + i]);
      } else {
        std::snprintf(cell, sizeof(cell), "%d", values[j * width + i]);
      }
      if (i > 0) out += ',';
      out += cell;
    }
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace

void write_grid_csv(const fs::path& path, std::span<const double> values, int width,
                    int height) {
  write_grid(path, values, width, height);
}

void write_grid_csv(const fs::path& path, std::span<const int> values, int width, int height) {
  write_grid(path, values, width, height);
}

void export_posterior(const fs::path& dir, const std::string& prefix,
                      std::span<const double> posterior, int width, int height,
                      int num_classes) {
  const std::size_t cells = static_cast<std::size_t>(width) * height;
  const std::size_t stride = num_classes + 1;
  if (posterior.size() != cells * stride) {
    throw Error(ErrorCode::kShapeMismatch, "posterior export size mismatch");
  }
  std::vector<double> channel(cells);
  for (std::size_t k = 0; k < stride; ++k) {
    for (std::size_t n = 0; n < cells; ++n) channel[n] = posterior[n * stride + k];
    write_grid_csv(dir / (prefix + "_class" + std::to_string(k) + ".csv"), channel, width,
                   height);
  }
  std::vector<int> argmax(cells);
  for (std::size_t n = 0; n < cells; ++n) {
    const auto row = posterior.subspan(n * stride, stride);
    argmax[n] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  write_grid_csv(dir / (prefix + "_argmax.csv"), argmax, width, height);
}

}  // namespace semnav
