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

#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "error.hpp"

namespace semnav {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kInvalidArgument, "bad value for " + key + ": '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value);
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (used != value.size() || !std::isfinite(out)) bad_value(key, value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) items.push_back(trim(item));
  return items;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string fmt_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t n = 0; n < values.size(); ++n) {
    if (n > 0) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(values[n]);
    } else {
      out += std::to_string(values[n]);
    }
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SEMNAV_INT_FIELD(name, member)                                            \
  Field {                                                                         \
    name,                                                                         \
        [](RunConfig& c, const std::string& k, const std::string& v) {            \
          c.member = parse_integer<int>(k, v);                                    \
        },                                                                        \
        [](const RunConfig& c) { return std::to_string(c.member); }               \
  }
#define SEMNAV_DOUBLE_FIELD(name, member)                                         \
  Field {                                                                         \
    name,                                                                         \
        [](RunConfig& c, const std::string& k, const std::string& v) {            \
          c.member = parse_double(k, v);                                          \
        },                                                                        \
        [](const RunConfig& c) { return fmt(c.member); }                          \
  }
#define SEMNAV_BOOL_FIELD(name, member)                                           \
  Field {                                                                         \
    name,                                                                         \
        [](RunConfig& c, const std::string& k, const std::string& v) {            \
          c.member = parse_bool(k, v);                                            \
        },                                                                        \
        [](const RunConfig& c) { return fmt(c.member); }                          \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_integer<std::uint64_t>(k, v);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      SEMNAV_INT_FIELD("threads", threads),

      SEMNAV_INT_FIELD("gen.count", gen.count),
      SEMNAV_INT_FIELD("gen.width", gen.width),
      SEMNAV_INT_FIELD("gen.height", gen.height),
      SEMNAV_INT_FIELD("gen.num_classes", gen.num_classes),
      SEMNAV_INT_FIELD("gen.road_width", gen.generator.road_width),
      SEMNAV_INT_FIELD("gen.block_min", gen.generator.block_min),
      SEMNAV_INT_FIELD("gen.block_max", gen.generator.block_max),
      SEMNAV_DOUBLE_FIELD("gen.plaza_prob", gen.generator.plaza_probability),
      SEMNAV_DOUBLE_FIELD("gen.obstacle_min", gen.generator.obstacle_fraction_min),
      SEMNAV_DOUBLE_FIELD("gen.obstacle_max", gen.generator.obstacle_fraction_max),
      SEMNAV_DOUBLE_FIELD("gen.min_separation", gen.min_separation),
      SEMNAV_DOUBLE_FIELD("gen.max_separation", gen.max_separation),
      {"gen.true_cost",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         std::vector<double> costs;
         for (const auto& item : split_list(v)) costs.push_back(parse_double(k, item));
         if (costs.empty()) bad_value(k, v);
         c.gen.true_cost.per_class = std::move(costs);
       },
       [](const RunConfig& c) { return fmt_list(c.gen.true_cost.per_class); }},

      SEMNAV_INT_FIELD("sensor.rays", gen.sensor.num_rays),
      SEMNAV_DOUBLE_FIELD("sensor.max_range", gen.sensor.max_range),
      SEMNAV_DOUBLE_FIELD("sensor.noise", gen.sensor.label_noise),

      {"map.encoder",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "linear") {
           c.encoder = EncoderMode::kLinear;
         } else if (v == "network") {
           c.encoder = EncoderMode::kNetwork;
         } else {
           bad_value(k, v);
         }
       },
       [](const RunConfig& c) {
         return std::string(c.encoder == EncoderMode::kLinear ? "linear" : "network");
       }},
      SEMNAV_DOUBLE_FIELD("map.epsilon", map_epsilon),
      SEMNAV_BOOL_FIELD("map.endpoint_only", endpoint_only),
      SEMNAV_INT_FIELD("map.hidden", map_hidden),
      SEMNAV_DOUBLE_FIELD("map.lambda_free", lambda_free),

      {"cost.channels",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         std::vector<int> widths;
         for (const auto& item : split_list(v)) widths.push_back(parse_integer<int>(k, item));
         if (widths.empty()) bad_value(k, v);
         c.cost.widths = std::move(widths);
       },
       [](const RunConfig& c) { return fmt_list(c.cost.widths); }},
      SEMNAV_INT_FIELD("cost.kernel", cost.kernel),
      SEMNAV_DOUBLE_FIELD("cost.min_cost", cost.min_cost),

      SEMNAV_DOUBLE_FIELD("train.learning_rate", train.learning_rate),
      {"train.optimizer",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "adam") {
           c.train.optimizer = OptimizerKind::kAdam;
         } else if (v == "subgradient") {
           c.train.optimizer = OptimizerKind::kSubgradient;
         } else {
           bad_value(k, v);
         }
       },
       [](const RunConfig& c) {
         return std::string(c.train.optimizer == OptimizerKind::kAdam ? "adam" : "subgradient");
       }},
      SEMNAV_DOUBLE_FIELD("train.beta1", train.beta1),
      SEMNAV_DOUBLE_FIELD("train.beta2", train.beta2),
      SEMNAV_INT_FIELD("train.batch_size", train.batch_size),
      SEMNAV_INT_FIELD("train.max_epochs", train.max_epochs),
      SEMNAV_INT_FIELD("train.window", train.window),
      SEMNAV_DOUBLE_FIELD("train.tolerance", train.tolerance),
      SEMNAV_BOOL_FIELD("train.train_map_encoder", train.train_map_encoder),

      SEMNAV_DOUBLE_FIELD("policy.temperature", temperature),

      SEMNAV_DOUBLE_FIELD("eval.horizon_factor", horizon_factor),
      SEMNAV_INT_FIELD("rollout.demo", rollout_demo),
      SEMNAV_BOOL_FIELD("rollout.export", rollout_export),
  };
  return table;
}

#undef SEMNAV_INT_FIELD
#undef SEMNAV_DOUBLE_FIELD
#undef SEMNAV_BOOL_FIELD

const Field& find_field(const std::string& key) {
  for (const Field& f : fields()) {
    if (f.key == key) return f;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown configuration key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const Field& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_field(key).set(config, key, trim(value));
}

std::string get_config_value(const RunConfig& config, const std::string& key) {
  return find_field(key).get(config);
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "config line " + std::to_string(number) + ": expected key = value");
    }
    set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  apply_config_text(config, read_file(path));
}

std::string config_to_text(const RunConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

void validate_config(const RunConfig& config) {
  const auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kInvalidArgument, why);
  };
  if (config.threads < 1) fail("threads must be >= 1");
  if (!(config.temperature > 0.0)) fail("policy.temperature must be positive");
  if (!(config.map_epsilon > 0.0)) fail("map.epsilon must be positive");
  if (config.map_hidden < 1) fail("map.hidden must be >= 1");
  if (!(config.lambda_free >= 0.0)) fail("map.lambda_free must be non-negative");
  if (!(config.horizon_factor > 0.0)) fail("eval.horizon_factor must be positive");
  if (config.rollout_demo < 0) fail("rollout.demo must be >= 0");
  if (config.train.batch_size < 0) fail("train.batch_size must be >= 0");
  CostArchitecture arch = config.cost;
  arch.in_channels = config.gen.num_classes + 1;
  validate_architecture(arch);
  validate_train_config(train_config(config));
}

GenerationConfig generation_config(const RunConfig& config) {
  GenerationConfig gen = config.gen;
  gen.seed = config.seed;
  return gen;
}

TrainConfig train_config(const RunConfig& config) {
  TrainConfig train = config.train;
  train.seed = config.seed;
  train.temperature = config.temperature;
  train.threads = config.threads;
  return train;
}

PolicyOptions policy_options(const RunConfig& config) {
  PolicyOptions options;
  options.temperature = config.temperature;
  return options;
}

ThetaParams initial_theta(const RunConfig& config, int num_classes) {
  ThetaParams theta =
      make_theta(num_classes, config.encoder, config.cost, config.seed, config.map_hidden);
  theta.psi.epsilon = config.map_epsilon;
  theta.psi.endpoint_only = config.endpoint_only;
  theta.psi.lambda_free = config.lambda_free;
  return theta;
}

}  // namespace semnav
