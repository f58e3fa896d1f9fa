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

#include "gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"
#include "planner.hpp"
#include "rng.hpp"

namespace semnav {

bool EnvironmentSpec::is_obstacle_class(int cls) const {
  return std::find(obstacle_classes.begin(), obstacle_classes.end(), cls) !=
         obstacle_classes.end();
}

bool EnvironmentSpec::is_ray_visible_class(int cls) const {
  return std::find(ray_visible_classes.begin(), ray_visible_classes.end(), cls) !=
         ray_visible_classes.end();
}

std::vector<std::uint8_t> EnvironmentSpec::obstacle_mask() const {
  std::vector<std::uint8_t> mask(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n) mask[n] = is_obstacle_class(labels[n]);
  return mask;
}

void validate_environment(const EnvironmentSpec& env) {
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kValidation, "environment '" + env.id + "': " + why);
  };
  if (env.width <= 0 || env.height <= 0) fail("non-positive size");
  if (env.num_classes < 1) fail("needs at least one non-free class");
  if (!(env.resolution > 0.0)) fail("resolution must be positive");
  if (static_cast<int>(env.labels.size()) != env.num_cells()) {
    fail("label count " + std::to_string(env.labels.size()) + " != width*height");
  }
  for (int label : env.labels) {
    if (label < 0 || label > env.num_classes) fail("label out of range");
  }
  for (int cls : env.obstacle_classes) {
    if (cls <= 0 || cls > env.num_classes) fail("obstacle class out of range");
  }
  for (int cls : env.ray_visible_classes) {
    if (cls <= 0 || cls > env.num_classes) fail("ray-visible class out of range");
  }
  std::vector<int> component;
  const int count = label_free_components(env, component);
  std::vector<int> sizes(count, 0);
  for (int c : component) {
    if (c >= 0) ++sizes[c];
  }
  if (count == 0 || *std::max_element(sizes.begin(), sizes.end()) < 2) {
    fail("no connected free region with at least two cells");
  }
}

std::optional<State> motion_model(State x, int control, const EnvironmentSpec& env) {
  const Control& c = kControls[control];
  const State next{x.i + c.di, x.j + c.dj};
  if (!env.in_bounds(next) || env.is_obstacle(next)) return std::nullopt;
  return next;
}

int label_free_components(const EnvironmentSpec& env, std::vector<int>& component) {
  component.assign(env.num_cells(), -1);
  int count = 0;
  std::vector<int> stack;
  for (int start = 0; start < env.num_cells(); ++start) {
    if (component[start] >= 0 || env.is_obstacle_class(env.labels[start])) continue;
    component[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      const State s = env.state(stack.back());
      stack.pop_back();
      for (int u = 0; u < kNumControls; ++u) {
        const auto next = motion_model(s, u, env);
        if (!next) continue;
        const int n = env.index(*next);
        if (component[n] < 0) {
          component[n] = count;
          stack.push_back(n);
        }
      }
    }
    ++count;
  }
  return count;
}

namespace {

// Road band start positions along one axis.
std::vector<int> place_roads(int extent, const GeneratorParams& params, Rng& rng) {
  std::vector<int> starts;
  int pos = rng.uniform_int(1, params.block_max);
  while (pos + params.road_width <= extent) {
    starts.push_back(pos);
    pos += params.road_width + rng.uniform_int(params.block_min, params.block_max);
  }
  return starts;
}

}  // namespace

EnvironmentSpec generate_environment(int width, int height, int num_classes,
                                     std::uint64_t seed, const GeneratorParams& params) {
  if (width < 8 || height < 8) {
    throw Error(ErrorCode::kInvalidArgument, "environment must be at least 8x8");
  }
  if (num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "generator needs K >= 2");
  }
  if (params.road_width < 1 || params.block_min < 1 ||
      params.block_max < params.block_min) {
    throw Error(ErrorCode::kInvalidArgument, "invalid road/block sizes");
  }

  Rng rng(seed);
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    EnvironmentSpec env;
    env.id = std::to_string(seed);
    env.width = width;
    env.height = height;
    env.num_classes = num_classes;
    env.seed = seed;
    for (int cls = 2; cls <= num_classes; ++cls) env.obstacle_classes.push_back(cls);
    env.ray_visible_classes = params.ray_visible;

    const std::vector<int> columns = place_roads(width, params, rng);
    const std::vector<int> rows = place_roads(height, params, rng);
    if (columns.empty() || rows.empty()) continue;

    std::vector<char> road_col(width, 0), road_row(height, 0);
    for (int c : columns) std::fill_n(road_col.begin() + c, params.road_width, 1);
    for (int r : rows) std::fill_n(road_row.begin() + r, params.road_width, 1);

    // Block boundaries between road bands along each axis.
    const auto spans = [&](const std::vector<char>& road, int extent) {
      std::vector<std::pair<int, int>> out;
      int k = 0;
      while (k < extent) {
        if (road[k]) {
          ++k;
          continue;
        }
        const int begin = k;
        while (k < extent && !road[k]) ++k;
        out.emplace_back(begin, k);
      }
      return out;
    };

    env.labels.assign(width * height, 0);
    for (const auto& [y0, y1] : spans(road_row, height)) {
      for (const auto& [x0, x1] : spans(road_col, width)) {
        const bool plaza = rng.uniform() < params.plaza_probability;
        const int building = rng.uniform_int(2, num_classes);
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            bool next_to_road = false;
            for (int u = 0; u < kNumControls && !next_to_road; ++u) {
              const int nx = x + kControls[u].di;
              const int ny = y + kControls[u].dj;
              if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
              next_to_road = road_col[nx] || road_row[ny];
            }
            env.labels[y * width + x] = (plaza || next_to_road) ? 1 : building;
          }
        }
      }
    }

    int obstacles = 0;
    for (int label : env.labels) obstacles += env.is_obstacle_class(label);
    const double fraction = static_cast<double>(obstacles) / env.num_cells();
    if (fraction < params.obstacle_fraction_min ||
        fraction > params.obstacle_fraction_max) {
      continue;
    }
    try {
      validate_environment(env);
    } catch (const Error&) {
      continue;
    }
    return env;
  }
  throw Error(ErrorCode::kGenerationFailed,
              "could not place a connected layout within the obstacle bounds after " +
                  std::to_string(params.max_attempts) + " attempts");
}

void SemanticPointCloud::add(Point2 p, std::span<const double> likelihood) {
  if (static_cast<int>(likelihood.size()) != num_classes_) {
    throw Error(ErrorCode::kShapeMismatch, "likelihood length != K");
  }
  positions_.push_back(p);
  likelihoods_.insert(likelihoods_.end(), likelihood.begin(), likelihood.end());
}

SemanticPointCloud simulate_scan(State x, const EnvironmentSpec& env,
                                 const SensorParams& sensor) {
  const int num_classes = env.num_classes;
  SemanticPointCloud cloud(num_classes);
  std::vector<double> likelihood(num_classes);
  const auto label_vector = [&](int cls) {
    const double off = num_classes > 1 ? sensor.label_noise / (num_classes - 1) : 0.0;
    std::fill(likelihood.begin(), likelihood.end(), off);
    likelihood[cls - 1] = num_classes > 1 ? 1.0 - sensor.label_noise : 1.0;
  };

  const Point2 origin = cell_center(x);
  constexpr double kCornerTolerance = 1e-7;
  for (int r = 0; r < sensor.num_rays; ++r) {
    const double angle = 2.0 * std::numbers::pi * r / sensor.num_rays;
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
    const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
    const double delta_x = step_x != 0 ? 1.0 / std::abs(dx) : kInfinity;
    const double delta_y = step_y != 0 ? 1.0 / std::abs(dy) : kInfinity;
    // From a cell center the first boundary is half a cell away.
    double next_x = step_x != 0 ? 0.5 * delta_x : kInfinity;
    double next_y = step_y != 0 ? 0.5 * delta_y : kInfinity;
    State cell = x;
    while (true) {
      double enter;
      if (std::abs(next_x - next_y) < kCornerTolerance) {
        enter = std::max(next_x, next_y);
        cell.i += step_x;
        cell.j += step_y;
        next_x += delta_x;
        next_y += delta_y;
      } else if (next_x < next_y) {
        enter = next_x;
        cell.i += step_x;
        next_x += delta_x;
      } else {
        enter = next_y;
        cell.j += step_y;
        next_y += delta_y;
      }
      if (enter > sensor.max_range || !env.in_bounds(cell)) break;
      const int cls = env.label(cell);
      const bool obstacle = env.is_obstacle_class(cls);
      if (obstacle || env.is_ray_visible_class(cls)) {
        label_vector(cls);
        cloud.add({origin.x + enter * dx, origin.y + enter * dy}, likelihood);
      }
      if (obstacle) break;
    }
  }
  return cloud;
}

std::vector<State> Demonstration::state_sequence() const {
  std::vector<State> states;
  states.reserve(steps.size() + 1);
  for (const DemoStep& step : steps) states.push_back(step.state);
  states.push_back(goal);
  return states;
}

void validate_demonstration(const Demonstration& demo, const EnvironmentSpec& env) {
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kValidation, "demonstration for env '" + demo.env_id + "': " + why);
  };
  if (!env.in_bounds(demo.goal) || env.is_obstacle(demo.goal)) fail("goal not a free cell");
  State current = demo.start;
  for (std::size_t t = 0; t < demo.steps.size(); ++t) {
    const DemoStep& step = demo.steps[t];
    const std::string at = "step " + std::to_string(t) + ": ";
    if (!(step.state == current)) fail(at + "state does not follow from the previous control");
    if (!env.in_bounds(step.state) || env.is_obstacle(step.state)) fail(at + "state not free");
    if (step.control < 0 || step.control >= kNumControls) fail(at + "control id out of range");
    if (step.scan.num_classes() != env.num_classes && !step.scan.empty()) {
      fail(at + "scan likelihood length != K");
    }
    for (std::size_t n = 0; n < step.scan.size(); ++n) {
      double total = 0.0;
      for (double y : step.scan.likelihood(n)) {
        if (!(y >= 0.0)) fail(at + "negative likelihood");
        total += y;
      }
      if (std::abs(total - 1.0) > 1e-9) fail(at + "likelihood does not sum to one");
      const Point2 p = step.scan.position(n);
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail(at + "non-finite point");
    }
    const auto next = motion_model(step.state, step.control, env);
    if (!next) fail(at + "control enters an obstacle or leaves the grid");
    current = *next;
  }
  if (!(current == demo.goal)) fail("final state is not the goal");
}

Demonstration generate_expert_demo(const EnvironmentSpec& env, State start, State goal,
                                   const TrueCost& true_cost, const SensorParams& sensor) {
  if (static_cast<int>(true_cost.per_class.size()) < env.num_classes + 1) {
    throw Error(ErrorCode::kInvalidArgument, "true cost needs one weight per class");
  }
  std::vector<double> cell_cost(env.num_cells());
  for (int n = 0; n < env.num_cells(); ++n) {
    cell_cost[n] = true_cost.per_class[env.labels[n]];
    if (!env.is_obstacle_class(env.labels[n]) && !(cell_cost[n] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "true cost must be positive");
    }
  }
  const CostField field = make_cost_field(cell_cost, env);
  if (!env.in_bounds(start) || env.is_obstacle(start)) {
    throw Error(ErrorCode::kInvalidArgument, "start is not a free cell");
  }
  const std::vector<double> g = dijkstra_oracle(field, goal);
  if (!std::isfinite(g[env.index(start)])) {
    throw Error(ErrorCode::kUnreachable, "goal unreachable from start");
  }

  Demonstration demo;
  demo.env_id = env.id;
  demo.start = start;
  demo.goal = goal;
  State x = start;
  while (!(x == goal)) {
    if (static_cast<int>(demo.steps.size()) > env.num_cells()) {
      throw Error(ErrorCode::kUnreachable, "expert failed to terminate");
    }
    int best_u = -1;
    double best = kInfinity;
    for (int u = 0; u < kNumControls; ++u) {
      const int n = field.successor(x, u);
      if (n < 0) continue;
      const double value = field.transition_cost(x, u) + g[n];
      if (best_u < 0 || value < best - 1e-10 * (1.0 + std::abs(best))) {
        best = value;
        best_u = u;
      }
    }
    demo.steps.push_back({x, best_u, simulate_scan(x, env, sensor)});
    x = *motion_model(x, best_u, env);
  }
  return demo;
}

}  // namespace semnav
