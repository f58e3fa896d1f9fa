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

#ifndef SEMNAV_GRIDWORLD_HPP_
#define SEMNAV_GRIDWORLD_HPP_

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace semnav {

// Integer cell coordinates. i indexes columns (x), j indexes rows (y).
struct State {
  int i = 0;
  int j = 0;

  friend bool operator==(const State&, const State&) = default;
};

inline constexpr int kNumControls = 8;

struct Control {
  int id;
  int di;
  int dj;
  double length;
};

// Counter-clockwise from east. The id order is the tie-break order used by
// every planner and policy in the library.
inline constexpr std::array<Control, kNumControls> kControls = {{
    {0, 1, 0, 1.0},
    {1, 1, 1, std::numbers::sqrt2},
    {2, 0, 1, 1.0},
    {3, -1, 1, std::numbers::sqrt2},
    {4, -1, 0, 1.0},
    {5, -1, -1, std::numbers::sqrt2},
    {6, 0, -1, 1.0},
    {7, 1, -1, std::numbers::sqrt2},
}};

// Ground truth world. Class 0 is free space (drivable road in the urban
// generator); labels hold one class id in 0..num_classes per cell, row-major.
struct EnvironmentSpec {
  std::string id;
  int width = 0;
  int height = 0;
  double resolution = 1.0;
  int num_classes = 0;  // K, classes are 0..K
  std::vector<int> labels;
  std::vector<int> obstacle_classes;
  std::vector<int> ray_visible_classes;
  std::uint64_t seed = 0;

  int num_cells() const { return width * height; }
  bool in_bounds(State s) const {
    return s.i >= 0 && s.j >= 0 && s.i < width && s.j < height;
  }
  int index(State s) const { return s.j * width + s.i; }
  State state(int index) const { return {index % width, index / width}; }
  int label(State s) const { return labels[index(s)]; }
  bool is_obstacle_class(int cls) const;
  bool is_ray_visible_class(int cls) const;
  bool is_obstacle(State s) const { return is_obstacle_class(label(s)); }

  // Per-cell motion mask, true where the cell blocks motion.
  std::vector<std::uint8_t> obstacle_mask() const;
};

// Checks the structural invariants; throws Error(kValidation) on violation.
void validate_environment(const EnvironmentSpec& env);

// Returns the successor cell, or nullopt when the move leaves the grid or
// enters an obstacle cell.
std::optional<State> motion_model(State x, int control, const EnvironmentSpec& env);

struct GeneratorParams {
  int road_width = 2;
  int block_min = 4;
  int block_max = 7;
  double plaza_probability = 0.3;
  double obstacle_fraction_min = 0.05;
  double obstacle_fraction_max = 0.7;
  int max_attempts = 32;
  // Traversable classes that still return lidar points. Sidewalk (class 1)
  // by default.
  std::vector<int> ray_visible = {1};
};

// Urban block layout: a lattice of class-0 roads, blocks ringed by class-1
// sidewalk, building interiors of an obstacle class. Deterministic in seed.
// Classes 2..K are obstacles. Throws Error(kGenerationFailed).
EnvironmentSpec generate_environment(int width, int height, int num_classes,
                                     std::uint64_t seed,
                                     const GeneratorParams& params = {});

// Labels every free (non-obstacle) cell with its 8-connected component id,
// -1 for obstacle cells. Returns the number of components.
int label_free_components(const EnvironmentSpec& env, std::vector<int>& component);

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

// Cell-unit position of a cell center.
inline Point2 cell_center(State s) { return {s.i + 0.5, s.j + 0.5}; }

// One scan. Positions are in cell units relative to the map origin and
// likelihoods are stored flat, num_classes values per point over classes
// 1..K.
class SemanticPointCloud {
 public:
  SemanticPointCloud() = default;
  explicit SemanticPointCloud(int num_classes) : num_classes_(num_classes) {}

  int num_classes() const { return num_classes_; }
  std::size_t size() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }

  void add(Point2 p, std::span<const double> likelihood);
  Point2 position(std::size_t n) const { return positions_[n]; }
  std::span<const double> likelihood(std::size_t n) const {
    return {likelihoods_.data() + n * num_classes_,
            static_cast<std::size_t>(num_classes_)};
  }

  friend bool operator==(const SemanticPointCloud&, const SemanticPointCloud&) = default;

 private:
  int num_classes_ = 0;
  std::vector<Point2> positions_;
  std::vector<double> likelihoods_;
};

struct SensorParams {
  int num_rays = 180;
  double max_range = 20.0;  // cells
  double label_noise = 0.1;
};

// Casts num_rays planar rays from the center of x. A ray ends at the first
// obstacle-class cell, returning the point where it enters that cell. Cells
// of a ray-visible traversable class each return a ground point without
// ending the ray.
SemanticPointCloud simulate_scan(State x, const EnvironmentSpec& env,
                                 const SensorParams& sensor);

struct DemoStep {
  State state;
  int control = 0;
  SemanticPointCloud scan;
};

struct Demonstration {
  std::string env_id;
  State start;
  State goal;
  std::vector<DemoStep> steps;

  // States x_1..x_T followed by the goal.
  std::vector<State> state_sequence() const;
};

// Throws Error(kValidation) when the demo is inconsistent with env.
void validate_demonstration(const Demonstration& demo, const EnvironmentSpec& env);

// Per-class positive stage cost weights; obstacle classes are ignored.
struct TrueCost {
  std::vector<double> per_class;
};

// Optimal expert under cell_cost = true_cost[label] * move length. Throws
// Error(kUnreachable) when no path exists.
Demonstration generate_expert_demo(const EnvironmentSpec& env, State start,
                                   State goal, const TrueCost& true_cost,
                                   const SensorParams& sensor);

}  // namespace semnav

#endif  // SEMNAV_GRIDWORLD_HPP_
