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

#ifndef SEMNAV_SEMANTIC_MAP_HPP_
#define SEMNAV_SEMANTIC_MAP_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "gridworld.hpp"

namespace semnav {

enum class EncoderMode { kLinear, kNetwork };

// Parameters psi of the inverse observation model plus the fixed mapping
// options. The network variant is one tanh hidden layer over the inputs
// (y_1..y_K, delta_p, d) with a linear output per class 1..K; its weights are
// stored flat as W1[H][K+2], b1[H], W2[K][H], b2[K].
struct MapEncoderParams {
  EncoderMode mode = EncoderMode::kLinear;
  int num_classes = 2;
  int hidden = 16;
  std::vector<double> linear_weights;
  std::vector<double> network_weights;
  std::vector<double> prior;  // h0, length K+1, prior[0] == 0
  double epsilon = 1.0;
  bool endpoint_only = true;
  double lambda_free = 0.3;
  double clamp = 50.0;

  static MapEncoderParams linear(int num_classes, double weight = 1.0);
  static MapEncoderParams network(int num_classes, int hidden, std::uint64_t seed);

  int network_inputs() const { return num_classes + 2; }
  std::size_t network_size() const;
  // psi: the weights of whichever inverse model is active.
  std::span<double> trainable();
  std::span<const double> trainable() const;
  // Throws Error(kInvalidArgument) or Error(kShapeMismatch).
  void validate() const;
};

// Numerically stable softmax over a length K+1 vector.
std::vector<double> softmax(std::span<const double> z);
void softmax_into(std::span<const double> z, std::span<double> out);

// delta_p = d(x, m^j) - ||p - pos(x)||, distances between cell centers in
// cell units.
double ray_offset(State x, Point2 p, State cell);

// The cell holding a ray endpoint that lies on the cell boundary.
State endpoint_cell(State x, Point2 p);

// Cells crossed by the segment from the center of x to p, excluding the cell
// of x and the endpoint cell.
std::vector<State> intermediate_cells(State x, Point2 p);

// Log-odds increments g_j (length K+1, slot 0 is 0) for one labeled point.
std::vector<double> inverse_obs_linear(State x, Point2 p, std::span<const double> y,
                                       State cell, const MapEncoderParams& params);
std::vector<double> inverse_obs_network(State x, Point2 p, std::span<const double> y,
                                        State cell, const MapEncoderParams& params);

// Raw network output (K values) and its Jacobian w.r.t. the network weights,
// row-major K x network_size().
void network_forward(const MapEncoderParams& params, std::span<const double> y,
                     double delta_p, double distance, std::span<double> out,
                     std::span<double> jacobian = {});

// Recurrent hidden state: J rows of K+1 log-odds, row-major.
class LogOddsGrid {
 public:
  LogOddsGrid(int width, int height, std::span<const double> prior);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_classes() const { return num_classes_; }
  int num_cells() const { return width_ * height_; }
  int row_size() const { return num_classes_ + 1; }
  std::span<const double> prior() const { return prior_; }

  std::span<double> row(int cell) {
    return {h_.data() + static_cast<std::size_t>(cell) * row_size(),
            static_cast<std::size_t>(row_size())};
  }
  std::span<const double> row(int cell) const {
    return {h_.data() + static_cast<std::size_t>(cell) * row_size(),
            static_cast<std::size_t>(row_size())};
  }
  const std::vector<double>& values() const { return h_; }

  friend bool operator==(const LogOddsGrid&, const LogOddsGrid&) = default;

 private:
  int width_;
  int height_;
  int num_classes_;
  std::vector<double> prior_;
  std::vector<double> h_;
};

// Running derivative dh_t/dpsi of every cell, accumulated by update(). Only
// cells that received a non-constant increment are tracked.
class MapTape {
 public:
  MapTape(int num_cells, int num_classes, std::size_t num_params);

  int num_cells() const { return num_cells_; }
  int num_classes() const { return num_classes_; }
  std::size_t num_params() const { return num_params_; }
  const std::vector<int>& touched() const { return touched_; }

  // Row for (cell, class k in 1..K).
  std::span<double> row(int cell, int k);
  std::span<const double> row(int cell, int k) const;
  void touch(int cell);

 private:
  int num_cells_;
  int num_classes_;
  std::size_t num_params_;
  std::vector<double> jacobian_;
  std::vector<char> touched_flag_;
  std::vector<int> touched_;
};

// h_{t+1} = h_t + sum over points of (g_j - h0_j), clamped to +-clamp.
// Points are processed in a canonical order, so the result does not depend
// on their order in the scan.
void update(LogOddsGrid& grid, State x, const SemanticPointCloud& scan,
            const MapEncoderParams& params, MapTape* tape = nullptr);

// Row-wise softmax of the grid, J x (K+1).
std::vector<double> posterior(const LogOddsGrid& grid);

// Vector-Jacobian product of upstream dL/dh (J x (K+1)) with the tape.
// Throws Error(kShapeMismatch) when the shapes disagree.
std::vector<double> map_encoder_backward(const MapTape& tape,
                                         std::span<const double> upstream,
                                         std::size_t num_params);

}  // namespace semnav

#endif  // SEMNAV_SEMANTIC_MAP_HPP_
