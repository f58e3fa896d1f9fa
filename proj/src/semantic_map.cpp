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

#include "semantic_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "error.hpp"
#include "rng.hpp"

namespace semnav {

MapEncoderParams MapEncoderParams::linear(int num_classes, double weight) {
  MapEncoderParams params;
  params.mode = EncoderMode::kLinear;
  params.num_classes = num_classes;
  params.linear_weights.assign(num_classes, weight);
  params.prior.assign(num_classes + 1, 0.0);
  return params;
}

MapEncoderParams MapEncoderParams::network(int num_classes, int hidden,
                                           std::uint64_t seed) {
  MapEncoderParams params;
  params.mode = EncoderMode::kNetwork;
  params.num_classes = num_classes;
  params.hidden = hidden;
  params.linear_weights.assign(num_classes, 1.0);
  params.prior.assign(num_classes + 1, 0.0);
  params.network_weights.assign(params.network_size(), 0.0);

  Rng rng(seed);
  const int inputs = params.network_inputs();
  const double a1 = std::sqrt(3.0 / inputs);
  const double a2 = std::sqrt(3.0 / hidden);
  double* w = params.network_weights.data();
  for (int n = 0; n < hidden * inputs; ++n) *w++ = rng.uniform(-a1, a1);
  w += hidden;  // b1
  for (int n = 0; n < num_classes * hidden; ++n) *w++ = rng.uniform(-a2, a2);
  return params;
}

std::size_t MapEncoderParams::network_size() const {
  const auto h = static_cast<std::size_t>(hidden);
  const auto k = static_cast<std::size_t>(num_classes);
  return h * static_cast<std::size_t>(network_inputs()) + h + k * h + k;
}

std::span<double> MapEncoderParams::trainable() {
  return mode == EncoderMode::kLinear ? std::span<double>(linear_weights)
                                      : std::span<double>(network_weights);
}

std::span<const double> MapEncoderParams::trainable() const {
  return mode == EncoderMode::kLinear ? std::span<const double>(linear_weights)
                                      : std::span<const double>(network_weights);
}

void MapEncoderParams::validate() const {
  if (num_classes < 1) throw Error(ErrorCode::kInvalidArgument, "map encoder needs K >= 1");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (!(clamp > 0.0)) throw Error(ErrorCode::kInvalidArgument, "clamp must be positive");
  if (static_cast<int>(prior.size()) != num_classes + 1) {
    throw Error(ErrorCode::kShapeMismatch, "prior must have K+1 entries");
  }
  if (prior[0] != 0.0) throw Error(ErrorCode::kInvalidArgument, "prior[0] must be 0");
  if (static_cast<int>(linear_weights.size()) != num_classes) {
    throw Error(ErrorCode::kShapeMismatch, "linear weights must have K entries");
  }
  if (mode == EncoderMode::kNetwork) {
    if (hidden < 1) throw Error(ErrorCode::kInvalidArgument, "hidden width must be positive");
    if (network_weights.size() != network_size()) {
      throw Error(ErrorCode::kShapeMismatch, "network weight count does not match layer sizes");
    }
  }
}

void softmax_into(std::span<const double> z, std::span<double> out) {
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = std::exp(z[k] - top);
    total += out[k];
  }
  for (double& v : out.first(z.size())) v /= total;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> out(z.size());
  softmax_into(z, out);
  return out;
}

double ray_offset(State x, Point2 p, State cell) {
  const Point2 origin = cell_center(x);
  const Point2 center = cell_center(cell);
  return std::hypot(center.x - origin.x, center.y - origin.y) -
         std::hypot(p.x - origin.x, p.y - origin.y);
}

State endpoint_cell(State x, Point2 p) {
  const Point2 origin = cell_center(x);
  const double dx = p.x - origin.x;
  const double dy = p.y - origin.y;
  const double length = std::hypot(dx, dy);
  if (length == 0.0) return x;
  constexpr double kNudge = 1e-9;
  return {static_cast<int>(std::floor(p.x + kNudge * dx / length)),
          static_cast<int>(std::floor(p.y + kNudge * dy / length))};
}

std::vector<State> intermediate_cells(State x, Point2 p) {
  const Point2 origin = cell_center(x);
  const double length = std::hypot(p.x - origin.x, p.y - origin.y);
  std::vector<State> cells;
  if (length == 0.0) return cells;
  const double dx = (p.x - origin.x) / length;
  const double dy = (p.y - origin.y) / length;
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  const double delta_x = step_x != 0 ? 1.0 / std::abs(dx) : inf;
  const double delta_y = step_y != 0 ? 1.0 / std::abs(dy) : inf;
  double next_x = step_x != 0 ? 0.5 * delta_x : inf;
  double next_y = step_y != 0 ? 0.5 * delta_y : inf;
  const State last = endpoint_cell(x, p);
  State cell = x;
  constexpr double kCornerTolerance = 1e-7;
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
    if (enter >= length - kCornerTolerance || cell == last) break;
    cells.push_back(cell);
  }
  return cells;
}

void network_forward(const MapEncoderParams& params, std::span<const double> y,
                     double delta_p, double distance, std::span<double> out,
                     std::span<double> jacobian) {
  const int num_classes = params.num_classes;
  const int hidden = params.hidden;
  const int inputs = params.network_inputs();
  const double* w1 = params.network_weights.data();
  const double* b1 = w1 + hidden * inputs;
  const double* w2 = b1 + hidden;
  const double* b2 = w2 + num_classes * hidden;

  std::vector<double> in(inputs);
  for (int k = 0; k < num_classes; ++k) in[k] = y[k];
  in[num_classes] = delta_p;
  in[num_classes + 1] = distance;

  std::vector<double> activation(hidden);
  for (int h = 0; h < hidden; ++h) {
    double a = b1[h];
    for (int i = 0; i < inputs; ++i) a += w1[h * inputs + i] * in[i];
    activation[h] = std::tanh(a);
  }
  for (int k = 0; k < num_classes; ++k) {
    double o = b2[k];
    for (int h = 0; h < hidden; ++h) o += w2[k * hidden + h] * activation[h];
    out[k] = o;
  }
  if (jacobian.empty()) return;

  const std::size_t size = params.network_size();
  std::fill(jacobian.begin(), jacobian.end(), 0.0);
  const std::size_t off_b1 = static_cast<std::size_t>(hidden) * inputs;
  const std::size_t off_w2 = off_b1 + hidden;
  const std::size_t off_b2 = off_w2 + static_cast<std::size_t>(num_classes) * hidden;
  for (int k = 0; k < num_classes; ++k) {
    double* row = jacobian.data() + k * size;
    for (int h = 0; h < hidden; ++h) {
      const double back = w2[k * hidden + h] * (1.0 - activation[h] * activation[h]);
      for (int i = 0; i < inputs; ++i) row[h * inputs + i] = back * in[i];
      row[off_b1 + h] = back;
      row[off_w2 + k * hidden + h] = activation[h];
    }
    row[off_b2 + k] = 1.0;
  }
}

std::vector<double> inverse_obs_linear(State x, Point2 p, std::span<const double> y,
                                       State cell, const MapEncoderParams& params) {
  const double delta_p = ray_offset(x, p, cell);
  if (delta_p > params.epsilon) return params.prior;
  std::vector<double> g(params.num_classes + 1, 0.0);
  for (int k = 0; k < params.num_classes; ++k) {
    g[k + 1] = params.linear_weights[k] * y[k] * delta_p;
  }
  return g;
}

std::vector<double> inverse_obs_network(State x, Point2 p, std::span<const double> y,
                                        State cell, const MapEncoderParams& params) {
  const double delta_p = ray_offset(x, p, cell);
  if (delta_p > params.epsilon) return params.prior;
  const Point2 origin = cell_center(x);
  const Point2 center = cell_center(cell);
  const double distance = std::hypot(center.x - origin.x, center.y - origin.y);
  std::vector<double> g(params.num_classes + 1, 0.0);
  network_forward(params, y, delta_p, distance, std::span<double>(g).subspan(1));
  return g;
}

LogOddsGrid::LogOddsGrid(int width, int height, std::span<const double> prior)
    : width_(width),
      height_(height),
      num_classes_(static_cast<int>(prior.size()) - 1),
      prior_(prior.begin(), prior.end()) {
  if (width <= 0 || height <= 0 || prior.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "invalid log-odds grid shape");
  }
  h_.resize(static_cast<std::size_t>(num_cells()) * row_size());
  for (int j = 0; j < num_cells(); ++j) std::copy(prior.begin(), prior.end(), row(j).begin());
}

MapTape::MapTape(int num_cells, int num_classes, std::size_t num_params)
    : num_cells_(num_cells),
      num_classes_(num_classes),
      num_params_(num_params),
      jacobian_(static_cast<std::size_t>(num_cells) * num_classes * num_params, 0.0),
      touched_flag_(num_cells, 0) {}

std::span<double> MapTape::row(int cell, int k) {
  const std::size_t offset =
      (static_cast<std::size_t>(cell) * num_classes_ + (k - 1)) * num_params_;
  return {jacobian_.data() + offset, num_params_};
}

std::span<const double> MapTape::row(int cell, int k) const {
  const std::size_t offset =
      (static_cast<std::size_t>(cell) * num_classes_ + (k - 1)) * num_params_;
  return {jacobian_.data() + offset, num_params_};
}

void MapTape::touch(int cell) {
  if (!touched_flag_[cell]) {
    touched_flag_[cell] = 1;
    touched_.push_back(cell);
  }
}

namespace {

struct Contribution {
  int cell;
  std::vector<double> increment;  // K values for classes 1..K
  std::vector<double> jacobian;   // K x P, empty when constant
};

}  // namespace

void update(LogOddsGrid& grid, State x, const SemanticPointCloud& scan,
            const MapEncoderParams& params, MapTape* tape) {
  const int num_classes = params.num_classes;
  if (grid.num_classes() != num_classes ||
      (!scan.empty() && scan.num_classes() != num_classes)) {
    throw Error(ErrorCode::kShapeMismatch, "scan, grid and encoder disagree on K");
  }
  const std::size_t num_params = params.trainable().size();
  if (tape != nullptr &&
      (tape->num_cells() != grid.num_cells() || tape->num_classes() != num_classes ||
       tape->num_params() != num_params)) {
    throw Error(ErrorCode::kShapeMismatch, "map tape does not match the grid");
  }

  std::vector<std::size_t> order(scan.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Point2 pa = scan.position(a);
    const Point2 pb = scan.position(b);
    if (pa.x != pb.x) return pa.x < pb.x;
    if (pa.y != pb.y) return pa.y < pb.y;
    const auto ya = scan.likelihood(a);
    const auto yb = scan.likelihood(b);
    return std::lexicographical_compare(ya.begin(), ya.end(), yb.begin(), yb.end());
  });

  const Point2 origin = cell_center(x);
  std::vector<double> out(num_classes);
  std::vector<double> jacobian(static_cast<std::size_t>(num_classes) * num_params);
  const bool want_jacobian = tape != nullptr;

  const auto apply = [&](int cell, std::span<const double> increment,
                         const double* increment_jacobian) {
    auto h = grid.row(cell);
    for (int k = 1; k <= num_classes; ++k) {
      double value = h[k] + increment[k - 1];
      bool clamped = false;
      if (value > params.clamp) {
        value = params.clamp;
        clamped = true;
      } else if (value < -params.clamp) {
        value = -params.clamp;
        clamped = true;
      }
      h[k] = value;
      if (!want_jacobian) continue;
      if (clamped) {
        tape->touch(cell);
        auto row = tape->row(cell, k);
        std::fill(row.begin(), row.end(), 0.0);
      } else if (increment_jacobian != nullptr) {
        tape->touch(cell);
        auto row = tape->row(cell, k);
        const double* src = increment_jacobian + (k - 1) * num_params;
        for (std::size_t p = 0; p < num_params; ++p) row[p] += src[p];
      }
    }
  };

  std::vector<double> free_increment(num_classes, -params.lambda_free);
  for (std::size_t n : order) {
    const Point2 p = scan.position(n);
    const auto y = scan.likelihood(n);
    if (!params.endpoint_only) {
      for (State cell : intermediate_cells(x, p)) {
        if (cell.i < 0 || cell.j < 0 || cell.i >= grid.width() || cell.j >= grid.height()) {
          continue;
        }
        apply(cell.j * grid.width() + cell.i, free_increment, nullptr);
      }
    }
    const State cell = endpoint_cell(x, p);
    if (cell.i < 0 || cell.j < 0 || cell.i >= grid.width() || cell.j >= grid.height()) {
      continue;
    }
    const double delta_p = ray_offset(x, p, cell);
    // Truncated branch: g = h0, so the increment g - h0 vanishes.
    if (delta_p > params.epsilon) continue;

    const int index = cell.j * grid.width() + cell.i;
    if (params.mode == EncoderMode::kLinear) {
      for (int k = 0; k < num_classes; ++k) {
        out[k] = params.linear_weights[k] * y[k] * delta_p - params.prior[k + 1];
      }
      if (want_jacobian) {
        std::fill(jacobian.begin(), jacobian.end(), 0.0);
        for (int k = 0; k < num_classes; ++k) jacobian[k * num_params + k] = y[k] * delta_p;
      }
    } else {
      const Point2 center = cell_center(cell);
      const double distance = std::hypot(center.x - origin.x, center.y - origin.y);
      network_forward(params, y, delta_p, distance, out,
                      want_jacobian ? std::span<double>(jacobian) : std::span<double>());
      for (int k = 0; k < num_classes; ++k) out[k] -= params.prior[k + 1];
    }
    apply(index, out, want_jacobian ? jacobian.data() : nullptr);
  }
}

std::vector<double> posterior(const LogOddsGrid& grid) {
  std::vector<double> out(grid.values().size());
  const auto stride = static_cast<std::size_t>(grid.row_size());
  for (int j = 0; j < grid.num_cells(); ++j) {
    softmax_into(grid.row(j), std::span<double>(out).subspan(j * stride, stride));
  }
  return out;
}

std::vector<double> map_encoder_backward(const MapTape& tape,
                                         std::span<const double> upstream,
                                         std::size_t num_params) {
  const std::size_t row_size = static_cast<std::size_t>(tape.num_classes()) + 1;
  if (upstream.size() != static_cast<std::size_t>(tape.num_cells()) * row_size ||
      num_params != tape.num_params()) {
    throw Error(ErrorCode::kShapeMismatch, "upstream gradient does not match the map tape");
  }
  std::vector<double> grad(num_params, 0.0);
  for (int cell : tape.touched()) {
    for (int k = 1; k <= tape.num_classes(); ++k) {
      const double up = upstream[cell * row_size + k];
      if (up == 0.0) continue;
      const auto row = tape.row(cell, k);
      for (std::size_t p = 0; p < num_params; ++p) grad[p] += up * row[p];
    }
  }
  return grad;
}

}  // namespace semnav
