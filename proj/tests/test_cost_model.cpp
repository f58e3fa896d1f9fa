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

#include <algorithm>
#include <cmath>
#include <vector>

#include "cost_model.hpp"
#include "doctest.h"
#include "error.hpp"
#include "rng.hpp"
#include "semantic_map.hpp"

namespace semnav {
namespace {

std::vector<double> random_posterior(Rng& rng, int width, int height, int channels) {
  std::vector<double> out(static_cast<std::size_t>(width) * height * channels);
  std::vector<double> z(channels);
  for (int n = 0; n < width * height; ++n) {
    for (double& v : z) v = rng.uniform(-3.0, 3.0);
    const auto p = softmax(z);
    std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(n) * channels);
  }
  return out;
}

double weighted_sum(const std::vector<double>& cost, const std::vector<double>& weights) {
  double total = 0.0;
  for (std::size_t n = 0; n < cost.size(); ++n) total += cost[n] * weights[n];
  return total;
}

TEST_CASE("costs are finite and above the floor") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    CostArchitecture arch;
    arch.min_cost = rng.uniform(1e-4, 0.5);
    const CostEncoderParams params = init_params(rng.next(), arch);
    const int width = rng.uniform_int(8, 20);
    const int height = rng.uniform_int(8, 20);
    const auto forward = cost_forward(random_posterior(rng, width, height, 3), width, height, params);
    REQUIRE(forward.cell_cost.size() == static_cast<std::size_t>(width * height));
    for (double c : forward.cell_cost) {
      CHECK(std::isfinite(c));
      CHECK(c >= arch.min_cost);
    }
  }
}

TEST_CASE("raising the floor never goes below it") {
  Rng rng(2);
  const auto input = random_posterior(rng, 10, 10, 3);
  CostArchitecture arch;
  CostEncoderParams params = init_params(4, arch);
  for (double floor : {1e-6, 1e-3, 0.1, 1.0, 10.0}) {
    arch.min_cost = floor;
    CostEncoderParams raised(arch);
    std::copy(params.values().begin(), params.values().end(), raised.values().begin());
    for (double c : cost_forward(input, 10, 10, raised).cell_cost) CHECK(c >= floor);
  }
}

TEST_CASE("zero network is constant softplus(0) + floor") {
  CostArchitecture arch;
  const CostEncoderParams params(arch);
  for (double v : params.values()) REQUIRE(v == 0.0);
  Rng rng(3);
  const auto forward = cost_forward(random_posterior(rng, 9, 11, 3), 9, 11, params);
  for (double c : forward.cell_cost) {
    CHECK(c == doctest::Approx(std::log(2.0) + arch.min_cost).epsilon(1e-15));
  }
}

TEST_CASE("shifts aligned with the pooling grid shift the interior") {
  // Two 2x2 poolings make the stack equivariant to shifts by 4 cells away
  // from the zero-padded border.
  Rng rng(4);
  const CostEncoderParams params = init_params(5, CostArchitecture{});
  const int width = 80;
  const int height = 12;
  const int shift = 4;
  const auto input = random_posterior(rng, width, height, 3);
  auto shifted = random_posterior(rng, width, height, 3);
  for (int j = 0; j < height; ++j) {
    for (int i = shift; i < width; ++i) {
      for (int c = 0; c < 3; ++c) {
        shifted[(j * width + i) * 3 + c] = input[(j * width + i - shift) * 3 + c];
      }
    }
  }
  const auto a = cost_forward(input, width, height, params).cell_cost;
  const auto b = cost_forward(shifted, width, height, params).cell_cost;
  const int margin = 20;
  for (int j = 0; j < height; ++j) {
    for (int i = shift + margin; i < width - margin; ++i) {
      CHECK(b[j * width + i] == doctest::Approx(a[j * width + i - shift]).epsilon(1e-12));
    }
  }
}

TEST_CASE("grids below 8x8 are rejected") {
  const CostEncoderParams params = init_params(1, CostArchitecture{});
  const std::vector<double> small(7 * 9 * 3, 1.0 / 3.0);
  CHECK_THROWS_AS(cost_forward(small, 7, 9, params), Error);
  CHECK_THROWS_AS(cost_forward(std::vector<double>(8 * 8 * 3 - 1, 0.0), 8, 8, params), Error);
}

TEST_CASE("backward of a zero upstream is zero") {
  Rng rng(6);
  const CostEncoderParams params = init_params(7, CostArchitecture{});
  const auto forward = cost_forward(random_posterior(rng, 8, 8, 3), 8, 8, params);
  const auto grads = cost_backward(forward.tape, params, std::vector<double>(64, 0.0));
  for (double g : grads.params) CHECK(g == 0.0);
  for (double g : grads.posterior) CHECK(g == 0.0);
  CHECK_THROWS_AS(cost_backward(forward.tape, params, std::vector<double>(63, 0.0)), Error);
}

TEST_CASE("backward matches central differences") {
  Rng rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    CAPTURE(trial);
    const int width = 8 + trial;
    const int height = 8;
    CostEncoderParams params = init_params(100 + trial, CostArchitecture{});
    // Non-zero biases so every parameter is exercised.
    for (const TensorSpec& t : params.tensors()) {
      if (t.name.ends_with(".bias")) {
        for (std::size_t n = 0; n < t.size; ++n) params.values()[t.offset + n] = rng.uniform(-0.3, 0.3);
      }
    }
    auto input = random_posterior(rng, width, height, 3);
    std::vector<double> upstream(static_cast<std::size_t>(width) * height);
    for (double& u : upstream) u = rng.uniform(-1.0, 1.0);

    const auto forward = cost_forward(input, width, height, params);
    const auto grads = cost_backward(forward.tape, params, upstream);
    const double h = 1e-5;

    double worst_param = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
      CostEncoderParams shifted = params;
      shifted.values()[p] += h;
      const double plus = weighted_sum(cost_forward(input, width, height, shifted).cell_cost, upstream);
      shifted.values()[p] -= 2 * h;
      const double minus = weighted_sum(cost_forward(input, width, height, shifted).cell_cost, upstream);
      const double fd = (plus - minus) / (2 * h);
      const double err = std::abs(fd - grads.params[p]);
      worst_param = std::max(worst_param, err / (std::abs(grads.params[p]) + 1e-4));
    }
    CHECK(worst_param <= 1e-5);  // relative, softened near zero

    double worst_input = 0.0;
    for (std::size_t n = 0; n < input.size(); ++n) {
      const double saved = input[n];
      input[n] = saved + h;
      const double plus = weighted_sum(cost_forward(input, width, height, params).cell_cost, upstream);
      input[n] = saved - h;
      const double minus = weighted_sum(cost_forward(input, width, height, params).cell_cost, upstream);
      input[n] = saved;
      const double fd = (plus - minus) / (2 * h);
      const double err = std::abs(fd - grads.posterior[n]);
      worst_input = std::max(worst_input, err / (std::abs(grads.posterior[n]) + 1e-4));
    }
    CHECK(worst_input <= 1e-5);
  }
}

TEST_CASE("initialization") {
  const CostArchitecture arch;
  const CostEncoderParams a = init_params(42, arch);
  const CostEncoderParams b = init_params(42, arch);
  const CostEncoderParams c = init_params(43, arch);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (const TensorSpec& t : a.tensors()) {
    CAPTURE(t.name);
    const auto values = a.values().subspan(t.offset, t.size);
    if (t.name.ends_with(".bias")) {
      for (double v : values) CHECK(v == 0.0);
      continue;
    }
    const double fan_in = static_cast<double>(t.size / t.shape[0]);
    if (t.size < 500) continue;
    double second_moment = 0.0;
    for (double v : values) second_moment += v * v;
    second_moment /= static_cast<double>(t.size);
    CHECK(second_moment * fan_in == doctest::Approx(1.0).epsilon(0.2));
  }
}

TEST_CASE("named tensors cover the flat vector") {
  const CostArchitecture arch;
  const CostEncoderParams params(arch);
  std::size_t covered = 0;
  for (const TensorSpec& t : params.tensors()) {
    std::size_t product = 1;
    for (auto d : t.shape) product *= d;
    CHECK(product == t.size);
    CHECK(t.offset == covered);
    covered += t.size;
  }
  CHECK(covered == params.size());
  CHECK(params.tensor("head.weight").shape == std::vector<std::size_t>{1, 8, 1, 1});
  CHECK_THROWS_AS(params.tensor("missing"), Error);
}

TEST_CASE("architecture validation") {
  CostArchitecture arch;
  CHECK_NOTHROW(validate_architecture(arch));
  arch.min_cost = 0.0;
  CHECK_THROWS_AS(validate_architecture(arch), Error);
  arch = CostArchitecture{};
  arch.kernel = 2;
  CHECK_THROWS_AS(validate_architecture(arch), Error);
  arch = CostArchitecture{};
  arch.widths.clear();
  CHECK_THROWS_AS(validate_architecture(arch), Error);
}

}  // namespace
}  // namespace semnav
