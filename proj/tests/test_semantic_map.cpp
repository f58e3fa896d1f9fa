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

#include "doctest.h"
#include "error.hpp"
#include "rng.hpp"
#include "semantic_map.hpp"
#include "test_util.hpp"

namespace semnav {
namespace {

using testing::random_likelihood;
using testing::random_scan;

SemanticPointCloud cloud(int num_classes, std::vector<std::pair<Point2, std::vector<double>>> points) {
  SemanticPointCloud out(num_classes);
  for (const auto& [p, y] : points) out.add(p, y);
  return out;
}


TEST_CASE("softmax examples") {
  const auto uniform = softmax(std::vector<double>{0, 0, 0});
  for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const auto peaked = softmax(std::vector<double>{0, 2, 0});
  const double e2 = std::exp(2.0);
  CHECK(peaked[0] == doctest::Approx(1.0 / (2.0 + e2)).epsilon(1e-14));
  CHECK(peaked[1] == doctest::Approx(e2 / (2.0 + e2)).epsilon(1e-14));
  CHECK(peaked[0] == doctest::Approx(0.10651).epsilon(1e-4));
  CHECK(peaked[1] == doctest::Approx(0.78699).epsilon(1e-4));
}

TEST_CASE("softmax log-ratio identity") {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = rng.uniform_int(2, 6);
    std::vector<double> z(n);
    for (double& v : z) v = rng.uniform(-50.0, 50.0);
    const auto s = softmax(z);
    double total = 0.0;
    for (double p : s) {
      CHECK(p > 0.0);
      total += p;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    for (int k = 0; k < n; ++k) {
      for (int l = 0; l < n; ++l) {
        CHECK(std::abs(std::log(s[k] / s[l]) - (z[k] - z[l])) <= 1e-12);
      }
    }
  }
}

TEST_CASE("linear inverse model") {
  MapEncoderParams params = MapEncoderParams::linear(2);
  params.linear_weights = {2.0, 1.0};
  const std::vector<double> y = {0.8, 0.2};
  const State x{0, 0};
  SUBCASE("inside the threshold") {
    // Cell (3,0) is 3 cells away; the point sits 2 cells away.
    const auto g = inverse_obs_linear(x, {2.5, 0.5}, y, {3, 0}, params);
    CHECK(ray_offset(x, {2.5, 0.5}, {3, 0}) == doctest::Approx(1.0));
    CHECK(g[0] == 0.0);
    CHECK(g[1] == doctest::Approx(1.6));
    CHECK(g[2] == doctest::Approx(0.2));
  }
  SUBCASE("beyond the threshold returns the prior") {
    params.prior = {0.0, 0.25, -0.5};
    const auto g = inverse_obs_linear(x, {1.5, 0.5}, y, {3, 0}, params);
    CHECK(g == params.prior);
  }
  SUBCASE("zero offset gives a zero vector") {
    const auto g = inverse_obs_linear(x, {3.5, 0.5}, y, {3, 0}, params);
    for (double v : g) CHECK(v == 0.0);
  }
}

TEST_CASE("network inverse model") {
  MapEncoderParams params = MapEncoderParams::network(2, 16, 3);
  const std::vector<double> y = {0.6, 0.4};
  SUBCASE("zero weights leave only the output bias") {
    std::fill(params.network_weights.begin(), params.network_weights.end(), 0.0);
    params.network_weights[params.network_size() - 2] = 0.3;
    params.network_weights[params.network_size() - 1] = -0.7;
    const auto g = inverse_obs_network({0, 0}, {2.5, 0.5}, y, {3, 0}, params);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == doctest::Approx(0.3));
    CHECK(g[2] == doctest::Approx(-0.7));
  }
  SUBCASE("beyond the threshold returns the prior") {
    params.prior = {0.0, 1.0, 2.0};
    CHECK(inverse_obs_network({0, 0}, {1.0, 0.5}, y, {3, 0}, params) == params.prior);
  }
  SUBCASE("jacobian matches central differences") {
    const std::size_t size = params.network_size();
    std::vector<double> out(2), jac(2 * size), plus(2), minus(2);
    network_forward(params, y, 0.3, 4.2, out, jac);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t p = 0; p < size; ++p) {
      MapEncoderParams shifted = params;
      shifted.network_weights[p] += h;
      network_forward(shifted, y, 0.3, 4.2, plus);
      shifted.network_weights[p] -= 2 * h;
      network_forward(shifted, y, 0.3, 4.2, minus);
      for (int k = 0; k < 2; ++k) {
        const double fd = (plus[k] - minus[k]) / (2 * h);
        const double analytic = jac[k * size + p];
        const double scale = std::max(std::abs(analytic), 1e-3);
        worst = std::max(worst, std::abs(fd - analytic) / scale);
      }
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("update examples") {
  MapEncoderParams params = MapEncoderParams::linear(2);
  params.linear_weights = {4.0, 1.0};
  LogOddsGrid grid(6, 3, params.prior);
  const State x{0, 0};
  // Entering cell (3,0) from the west: offset 3 - 2.5 = 0.5.
  const Point2 p{3.0, 0.5};
  const int cell = grid.width() * 0 + 3;

  SUBCASE("empty cloud leaves the grid unchanged") {
    const LogOddsGrid before = grid;
    update(grid, x, SemanticPointCloud(2), params);
    CHECK(grid == before);
  }
  SUBCASE("single observation") {
    update(grid, x, cloud(2, {{p, {1.0, 0.0}}}), params);
    CHECK(grid.row(cell)[0] == 0.0);
    CHECK(grid.row(cell)[1] == doctest::Approx(2.0));
    CHECK(grid.row(cell)[2] == doctest::Approx(0.0));
    const auto post = posterior(grid);
    const auto expected = softmax(std::vector<double>{0, 2, 0});
    for (int k = 0; k < 3; ++k) CHECK(post[cell * 3 + k] == doctest::Approx(expected[k]));
    for (int other = 0; other < grid.num_cells(); ++other) {
      if (other == cell) continue;
      for (int k = 0; k < 3; ++k) CHECK(grid.row(other)[k] == 0.0);
    }
  }
  SUBCASE("repeated observation adds twice") {
    update(grid, x, cloud(2, {{p, {1.0, 0.0}}, {p, {1.0, 0.0}}}), params);
    CHECK(grid.row(cell)[1] == doctest::Approx(4.0));
    update(grid, x, cloud(2, {{p, {1.0, 0.0}}}), params);
    CHECK(grid.row(cell)[1] == doctest::Approx(6.0));
  }
}

TEST_CASE("posterior of a fresh grid is uniform and rows sum to one") {
  for (int k = 1; k <= 4; ++k) {
    LogOddsGrid grid(5, 4, std::vector<double>(k + 1, 0.0));
    const auto post = posterior(grid);
    for (double v : post) CHECK(v == doctest::Approx(1.0 / (k + 1)).epsilon(1e-15));
  }
  LogOddsGrid grid(2, 2, std::vector<double>{0, 0, 0});
  grid.row(1)[1] = 10.0;
  grid.row(1)[2] = -10.0;
  const auto post = posterior(grid);
  CHECK(post[3 + 1] > post[3 + 0]);
  CHECK(post[3 + 1] > post[3 + 2]);
}

TEST_CASE("recurrent posterior equals the direct Bayes filter") {
  Rng rng(5);
  int informative = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int num_classes = rng.uniform_int(1, 4);
    const int width = rng.uniform_int(2, 6);
    const int height = rng.uniform_int(2, 6);
    const bool network = rng.uniform() < 0.5;
    MapEncoderParams params = network
                                  ? MapEncoderParams::network(num_classes, 8, rng.next())
                                  : MapEncoderParams::linear(num_classes);
    if (!network) {
      for (double& w : params.linear_weights) w = rng.uniform(-3.0, 3.0);
    }
    for (int k = 1; k <= num_classes; ++k) params.prior[k] = rng.uniform(-1.0, 1.0);

    LogOddsGrid grid(width, height, params.prior);
    const int stride = num_classes + 1;
    const auto prior_p = softmax(params.prior);
    // Probability-space oracle: p(m | z_1..t) is proportional to
    // prod_s p(m | z_s) / p(m)^(n-1) over the n observations of the cell.
    std::vector<double> product(static_cast<std::size_t>(width) * height * stride);
    for (int j = 0; j < width * height; ++j) {
      for (int k = 0; k < stride; ++k) product[j * stride + k] = prior_p[k];
    }
    const int length = rng.uniform_int(1, 20);
    for (int t = 0; t < length; ++t) {
      const State x{rng.uniform_int(0, width - 1), rng.uniform_int(0, height - 1)};
      const SemanticPointCloud scan =
          random_scan(rng, x, width, height, num_classes, rng.uniform_int(0, 4));
      update(grid, x, scan, params);
      for (std::size_t n = 0; n < scan.size(); ++n) {
        const Point2 p = scan.position(n);
        const State cell = endpoint_cell(x, p);
        if (cell.i < 0 || cell.j < 0 || cell.i >= width || cell.j >= height) continue;
        const auto g = network ? inverse_obs_network(x, p, scan.likelihood(n), cell, params)
                               : inverse_obs_linear(x, p, scan.likelihood(n), cell, params);
        informative += g != params.prior;
        const auto inverse = softmax(g);
        const int j = cell.j * width + cell.i;
        double total = 0.0;
        for (int k = 0; k < stride; ++k) {
          product[j * stride + k] *= inverse[k] / prior_p[k];
          total += product[j * stride + k];
        }
        for (int k = 0; k < stride; ++k) product[j * stride + k] /= total;
      }
      for (int j = 0; j < width * height; ++j) CHECK(grid.row(j)[0] == 0.0);
    }
    const auto post = posterior(grid);
    double worst = 0.0;
    for (std::size_t n = 0; n < post.size(); ++n) {
      worst = std::max(worst, std::abs(post[n] - product[n]));
    }
    CHECK(worst <= 1e-9);
  }
  CHECK(informative > 300);
}

TEST_CASE("point order within a scan does not matter") {
  Rng rng(9);
  MapEncoderParams params = MapEncoderParams::network(3, 8, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const State x{rng.uniform_int(0, 7), rng.uniform_int(0, 7)};
    const SemanticPointCloud scan = random_scan(rng, x, 8, 8, 3, 12);
    std::vector<std::size_t> order(scan.size());
    for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
    for (std::size_t n = order.size() - 1; n > 0; --n) {
      std::swap(order[n], order[rng.next() % (n + 1)]);
    }
    SemanticPointCloud shuffled(3);
    for (std::size_t n : order) shuffled.add(scan.position(n), scan.likelihood(n));
    LogOddsGrid a(8, 8, params.prior), b(8, 8, params.prior);
    update(a, x, scan, params);
    update(b, x, shuffled, params);
    CHECK(a == b);
  }
}

TEST_CASE("log-odds are clamped and clamped entries carry no gradient") {
  MapEncoderParams params = MapEncoderParams::linear(1);
  params.linear_weights = {200.0};
  LogOddsGrid grid(6, 1, params.prior);
  MapTape tape(grid.num_cells(), 1, 1);
  const SemanticPointCloud scan = cloud(1, {{{3.0, 0.5}, {1.0}}});
  update(grid, {0, 0}, scan, params, &tape);
  CHECK(grid.row(3)[1] == params.clamp);
  CHECK(tape.row(3, 1)[0] == 0.0);
  for (int t = 0; t < 3; ++t) update(grid, {0, 0}, scan, params, &tape);
  CHECK(grid.row(3)[1] == params.clamp);
  for (double v : grid.values()) CHECK(std::isfinite(v));
}

TEST_CASE("full-ray updates add free-space evidence") {
  MapEncoderParams params = MapEncoderParams::linear(2);
  params.endpoint_only = false;
  LogOddsGrid grid(8, 1, params.prior);
  const SemanticPointCloud scan = cloud(2, {{{5.0, 0.5}, {1.0, 0.0}}});
  const auto between = intermediate_cells({0, 0}, {5.0, 0.5});
  REQUIRE(between.size() == 4);
  for (int i = 1; i <= 4; ++i) CHECK(between[i - 1] == State{i, 0});
  update(grid, {0, 0}, scan, params);
  for (int i = 1; i <= 4; ++i) {
    CHECK(grid.row(i)[0] == 0.0);
    CHECK(grid.row(i)[1] == doctest::Approx(-params.lambda_free));
    CHECK(grid.row(i)[2] == doctest::Approx(-params.lambda_free));
  }
  CHECK(grid.row(0)[1] == 0.0);
  CHECK(grid.row(5)[1] == doctest::Approx(0.5));
}

TEST_CASE("map encoder backward") {
  Rng rng(21);
  SUBCASE("zero upstream gives zero gradient") {
    MapEncoderParams params = MapEncoderParams::network(2, 8, 4);
    LogOddsGrid grid(6, 6, params.prior);
    MapTape tape(grid.num_cells(), 2, params.trainable().size());
    update(grid, {2, 2}, random_scan(rng, {2, 2}, 6, 6, 2, 10), params, &tape);
    const std::vector<double> upstream(grid.values().size(), 0.0);
    for (double v : map_encoder_backward(tape, upstream, params.trainable().size())) {
      CHECK(v == 0.0);
    }
  }
  SUBCASE("linear rows are y times offset") {
    MapEncoderParams params = MapEncoderParams::linear(2);
    LogOddsGrid grid(6, 1, params.prior);
    MapTape tape(grid.num_cells(), 2, 2);
    update(grid, {0, 0}, cloud(2, {{{3.0, 0.5}, {0.7, 0.3}}}), params, &tape);
    CHECK(tape.row(3, 1)[0] == doctest::Approx(0.7 * 0.5));
    CHECK(tape.row(3, 1)[1] == 0.0);
    CHECK(tape.row(3, 2)[1] == doctest::Approx(0.3 * 0.5));
    CHECK(tape.row(3, 2)[0] == 0.0);
  }
  SUBCASE("network gradient matches central differences") {
    MapEncoderParams params = MapEncoderParams::network(2, 6, 8);
    const int size = 6;
    std::vector<State> states;
    std::vector<SemanticPointCloud> scans;
    for (int t = 0; t < 4; ++t) {
      states.push_back({rng.uniform_int(0, size - 1), rng.uniform_int(0, size - 1)});
      scans.push_back(random_scan(rng, states.back(), size, size, 2, 6));
    }
    std::vector<double> upstream(size * size * 3);
    for (double& v : upstream) v = rng.uniform(-1.0, 1.0);
    const auto loss = [&](const MapEncoderParams& p, MapTape* tape) {
      LogOddsGrid grid(size, size, p.prior);
      for (std::size_t t = 0; t < states.size(); ++t) update(grid, states[t], scans[t], p, tape);
      double total = 0.0;
      for (std::size_t n = 0; n < upstream.size(); ++n) total += upstream[n] * grid.values()[n];
      return total;
    };
    const std::size_t num_params = params.trainable().size();
    MapTape tape(size * size, 2, num_params);
    loss(params, &tape);
    const auto grad = map_encoder_backward(tape, upstream, num_params);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t p = 0; p < num_params; ++p) {
      MapEncoderParams shifted = params;
      shifted.network_weights[p] += h;
      const double plus = loss(shifted, nullptr);
      shifted.network_weights[p] -= 2 * h;
      const double minus = loss(shifted, nullptr);
      const double fd = (plus - minus) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad[p]) / std::max(std::abs(grad[p]), 1e-3));
    }
    CHECK(worst <= 1e-5);
  }
  SUBCASE("shape mismatch is an error") {
    MapTape tape(4, 2, 2);
    const std::vector<double> upstream(5, 0.0);
    CHECK_THROWS_AS(map_encoder_backward(tape, upstream, 2), Error);
    CHECK_THROWS_AS(map_encoder_backward(tape, std::vector<double>(12, 0.0), 3), Error);
  }
}

TEST_CASE("encoder parameter validation") {
  MapEncoderParams params = MapEncoderParams::network(3, 16, 1);
  CHECK(params.network_size() == 16 * 5 + 16 + 3 * 16 + 3);
  CHECK_NOTHROW(params.validate());
  params.network_weights.pop_back();
  CHECK_THROWS_AS(params.validate(), Error);
  MapEncoderParams linear = MapEncoderParams::linear(2);
  linear.epsilon = 0.0;
  CHECK_THROWS_AS(linear.validate(), Error);
}

}  // namespace
}  // namespace semnav
