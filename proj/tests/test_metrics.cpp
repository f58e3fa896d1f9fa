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

#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "error.hpp"
#include "json.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "test_util.hpp"

namespace semnav {
namespace {

Policy uniform8() {
  Policy p;
  p.probs.fill(0.125);
  return p;
}

Policy one_hot(int u) {
  Policy p;
  p.probs[u] = 1.0;
  return p;
}

std::vector<State> line(int length, int j) {
  std::vector<State> out;
  for (int i = 0; i < length; ++i) out.push_back({i, j});
  return out;
}

RolloutResult reached_after(int steps) {
  RolloutResult r;
  r.states.push_back({0, 0});
  for (int t = 0; t < steps; ++t) {
    r.controls.push_back(0);
    r.states.push_back({t + 1, 0});
  }
  r.outcome = RolloutOutcome::kReachedGoal;
  return r;
}

TEST_CASE("nll examples") {
  const std::vector<int> controls{0, 3, 7, 2};
  const std::vector<Policy> uniform(4, uniform8());
  CHECK(nll(uniform, controls) == doctest::Approx(std::log(8.0)).epsilon(1e-15));
  CHECK(nll(uniform, controls) == doctest::Approx(2.0794).epsilon(1e-4));
  std::vector<Policy> perfect;
  for (int u : controls) perfect.push_back(one_hot(u));
  CHECK(nll(perfect, controls) == 0.0);
  CHECK_THROWS_AS(nll({}, {}), Error);
  CHECK_THROWS_AS(nll(uniform, std::vector<int>{0}), Error);
}

TEST_CASE("nll is bounded below by the largest probability") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    Policy p;
    double total = 0.0;
    for (double& v : p.probs) total += (v = rng.uniform(0.01, 1.0));
    for (double& v : p.probs) v /= total;
    const int u = rng.uniform_int(0, kNumControls - 1);
    const double largest = *std::max_element(p.probs.begin(), p.probs.end());
    CHECK(nll(std::vector<Policy>{p}, std::vector<int>{u}) >= -std::log(largest) - 1e-15);
  }
}

TEST_CASE("accuracy examples") {
  const std::vector<int> controls{1, 2, 5, 7};
  std::vector<Policy> expert;
  for (int u : controls) expert.push_back(one_hot(u));
  CHECK(accuracy(expert, controls) == 1.0);
  // Uniform ties resolve to control 0, which the expert never picks.
  CHECK(accuracy(std::vector<Policy>(4, uniform8()), controls) == 0.0);
  CHECK(accuracy(std::vector<Policy>(4, uniform8()), std::vector<int>{0, 0, 1, 1}) == 0.5);
  CHECK_THROWS_AS(accuracy({}, {}), Error);
}

TEST_CASE("accuracy ignores monotone transforms of Q") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> q(kNumControls);
    for (double& v : q) v = rng.uniform(0.0, 5.0);
    std::vector<double> warped(kNumControls);
    for (int u = 0; u < kNumControls; ++u) warped[u] = std::exp(q[u]) + 3.0 * q[u];
    const int u = rng.uniform_int(0, kNumControls - 1);
    const std::vector<int> expert{u};
    CHECK(accuracy(std::vector<Policy>{boltzmann_policy(q)}, expert) ==
          accuracy(std::vector<Policy>{boltzmann_policy(warped)}, expert));
  }
}

TEST_CASE("success boundary is inclusive at twice the expert length") {
  CHECK(trajectory_success(reached_after(10), 5));
  CHECK_FALSE(trajectory_success(reached_after(11), 5));
  CHECK(trajectory_success(reached_after(0), 0));
  RolloutResult collided = reached_after(3);
  collided.outcome = RolloutOutcome::kCollision;
  CHECK_FALSE(trajectory_success(collided, 5));
  RolloutResult timed_out = reached_after(3);
  timed_out.outcome = RolloutOutcome::kTimeout;
  CHECK_FALSE(trajectory_success(timed_out, 5));
}

TEST_CASE("mhd examples") {
  const auto a = line(6, 0);
  CHECK(mhd(a, a) == 0.0);
  for (int d : {1, 2, 4}) CHECK(mhd(a, line(6, d)) == doctest::Approx(d).epsilon(1e-15));
  const std::vector<State> p{{0, 0}};
  const std::vector<State> q{{3, 4}};
  CHECK(mhd(p, q) == doctest::Approx(5.0).epsilon(1e-15));
  // Directed means differ; the larger one wins.
  const std::vector<State> single{{0, 0}};
  CHECK(mhd(single, line(3, 0)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(mhd({}, a), Error);
  CHECK_THROWS_AS(mhd(a, {}), Error);
}

TEST_CASE("mhd is symmetric and nonnegative") {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<State> a(rng.uniform_int(1, 12));
    std::vector<State> b(rng.uniform_int(1, 12));
    for (State& s : a) s = {rng.uniform_int(0, 20), rng.uniform_int(0, 20)};
    for (State& s : b) s = {rng.uniform_int(0, 20), rng.uniform_int(0, 20)};
    CHECK(mhd(a, b) == mhd(b, a));
    CHECK(mhd(a, b) >= 0.0);
    CHECK(mhd(a, a) == 0.0);
  }
}

TEST_CASE("evaluate scores demos and rolls out") {
  const EnvironmentSpec env = testing::open_env(10, 10);
  SensorParams sensor;
  sensor.num_rays = 24;
  sensor.max_range = 6.0;
  const TrueCost cost{{1.0, 5.0, 1.0}};
  const Demonstration a = generate_expert_demo(env, {1, 1}, {8, 6}, cost, sensor);
  const Demonstration b = generate_expert_demo(env, {8, 8}, {2, 3}, cost, sensor);
  const std::vector<Example> examples{{&env, &a}, {&env, &b}};
  const ThetaParams theta = make_theta(2, EncoderMode::kLinear, CostArchitecture{}, 4);
  EvalOptions options;
  options.sensor = sensor;
  const EvalReport report = evaluate(examples, theta, options);
  REQUIRE(report.demos.size() == 2u);
  CHECK(report.total_steps == static_cast<int>(a.steps.size() + b.steps.size()));
  CHECK(report.nll >= 0.0);
  CHECK(report.acc >= 0.0);
  CHECK(report.acc <= 1.0);
  CHECK(report.traj_succ_rate >= 0.0);
  CHECK(report.traj_succ_rate <= 1.0);
  CHECK(report.mhd >= 0.0);

  options.threads = 2;
  const EvalReport threaded = evaluate(examples, theta, options);
  CHECK(report_json(threaded) == report_json(report));

  const auto parsed = nlohmann::json::parse(report_json(report));
  CHECK(parsed.at("nll").get<double>() == report.nll);
  CHECK(parsed.at("demos").size() == 2u);
  std::ostringstream table;
  write_report_table(table, report);
  CHECK(table.str().find("NLL") != std::string::npos);
}

}  // namespace
}  // namespace semnav
