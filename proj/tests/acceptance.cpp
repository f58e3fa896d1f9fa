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

// Acceptance suite: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria by number; with none, all eight run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "commands.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "learner.hpp"
#include "metrics.hpp"
#include "planner.hpp"
#include "rng.hpp"
#include "semantic_map.hpp"
#include "test_util.hpp"

namespace semnav {
namespace {

namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, fmt, args...);
  return buffer;
}

// Random field with a reachable (goal, query) pair.
struct Instance {
  CostField field;
  State goal;
  State query;
};

Instance reachable_instance(Rng& rng, int side, double max_separation) {
  for (;;) {
    Instance inst{testing::random_field(side, side, rng), {}, {}};
    inst.goal = {rng.uniform_int(0, side - 1), rng.uniform_int(0, side - 1)};
    inst.query = {rng.uniform_int(0, side - 1), rng.uniform_int(0, side - 1)};
    if (std::hypot(inst.goal.i - inst.query.i, inst.goal.j - inst.query.j) > max_separation) {
      continue;
    }
    inst.field.cell_cost[inst.field.index(inst.goal)] = 1.0;
    inst.field.cell_cost[inst.field.index(inst.query)] = 1.0;
    if (testing::bfs_reachable(inst.field, inst.query)[inst.field.index(inst.goal)]) {
      return inst;
    }
  }
}

Verdict planner_oracle() {
  const auto start = Clock::now();
  Rng rng(1001);
  double closed_error = 0.0;
  double open_violation = 0.0;
  std::size_t closed = 0;
  std::size_t open = 0;
  for (int map = 0; map < 100; ++map) {
    const Instance inst = reachable_instance(rng, 32, 1e9);
    const PlanResult plan = backward_astar(inst.field, inst.goal, inst.query);
    const auto oracle = dijkstra_oracle(inst.field, inst.goal);
    for (int n = 0; n < inst.field.num_cells(); ++n) {
      if (plan.closed(n)) {
        closed_error = std::max(closed_error, std::abs(plan.g[n] - oracle[n]));
        ++closed;
      } else if (plan.status[n] == NodeStatus::kOpen) {
        open_violation = std::max(open_violation, oracle[n] - plan.g[n]);
        ++open;
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {closed_error <= 1e-9 && open_violation <= 1e-9 && elapsed < 30.0,
          format("max |g - oracle| on CLOSED %.3g over %zu states, max OPEN shortfall %.3g "
                 "over %zu states, %.2fs",
                 closed_error, closed, std::max(open_violation, 0.0), open, elapsed)};
}

Verdict value_iteration_crosscheck() {
  Rng rng(1002);
  const int side = 16;
  const int cells = side * side;
  double worst = 0.0;
  bool all_converged = true;
  int near_maps = 0;
  bool fewer = true;
  std::size_t most_closed = 0;
  for (int map = 0; map < 20; ++map) {
    // Every map keeps its query within width / 3 of the goal.
    const Instance inst = reachable_instance(rng, side, side / 3.0);
    const auto vi = value_iteration_reference(inst.field, inst.goal, 10 * cells);
    const auto oracle = dijkstra_oracle(inst.field, inst.goal);
    all_converged = all_converged && vi.converged;
    for (int n = 0; n < cells; ++n) {
      if (std::isinf(oracle[n])) {
        if (!std::isinf(vi.value[n])) worst = kInfinity;
      } else {
        worst = std::max(worst, std::abs(vi.value[n] - oracle[n]));
      }
    }
    const PlanResult plan = backward_astar(inst.field, inst.goal, inst.query);
    ++near_maps;
    fewer = fewer && plan.num_closed() < static_cast<std::size_t>(cells);
    most_closed = std::max(most_closed, plan.num_closed());
  }
  return {all_converged && worst <= 1e-9 && fewer,
          format("max |V - oracle| %.3g, A* closed at most %zu of %d states on %d maps",
                 worst, most_closed, cells, near_maps)};
}

EnvironmentSpec random_small_world(Rng& rng) {
  EnvironmentSpec env = testing::open_env(8, 8, 2);
  for (int& label : env.labels) {
    const double r = rng.uniform();
    label = r < 0.12 ? 2 : (r < 0.35 ? 1 : 0);
  }
  return env;
}

Verdict gradient_check() {
  const auto start = Clock::now();
  Rng rng(1003);
  const TrueCost true_cost{{1.0, 5.0, 1.0}};
  SensorParams sensor;
  sensor.num_rays = 36;
  sensor.max_range = 6.0;
  double worst_relative = 0.0;
  double worst_absolute = 0.0;
  std::size_t coordinates = 0;
  int instances = 0;
  while (instances < 10) {
    const EnvironmentSpec env = random_small_world(rng);
    const State s{rng.uniform_int(0, 7), rng.uniform_int(0, 7)};
    const State g{rng.uniform_int(0, 7), rng.uniform_int(0, 7)};
    if (env.is_obstacle(s) || env.is_obstacle(g) || std::hypot(s.i - g.i, s.j - g.j) < 4.0) {
      continue;
    }
    Demonstration demo;
    try {
      demo = generate_expert_demo(env, s, g, true_cost, sensor);
    } catch (const Error&) {
      continue;
    }
    const EncoderMode mode = instances % 2 == 0 ? EncoderMode::kLinear : EncoderMode::kNetwork;
    ThetaParams theta = make_theta(2, mode, CostArchitecture{}, rng.next());
    // Parameter jitter keeps the optimal trajectories unique.
    auto flat = theta.pack();
    for (double& v : flat) v += rng.uniform(-0.05, 0.05);
    theta.unpack(flat);

    const Example example{&env, &demo};
    const DemoEvaluation eval = evaluate_demo(example, theta, PolicyOptions{}, true);
    if (eval.skipped > 0) continue;
    const double h = 1e-5;
    for (std::size_t p = 0; p < flat.size(); ++p) {
      auto moved = flat;
      moved[p] = flat[p] + h;
      theta.unpack(moved);
      const double plus = evaluate_demo(example, theta, PolicyOptions{}, false).nll_sum;
      moved[p] = flat[p] - h;
      theta.unpack(moved);
      const double minus = evaluate_demo(example, theta, PolicyOptions{}, false).nll_sum;
      const double fd = (plus - minus) / (2.0 * h);
      const double analytic = eval.grad[p];
      if (std::abs(analytic) < 1e-8) {
        worst_absolute = std::max(worst_absolute, std::abs(fd - analytic));
      } else {
        worst_relative = std::max(worst_relative, std::abs(fd - analytic) / std::abs(analytic));
      }
      ++coordinates;
    }
    ++instances;
  }
  const double elapsed = seconds_since(start);
  return {worst_relative <= 1e-4 && worst_absolute <= 1e-4 && elapsed < 120.0,
          format("max relative error %.3g, max absolute error on near-zero coordinates %.3g, "
                 "%zu coordinates, %.1fs",
                 worst_relative, worst_absolute, coordinates, elapsed)};
}

Verdict bayes_filter() {
  Rng rng(1004);
  double worst = 0.0;
  bool class0_zero = true;
  for (int sequence = 0; sequence < 1000; ++sequence) {
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
    // Per-cell filter in probability space: each observation multiplies in
    // the inverse model divided by the prior.
    std::vector<double> belief(static_cast<std::size_t>(width) * height * stride);
    for (int j = 0; j < width * height; ++j) {
      std::copy(prior_p.begin(), prior_p.end(), belief.begin() + j * stride);
    }
    const int length = rng.uniform_int(1, 20);
    for (int t = 0; t < length; ++t) {
      const State x{rng.uniform_int(0, width - 1), rng.uniform_int(0, height - 1)};
      const SemanticPointCloud scan =
          testing::random_scan(rng, x, width, height, num_classes, rng.uniform_int(0, 4));
      update(grid, x, scan, params);
      for (std::size_t n = 0; n < scan.size(); ++n) {
        const Point2 p = scan.position(n);
        const State cell = endpoint_cell(x, p);
        if (cell.i < 0 || cell.j < 0 || cell.i >= width || cell.j >= height) continue;
        const auto g = network ? inverse_obs_network(x, p, scan.likelihood(n), cell, params)
                               : inverse_obs_linear(x, p, scan.likelihood(n), cell, params);
        const auto inverse = softmax(g);
        double* row = belief.data() + (cell.j * width + cell.i) * stride;
        double total = 0.0;
        for (int k = 0; k < stride; ++k) total += row[k] *= inverse[k] / prior_p[k];
        for (int k = 0; k < stride; ++k) row[k] /= total;
      }
      for (int j = 0; j < width * height; ++j) class0_zero = class0_zero && grid.row(j)[0] == 0.0;
    }
    const auto post = posterior(grid);
    for (std::size_t n = 0; n < post.size(); ++n) {
      worst = std::max(worst, std::abs(post[n] - belief[n]));
    }
  }
  return {worst <= 1e-9 && class0_zero,
          format("max |posterior - filter| %.3g over 1000 sequences, class-0 log-odds %s", worst,
                 class0_zero ? "identically zero" : "NONZERO")};
}

Verdict softmax_identity() {
  Rng rng(1005);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> z(rng.uniform_int(2, 8));
    for (double& v : z) v = rng.uniform(-50.0, 50.0);
    z[rng.uniform_int(0, static_cast<int>(z.size()) - 1)] = rng.uniform() < 0.5 ? 50.0 : -50.0;
    const auto s = softmax(z);
    for (std::size_t k = 0; k < z.size(); ++k) {
      for (std::size_t l = 0; l < z.size(); ++l) {
        worst = std::max(worst, std::abs(std::log(s[k] / s[l]) - (z[k] - z[l])));
      }
    }
  }
  return {worst <= 1e-12, format("max |log ratio - difference| %.3g over 10000 vectors", worst)};
}

// Fixed desk-scale experiment settings.
RunConfig recovery_config() {
  RunConfig config;
  config.seed = 2026;
  config.threads = 1;
  config.gen.width = 32;
  config.gen.height = 32;
  config.gen.num_classes = 2;
  config.gen.true_cost = TrueCost{{1.0, 5.0, 1.0}};
  config.train.optimizer = OptimizerKind::kAdam;
  config.train.learning_rate = 0.01;
  config.train.batch_size = 10;
  config.train.max_epochs = 150;
  config.train.window = 10;
  config.train.tolerance = 1e-4;
  return config;
}

// Mean learned cost per ground-truth class over the maps the policy builds
// along each held-out demonstration.
std::pair<double, double> sidewalk_and_road_cost(const Dataset& test, const ThetaParams& theta) {
  double sums[2] = {0.0, 0.0};
  long counts[2] = {0, 0};
  for (const Example& ex : test.examples()) {
    LogOddsGrid grid(ex.env->width, ex.env->height, theta.psi.prior);
    for (const DemoStep& step : ex.demo->steps) update(grid, step.state, step.scan, theta.psi);
    const auto cost = evaluate_cost(grid, *ex.env, theta.phi);
    for (int n = 0; n < ex.env->num_cells(); ++n) {
      const int label = ex.env->labels[n];
      if (label > 1) continue;
      sums[label] += cost.forward.cell_cost[n];
      ++counts[label];
    }
  }
  return {sums[1] / std::max(1L, counts[1]), sums[0] / std::max(1L, counts[0])};
}

Verdict irl_recovery(const fs::path& work) {
  const auto start = Clock::now();
  RunConfig config = recovery_config();
  config.gen.count = 100;
  const fs::path train_dir = work / "train";
  const fs::path test_dir = work / "test";
  const fs::path checkpoint = work / "model.ckpt";
  fs::create_directories(work);
  cmd_gen(config, train_dir);
  RunConfig held_out = config;
  held_out.seed = config.seed + 1;
  held_out.gen.count = 20;
  cmd_gen(held_out, test_dir);

  const TrainSummary trained = cmd_train(config, train_dir, checkpoint);
  const EvalReport report = cmd_eval(config, test_dir, checkpoint, work / "report");
  const ThetaParams theta = load_checkpoint(checkpoint);
  const auto [sidewalk, road] = sidewalk_and_road_cost(load_dataset(test_dir), theta);
  const double elapsed = seconds_since(start);

  const bool pass = trained.converged && report.nll < 1.0 && report.acc >= 0.85 &&
                    report.traj_succ_rate >= 0.90 && report.mhd <= 1.5 && sidewalk > road &&
                    elapsed <= 600.0;
  return {pass, format("%s after %d epochs; test NLL %.4f, Acc %.4f, Succ %.3f, MHD %.3f; "
                       "mean cost sidewalk %.4f vs road %.4f; %.0fs",
                       trained.converged ? "converged" : "NOT converged", trained.epochs,
                       report.nll, report.acc, report.traj_succ_rate, report.mhd, sidewalk, road,
                       elapsed)};
}

Verdict metric_units() {
  std::vector<Policy> uniform(5);
  for (Policy& p : uniform) p.probs.fill(0.125);
  const std::vector<int> controls{0, 1, 2, 3, 4};
  const double uniform_nll = nll(uniform, controls);

  std::vector<State> a;
  std::vector<State> b;
  for (int i = 0; i < 10; ++i) {
    a.push_back({i, 2});
    b.push_back({i, 5});
  }
  const double offset = mhd(a, b);

  const auto reached = [](int steps) {
    RolloutResult r;
    r.states.push_back({0, 0});
    for (int t = 0; t < steps; ++t) {
      r.controls.push_back(0);
      r.states.push_back({t + 1, 0});
    }
    r.outcome = RolloutOutcome::kReachedGoal;
    return r;
  };
  const int expert = 7;
  const bool at_bound = trajectory_success(reached(2 * expert), expert);
  const bool past_bound = trajectory_success(reached(2 * expert + 1), expert);

  return {uniform_nll == std::log(8.0) && offset == 3.0 && at_bound && !past_bound,
          format("uniform NLL %.17g (ln 8 = %.17g), offset-3 MHD %.17g, 2T %s, 2T+1 %s",
                 uniform_nll, std::log(8.0), offset, at_bound ? "accepted" : "rejected",
                 past_bound ? "accepted" : "rejected")};
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& first_difference) {
  std::set<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) names.insert(fs::relative(e.path(), a).string());
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) names.insert(fs::relative(e.path(), b).string());
  }
  for (const std::string& name : names) {
    if (!fs::exists(a / name) || !fs::exists(b / name) ||
        read_file(a / name) != read_file(b / name)) {
      first_difference = name;
      return false;
    }
  }
  return true;
}

Verdict determinism(const fs::path& work) {
  RunConfig config = recovery_config();
  config.gen.count = 12;
  config.train.max_epochs = 3;
  std::string diff;
  bool identical = true;
  std::size_t checkpoint_bytes = 0;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = work / run;
    fs::create_directories(dir);
    cmd_gen(config, dir / "data");
    fs::create_directories(dir / "model");
    // The training log holds wall times, so it lives outside the compared tree.
    cmd_train(config, dir / "data", dir / "model" / "model.ckpt",
              work / (std::string(run) + ".log.jsonl"));
    cmd_eval(config, dir / "data", dir / "model" / "model.ckpt", dir / "report");
    checkpoint_bytes = fs::file_size(dir / "model" / "model.ckpt");
  }
  identical = same_tree(work / "a", work / "b", diff);
  return {identical, identical ? format("datasets, %zu-byte checkpoints and reports identical",
                                        checkpoint_bytes)
                               : "first difference in " + diff};
}

}  // namespace
}  // namespace semnav

int main(int argc, char** argv) {
  using namespace semnav;
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));
  const auto work = fs::temp_directory_path() / "semnav_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"planner oracle equivalence", planner_oracle},
      {"value-iteration cross-check", value_iteration_crosscheck},
      {"end-to-end gradient check", gradient_check},
      {"Bayes-filter equivalence", bayes_filter},
      {"softmax identity", softmax_identity},
      {"desk-scale IRL recovery", [&] { return irl_recovery(work / "recovery"); }},
      {"metric unit tests", metric_units},
      {"determinism", [&] { return determinism(work / "determinism"); }},
  };
  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int number = static_cast<int>(c) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    Verdict verdict;
    try {
      verdict = criteria[c].second();
    } catch (const std::exception& e) {
      verdict = {false, std::string("error: ") + e.what()};
    }
    failures += !verdict.pass;
    std::printf("%s %d %s: %s\n", verdict.pass ? "PASS" : "FAIL", number, criteria[c].first,
                verdict.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}
