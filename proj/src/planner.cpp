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

#include "planner.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>
#include <set>

#include "error.hpp"

namespace semnav {

namespace {

// Two candidate values within this distance count as a tie.
double tie_tolerance(double value) { return 1e-10 * (1.0 + std::abs(value)); }

struct QueueEntry {
  double key;
  int index;
};

struct QueueOrder {
  // std::priority_queue is a max-heap; invert so the smallest (key, index)
  // is on top.
  bool operator()(const QueueEntry& a, const QueueEntry& b) const {
    if (a.key != b.key) return a.key > b.key;
    return a.index > b.index;
  }
};

}  // namespace

int CostField::successor(State x, int control) const {
  const Control& c = kControls[control];
  const State next{x.i + c.di, x.j + c.dj};
  if (!in_bounds(next)) return -1;
  const int n = index(next);
  if (!std::isfinite(cell_cost[n])) return -1;
  return n;
}

double CostField::transition_cost(State x, int control) const {
  const int n = successor(x, control);
  if (n < 0) return kInfinity;
  return cell_cost[n] * kControls[control].length;
}

double CostField::min_finite_cost() const {
  double best = kInfinity;
  for (double c : cell_cost) {
    if (std::isfinite(c)) best = std::min(best, c);
  }
  return best;
}

CostField make_cost_field(std::span<const double> cell_cost, const EnvironmentSpec& env) {
  if (static_cast<int>(cell_cost.size()) != env.num_cells()) {
    throw Error(ErrorCode::kShapeMismatch, "cost field size does not match environment");
  }
  CostField field{env.width, env.height, {cell_cost.begin(), cell_cost.end()}};
  for (int n = 0; n < env.num_cells(); ++n) {
    if (env.is_obstacle_class(env.labels[n])) field.cell_cost[n] = kInfinity;
  }
  return field;
}

std::size_t PlanResult::num_closed() const {
  return static_cast<std::size_t>(
      std::count(status.begin(), status.end(), NodeStatus::kClosed));
}

std::size_t PlanResult::num_open() const {
  return static_cast<std::size_t>(
      std::count(status.begin(), status.end(), NodeStatus::kOpen));
}

PlanResult backward_astar(const CostField& cost, State goal, State query,
                          const AstarOptions& options) {
  if (!cost.in_bounds(goal) || !cost.in_bounds(query)) {
    throw Error(ErrorCode::kInvalidArgument, "goal or query outside the grid");
  }
  const int num_cells = cost.num_cells();
  PlanResult plan;
  plan.width = cost.width;
  plan.height = cost.height;
  plan.goal = goal;
  plan.query = query;
  plan.g.assign(num_cells, kInfinity);
  plan.status.assign(num_cells, NodeStatus::kUnseen);
  plan.q_star.fill(kInfinity);

  const int goal_index = cost.index(goal);
  if (!std::isfinite(cost.cell_cost[goal_index])) {
    throw Error(ErrorCode::kUnreachable, "goal cell is blocked");
  }

  // States that must be CLOSED before the search may stop.
  std::vector<char> required(num_cells, 0);
  int remaining = 0;
  if (options.stop_rule == StopRule::kQueryClosed) {
    required[cost.index(query)] = 1;
    remaining = 1;
  } else {
    for (int u = 0; u < kNumControls; ++u) {
      const int n = cost.successor(query, u);
      if (n >= 0 && !required[n]) {
        required[n] = 1;
        ++remaining;
      }
    }
  }
  if (remaining == 0) return plan;

  double floor = 0.0;
  if (options.heuristic == Heuristic::kEuclidean) {
    floor = options.cost_floor > 0.0 ? options.cost_floor : cost.min_finite_cost();
  }
  const auto heuristic = [&](int n) {
    if (floor == 0.0) return 0.0;
    const State s = cost.state(n);
    return floor * std::hypot(double(s.i - query.i), double(s.j - query.j));
  };

  std::priority_queue<QueueEntry, std::vector<QueueEntry>, QueueOrder> open;
  plan.g[goal_index] = 0.0;
  plan.status[goal_index] = NodeStatus::kOpen;
  open.push({heuristic(goal_index), goal_index});

  while (!open.empty()) {
    const QueueEntry top = open.top();
    open.pop();
    const int s = top.index;
    if (plan.status[s] == NodeStatus::kClosed) continue;
    plan.status[s] = NodeStatus::kClosed;
    ++plan.expansions;
    if (options.record_trace) plan.trace.push_back(s);
    if (required[s] && --remaining == 0) break;

    const State state = cost.state(s);
    const double enter_cost = cost.cell_cost[s];
    for (int u = 0; u < kNumControls; ++u) {
      const Control& c = kControls[u];
      const State pred{state.i - c.di, state.j - c.dj};
      if (!cost.in_bounds(pred)) continue;
      const int p = cost.index(pred);
      if (!std::isfinite(cost.cell_cost[p])) continue;
      if (plan.status[p] == NodeStatus::kClosed) continue;
      const double candidate = plan.g[s] + enter_cost * c.length;
      if (candidate < plan.g[p]) {
        plan.g[p] = candidate;
        plan.status[p] = NodeStatus::kOpen;
        open.push({candidate + heuristic(p), p});
      }
    }
  }
  if (remaining != 0) {
    throw Error(ErrorCode::kUnreachable, "goal unreachable from query state");
  }

  for (int u = 0; u < kNumControls; ++u) {
    const int n = cost.successor(query, u);
    if (n < 0) continue;
    plan.q_star[u] = cost.transition_cost(query, u) + plan.g[n];
  }
  return plan;
}

void write_plan_trace(std::ostream& out, const PlanResult& plan) {
  for (std::size_t k = 0; k < plan.trace.size(); ++k) {
    const int n = plan.trace[k];
    out << k << ' ' << n % plan.width << ' ' << n / plan.width << ' ' << plan.g[n]
        << '\n';
  }
}

std::vector<double> dijkstra_oracle(const CostField& cost, State goal) {
  std::vector<double> g(cost.num_cells(), kInfinity);
  if (!cost.in_bounds(goal) || !std::isfinite(cost.cell_cost[cost.index(goal)])) {
    return g;
  }
  std::vector<char> done(cost.num_cells(), 0);
  std::set<std::pair<double, int>> frontier;
  g[cost.index(goal)] = 0.0;
  frontier.insert({0.0, cost.index(goal)});
  while (!frontier.empty()) {
    const auto [value, s] = *frontier.begin();
    frontier.erase(frontier.begin());
    done[s] = 1;
    const State state = cost.state(s);
    for (int u = 0; u < kNumControls; ++u) {
      const State pred{state.i - kControls[u].di, state.j - kControls[u].dj};
      if (!cost.in_bounds(pred)) continue;
      const int p = cost.index(pred);
      if (done[p] || !std::isfinite(cost.cell_cost[p])) continue;
      const double candidate = value + cost.cell_cost[s] * kControls[u].length;
      if (candidate < g[p]) {
        if (std::isfinite(g[p])) frontier.erase({g[p], p});
        g[p] = candidate;
        frontier.insert({candidate, p});
      }
    }
  }
  return g;
}

ValueIterationResult value_iteration_reference(const CostField& cost, State goal,
                                               int max_sweeps) {
  const int num_cells = cost.num_cells();
  const int goal_index = cost.index(goal);
  ValueIterationResult result;
  result.value.assign(num_cells, kInfinity);
  result.value[goal_index] = 0.0;

  std::vector<double> next(num_cells);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (int n = 0; n < num_cells; ++n) {
      if (n == goal_index || !std::isfinite(cost.cell_cost[n])) {
        next[n] = result.value[n];
        continue;
      }
      const State x = cost.state(n);
      double best = kInfinity;
      for (int u = 0; u < kNumControls; ++u) {
        const int s = cost.successor(x, u);
        if (s < 0) continue;
        best = std::min(best, cost.transition_cost(x, u) + result.value[s]);
      }
      next[n] = best;
      changed = changed || best != result.value[n];
    }
    result.value.swap(next);
    result.states_touched += static_cast<std::size_t>(num_cells);
    ++result.sweeps;
    if (!changed) {
      result.converged = true;
      break;
    }
  }

  result.q.resize(num_cells);
  for (int n = 0; n < num_cells; ++n) {
    const State x = cost.state(n);
    for (int u = 0; u < kNumControls; ++u) {
      const int s = cost.successor(x, u);
      result.q[n][u] = s < 0 ? kInfinity : cost.transition_cost(x, u) + result.value[s];
    }
  }
  return result;
}

Policy boltzmann_policy(std::span<const double> q_star, double temperature) {
  if (q_star.size() != kNumControls) {
    throw Error(ErrorCode::kShapeMismatch, "policy needs one Q value per control");
  }
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
  double lowest = kInfinity;
  for (double q : q_star) lowest = std::min(lowest, q);
  if (!std::isfinite(lowest)) {
    throw Error(ErrorCode::kInvalidArgument, "no finite Q value");
  }
  Policy policy;
  policy.temperature = temperature;
  double total = 0.0;
  for (int u = 0; u < kNumControls; ++u) {
    const double w =
        std::isfinite(q_star[u]) ? std::exp(-(q_star[u] - lowest) / temperature) : 0.0;
    policy.probs[u] = w;
    total += w;
  }
  for (double& p : policy.probs) p /= total;
  return policy;
}

Policy uniform_policy(const CostField& cost, State x) {
  Policy policy;
  int open = 0;
  for (int u = 0; u < kNumControls; ++u) {
    if (cost.successor(x, u) >= 0) ++open;
  }
  if (open == 0) return policy;
  for (int u = 0; u < kNumControls; ++u) {
    if (cost.successor(x, u) >= 0) policy.probs[u] = 1.0 / open;
  }
  return policy;
}

int argmax_control(const Policy& policy) {
  int best = 0;
  for (int u = 1; u < kNumControls; ++u) {
    if (policy.probs[u] > policy.probs[best]) best = u;
  }
  return best;
}

TauStar extract_tau_star(const PlanResult& plan, const CostField& cost, State x_t,
                         int u_t) {
  const int first = cost.successor(x_t, u_t);
  if (first < 0 || !plan.closed(first)) {
    throw Error(ErrorCode::kInvalidArgument, "f(x_t, u_t) is not in CLOSED");
  }
  TauStar tau;
  std::vector<double> step_costs;
  tau.steps.emplace_back(x_t, u_t);
  step_costs.push_back(cost.transition_cost(x_t, u_t));

  const int goal_index = cost.index(plan.goal);
  int current = first;
  int guard = cost.num_cells();
  while (current != goal_index) {
    if (--guard < 0) {
      throw Error(ErrorCode::kInvalidArgument, "optimal trajectory does not terminate");
    }
    const State x = cost.state(current);
    int best_u = -1;
    double best = kInfinity;
    for (int u = 0; u < kNumControls; ++u) {
      const int n = cost.successor(x, u);
      if (n < 0 || !plan.closed(n)) continue;
      const double value = cost.transition_cost(x, u) + plan.g[n];
      if (best_u < 0 || value < best - tie_tolerance(best)) {
        best = value;
        best_u = u;
      }
    }
    if (best_u < 0) {
      throw Error(ErrorCode::kInvalidArgument, "no CLOSED successor on optimal path");
    }
    tau.steps.emplace_back(x, best_u);
    step_costs.push_back(cost.transition_cost(x, best_u));
    current = cost.successor(x, best_u);
  }

  // Summed goal-first, the same association the backward search used for g.
  double total = 0.0;
  for (auto it = step_costs.rbegin(); it != step_costs.rend(); ++it) total += *it;
  tau.cost = total;
  for (const auto& [x, u] : tau.steps) ++tau.visitation[{cost.index(x), u}];
  return tau;
}

std::map<std::pair<int, int>, double> q_subgradient(const Visitation& visitation) {
  std::map<std::pair<int, int>, double> grad;
  for (const auto& [key, count] : visitation) grad[key] = static_cast<double>(count);
  return grad;
}

std::map<int, double> cell_cost_subgradient(const Visitation& visitation,
                                            const CostField& cost) {
  std::map<int, double> grad;
  for (const auto& [key, count] : visitation) {
    const auto [state_index, u] = key;
    const int n = cost.successor(cost.state(state_index), u);
    if (n < 0) continue;
    grad[n] += count * kControls[u].length;
  }
  return grad;
}

}  // namespace semnav
