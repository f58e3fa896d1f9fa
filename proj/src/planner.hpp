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

#ifndef SEMNAV_PLANNER_HPP_
#define SEMNAV_PLANNER_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "gridworld.hpp"

namespace semnav {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Stage cost over the grid. Entering cell s with control u costs
// cell_cost[s] * length(u); cells holding +inf are blocked.
struct CostField {
  int width = 0;
  int height = 0;
  std::vector<double> cell_cost;

  int num_cells() const { return width * height; }
  bool in_bounds(State s) const {
    return s.i >= 0 && s.j >= 0 && s.i < width && s.j < height;
  }
  int index(State s) const { return s.j * width + s.i; }
  State state(int index) const { return {index % width, index / width}; }

  // Successor index, or -1 when out of bounds or blocked.
  int successor(State x, int control) const;
  // c(x,u); +inf when blocked.
  double transition_cost(State x, int control) const;
  // Smallest finite cell cost.
  double min_finite_cost() const;
};

// Marks every obstacle cell of env as blocked.
CostField make_cost_field(std::span<const double> cell_cost, const EnvironmentSpec& env);

enum class Heuristic { kZero, kEuclidean };

enum class StopRule {
  kSuccessorsClosed,  // every non-blocked successor of the query is CLOSED
  kQueryClosed,
};

struct AstarOptions {
  Heuristic heuristic = Heuristic::kZero;
  StopRule stop_rule = StopRule::kSuccessorsClosed;
  // Lower bound on every finite cell cost, scales the Euclidean heuristic.
  // Zero means "use cost.min_finite_cost()".
  double cost_floor = 0.0;
  bool record_trace = false;
};

enum class NodeStatus : std::uint8_t { kUnseen = 0, kOpen = 1, kClosed = 2 };

struct PlanResult {
  int width = 0;
  int height = 0;
  State goal;
  State query;
  std::vector<double> g;  // cost-to-goal, +inf when unseen
  std::vector<NodeStatus> status;
  std::array<double, kNumControls> q_star{};  // +inf for blocked controls
  std::size_t expansions = 0;
  std::vector<int> trace;  // expansion order when recorded

  bool closed(int index) const { return status[index] == NodeStatus::kClosed; }
  bool known(int index) const { return status[index] != NodeStatus::kUnseen; }
  std::size_t num_closed() const;
  std::size_t num_open() const;
};

// Backward A* from goal toward query over predecessor expansions. Throws
// Error(kUnreachable) when the open list empties before the stop rule holds.
PlanResult backward_astar(const CostField& cost, State goal, State query,
                          const AstarOptions& options = {});

// Line-delimited "order i j g" records of the expansion trace.
void write_plan_trace(std::ostream& out, const PlanResult& plan);

// Exact cost-to-goal for every state, +inf where unreachable. Equal keys pop
// lowest state index first.
std::vector<double> dijkstra_oracle(const CostField& cost, State goal);

struct ValueIterationResult {
  std::vector<double> value;
  std::vector<std::array<double, kNumControls>> q;
  int sweeps = 0;
  bool converged = false;
  std::size_t states_touched = 0;  // summed over sweeps
};

// Synchronous Bellman backups over the full grid, stopping early once a
// sweep changes nothing.
ValueIterationResult value_iteration_reference(const CostField& cost, State goal,
                                               int max_sweeps);

struct Policy {
  std::array<double, kNumControls> probs{};
  double temperature = 1.0;
};

// pi(u) proportional to exp(-Q(u) / temperature) over finite Q; controls with
// infinite Q get zero mass. Throws Error(kInvalidArgument) when no Q is finite.
Policy boltzmann_policy(std::span<const double> q_star, double temperature = 1.0);

// Uniform over the non-blocked controls of x.
Policy uniform_policy(const CostField& cost, State x);

// Lowest control id among the maxima.
int argmax_control(const Policy& policy);

using Visitation = std::map<std::pair<int, int>, int>;  // (state index, control)

struct TauStar {
  std::vector<std::pair<State, int>> steps;  // (x_k, u_k), first is (x_t, u_t)
  Visitation visitation;
  double cost = 0.0;
};

// Follows argmin_u [c(x,u) + g(f(x,u))] over CLOSED successors from
// f(x_t, u_t) to the goal, ties to the lowest control id.
TauStar extract_tau_star(const PlanResult& plan, const CostField& cost, State x_t,
                         int u_t);

// dQ*(x_t,u_t)/dc(x,u): the visitation counts themselves.
std::map<std::pair<int, int>, double> q_subgradient(const Visitation& visitation);

// The same subgradient pushed onto per-cell costs: sum of mu * length(u) over
// pairs entering each cell.
std::map<int, double> cell_cost_subgradient(const Visitation& visitation,
                                            const CostField& cost);

}  // namespace semnav

#endif  // SEMNAV_PLANNER_HPP_
