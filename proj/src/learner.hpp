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

#ifndef SEMNAV_LEARNER_HPP_
#define SEMNAV_LEARNER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cost_model.hpp"
#include "gridworld.hpp"
#include "planner.hpp"
#include "semantic_map.hpp"

namespace semnav {

// theta = (psi, phi).
struct ThetaParams {
  MapEncoderParams psi;
  CostEncoderParams phi;

  std::size_t size() const { return psi.trainable().size() + phi.size(); }
  // psi followed by phi.
  std::vector<double> pack() const;
  void unpack(std::span<const double> flat);
};

ThetaParams make_theta(int num_classes, EncoderMode mode, const CostArchitecture& arch,
                       std::uint64_t seed, int map_hidden = 16);

using Logger = std::function<void(const std::string&)>;

struct PolicyOptions {
  double temperature = 1.0;
  AstarOptions astar;
};

// A demonstration together with the environment that supplies the motion
// model. Ground-truth labels are only used to mask obstacle cells.
struct Example {
  const EnvironmentSpec* env = nullptr;
  const Demonstration* demo = nullptr;
};

// Stage cost c_t for the current map, obstacle cells blocked.
struct CostEvaluation {
  std::vector<double> posterior;
  CostForward forward;
  CostField field;
};

CostEvaluation evaluate_cost(const LogOddsGrid& grid, const EnvironmentSpec& env,
                             const CostEncoderParams& phi);

struct StepLoss {
  double nll = 0.0;
  Policy policy;
  std::vector<double> grad;  // d nll / d theta, packed like ThetaParams::pack()
};

// d nll / d Q(u) = (1{u = u*} - pi(u)) / temperature.
std::array<double, kNumControls> nll_q_gradient(const Policy& policy, int expert_control);

// Loss and subgradient of one demonstration step at map state grid (already
// updated with the step's scan). tape may be null, in which case the psi part
// of the gradient is zero. Throws Error(kUnreachable) when the planner fails
// and Error(kInvalidArgument) when the expert control is blocked.
StepLoss step_loss_and_grad(State x, int expert_control, State goal, const LogOddsGrid& grid,
                            const MapTape* tape, const EnvironmentSpec& env,
                            const ThetaParams& theta, const PolicyOptions& options,
                            bool with_grad = true);

struct DemoEvaluation {
  double nll_sum = 0.0;
  int steps = 0;    // steps that contributed to the loss
  int skipped = 0;  // unreachable or corrupted steps
  int correct = 0;  // argmax matches
  std::vector<Policy> policies;
  std::vector<double> grad;  // summed over steps, empty without gradients
};

// Replays the map encoder from h0 over the demonstration, scoring every step.
// Unplannable steps are skipped with a warning; with fallback_policy set
// they are scored under the uniform policy instead.
DemoEvaluation evaluate_demo(const Example& example, const ThetaParams& theta,
                             const PolicyOptions& options, bool with_grad,
                             bool train_map_encoder = true, const Logger& log = {},
                             bool fallback_policy = false);

enum class OptimizerKind { kAdam, kSubgradient };

struct TrainConfig {
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 0;  // demos per update, 0 = full dataset
  int max_epochs = 200;
  int window = 10;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  bool train_map_encoder = true;
  int threads = 1;
};

void validate_train_config(const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double mean_nll = 0.0;
  double accuracy = 0.0;
  double wall_seconds = 0.0;
  int skipped = 0;
};

struct TrainResult {
  ThetaParams theta;
  std::vector<EpochRecord> log;
  bool converged = false;
};

// Gradient of the summed loss over a set of examples at fixed theta, reduced
// in example order.
std::vector<double> dataset_gradient(std::span<const Example> examples,
                                     const ThetaParams& theta, const PolicyOptions& options,
                                     bool train_map_encoder, double* loss = nullptr,
                                     int threads = 1);

// True once the best loss of the last `window` epochs improves on the best
// loss before them by less than tolerance (relative).
bool converged(std::span<const double> epoch_losses, int window, double tolerance);

TrainResult train(std::span<const Example> examples, ThetaParams initial,
                  const TrainConfig& config, const Logger& log = {},
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

enum class RolloutOutcome { kReachedGoal, kCollision, kTimeout };

const char* to_string(RolloutOutcome outcome);

struct RolloutResult {
  std::vector<State> states;  // visited states, starting with the start state
  std::vector<int> controls;
  RolloutOutcome outcome = RolloutOutcome::kTimeout;
  int fallback_steps = 0;
};

using ObservationSource = std::function<SemanticPointCloud(State)>;

struct RolloutFrame {
  int t = 0;
  State state;
  const std::vector<double>* posterior = nullptr;
  const CostField* cost = nullptr;
};

// Observe, update the map, re-plan and take the most likely control until
// the goal is reached, a move is blocked, or max_steps moves were made.
RolloutResult rollout(const EnvironmentSpec& env, const ObservationSource& observe,
                      State start, State goal, const ThetaParams& theta, int max_steps,
                      const PolicyOptions& options,
                      const std::function<void(const RolloutFrame&)>& on_step = {});

}  // namespace semnav

#endif  // SEMNAV_LEARNER_HPP_
