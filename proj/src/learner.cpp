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

#include "learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "error.hpp"
#include "rng.hpp"

namespace semnav {

namespace {

// Runs fn(0..n-1) on up to `threads` workers, static interleaved split.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < n; k += workers) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

std::vector<double> ThetaParams::pack() const {
  std::vector<double> flat;
  flat.reserve(size());
  const auto psi_values = psi.trainable();
  flat.insert(flat.end(), psi_values.begin(), psi_values.end());
  const auto phi_values = phi.values();
  flat.insert(flat.end(), phi_values.begin(), phi_values.end());
  return flat;
}

void ThetaParams::unpack(std::span<const double> flat) {
  if (flat.size() != size()) {
    throw Error(ErrorCode::kShapeMismatch, "flat parameter vector has the wrong length");
  }
  auto psi_values = psi.trainable();
  std::copy_n(flat.begin(), psi_values.size(), psi_values.begin());
  auto phi_values = phi.values();
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(psi_values.size()), flat.end(),
            phi_values.begin());
}

ThetaParams make_theta(int num_classes, EncoderMode mode, const CostArchitecture& arch,
                       std::uint64_t seed, int map_hidden) {
  CostArchitecture cost_arch = arch;
  cost_arch.in_channels = num_classes + 1;
  MapEncoderParams psi = mode == EncoderMode::kLinear
                             ? MapEncoderParams::linear(num_classes)
                             : MapEncoderParams::network(num_classes, map_hidden, seed + 1);
  return {std::move(psi), init_params(seed, cost_arch)};
}

CostEvaluation evaluate_cost(const LogOddsGrid& grid, const EnvironmentSpec& env,
                             const CostEncoderParams& phi) {
  CostEvaluation result;
  result.posterior = posterior(grid);
  result.forward = cost_forward(result.posterior, grid.width(), grid.height(), phi);
  result.field = make_cost_field(result.forward.cell_cost, env);
  return result;
}

std::array<double, kNumControls> nll_q_gradient(const Policy& policy, int expert_control) {
  std::array<double, kNumControls> grad{};
  for (int u = 0; u < kNumControls; ++u) {
    grad[u] = ((u == expert_control ? 1.0 : 0.0) - policy.probs[u]) / policy.temperature;
  }
  return grad;
}

StepLoss step_loss_and_grad(State x, int expert_control, State goal, const LogOddsGrid& grid,
                            const MapTape* tape, const EnvironmentSpec& env,
                            const ThetaParams& theta, const PolicyOptions& options,
                            bool with_grad) {
  const CostEvaluation cost = evaluate_cost(grid, env, theta.phi);
  const PlanResult plan = backward_astar(cost.field, goal, x, options.astar);
  const auto& q = plan.q_star;
  if (!std::isfinite(q[expert_control])) {
    throw Error(ErrorCode::kInvalidArgument, "expert control is blocked");
  }

  StepLoss result;
  result.policy = boltzmann_policy(q, options.temperature);
  // -log pi(u*) through log-sum-exp, exact even when pi(u*) underflows.
  const double lowest = *std::min_element(q.begin(), q.end());
  double total = 0.0;
  for (double value : q) {
    if (std::isfinite(value)) total += std::exp(-(value - lowest) / options.temperature);
  }
  result.nll = (q[expert_control] - lowest) / options.temperature + std::log(total);
  if (!with_grad) return result;

  const auto dq = nll_q_gradient(result.policy, expert_control);
  std::vector<double> dcell(cost.field.num_cells(), 0.0);
  for (int u = 0; u < kNumControls; ++u) {
    if (!std::isfinite(q[u]) || dq[u] == 0.0) continue;
    const TauStar tau = extract_tau_star(plan, cost.field, x, u);
    for (const auto& [cell, mu] : cell_cost_subgradient(tau.visitation, cost.field)) {
      dcell[cell] += dq[u] * mu;
    }
  }

  const CostGradients cost_grad = cost_backward(cost.forward.tape, theta.phi, dcell);
  const std::size_t psi_size = theta.psi.trainable().size();
  result.grad.assign(theta.size(), 0.0);
  std::copy(cost_grad.params.begin(), cost_grad.params.end(),
            result.grad.begin() + static_cast<std::ptrdiff_t>(psi_size));

  if (tape != nullptr) {
    // Softmax Jacobian: dh_k = p_k (dp_k - sum_j p_j dp_j).
    const std::size_t stride = static_cast<std::size_t>(grid.row_size());
    std::vector<double> dh(cost.posterior.size(), 0.0);
    for (int cell : tape->touched()) {
      const std::size_t base = cell * stride;
      double inner = 0.0;
      for (std::size_t k = 0; k < stride; ++k) {
        inner += cost.posterior[base + k] * cost_grad.posterior[base + k];
      }
      for (std::size_t k = 0; k < stride; ++k) {
        dh[base + k] = cost.posterior[base + k] * (cost_grad.posterior[base + k] - inner);
      }
    }
    const std::vector<double> psi_grad = map_encoder_backward(*tape, dh, psi_size);
    std::copy(psi_grad.begin(), psi_grad.end(), result.grad.begin());
  }
  return result;
}

DemoEvaluation evaluate_demo(const Example& example, const ThetaParams& theta,
                             const PolicyOptions& options, bool with_grad,
                             bool train_map_encoder, const Logger& log,
                             bool fallback_policy) {
  const EnvironmentSpec& env = *example.env;
  const Demonstration& demo = *example.demo;
  LogOddsGrid grid(env.width, env.height, theta.psi.prior);
  std::optional<MapTape> tape;
  if (with_grad && train_map_encoder) {
    tape.emplace(grid.num_cells(), theta.psi.num_classes, theta.psi.trainable().size());
  }

  DemoEvaluation result;
  if (with_grad) result.grad.assign(theta.size(), 0.0);
  for (std::size_t t = 0; t < demo.steps.size(); ++t) {
    const DemoStep& step = demo.steps[t];
    update(grid, step.state, step.scan, theta.psi, tape ? &*tape : nullptr);
    StepLoss loss;
    try {
      loss = step_loss_and_grad(step.state, step.control, demo.goal, grid,
                                tape ? &*tape : nullptr, env, theta, options, with_grad);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnreachable && e.code() != ErrorCode::kInvalidArgument) {
        throw;
      }
      if (log) {
        log("warning: env " + demo.env_id + " step " + std::to_string(t) +
            " skipped: " + e.what());
      }
      ++result.skipped;
      if (fallback_policy) {
        const CostField field = make_cost_field(std::vector<double>(env.num_cells(), 1.0), env);
        const Policy uniform = uniform_policy(field, step.state);
        result.policies.push_back(uniform);
        result.nll_sum += -std::log(uniform.probs[step.control]);
        result.correct += argmax_control(uniform) == step.control;
        ++result.steps;
      }
      continue;
    }
    result.nll_sum += loss.nll;
    result.correct += argmax_control(loss.policy) == step.control;
    ++result.steps;
    result.policies.push_back(loss.policy);
    if (with_grad) {
      for (std::size_t p = 0; p < loss.grad.size(); ++p) result.grad[p] += loss.grad[p];
    }
  }
  return result;
}

void validate_train_config(const TrainConfig& config) {
  if (!(config.learning_rate >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be non-negative");
  }
  if (config.window < 2) throw Error(ErrorCode::kInvalidArgument, "window must be >= 2");
  if (config.max_epochs < 1) throw Error(ErrorCode::kInvalidArgument, "max_epochs must be >= 1");
  if (!(config.temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 &&
        config.beta2 < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "moment decay rates must lie in [0, 1)");
  }
}

std::vector<double> dataset_gradient(std::span<const Example> examples,
                                     const ThetaParams& theta, const PolicyOptions& options,
                                     bool train_map_encoder, double* loss, int threads) {
  std::vector<DemoEvaluation> parts(examples.size());
  parallel_for(examples.size(), threads, [&](std::size_t k) {
    parts[k] = evaluate_demo(examples[k], theta, options, true, train_map_encoder);
  });
  std::vector<double> grad(theta.size(), 0.0);
  double total = 0.0;
  for (const DemoEvaluation& part : parts) {
    for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += part.grad[p];
    total += part.nll_sum;
  }
  if (loss != nullptr) *loss = total;
  return grad;
}

bool converged(std::span<const double> epoch_losses, int window, double tolerance) {
  const auto n = static_cast<std::ptrdiff_t>(epoch_losses.size());
  if (n <= window) return false;
  const double before =
      *std::min_element(epoch_losses.begin(), epoch_losses.begin() + (n - window));
  const double recent =
      *std::min_element(epoch_losses.begin() + (n - window), epoch_losses.end());
  const double scale = std::max(std::abs(before), 1e-12);
  return (before - recent) / scale < tolerance;
}

TrainResult train(std::span<const Example> examples, ThetaParams initial,
                  const TrainConfig& config, const Logger& log,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  validate_train_config(config);
  if (examples.empty()) throw Error(ErrorCode::kInvalidArgument, "training set is empty");

  TrainResult result{std::move(initial), {}, false};
  ThetaParams& theta = result.theta;
  std::vector<double> flat = theta.pack();
  std::vector<double> first_moment(flat.size(), 0.0);
  std::vector<double> second_moment(flat.size(), 0.0);
  long update_count = 0;

  PolicyOptions options;
  options.temperature = config.temperature;

  const std::size_t n = examples.size();
  const std::size_t batch =
      config.batch_size <= 0 ? n : std::min<std::size_t>(config.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  std::vector<double> losses;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    if (batch < n) {
      for (std::size_t k = n - 1; k > 0; --k) {
        std::swap(order[k], order[rng.next() % (k + 1)]);
      }
    }
    double nll_sum = 0.0;
    long steps = 0;
    long correct = 0;
    int skipped = 0;
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(begin + batch, n);
      std::vector<DemoEvaluation> parts(end - begin);
      parallel_for(parts.size(), config.threads, [&](std::size_t k) {
        parts[k] = evaluate_demo(examples[order[begin + k]], theta, options, true,
                                 config.train_map_encoder, log);
      });
      std::vector<double> grad(flat.size(), 0.0);
      for (const DemoEvaluation& part : parts) {
        for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += part.grad[p];
        nll_sum += part.nll_sum;
        steps += part.steps;
        correct += part.correct;
        skipped += part.skipped;
      }

      ++update_count;
      if (config.optimizer == OptimizerKind::kAdam) {
        const double correction1 = 1.0 - std::pow(config.beta1, double(update_count));
        const double correction2 = 1.0 - std::pow(config.beta2, double(update_count));
        for (std::size_t p = 0; p < flat.size(); ++p) {
          first_moment[p] = config.beta1 * first_moment[p] + (1.0 - config.beta1) * grad[p];
          second_moment[p] =
              config.beta2 * second_moment[p] + (1.0 - config.beta2) * grad[p] * grad[p];
          const double m_hat = first_moment[p] / correction1;
          const double v_hat = second_moment[p] / correction2;
          flat[p] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
        }
      } else {
        for (std::size_t p = 0; p < flat.size(); ++p) flat[p] -= config.learning_rate * grad[p];
      }
      if (!all_finite(flat) || !std::isfinite(nll_sum)) {
        throw Error(ErrorCode::kNotConverged, "training produced non-finite values at epoch " +
                                                  std::to_string(epoch));
      }
      theta.unpack(flat);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_nll = steps > 0 ? nll_sum / steps : 0.0;
    record.accuracy = steps > 0 ? static_cast<double>(correct) / steps : 0.0;
    record.skipped = skipped;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.log.push_back(record);
    losses.push_back(record.mean_nll);
    if (on_epoch) on_epoch(record);
    if (converged(losses, config.window, config.tolerance)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

const char* to_string(RolloutOutcome outcome) {
  switch (outcome) {
    case RolloutOutcome::kReachedGoal:
      return "reached_goal";
    case RolloutOutcome::kCollision:
      return "collision";
    case RolloutOutcome::kTimeout:
      return "timeout";
  }
  return "unknown";
}

RolloutResult rollout(const EnvironmentSpec& env, const ObservationSource& observe,
                      State start, State goal, const ThetaParams& theta, int max_steps,
                      const PolicyOptions& options,
                      const std::function<void(const RolloutFrame&)>& on_step) {
  RolloutResult result;
  result.states.push_back(start);
  LogOddsGrid grid(env.width, env.height, theta.psi.prior);
  State x = start;
  for (int t = 0; !(x == goal); ++t) {
    if (t >= max_steps) {
      result.outcome = RolloutOutcome::kTimeout;
      return result;
    }
    update(grid, x, observe(x), theta.psi);
    const CostEvaluation cost = evaluate_cost(grid, env, theta.phi);
    if (on_step) on_step({t, x, &cost.posterior, &cost.field});

    Policy policy;
    try {
      const PlanResult plan = backward_astar(cost.field, goal, x, options.astar);
      policy = boltzmann_policy(plan.q_star, options.temperature);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnreachable && e.code() != ErrorCode::kInvalidArgument) {
        throw;
      }
      policy = uniform_policy(cost.field, x);
      ++result.fallback_steps;
    }
    const int u = argmax_control(policy);
    const auto next = motion_model(x, u, env);
    if (!next) {
      result.outcome = RolloutOutcome::kCollision;
      return result;
    }
    x = *next;
    result.controls.push_back(u);
    result.states.push_back(x);
  }
  result.outcome = RolloutOutcome::kReachedGoal;
  return result;
}

}  // namespace semnav
