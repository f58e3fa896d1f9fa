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

#include "semnav.h"

#include <cstring>
#include <new>
#include <string>

#include "checkpoint.hpp"
#include "commands.hpp"
#include "cost_model.hpp"
#include "error.hpp"
#include "run_config.hpp"

struct semnav_config {
  semnav::RunConfig config;
  semnav_log_fn log_fn = nullptr;
  void* log_user = nullptr;

  semnav::Logger logger() const {
    if (log_fn == nullptr) return {};
    return [fn = log_fn, user = log_user](const std::string& message) {
      fn(message.c_str(), user);
    };
  }
};

struct semnav_model {
  semnav::ThetaParams theta;
};

namespace {

thread_local std::string last_error;

semnav_status to_status(semnav::ErrorCode code) {
  switch (code) {
    case semnav::ErrorCode::kInvalidArgument:
      return SEMNAV_ERR_USAGE;
    case semnav::ErrorCode::kIo:
      return SEMNAV_ERR_IO;
    case semnav::ErrorCode::kValidation:
    case semnav::ErrorCode::kShapeMismatch:
      return SEMNAV_ERR_VALIDATION;
    case semnav::ErrorCode::kUnreachable:
      return SEMNAV_ERR_UNREACHABLE;
    case semnav::ErrorCode::kGenerationFailed:
      return SEMNAV_ERR_GENERATION;
    case semnav::ErrorCode::kNotConverged:
      return SEMNAV_ERR_NOT_CONVERGED;
  }
  return SEMNAV_ERR_INTERNAL;
}

semnav_status fail(semnav_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
semnav_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const semnav::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SEMNAV_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SEMNAV_ERR_INTERNAL, e.what());
  }
}

bool missing(const void* p, const char* what, semnav_status* status) {
  if (p != nullptr) return false;
  *status = fail(SEMNAV_ERR_USAGE, std::string(what) + " is null");
  return true;
}

}  // namespace

extern "C" {

const char* semnav_version(void) { return "0.1.0"; }

const char* semnav_status_string(semnav_status status) {
  switch (status) {
    case SEMNAV_OK:
      return "ok";
    case SEMNAV_ERR_USAGE:
      return "usage error";
    case SEMNAV_ERR_VALIDATION:
      return "validation failure";
    case SEMNAV_ERR_NOT_CONVERGED:
      return "not converged";
    case SEMNAV_ERR_IO:
      return "i/o error";
    case SEMNAV_ERR_UNREACHABLE:
      return "goal unreachable";
    case SEMNAV_ERR_GENERATION:
      return "generation failed";
    case SEMNAV_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* semnav_last_error(void) { return last_error.c_str(); }

semnav_status semnav_config_create(semnav_config** out) {
  semnav_status status;
  if (missing(out, "out", &status)) return status;
  return guarded([&] {
    *out = new semnav_config();
    return SEMNAV_OK;
  });
}

void semnav_config_destroy(semnav_config* config) { delete config; }

semnav_status semnav_config_load(semnav_config* config, const char* path) {
  semnav_status status;
  if (missing(config, "config", &status) || missing(path, "path", &status)) return status;
  return guarded([&] {
    // Applied to a copy so a bad file leaves the handle unchanged.
    semnav::RunConfig updated = config->config;
    semnav::apply_config_file(updated, path);
    config->config = std::move(updated);
    return SEMNAV_OK;
  });
}

semnav_status semnav_config_set(semnav_config* config, const char* key, const char* value) {
  semnav_status status;
  if (missing(config, "config", &status) || missing(key, "key", &status) ||
      missing(value, "value", &status)) {
    return status;
  }
  return guarded([&] {
    semnav::set_config_value(config->config, key, value);
    return SEMNAV_OK;
  });
}

semnav_status semnav_config_get(const semnav_config* config, const char* key, char* buffer,
                                size_t size, size_t* needed) {
  semnav_status status;
  if (missing(config, "config", &status) || missing(key, "key", &status)) return status;
  return guarded([&] {
    const std::string value = semnav::get_config_value(config->config, key);
    if (needed != nullptr) *needed = value.size() + 1;
    if (buffer == nullptr || size < value.size() + 1) {
      return fail(SEMNAV_ERR_USAGE, "buffer too small for " + std::string(key));
    }
    std::memcpy(buffer, value.c_str(), value.size() + 1);
    return SEMNAV_OK;
  });
}

semnav_status semnav_config_set_logger(semnav_config* config, semnav_log_fn fn, void* user) {
  semnav_status status;
  if (missing(config, "config", &status)) return status;
  config->log_fn = fn;
  config->log_user = user;
  return SEMNAV_OK;
}

semnav_status semnav_generate(const semnav_config* config, const char* out_dir,
                              semnav_gen_summary* summary) {
  semnav_status status;
  if (missing(config, "config", &status) || missing(out_dir, "out_dir", &status)) return status;
  return guarded([&] {
    const semnav::GenSummary s = semnav::cmd_gen(config->config, out_dir, config->logger());
    if (summary != nullptr) *summary = {s.environments, s.steps, s.mean_obstacle_fraction};
    return SEMNAV_OK;
  });
}

semnav_status semnav_train(const semnav_config* config, const char* dataset_dir,
                           const char* checkpoint, const char* log_path,
                           semnav_train_summary* summary) {
  semnav_status status;
  if (missing(config, "config", &status) || missing(dataset_dir, "dataset_dir", &status) ||
      missing(checkpoint, "checkpoint", &status)) {
    return status;
  }
  return guarded([&] {
    const semnav::TrainSummary s =
        semnav::cmd_train(config->config, dataset_dir, checkpoint,
                          log_path != nullptr ? log_path : "", config->logger());
    if (summary != nullptr) {
      *summary = {s.converged ? 1 : 0, s.epochs, s.final_nll, s.final_acc, s.num_params};
    }
    if (!s.converged) {
      return fail(SEMNAV_ERR_NOT_CONVERGED,
                  "stopped after " + std::to_string(s.epochs) + " epochs without converging");
    }
    return SEMNAV_OK;
  });
}

semnav_status semnav_evaluate(const semnav_config* config, const char* dataset_dir,
                              const char* checkpoint, const char* out_dir,
                              semnav_metrics* metrics) {
  semnav_status status;
  if (missing(config, "config", &status) || missing(dataset_dir, "dataset_dir", &status) ||
      missing(checkpoint, "checkpoint", &status) || missing(out_dir, "out_dir", &status)) {
    return status;
  }
  return guarded([&] {
    const semnav::EvalReport r =
        semnav::cmd_eval(config->config, dataset_dir, checkpoint, out_dir, config->logger());
    if (metrics != nullptr) {
      *metrics = {r.nll, r.acc, r.traj_succ_rate, r.mhd, static_cast<int>(r.demos.size()),
                  r.total_steps};
    }
    return SEMNAV_OK;
  });
}

semnav_status semnav_rollout(const semnav_config* config, const char* dataset_dir,
                             const char* checkpoint, const char* out_dir,
                             semnav_rollout_summary* summary) {
  semnav_status status;
  if (missing(config, "config", &status) || missing(dataset_dir, "dataset_dir", &status) ||
      missing(checkpoint, "checkpoint", &status) || missing(out_dir, "out_dir", &status)) {
    return status;
  }
  return guarded([&] {
    const semnav::RolloutSummary s =
        semnav::cmd_rollout(config->config, dataset_dir, checkpoint, out_dir, config->logger());
    if (summary != nullptr) {
      *summary = {static_cast<semnav_outcome>(s.outcome), s.steps, s.expert_steps,
                  s.success ? 1 : 0, s.mhd};
    }
    return SEMNAV_OK;
  });
}

semnav_status semnav_validate(const char* dataset_dir, semnav_log_fn on_error, void* user,
                              int* num_errors) {
  semnav_status status;
  if (missing(dataset_dir, "dataset_dir", &status)) return status;
  return guarded([&] {
    const semnav::ValidationReport report = semnav::cmd_validate(dataset_dir);
    if (num_errors != nullptr) *num_errors = static_cast<int>(report.errors.size());
    if (on_error != nullptr) {
      for (const std::string& e : report.errors) on_error(e.c_str(), user);
    }
    if (!report.ok()) {
      return fail(SEMNAV_ERR_VALIDATION,
                  std::to_string(report.errors.size()) + " violation(s); first: " +
                      report.errors.front());
    }
    return SEMNAV_OK;
  });
}

semnav_status semnav_model_load(const char* checkpoint, semnav_model** out) {
  semnav_status status;
  if (missing(checkpoint, "checkpoint", &status) || missing(out, "out", &status)) return status;
  return guarded([&] {
    *out = new semnav_model{semnav::load_checkpoint(checkpoint)};
    return SEMNAV_OK;
  });
}

void semnav_model_destroy(semnav_model* model) { delete model; }

semnav_status semnav_model_save(const semnav_model* model, const char* checkpoint) {
  semnav_status status;
  if (missing(model, "model", &status) || missing(checkpoint, "checkpoint", &status)) {
    return status;
  }
  return guarded([&] {
    semnav::save_checkpoint(checkpoint, model->theta);
    return SEMNAV_OK;
  });
}

size_t semnav_model_num_params(const semnav_model* model) {
  return model != nullptr ? model->theta.size() : 0;
}

int semnav_model_num_classes(const semnav_model* model) {
  return model != nullptr ? model->theta.psi.num_classes : 0;
}

semnav_status semnav_model_cost_map(const semnav_model* model, const double* posterior,
                                    int width, int height, double* cost_out) {
  semnav_status status;
  if (missing(model, "model", &status) || missing(posterior, "posterior", &status) ||
      missing(cost_out, "cost_out", &status)) {
    return status;
  }
  if (width <= 0 || height <= 0) return fail(SEMNAV_ERR_USAGE, "grid size must be positive");
  return guarded([&] {
    const std::size_t cells = static_cast<std::size_t>(width) * height;
    const std::size_t stride = static_cast<std::size_t>(model->theta.psi.num_classes) + 1;
    const semnav::CostForward forward = semnav::cost_forward(
        {posterior, cells * stride}, width, height, model->theta.phi);
    std::memcpy(cost_out, forward.cell_cost.data(), cells * sizeof(double));
    return SEMNAV_OK;
  });
}

}  // extern "C"
