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

/* C interface to libsemnav: dataset generation, cost learning from
 * demonstrations, evaluation and rollouts.
 *
 * Every function that can fail returns a semnav_status. On failure a
 * description is available from semnav_last_error() on the calling thread
 * until the next failing call. Handles are not thread-safe; distinct handles
 * may be used from different threads. */

#ifndef SEMNAV_H_
#define SEMNAV_H_

#include <stddef.h>

#if defined(_WIN32)
#if defined(SEMNAV_BUILDING_LIBRARY)
#define SEMNAV_API __declspec(dllexport)
#else
#define SEMNAV_API __declspec(dllimport)
#endif
#else
#define SEMNAV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* The first four values double as process exit codes for the CLI. */
typedef enum semnav_status {
  SEMNAV_OK = 0,
  SEMNAV_ERR_USAGE = 1,          /* bad argument, unknown config key */
  SEMNAV_ERR_VALIDATION = 2,     /* dataset or checkpoint violates invariants */
  SEMNAV_ERR_NOT_CONVERGED = 3,  /* training stopped at max epochs */
  SEMNAV_ERR_IO = 4,
  SEMNAV_ERR_UNREACHABLE = 5,
  SEMNAV_ERR_GENERATION = 6,
  SEMNAV_ERR_INTERNAL = 7
} semnav_status;

typedef enum semnav_outcome {
  SEMNAV_REACHED_GOAL = 0,
  SEMNAV_COLLISION = 1,
  SEMNAV_TIMEOUT = 2
} semnav_outcome;

typedef struct semnav_config semnav_config;
typedef struct semnav_model semnav_model;

typedef void (*semnav_log_fn)(const char* message, void* user);

SEMNAV_API const char* semnav_version(void);
SEMNAV_API const char* semnav_status_string(semnav_status status);
SEMNAV_API const char* semnav_last_error(void);

/* Configuration: "key = value" settings with defaults for every key. */
SEMNAV_API semnav_status semnav_config_create(semnav_config** out);
SEMNAV_API void semnav_config_destroy(semnav_config* config);
SEMNAV_API semnav_status semnav_config_load(semnav_config* config, const char* path);
SEMNAV_API semnav_status semnav_config_set(semnav_config* config, const char* key,
                                           const char* value);
/* Copies the value with its terminator into buffer when it fits; *needed
 * (optional) receives the required size including the terminator. */
SEMNAV_API semnav_status semnav_config_get(const semnav_config* config, const char* key,
                                           char* buffer, size_t size, size_t* needed);
/* Progress and warning messages of the commands below; NULL silences them. */
SEMNAV_API semnav_status semnav_config_set_logger(semnav_config* config, semnav_log_fn fn,
                                                  void* user);

typedef struct semnav_gen_summary {
  int environments;
  int steps;
  double mean_obstacle_fraction;
} semnav_gen_summary;

typedef struct semnav_train_summary {
  int converged;
  int epochs;
  double final_nll;
  double final_acc;
  size_t num_params;
} semnav_train_summary;

typedef struct semnav_metrics {
  double nll;
  double acc;
  double traj_succ_rate;
  double mhd;
  int demos;
  int total_steps;
} semnav_metrics;

typedef struct semnav_rollout_summary {
  semnav_outcome outcome;
  int steps;
  int expert_steps;
  int success;
  double mhd;
} semnav_rollout_summary;

/* Summary pointers may be NULL. */
SEMNAV_API semnav_status semnav_generate(const semnav_config* config, const char* out_dir,
                                         semnav_gen_summary* summary);
/* log_path may be NULL (defaults to <checkpoint>.log.jsonl). Returns
 * SEMNAV_ERR_NOT_CONVERGED when training stops at max epochs; the
 * checkpoint is written in that case too. */
SEMNAV_API semnav_status semnav_train(const semnav_config* config, const char* dataset_dir,
                                      const char* checkpoint, const char* log_path,
                                      semnav_train_summary* summary);
SEMNAV_API semnav_status semnav_evaluate(const semnav_config* config, const char* dataset_dir,
                                         const char* checkpoint, const char* out_dir,
                                         semnav_metrics* metrics);
SEMNAV_API semnav_status semnav_rollout(const semnav_config* config, const char* dataset_dir,
                                        const char* checkpoint, const char* out_dir,
                                        semnav_rollout_summary* summary);
/* Calls on_error once per violation. Returns SEMNAV_ERR_VALIDATION when any
 * were found. */
SEMNAV_API semnav_status semnav_validate(const char* dataset_dir, semnav_log_fn on_error,
                                         void* user, int* num_errors);

/* Trained parameters. */
SEMNAV_API semnav_status semnav_model_load(const char* checkpoint, semnav_model** out);
SEMNAV_API void semnav_model_destroy(semnav_model* model);
SEMNAV_API semnav_status semnav_model_save(const semnav_model* model, const char* checkpoint);
SEMNAV_API size_t semnav_model_num_params(const semnav_model* model);
SEMNAV_API int semnav_model_num_classes(const semnav_model* model);
/* Stage cost per cell from a width x height x (K+1) row-major posterior. */
SEMNAV_API semnav_status semnav_model_cost_map(const semnav_model* model,
                                               const double* posterior, int width,
                                               int height, double* cost_out);

#ifdef __cplusplus
}
#endif

#endif /* SEMNAV_H_ */
