/*
 * Copyright 2026 The smpf Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface of libsmpf. Objects are opaque handles created and destroyed
 * by the library. Every fallible call returns an smpf_status; on failure,
 * smpf_last_error() describes the error for the calling thread. Strings
 * returned through out-parameters are owned by the handle they came from and
 * stay valid until that handle is freed.
 */

#ifndef SMPF_H_
#define SMPF_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SMPF_BUILDING_LIBRARY)
#define SMPF_API __attribute__((visibility("default")))
#else
#define SMPF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smpf_status {
  SMPF_OK = 0,
  SMPF_ERR_INPUT = 1,      /* bad arguments or null handles */
  SMPF_ERR_CONFIG = 2,     /* config schema errors */
  SMPF_ERR_SIMULATION = 3, /* non-finite state in a forward simulation */
  SMPF_ERR_SOLVER = 4,     /* regression or Riccati failures */
  SMPF_ERR_INTERNAL = 5
} smpf_status;

typedef struct smpf_config smpf_config;
typedef struct smpf_report smpf_report;

SMPF_API const char* smpf_version(void);

/* Message of the last failed call on this thread ("" if none). */
SMPF_API const char* smpf_last_error(void);

SMPF_API smpf_status smpf_config_load(const char* path, smpf_config** out);
SMPF_API smpf_status smpf_config_parse(const char* text, smpf_config** out);
SMPF_API void smpf_config_free(smpf_config* config);
SMPF_API smpf_status smpf_config_set_seed(smpf_config* config, uint64_t seed);
SMPF_API smpf_status smpf_config_set_paths(smpf_config* config, uint64_t n_paths);
SMPF_API smpf_status smpf_config_name(const smpf_config* config, const char** out);
/* 16 hex digits identifying the config text, seed and path count. */
SMPF_API smpf_status smpf_config_hash(const smpf_config* config, const char** out);
SMPF_API smpf_status smpf_config_check_count(const smpf_config* config, size_t* out);

/* Runs the configured checks. out_dir may be NULL (no files written).
 * threads = 0 uses every hardware thread. */
SMPF_API smpf_status smpf_run(const smpf_config* config, const char* out_dir,
                              unsigned threads, smpf_report** out);
SMPF_API void smpf_report_free(smpf_report* report);
/* 0 when every check has its expected verdict, 1 otherwise. */
SMPF_API smpf_status smpf_report_exit_code(const smpf_report* report, int* out);
/* include_timing = 0 omits wall-clock lines. */
SMPF_API smpf_status smpf_report_text(smpf_report* report, int include_timing,
                                      const char** out);
SMPF_API smpf_status smpf_report_check_count(const smpf_report* report, size_t* out);
/* pass and expected_fail are 0 or 1; any out-pointer may be NULL. */
SMPF_API smpf_status smpf_report_check(const smpf_report* report, size_t index,
                                       const char** name, int* pass,
                                       int* expected_fail);
/* Value and standard error of a named metric of a check. */
SMPF_API smpf_status smpf_report_metric(const smpf_report* report, size_t index,
                                        const char* metric, double* value,
                                        double* se);

/* Registered components and checks, one "kind name: summary" per line. The
 * string is static. */
SMPF_API const char* smpf_list_problems(void);

/* OLS slope of log y on log x with a 95% interval. */
SMPF_API smpf_status smpf_slope(const double* xs, const double* ys, size_t n,
                                double* slope, double* lower, double* upper);

#ifdef __cplusplus
}
#endif

#endif /* SMPF_H_ */
