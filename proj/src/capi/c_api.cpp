// Copyright 2026 The smpf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "smpf/smpf.h"

#include <exception>
#include <memory>
#include <string>

#include "smpf/errors.hpp"
#include "smpf/experiments.hpp"

struct smpf_config {
  smpf::ExperimentConfig config;
  std::string hash;
};

struct smpf_report {
  smpf::ExperimentReport report;
  std::string text;
};

namespace {

thread_local std::string last_error;

template <typename F>
smpf_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return SMPF_OK;
  } catch (const smpf::ConfigError& e) {
    last_error = e.what();
    return SMPF_ERR_CONFIG;
  } catch (const smpf::SimulationError& e) {
    last_error = e.what();
    return SMPF_ERR_SIMULATION;
  } catch (const smpf::SolverError& e) {
    last_error = e.what();
    return SMPF_ERR_SOLVER;
  } catch (const smpf::InputError& e) {
    last_error = e.what();
    return SMPF_ERR_INPUT;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SMPF_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return SMPF_ERR_INTERNAL;
  }
}

template <typename T>
void require(const T* p, const char* what) {
  if (p == nullptr) throw smpf::InputError(std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* smpf_version(void) { return smpf::version(); }

const char* smpf_last_error(void) { return last_error.c_str(); }

smpf_status smpf_config_load(const char* path, smpf_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new smpf_config{smpf::load_config(path), {}};
  });
}

smpf_status smpf_config_parse(const char* text, smpf_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new smpf_config{smpf::parse_config(text), {}};
  });
}

void smpf_config_free(smpf_config* config) { delete config; }

smpf_status smpf_config_set_seed(smpf_config* config, uint64_t seed) {
  return guarded([&] {
    require(config, "config");
    config->config.seed = seed;
  });
}

smpf_status smpf_config_set_paths(smpf_config* config, uint64_t n_paths) {
  return guarded([&] {
    require(config, "config");
    if (n_paths == 0) throw smpf::InputError("n_paths must be positive");
    config->config.n_paths = static_cast<std::size_t>(n_paths);
  });
}

smpf_status smpf_config_name(const smpf_config* config, const char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = config->config.name.c_str();
  });
}

smpf_status smpf_config_hash(const smpf_config* config, const char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    auto* mut = const_cast<smpf_config*>(config);
    mut->hash = config->config.hash();
    *out = mut->hash.c_str();
  });
}

smpf_status smpf_config_check_count(const smpf_config* config, size_t* out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = config->config.checks.size();
  });
}

smpf_status smpf_run(const smpf_config* config, const char* out_dir, unsigned threads,
                     smpf_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    smpf::RunOptions options;
    if (out_dir != nullptr) options.out_dir = out_dir;
    options.exec.threads = threads;
    *out = new smpf_report{smpf::run(config->config, options), {}};
  });
}

void smpf_report_free(smpf_report* report) { delete report; }

smpf_status smpf_report_exit_code(const smpf_report* report, int* out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = report->report.exit_code();
  });
}

smpf_status smpf_report_text(smpf_report* report, int include_timing, const char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    report->text = report->report.text(include_timing != 0);
    *out = report->text.c_str();
  });
}

smpf_status smpf_report_check_count(const smpf_report* report, size_t* out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = report->report.checks.size();
  });
}

smpf_status smpf_report_check(const smpf_report* report, size_t index, const char** name,
                              int* pass, int* expected_fail) {
  return guarded([&] {
    require(report, "report");
    if (index >= report->report.checks.size()) throw smpf::InputError("check index out of range");
    const auto& c = report->report.checks[index];
    if (name != nullptr) *name = c.name.c_str();
    if (pass != nullptr) *pass = c.pass ? 1 : 0;
    if (expected_fail != nullptr) *expected_fail = c.expected_fail ? 1 : 0;
  });
}

smpf_status smpf_report_metric(const smpf_report* report, size_t index, const char* metric,
                               double* value, double* se) {
  return guarded([&] {
    require(report, "report");
    require(metric, "metric");
    if (index >= report->report.checks.size()) throw smpf::InputError("check index out of range");
    for (const auto& m : report->report.checks[index].metrics) {
      if (m.name != metric) continue;
      if (value != nullptr) *value = m.value;
      if (se != nullptr) *se = m.se;
      return;
    }
    throw smpf::InputError("check '" + report->report.checks[index].name + "' has no metric '" +
                           metric + "'");
  });
}

const char* smpf_list_problems(void) {
  static const std::string text = [] {
    std::string s;
    for (const auto& [name, summary] : smpf::list_problems()) s += name + ": " + summary + "\n";
    return s;
  }();
  return text.c_str();
}

smpf_status smpf_slope(const double* xs, const double* ys, size_t n, double* slope,
                       double* lower, double* upper) {
  return guarded([&] {
    require(xs, "xs");
    require(ys, "ys");
    const smpf::SlopeEstimate s =
        smpf::slope(std::vector<double>(xs, xs + n), std::vector<double>(ys, ys + n));
    if (slope != nullptr) *slope = s.slope;
    if (lower != nullptr) *lower = s.lower();
    if (upper != nullptr) *upper = s.upper();
  });
}

}  // extern "C"
