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


// Experiment orchestration: config loading with schema validation, problem
// assembly, the named checks run in dependency order, convergence slopes, and
// text/CSV reports.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smpf/adjoint_solver.hpp"
#include "smpf/cost.hpp"
#include "smpf/forward_sde.hpp"
#include "smpf/lq.hpp"
#include "smpf/parallel.hpp"
#include "smpf/types.hpp"

namespace smpf {

/// Library version string.
const char* version();

struct SlopeEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  /// Standard error of the slope from the OLS residuals.
  double se = 0.0;
  /// Half-width of the 95% Student-t interval (0 with exact fits).
  double half_width = 0.0;
  std::size_t points = 0;

  double lower() const { return slope - half_width; }
  double upper() const { return slope + half_width; }
};

/// OLS slope of log y on log x. Needs at least 3 points, all positive.
SlopeEstimate slope(const std::vector<double>& xs, const std::vector<double>& ys);

struct ControlSpec {
  enum class Kind { Riccati, Zero, Constant, Table, Feedback };
  Kind kind = Kind::Zero;
  /// Constant: k x 1. Table: k x n (column per node). Feedback: gain k x d,
  /// u = -gain x.
  Mat value;
  Vec lower;
  Vec upper;
};

struct CheckSpec {
  std::string name;
  ParamBlock params;
};

struct ExperimentConfig {
  std::string name;
  std::string description;
  /// Checks that must fail; the run is then in expected-failure mode.
  std::vector<std::string> expect_fail;

  std::optional<LQSpec> lq;
  ParamBlock field;
  ParamBlock drift;
  ParamBlock cost;
  std::size_t state_dim = 0;
  std::size_t control_dim = 0;
  Vec x0;
  bool convex = false;

  ControlSpec reference;
  ControlSpec direction;
  std::vector<ControlSpec> candidates;

  double horizon = 1.0;
  std::size_t n_steps = 1000;
  std::size_t n_paths = 20000;
  std::uint64_t seed = 1;
  RegressionBasis regression;
  std::vector<CheckSpec> checks;
  /// Paths written to the path and adjoint CSVs.
  std::size_t csv_paths = 100;

  /// Text the config was parsed from (hashed together with the overrides).
  std::string source;

  /// FNV-1a hash of the source text, seed and path count, as 16 hex digits.
  std::string hash() const;
  TimeGrid grid() const { return TimeGrid(horizon, n_steps); }
  const CheckSpec* find_check(const std::string& check) const;
};

/// Check names in execution order.
const std::vector<std::string>& check_names();

/// Parses and validates a YAML config. Throws ConfigError naming the block.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& file);

/// The generic problem described by the config.
Problem build_problem(const ExperimentConfig& config);
/// The control law described by `spec`; `riccati` is required for Riccati.
ControlLaw build_control(const ControlSpec& spec, std::size_t state_dim,
                         std::size_t control_dim,
                         const RiccatiSolution* riccati);

struct Metric {
  std::string name;
  double value = 0.0;
  double se = 0.0;
  /// True for quantities without sampling error (thresholds, exact values).
  bool deterministic = false;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  bool expected_fail = false;
  std::vector<Metric> metrics;
  std::string csv_file;
  double seconds = 0.0;

  /// True when the verdict is the one the config asks for.
  bool as_expected() const { return pass != expected_fail; }
};

struct ExperimentReport {
  std::string name;
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  double wall_seconds = 0.0;
  std::vector<CheckResult> checks;

  /// 0 when every check has its expected verdict, 1 otherwise.
  int exit_code() const;
  bool expected_failure_mode() const;
  /// Report text. Timing lines are omitted when include_timing is false,
  /// which leaves only quantities that are reproducible bit for bit.
  std::string text(bool include_timing = true) const;
};

struct RunOptions {
  /// Output directory for the report and CSVs; empty writes nothing.
  std::string out_dir;
  ExecOptions exec;
};

/// Runs the configured checks. Errors are rethrown with the offending block
/// or check in the message.
ExperimentReport run(const ExperimentConfig& config, const RunOptions& options = {});

/// Registered fields, drifts, costs, control kinds and checks.
std::vector<std::pair<std::string, std::string>> list_problems();

}  // namespace smpf
