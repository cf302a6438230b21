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

// Forward simulation of the controlled state equation
//
//   dx = b(t, x, u) dt + M(dt, x, u),
//
// its variational equation along a reference pair, and path statistics. All
// schemes are explicit Euler-Maruyama with left-endpoint evaluation on a
// uniform grid, which is exactly the Riemann-sum definition of the integral
// against M.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "smpf/martingale_field.hpp"
#include "smpf/parallel.hpp"
#include "smpf/registry.hpp"
#include "smpf/rng.hpp"
#include "smpf/types.hpp"

namespace smpf {

class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t n_steps);

  double horizon() const { return horizon_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t nodes() const { return n_steps_ + 1; }
  double dt() const { return horizon_ / static_cast<double>(n_steps_); }
  double t(std::size_t n) const {
    return horizon_ * static_cast<double>(n) / static_cast<double>(n_steps_);
  }
  TimeGrid refined(std::size_t factor = 2) const {
    return TimeGrid(horizon_, n_steps_ * factor);
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  std::size_t n_steps_;
};

/// Drift b(t, x, u) with its Jacobians b_x (d x d) and b_u (d x k).
class Drift {
 public:
  Drift(std::size_t state_dim, std::size_t control_dim)
      : state_dim_(state_dim), control_dim_(control_dim) {}
  virtual ~Drift() = default;

  virtual void eval(double t, ConstVecRef x, ConstVecRef u,
                    VecRef out) const = 0;
  virtual void jacobian_x(double t, ConstVecRef x, ConstVecRef u,
                          MatRef out) const = 0;
  virtual void jacobian_u(double t, ConstVecRef x, ConstVecRef u,
                          MatRef out) const = 0;

  std::size_t state_dim() const { return state_dim_; }
  std::size_t control_dim() const { return control_dim_; }

 private:
  std::size_t state_dim_;
  std::size_t control_dim_;
};

/// b = A(t) x + B(t) u + c(t).
class LinearDrift final : public Drift {
 public:
  LinearDrift(MatrixSchedule A, MatrixSchedule B, MatrixSchedule c = {});

  void eval(double t, ConstVecRef x, ConstVecRef u, VecRef out) const override;
  void jacobian_x(double t, ConstVecRef x, ConstVecRef u,
                  MatRef out) const override;
  void jacobian_u(double t, ConstVecRef x, ConstVecRef u,
                  MatRef out) const override;

  const MatrixSchedule& A() const { return A_; }
  const MatrixSchedule& B() const { return B_; }

 private:
  MatrixSchedule A_;
  MatrixSchedule B_;
  MatrixSchedule c_;
};

class FunctionDrift final : public Drift {
 public:
  using EvalFn = std::function<void(double, ConstVecRef, ConstVecRef, VecRef)>;
  using JacFn = std::function<void(double, ConstVecRef, ConstVecRef, MatRef)>;

  FunctionDrift(std::size_t state_dim, std::size_t control_dim, EvalFn eval,
                JacFn jac_x, JacFn jac_u);

  void eval(double t, ConstVecRef x, ConstVecRef u, VecRef out) const override {
    eval_(t, x, u, out);
  }
  void jacobian_x(double t, ConstVecRef x, ConstVecRef u,
                  MatRef out) const override {
    jac_x_(t, x, u, out);
  }
  void jacobian_u(double t, ConstVecRef x, ConstVecRef u,
                  MatRef out) const override {
    jac_u_(t, x, u, out);
  }

 private:
  EvalFn eval_;
  JacFn jac_x_;
  JacFn jac_u_;
};

/// Registered drifts ("zero", "linear", "bilinear").
Library<std::shared_ptr<const Drift>>& drift_library();

/// Control values per path and node, [path][node][k]. A shared path stores a
/// single row used by every path (open-loop controls).
class ControlPath {
 public:
  ControlPath() = default;
  ControlPath(std::size_t n_paths, std::size_t n_nodes, std::size_t control_dim);
  /// Open-loop values (k x n_nodes) broadcast to every path.
  static ControlPath shared(std::size_t n_paths, const Mat& per_node);

  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_nodes() const { return n_nodes_; }
  std::size_t control_dim() const { return k_; }
  bool is_shared() const { return shared_; }

  const double* at(std::size_t path, std::size_t node) const {
    return values_.data() + ((shared_ ? 0 : path) * n_nodes_ + node) * k_;
  }
  double* at(std::size_t path, std::size_t node) {
    return values_.data() + ((shared_ ? 0 : path) * n_nodes_ + node) * k_;
  }
  ConstVecMap value(std::size_t path, std::size_t node) const {
    return {at(path, node), static_cast<Eigen::Index>(k_)};
  }

  /// this - other, path by path.
  ControlPath minus(const ControlPath& other) const;
  /// this + scale * other, path by path.
  ControlPath plus_scaled(const ControlPath& other, double scale) const;
  /// Integral of |value|^2 over the grid (left-point rule), averaged over
  /// paths.
  double mean_l2_squared(double dt) const;

 private:
  std::size_t n_paths_ = 0;
  std::size_t n_nodes_ = 0;
  std::size_t k_ = 0;
  bool shared_ = false;
  std::vector<double> values_;
};

/// Admissible control u(t) with values in U (a box, possibly all of R^k).
class ControlLaw {
 public:
  enum class Kind { OpenLoop, Feedback, Realized };
  using FeedbackFn =
      std::function<void(std::size_t node, double t, ConstVecRef x, VecRef u)>;

  static ControlLaw constant(const Vec& value);
  /// Column n of `per_node` (k x N) applies at node n; the last column is
  /// held beyond the table.
  static ControlLaw table(const Mat& per_node);
  static ControlLaw feedback(std::size_t control_dim, FeedbackFn fn);
  /// u = -K_n x with one gain per node (held beyond the table).
  static ControlLaw linear_feedback(std::vector<Mat> gains);
  /// Pre-computed per-path values: u = base + eps * direction. This is how
  /// convex perturbations u^eps = ubar + eps (u - ubar) of adapted processes
  /// are simulated.
  static ControlLaw realized(std::shared_ptr<const ControlPath> base,
                             std::shared_ptr<const ControlPath> direction = {},
                             double eps = 0.0);

  /// Restricts values to the box [lower, upper] (projection).
  ControlLaw with_box(const Vec& lower, const Vec& upper) const;

  void evaluate(std::size_t path, std::size_t node, double t, ConstVecRef x,
                VecRef out) const;

  Kind kind() const { return kind_; }
  std::size_t control_dim() const { return k_; }
  bool unconstrained() const { return lower_.size() == 0; }
  /// True when the values do not depend on the path (open-loop tables, or
  /// realized values built from shared tables).
  bool path_independent() const;
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

 private:
  ControlLaw() = default;

  Kind kind_ = Kind::OpenLoop;
  std::size_t k_ = 0;
  Mat table_;
  FeedbackFn feedback_;
  std::shared_ptr<const ControlPath> base_;
  std::shared_ptr<const ControlPath> direction_;
  double eps_ = 0.0;
  Vec lower_;
  Vec upper_;
};

/// Sample-path database: grid, Brownian increments, state and control per
/// path and node. State is [path][node][d].
struct PathBundle {
  TimeGrid grid{1.0, 1};
  std::size_t n_paths = 0;
  std::size_t state_dim = 0;
  std::size_t control_dim = 0;
  std::vector<double> x;
  ControlPath u;
  std::shared_ptr<const BrownianIncrements> noise;

  std::uint64_t seed() const { return noise ? noise->seed() : 0; }
  /// RNG substream that produced path p.
  std::uint64_t substream(std::size_t p) const { return p; }

  ConstVecMap state(std::size_t p, std::size_t n) const {
    return {x.data() + (p * grid.nodes() + n) * state_dim,
            static_cast<Eigen::Index>(state_dim)};
  }
  ConstVecMap control(std::size_t p, std::size_t n) const {
    return u.value(p, n);
  }
  std::span<const double> dW(std::size_t p, std::size_t n) const {
    return noise->step(p, n);
  }
  std::uint64_t noise_checksum() const { return noise ? noise->checksum() : 0; }
};

/// True when the two bundles consume the same Brownian increments.
bool shares_noise(const PathBundle& a, const PathBundle& b);

/// Euler scheme x_{n+1} = x_n + b dt + sum_k sigma_k dW^k_n. Path p uses the
/// counter-based substream (seed, p), so the result does not depend on the
/// thread count. Throws SimulationError naming the first non-finite path/step.
PathBundle simulate_state(const MartingaleField& field, const Drift& drift,
                          const ControlLaw& law, const Vec& x0,
                          const TimeGrid& grid, std::size_t n_paths,
                          std::uint64_t seed, const ExecOptions& exec = {});

/// Same scheme on pre-generated increments (common random numbers).
PathBundle simulate_state(const MartingaleField& field, const Drift& drift,
                          const ControlLaw& law, const Vec& x0,
                          const TimeGrid& grid,
                          std::shared_ptr<const BrownianIncrements> noise,
                          const ExecOptions& exec = {});

/// Variational equation along (xbar, ubar) for the direction du = u - ubar,
/// with coefficients frozen on the reference paths and xhat(0) = 0:
///   xhat_{n+1} = xhat_n + (b_x xhat_n + b_u du_n) dt
///                + sum_k (d_x sigma_k xhat_n + d_u sigma_k du_n) dW^k_n .
/// The returned bundle stores xhat as state and du as control.
PathBundle simulate_variational(const MartingaleField& field, const Drift& drift,
                                const PathBundle& bar, const ControlPath& du,
                                const ExecOptions& exec = {});

/// Left-endpoint Riemann sums sum_n M(dt_n, x_n, u_n), one row per path.
Mat ito_integral(const MartingaleField& field, const PathBundle& bundle);

struct CovariationResult {
  std::vector<Mat> realized;   // sum_n dM(X)_n dM(Y)_n^T per path
  std::vector<Mat> predicted;  // sum_n q(t_n, X_n, U_n, Y_n, V_n) dt per path
  double rms_discrepancy = 0.0;
};

CovariationResult realized_covariation(const MartingaleField& field,
                                       const PathBundle& X, const PathBundle& Y);

/// Per-node Monte Carlo profile of a squared norm, with its sup over nodes.
struct NodeProfile {
  std::vector<Estimate> nodes;
  double sup = 0.0;
  std::size_t argsup = 0;
};

/// E|x^eps(t) - xbar(t)|^2 on every node.
NodeProfile perturbation_gap(const PathBundle& bar, double eps,
                             const PathBundle& pert);

/// E|(x^eps(t) - xbar(t)) / eps - xhat(t)|^2 on every node.
NodeProfile remainder_profile(const PathBundle& bar, double eps,
                              const PathBundle& pert, const PathBundle& hat);

/// Columnar CSV: path_id,t,x_1..x_d,u_1..u_k. The first line is a comment
/// naming the config hash. Writes at most `max_paths` paths.
void write_paths_csv(const PathBundle& bundle, const std::string& file,
                     const std::string& config_hash,
                     std::size_t max_paths = static_cast<std::size_t>(-1));

}  // namespace smpf
