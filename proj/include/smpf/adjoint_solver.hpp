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

// Least-squares Monte Carlo solver for the adjoint BSDE
//
//   -dy = [b_x^T y + d/dx tr[z q^T] + f_x] dt - z dM - dN,   y(T) = Phi_x(x(T)),
//
// along a simulated reference pair (xbar, ubar). Conditional expectations
// given F_{t_n} are regressions on basis functions of xbar(t_n). The
// filtration is generated by the driving Brownian motions, so N = 0.
//
// Backward step at node n (explicit):
//   yhat_n  = E[y_{n+1} | xbar_n]
//   Zt_n    = E[(y_{n+1} - yhat_n) dW_n^T | xbar_n] / dt      (d x m)
//   z_n     = Zt_n S_n^+,  S_n = [sigma_1 ... sigma_m] at (t_n, xbar_n, ubar_n)
//   y_n     = yhat_n + (b_x^T yhat_n + sum_k d_x sigma_k^T z_n sigma_k + f_x) dt
//
// z only enters later formulas through the products z sigma_k, which the
// minimum-norm pseudo-inverse fixes uniquely.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "smpf/cost.hpp"
#include "smpf/forward_sde.hpp"
#include "smpf/parallel.hpp"
#include "smpf/types.hpp"

namespace smpf {

struct RegressionBasis {
  enum class Kind { Polynomial, PiecewiseLinear };
  Kind kind = Kind::Polynomial;
  /// Total degree of the polynomial basis.
  int degree = 2;
  /// Intervals per coordinate of the piecewise-linear (hat function) basis.
  std::size_t bins = 16;
  /// Ridge weight; the penalty lambda * n_paths applies to non-constant
  /// columns.
  double ridge = 1e-8;
};

struct AdjointTriple {
  TimeGrid grid{1.0, 1};
  std::size_t n_paths = 0;
  std::size_t state_dim = 0;
  /// y per path and node, [path][node][d].
  std::vector<double> y;
  /// yhat_n = E[y_{n+1} | F_n]; yhat_N = y_N.
  std::vector<double> y_pred;
  /// z per path and node, d x d column-major, [path][node][d*d]; zero at N.
  std::vector<double> z;
  /// Relative residual of the normal equations at each node.
  std::vector<double> normal_residual;

  ConstVecMap y_at(std::size_t p, std::size_t n) const {
    return {y.data() + (p * grid.nodes() + n) * state_dim,
            static_cast<Eigen::Index>(state_dim)};
  }
  ConstVecMap y_hat(std::size_t p, std::size_t n) const {
    return {y_pred.data() + (p * grid.nodes() + n) * state_dim,
            static_cast<Eigen::Index>(state_dim)};
  }
  Eigen::Map<const Mat> z_at(std::size_t p, std::size_t n) const {
    const auto d = static_cast<Eigen::Index>(state_dim);
    return {z.data() + (p * grid.nodes() + n) * state_dim * state_dim, d, d};
  }
  /// The orthogonal martingale increment; identically zero under a Brownian
  /// filtration.
  Vec N_at(std::size_t, std::size_t) const {
    return Vec::Zero(static_cast<Eigen::Index>(state_dim));
  }
};

/// Backward regression sweep along `bar`. Throws SolverError naming the node
/// for a rank-deficient regression (ridge = 0) or a non-finite y.
AdjointTriple solve_adjoint(const Problem& problem, const PathBundle& bar,
                            const RegressionBasis& basis = {},
                            const ExecOptions& exec = {});

struct DualityResult {
  Estimate gap;  // E<y_N, xhat_N> - E sum_n [...] dt
  Estimate lhs;  // E<y_N, xhat_N>
  Estimate rhs;
};

/// Per-path estimator of
///   E<y(T), xhat(T)> - E int [<b_u^T y + (d/du tr[z q^T])^T, u - ubar>
///                            - <f_x, xhat>] dt
/// on the grid, with y_{n+1} in the b_u term and z_n in the trace term.
DualityResult duality_gap(const Problem& problem, const AdjointTriple& adj,
                          const PathBundle& bar, const PathBundle& hat);

/// Columnar CSV: path_id,t,y_1..y_d,z_11..z_dd (z row-major).
void write_adjoint_csv(const AdjointTriple& adj, const std::string& file,
                       const std::string& config_hash,
                       std::size_t max_paths = static_cast<std::size_t>(-1));

}  // namespace smpf
