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


// Linear-quadratic specialization: linear state equation with linear
// diffusion factors sigma_j = C_j x + D_j u, quadratic cost, the
// stationarity condition B^T y + (d/du tr[z q^*])^T + R u = 0, and a
// discrete dynamic-programming Riccati oracle for the classical reduction.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "smpf/adjoint_solver.hpp"
#include "smpf/cost.hpp"
#include "smpf/forward_sde.hpp"
#include "smpf/max_principle.hpp"

namespace smpf {

struct LinearFactorSpec {
  MatrixSchedule C;  // d x d
  MatrixSchedule D;  // d x k
};

struct LQSpec {
  MatrixSchedule A;  // d x d
  MatrixSchedule B;  // d x k
  MatrixSchedule Q;  // d x d symmetric PSD
  MatrixSchedule R;  // k x k symmetric PD
  Mat G;             // d x d symmetric PSD
  std::vector<LinearFactorSpec> factors;
  Vec x0;
  /// Lower bound on the smallest eigenvalue of R at every node.
  double r_min = 1e-10;

  std::size_t state_dim() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t control_dim() const { return static_cast<std::size_t>(B.cols()); }
  /// Dimension, symmetry and definiteness checks; throws InputError.
  void validate() const;
};

/// Field with one LinearFactor per (C_j, D_j); the zero field when there are
/// no factors.
MartingaleField lq_field(const LQSpec& spec);

/// Generic problem view of the LQ data on `grid` (declared convex).
Problem make_problem(const LQSpec& spec, const TimeGrid& grid);

struct RiccatiSolution {
  TimeGrid grid{1.0, 1};
  std::vector<Mat> P;  // per node, P[N] = G
  std::vector<Mat> K;  // per node, K[N] = K[N-1]

  /// 1/2 x0^T P(0) x0.
  double value(const Vec& x0) const { return 0.5 * x0.dot(P.front() * x0); }
};

/// Exact dynamic programming for the Euler discretization on `grid`:
///   F = I + A dt,  M = R + sum_j D_j^T P D_j + dt B^T P B,
///   L = B^T P F + sum_j D_j^T P C_j,  K = M^{-1} L,
///   P_n = Q dt + F^T P F + dt sum_j C_j^T P C_j - dt L^T M^{-1} L,
/// with P = P_{n+1} and coefficients at t_n. As dt -> 0 this is the classical
/// stochastic Riccati equation and K -> (R + sum D^T P D)^{-1}(B^T P + sum D^T P C).
/// Throws SolverError if M is not positive definite.
RiccatiSolution riccati_oracle(const LQSpec& spec, const TimeGrid& grid);

/// Feedback u = -K(t) x.
ControlLaw riccati_law(const RiccatiSolution& solution);

/// 1/2 E[ int (<Qx,x> + <Ru,u>) dt + <G x(T), x(T)> ] on the bundle's grid.
Estimate lq_cost(const LQSpec& spec, const PathBundle& bundle);

struct StationarityReport {
  /// residual[n][i]: MC estimate of component i at node n (n < N).
  std::vector<std::vector<Estimate>> residual;
  /// Node-wise E|R ubar|.
  std::vector<double> scale;
  /// Largest |mean| over nodes and components.
  double max_abs = 0.0;
  std::size_t argmax_node = 0;
  /// Largest |mean| / SE over nodes and components (0 when all SE vanish).
  double max_z = 0.0;
  std::size_t violations = 0;
  bool pass = false;
};

/// Per-node estimates of B^T y + (d/du tr[z q^*])^T + R ubar, using the
/// regression estimate E[y_{n+1} | x_n] for y. A node component fails when
/// |mean| > max(3 SE, rel_tol * scale_n).
StationarityReport stationarity_residual(const LQSpec& spec,
                                         const AdjointTriple& adj,
                                         const PathBundle& bar,
                                         double rel_tol = 0.02,
                                         const ExecOptions& exec = {});

/// Sufficiency check at ubar with the Riccati feedback added as a candidate.
SufficiencyReport lq_optimality_certificate(const LQSpec& spec,
                                            const ControlLaw& ubar,
                                            const PathBundle& bar,
                                            const AdjointTriple& adj,
                                            const SufficiencyOptions& options,
                                            const ExecOptions& exec = {});

/// Largest |condition_q_residual| of the induced field over random argument
/// tuples and random matrices.
double linear_condition_residual(const LQSpec& spec, const FieldSampleBox& box);

/// CSV: t,P_ij...,K_ij... (row-major flattening).
void write_riccati_csv(const RiccatiSolution& solution, const std::string& file,
                       const std::string& config_hash);

}  // namespace smpf
