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

// Hamiltonian H(t, x, u, y, z) = <y, b> + tr[z q^T(t, xbar, ubar, x, u)] + f,
// its control gradient along the reference pair, and Monte Carlo checks of
// the first-order conditions: cost derivative in convex directions, the
// variational inequality, and the sufficiency certificate under convexity.
// All comparisons are statistical with 3-standard-error bands and use common
// random numbers.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "smpf/adjoint_solver.hpp"
#include "smpf/cost.hpp"
#include "smpf/forward_sde.hpp"

namespace smpf {

/// H with the q^T slot anchored at (xbar, ubar).
double hamiltonian(const Problem& problem, double t, const Vec& x, const Vec& u,
                   const Vec& y, const Mat& z, const Vec& xbar, const Vec& ubar);

/// H_u = b_u^T y + trace_form_grad_u(z) + f_u at (xbar, ubar).
Vec hamiltonian_u(const Problem& problem, double t, const Vec& xbar,
                  const Vec& ubar, const Vec& y, const Mat& z);

/// Worst mixed relative error between hamiltonian_u and central differences
/// of hamiltonian in u (anchor fixed at the sampled point).
double hamiltonian_gradient_error(const Problem& problem, const FieldSampleBox& box);

/// Values of `law` along the reference paths: u(t_n) = law(t_n, xbar_n).
/// Path-independent laws give a shared table.
ControlPath evaluate_along(const ControlLaw& law, const PathBundle& bar);

struct GateauxOptions {
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  std::size_t n_paths = 20000;
  std::uint64_t seed = 1;
  double rel_tol = 0.05;
  double abs_tol = 0.0;
  /// Floating-point allowance: roundoff * (1 + |J(ubar)|) / min(eps) is
  /// added to the tolerance floor, since the FD quotients amplify the
  /// rounding of J by 1 / eps.
  double roundoff = 1e-12;
};

struct GateauxReport {
  std::vector<double> eps;
  std::vector<Estimate> fd;  // (J(u^eps) - J(ubar)) / eps, paired per path
  Estimate extrapolated;     // Richardson limit from the two smallest eps
  Estimate formula;          // E{ sum [f_x xhat + f_u du] dt + Phi_x xhat(T) }
  Estimate discrepancy;      // extrapolated - formula, paired per path
  double tolerance = 0.0;
  std::uint64_t noise_checksum = 0;
  bool pass = false;
};

/// Finite-difference cost derivative along u^eps = ubar + eps (u - ubar)
/// against the variational formula.
GateauxReport gateaux_check(const Problem& problem, const ControlLaw& ubar,
                            const ControlLaw& u, const GateauxOptions& options,
                            const ExecOptions& exec = {});

struct VIReport {
  /// [candidate][node] estimates of E[H_u . (u - ubar)], nodes 0..N-1.
  std::vector<std::vector<Estimate>> residual;
  /// [candidate][node] E[sum of |term| . |u - ubar|], the roundoff scale.
  std::vector<std::vector<double>> scale;
  double min_mean = 0.0;
  std::size_t argmin_candidate = 0;
  std::size_t argmin_node = 0;
  Estimate at_min;
  std::size_t violations = 0;
  bool pass = true;
};

/// Scan of the variational inequality. A node is a violation when its
/// estimate lies below -3 SE - relative_floor * scale; the default floor only
/// absorbs floating-point roundoff.
VIReport variational_inequality_scan(const Problem& problem,
                                     const PathBundle& bar,
                                     const AdjointTriple& adj,
                                     const std::vector<ControlLaw>& candidates,
                                     double relative_floor = 1e-9,
                                     const ExecOptions& exec = {});

struct SufficiencySample {
  std::string label;
  double l2_norm = 0.0;  // sqrt(E int |u - ubar|^2 dt)
  Estimate diff;         // J(u) - J(ubar), paired per path
};

struct SufficiencyOptions {
  std::size_t n_samples = 50;
  /// Seed of the random directions; the Brownian increments are those of bar.
  std::uint64_t seed = 1;
  /// Number of cosine modes in each random direction.
  std::size_t modes = 3;
  /// Roundoff allowance relative to 1 + |J(ubar)|.
  double roundoff = 1e-12;
};

struct SufficiencyReport {
  Estimate j_bar;
  std::vector<SufficiencySample> samples;
  /// Smallest J(u) - J(ubar) over the samples.
  double min_diff = 0.0;
  /// Smallest diff.mean / diff.se over samples with a positive SE (0 if none).
  double min_z = 0.0;
  Estimate mean_excess;
  bool convexity_warning = false;
  std::size_t convexity_violations = 0;
  bool pass = false;
};

/// Samples random smooth open-loop perturbations u = ubar + du with
/// int E|du|^2 dt = 1 (projected onto U when it is a box), plus `extra`
/// candidate laws simulated in closed loop, and checks
/// J(u) - J(ubar) >= -3 SE for each. A midpoint-convexity spot check of H
/// (with y, z taken from `adj`) and Phi sets convexity_warning.
SufficiencyReport sufficiency_check(const Problem& problem, const ControlLaw& ubar,
                                    const AdjointTriple& adj,
                                    const PathBundle& bar,
                                    const SufficiencyOptions& options,
                                    const std::vector<ControlLaw>& extra = {},
                                    const ExecOptions& exec = {});

}  // namespace smpf
