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


#include "smpf/lq.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>

#include "smpf/errors.hpp"
#include "smpf/rng.hpp"

namespace smpf {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

double min_eigenvalue(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void check_table(const MatrixSchedule& s, Eigen::Index rows, Eigen::Index cols,
                 const std::string& name) {
  if (s.empty()) throw InputError("LQ spec is missing " + name);
  if (s.rows() != rows || s.cols() != cols)
    throw InputError("LQ matrix " + name + " must be " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  for (std::size_t n = 0; n < s.size(); ++n)
    if (!s.node(n).allFinite()) throw InputError("LQ matrix " + name + " is not finite");
}

void check_symmetric(const Mat& S, const std::string& name) {
  const double tol = 1e-12 * (1.0 + S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > tol)
    throw InputError("LQ matrix " + name + " must be symmetric");
}

}  // namespace

void LQSpec::validate() const {
  if (A.empty() || B.empty()) throw InputError("LQ spec needs A and B");
  const Eigen::Index d = A.rows(), k = B.cols();
  if (d == 0 || k == 0) throw InputError("LQ dimensions must be positive");
  check_table(A, d, d, "A");
  check_table(B, d, k, "B");
  check_table(Q, d, d, "Q");
  check_table(R, k, k, "R");
  if (G.rows() != d || G.cols() != d) throw InputError("LQ matrix G must be d x d");
  if (x0.size() != d) throw InputError("LQ x0 must have the state dimension");
  if (!(r_min > 0.0)) throw InputError("LQ r_min must be positive");
  const double psd_tol = -1e-12;
  for (std::size_t n = 0; n < Q.size(); ++n) {
    check_symmetric(Q.node(n), "Q");
    if (min_eigenvalue(Q.node(n)) < psd_tol * (1.0 + Q.node(n).norm()))
      throw InputError("LQ matrix Q must be positive semidefinite");
  }
  for (std::size_t n = 0; n < R.size(); ++n) {
    check_symmetric(R.node(n), "R");
    if (min_eigenvalue(R.node(n)) < r_min)
      throw InputError("LQ matrix R must have smallest eigenvalue >= r_min");
  }
  check_symmetric(G, "G");
  if (min_eigenvalue(G) < psd_tol * (1.0 + G.norm()))
    throw InputError("LQ matrix G must be positive semidefinite");
  for (std::size_t j = 0; j < factors.size(); ++j) {
    check_table(factors[j].C, d, d, "C_" + std::to_string(j + 1));
    check_table(factors[j].D, d, k, "D_" + std::to_string(j + 1));
  }
}

MartingaleField lq_field(const LQSpec& spec) {
  spec.validate();
  if (spec.factors.empty())
    return MartingaleField::zero(spec.state_dim(), spec.control_dim());
  std::vector<std::shared_ptr<const SigmaFactor>> factors;
  for (const auto& f : spec.factors)
    factors.push_back(std::make_shared<LinearFactor>(f.C, f.D));
  return MartingaleField(spec.state_dim(), spec.control_dim(), std::move(factors));
}

Problem make_problem(const LQSpec& spec, const TimeGrid& grid) {
  Problem p;
  p.field = std::make_shared<const MartingaleField>(lq_field(spec));
  p.drift = std::make_shared<const LinearDrift>(spec.A, spec.B);
  p.cost = std::make_shared<const QuadraticCost>(spec.Q, spec.R, spec.G);
  p.x0 = spec.x0;
  p.grid = grid;
  p.convex = true;
  p.validate();
  return p;
}

RiccatiSolution riccati_oracle(const LQSpec& spec, const TimeGrid& grid) {
  spec.validate();
  const std::size_t N = grid.n_steps();
  const double dt = grid.dt();
  const auto d = idx(spec.state_dim());
  RiccatiSolution sol;
  sol.grid = grid;
  sol.P.assign(N + 1, Mat());
  sol.K.assign(N + 1, Mat());
  sol.P[N] = spec.G;
  for (std::size_t n = N; n-- > 0;) {
    const double t = grid.t(n);
    const Mat& P = sol.P[n + 1];
    const Mat& A = spec.A.at(t);
    const Mat& B = spec.B.at(t);
    const Mat F = Mat::Identity(d, d) + A * dt;
    Mat M = spec.R.at(t) + dt * B.transpose() * P * B;
    Mat L = B.transpose() * P * F;
    Mat noise = Mat::Zero(d, d);
    for (const auto& f : spec.factors) {
      const Mat& C = f.C.at(t);
      const Mat& D = f.D.at(t);
      M += D.transpose() * P * D;
      L += D.transpose() * P * C;
      noise += C.transpose() * P * C;
    }
    M = 0.5 * (M + M.transpose());
    Eigen::LLT<Mat> llt(M);
    if (llt.info() != Eigen::Success)
      throw SolverError("Riccati recursion: R + sum D^T P D is not positive definite at node " +
                        std::to_string(n));
    sol.K[n] = llt.solve(L);
    Mat Pn = spec.Q.at(t) * dt + F.transpose() * P * F + dt * noise - dt * L.transpose() * sol.K[n];
    sol.P[n] = 0.5 * (Pn + Pn.transpose());
  }
  sol.K[N] = N > 0 ? sol.K[N - 1] : Mat::Zero(idx(spec.control_dim()), d);
  return sol;
}

ControlLaw riccati_law(const RiccatiSolution& solution) {
  return ControlLaw::linear_feedback(solution.K);
}

Estimate lq_cost(const LQSpec& spec, const PathBundle& bundle) {
  return expected_cost(make_problem(spec, bundle.grid), bundle);
}

StationarityReport stationarity_residual(const LQSpec& spec, const AdjointTriple& adj,
                                         const PathBundle& bar, double rel_tol,
                                         const ExecOptions& exec) {
  spec.validate();
  if (!(adj.grid == bar.grid) || adj.n_paths != bar.n_paths)
    throw InputError("adjoint was not solved along this reference bundle");
  if (bar.state_dim != spec.state_dim() || bar.control_dim != spec.control_dim())
    throw InputError("reference bundle does not match the LQ dimensions");
  const MartingaleField field = lq_field(spec);
  const std::size_t N = bar.grid.n_steps();
  const std::size_t P = bar.n_paths;
  const auto k = idx(spec.control_dim());
  // Component-major storage: [(n * k + i) * P + p].
  std::vector<double> res(N * static_cast<std::size_t>(k) * P), mag(N * P);
  parallel_for(P, exec, [&](std::size_t begin, std::size_t end) {
    FieldWorkspace ws(field);
    Vec g(k), r(k);
    for (std::size_t p = begin; p < end; ++p) {
      for (std::size_t n = 0; n < N; ++n) {
        const double t = bar.grid.t(n);
        ConstVecMap xb = bar.state(p, n);
        ConstVecMap ub = bar.control(p, n);
        const Mat& R = spec.R.at(t);
        field.trace_form_grad_u_into(adj.z_at(p, n), t, xb, ub, g, ws);
        kernel::gemv(R, ub.data(), r.data(), false);
        mag[n * P + p] = r.norm();
        kernel::gemv_t(spec.B.at(t), adj.y_hat(p, n).data(), g.data(), true);
        g += r;
        for (Eigen::Index i = 0; i < k; ++i)
          res[(n * static_cast<std::size_t>(k) + static_cast<std::size_t>(i)) * P + p] = g(i);
      }
    }
  });
  StationarityReport rep;
  rep.residual.assign(N, {});
  rep.scale.assign(N, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    rep.scale[n] = pairwise_sum(std::span<const double>(mag.data() + n * P, P)) /
                   static_cast<double>(P);
    for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
      const Estimate e = estimate(std::span<const double>(
          res.data() + (n * static_cast<std::size_t>(k) + i) * P, P));
      rep.residual[n].push_back(e);
      const double a = std::abs(e.mean);
      if (a > rep.max_abs) {
        rep.max_abs = a;
        rep.argmax_node = n;
      }
      if (e.se > 0.0) rep.max_z = std::max(rep.max_z, a / e.se);
      if (a > std::max(3.0 * e.se, rel_tol * rep.scale[n])) ++rep.violations;
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

SufficiencyReport lq_optimality_certificate(const LQSpec& spec, const ControlLaw& ubar,
                                            const PathBundle& bar,
                                            const AdjointTriple& adj,
                                            const SufficiencyOptions& options,
                                            const ExecOptions& exec) {
  const Problem problem = make_problem(spec, bar.grid);
  const RiccatiSolution sol = riccati_oracle(spec, bar.grid);
  return sufficiency_check(problem, ubar, adj, bar, options, {riccati_law(sol)}, exec);
}

double linear_condition_residual(const LQSpec& spec, const FieldSampleBox& box) {
  const MartingaleField field = lq_field(spec);
  const auto d = idx(spec.state_dim());
  const auto k = idx(spec.control_dim());
  NormalStream rng(box.seed, 41);
  auto point = [&](Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
      v(i) = box.radius * (2.0 * rng.next_uniform() - 1.0);
    return v;
  };
  double worst = 0.0;
  for (std::size_t s = 0; s < box.samples; ++s) {
    const Vec x = point(d), u = point(k), y = point(d), v = point(k);
    Mat A(d, d);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.next();
    worst = std::max(worst, std::abs(field.condition_q_residual(box.t, x, u, y, v, A)));
  }
  return worst;
}

void write_riccati_csv(const RiccatiSolution& solution, const std::string& file,
                       const std::string& config_hash) {
  std::ofstream out(file);
  if (!out) throw InputError("cannot open " + file + " for writing");
  out << "# config_hash=" << config_hash << "\n";
  const Mat& P0 = solution.P.front();
  const Mat& K0 = solution.K.front();
  out << "t";
  for (Eigen::Index i = 0; i < P0.rows(); ++i)
    for (Eigen::Index j = 0; j < P0.cols(); ++j) out << ",P_" << i + 1 << "_" << j + 1;
  for (Eigen::Index i = 0; i < K0.rows(); ++i)
    for (Eigen::Index j = 0; j < K0.cols(); ++j) out << ",K_" << i + 1 << "_" << j + 1;
  out << "\n" << std::setprecision(17);
  for (std::size_t n = 0; n < solution.P.size(); ++n) {
    out << solution.grid.t(n);
    const Mat& P = solution.P[n];
    const Mat& K = solution.K[n];
    for (Eigen::Index i = 0; i < P.rows(); ++i)
      for (Eigen::Index j = 0; j < P.cols(); ++j) out << "," << P(i, j);
    for (Eigen::Index i = 0; i < K.rows(); ++i)
      for (Eigen::Index j = 0; j < K.cols(); ++j) out << "," << K(i, j);
    out << "\n";
  }
}

}  // namespace smpf
