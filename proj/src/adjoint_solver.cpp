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

#include "smpf/adjoint_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "smpf/errors.hpp"

namespace smpf {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

/// Standardized regression features of the state at one node. Coordinates
/// that do not vary across paths carry no information and are dropped.
struct Features {
  std::vector<Eigen::Index> kept;
  Mat values;  // n_paths x kept.size()
};

Features standardize(const Mat& X) {
  Features f;
  const double n = static_cast<double>(X.rows());
  std::vector<Eigen::Index> kept;
  std::vector<double> means, sds;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).sum() / n;
    const double var = (X.col(j).array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd > 1e-12 * (1.0 + std::abs(mean))) {
      kept.push_back(j);
      means.push_back(mean);
      sds.push_back(sd);
    }
  }
  f.kept = kept;
  f.values.resize(X.rows(), idx(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c)
    f.values.col(idx(c)) = (X.col(kept[c]).array() - means[c]) / sds[c];
  return f;
}

void exponents(std::size_t dims, int degree, std::vector<int>& cur,
               std::vector<std::vector<int>>& out) {
  if (cur.size() == dims) {
    out.push_back(cur);
    return;
  }
  int used = 0;
  for (int e : cur) used += e;
  for (int e = 0; e + used <= degree; ++e) {
    cur.push_back(e);
    exponents(dims, degree, cur, out);
    cur.pop_back();
  }
}

/// Design matrix; `penalized` marks the columns that receive the ridge.
struct Design {
  Mat phi;
  std::vector<bool> penalized;
};

Design polynomial_design(const Mat& F, int degree, const ExecOptions& exec) {
  std::vector<std::vector<int>> exps;
  std::vector<int> cur;
  exponents(static_cast<std::size_t>(F.cols()), degree, cur, exps);
  std::stable_sort(exps.begin(), exps.end(), [](const auto& a, const auto& b) {
    int sa = 0, sb = 0;
    for (int e : a) sa += e;
    for (int e : b) sb += e;
    return sa < sb;
  });
  Design d;
  d.phi.resize(F.rows(), idx(exps.size()));
  d.penalized.assign(exps.size(), true);
  d.penalized[0] = false;  // the constant column
  parallel_for(static_cast<std::size_t>(F.rows()), exec,
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t p = begin; p < end; ++p) {
                   for (std::size_t c = 0; c < exps.size(); ++c) {
                     double v = 1.0;
                     for (std::size_t j = 0; j < exps[c].size(); ++j)
                       for (int e = 0; e < exps[c][j]; ++e) v *= F(idx(p), idx(j));
                     d.phi(idx(p), idx(c)) = v;
                   }
                 }
               });
  return d;
}

Design hat_design(const Mat& F, std::size_t bins, const ExecOptions& exec) {
  if (bins == 0) throw InputError("piecewise-linear basis needs bins >= 1");
  const auto dims = static_cast<std::size_t>(F.cols());
  const std::size_t per = bins + 1;
  std::size_t total = 1;
  for (std::size_t j = 0; j < dims; ++j) {
    total *= per;
    if (total > 4096)
      throw InputError("piecewise-linear basis would need more than 4096 columns");
  }
  std::vector<double> lo(dims), width(dims);
  for (std::size_t j = 0; j < dims; ++j) {
    lo[j] = F.col(idx(j)).minCoeff();
    width[j] = (F.col(idx(j)).maxCoeff() - lo[j]) / static_cast<double>(bins);
  }
  Design d;
  d.phi = Mat::Zero(F.rows(), idx(total));
  d.penalized.assign(total, true);
  parallel_for(static_cast<std::size_t>(F.rows()), exec,
               [&](std::size_t begin, std::size_t end) {
                 std::vector<std::size_t> cell(dims);
                 std::vector<double> frac(dims);
                 for (std::size_t p = begin; p < end; ++p) {
                   for (std::size_t j = 0; j < dims; ++j) {
                     const double s = (F(idx(p), idx(j)) - lo[j]) / width[j];
                     const double c = std::clamp(std::floor(s), 0.0,
                                                 static_cast<double>(bins - 1));
                     cell[j] = static_cast<std::size_t>(c);
                     frac[j] = std::clamp(s - c, 0.0, 1.0);
                   }
                   // Multilinear interpolation weights on the 2^dims corners.
                   for (std::size_t corner = 0; corner < (1u << dims); ++corner) {
                     double w = 1.0;
                     std::size_t col = 0;
                     for (std::size_t j = dims; j-- > 0;) {
                       const bool up = (corner >> j) & 1u;
                       w *= up ? frac[j] : 1.0 - frac[j];
                       col = col * per + cell[j] + (up ? 1 : 0);
                     }
                     d.phi(idx(p), idx(col)) += w;
                   }
                 }
               });
  return d;
}

Design constant_design(Eigen::Index rows) {
  Design d;
  d.phi = Mat::Ones(rows, 1);
  d.penalized = {false};
  return d;
}

/// Ridge-regularized least squares with one factorization for all targets.
class Regression {
 public:
  Regression(const Design& design, double ridge, std::size_t node)
      : phi_(design.phi) {
    const double n = static_cast<double>(phi_.rows());
    gram_ = phi_.transpose() * phi_;
    for (std::size_t c = 0; c < design.penalized.size(); ++c)
      if (design.penalized[c]) gram_(idx(c), idx(c)) += ridge * n;
    ldlt_.compute(gram_);
    const bool singular = ldlt_.info() != Eigen::Success ||
                          !(ldlt_.rcond() > 1e-14) ||
                          (ldlt_.vectorD().array() <= 0.0).any();
    if (singular)
      throw SolverError("regression design at node " + std::to_string(node) +
                        " is rank deficient (" + std::to_string(phi_.cols()) +
                        " basis functions, " + std::to_string(phi_.rows()) +
                        " paths); use a positive ridge or a smaller basis");
  }

  /// Fitted values for the columns of Y; updates the worst normal-equation
  /// residual seen so far.
  Mat fit(const Mat& Y, double& worst_residual) const {
    const Mat rhs = phi_.transpose() * Y;
    const Mat beta = ldlt_.solve(rhs);
    const double scale = std::max(rhs.norm(), 1e-300);
    worst_residual = std::max(worst_residual, (gram_ * beta - rhs).norm() / scale);
    return phi_ * beta;
  }

 private:
  const Mat& phi_;
  Mat gram_;
  Eigen::LDLT<Mat> ldlt_;
};

bool constant_column(const Mat& Y, Eigen::Index c) {
  const double v = Y(0, c);
  return (Y.col(c).array() == v).all();
}

/// z = Zt S^+ with the minimum-norm pseudo-inverse.
void pseudo_solve(const Mat& Zt, const Mat& S, MatRef z) {
  if (S.rows() == 1 && S.cols() == 1) {
    const double s = S(0, 0);
    z(0, 0) = std::abs(s) > 1e-150 ? Zt(0, 0) / s : 0.0;
    return;
  }
  Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  Vec inv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * smax && sv(i) > 1e-150) inv(i) = 1.0 / sv(i);
  // S^+ = V diag(inv) U^T, so z = Zt V diag(inv) U^T.
  z.noalias() = Zt * svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

AdjointTriple solve_adjoint(const Problem& problem, const PathBundle& bar,
                            const RegressionBasis& basis,
                            const ExecOptions& exec) {
  problem.validate();
  const MartingaleField& field = *problem.field;
  const Drift& drift = *problem.drift;
  const CostSpec& cost = *problem.cost;
  const std::size_t d = field.state_dim();
  const std::size_t m = field.brownian_dim();
  if (bar.state_dim != d || bar.control_dim != field.control_dim())
    throw InputError("reference bundle does not match the problem");
  if (!bar.noise || bar.noise->dim() != m)
    throw InputError("reference bundle carries no matching Brownian increments");
  if (basis.ridge < 0.0) throw InputError("ridge weight must be nonnegative");
  if (basis.kind == RegressionBasis::Kind::Polynomial && basis.degree < 0)
    throw InputError("polynomial degree must be nonnegative");

  AdjointTriple adj;
  adj.grid = bar.grid;
  adj.n_paths = bar.n_paths;
  adj.state_dim = d;
  const std::size_t nodes = bar.grid.nodes();
  const std::size_t N = bar.grid.n_steps();
  const double dt = bar.grid.dt();
  const std::size_t P = bar.n_paths;
  adj.y.assign(P * nodes * d, 0.0);
  adj.y_pred.assign(P * nodes * d, 0.0);
  adj.z.assign(P * nodes * d * d, 0.0);
  adj.normal_residual.assign(nodes, 0.0);

  auto y_ptr = [&](std::size_t p, std::size_t n) {
    return adj.y.data() + (p * nodes + n) * d;
  };
  auto yp_ptr = [&](std::size_t p, std::size_t n) {
    return adj.y_pred.data() + (p * nodes + n) * d;
  };

  // Terminal condition, exact path by path.
  {
    Vec g(idx(d));
    for (std::size_t p = 0; p < P; ++p) {
      cost.terminal_grad(bar.state(p, N), g);
      std::copy(g.data(), g.data() + d, y_ptr(p, N));
      std::copy(g.data(), g.data() + d, yp_ptr(p, N));
    }
  }

  Mat X(idx(P), idx(d)), Y(idx(P), idx(d));
  for (std::size_t n = N; n-- > 0;) {
    for (std::size_t p = 0; p < P; ++p) {
      X.row(idx(p)) = bar.state(p, n).transpose();
      Y.row(idx(p)) = ConstVecMap(y_ptr(p, n + 1), idx(d)).transpose();
    }
    std::vector<Eigen::Index> varying;
    for (Eigen::Index i = 0; i < idx(d); ++i)
      if (!constant_column(Y, i)) varying.push_back(i);

    Mat yhat = Y;  // constant components are their own conditional mean
    Mat zt = Mat::Zero(idx(d * m), idx(P));  // column p: Zt (d x m) column-major
    if (!varying.empty()) {
      const Features feats = standardize(X);
      Design design;
      if (feats.kept.empty()) {
        design = constant_design(idx(P));
      } else if (basis.kind == RegressionBasis::Kind::Polynomial) {
        design = polynomial_design(feats.values, basis.degree, exec);
      } else {
        design = hat_design(feats.values, basis.bins, exec);
      }
      const Regression reg(design, basis.ridge, n);
      double worst = 0.0;
      Mat target(idx(P), idx(varying.size()));
      for (std::size_t c = 0; c < varying.size(); ++c)
        target.col(idx(c)) = Y.col(varying[c]);
      const Mat fitted = reg.fit(target, worst);
      for (std::size_t c = 0; c < varying.size(); ++c)
        yhat.col(varying[c]) = fitted.col(idx(c));

      Mat ztarget(idx(P), idx(varying.size() * m));
      for (std::size_t p = 0; p < P; ++p) {
        const auto dW = bar.dW(p, n);
        for (std::size_t c = 0; c < varying.size(); ++c) {
          const double resid = Y(idx(p), varying[c]) - yhat(idx(p), varying[c]);
          for (std::size_t k = 0; k < m; ++k)
            ztarget(idx(p), idx(c * m + k)) = resid * dW[k] / dt;
        }
      }
      const Mat zfit = reg.fit(ztarget, worst);
      for (std::size_t c = 0; c < varying.size(); ++c)
        for (std::size_t k = 0; k < m; ++k)
          zt.row(varying[c] + idx(k * d)) = zfit.col(idx(c * m + k)).transpose();
      adj.normal_residual[n] = worst;
    }

    const double t = bar.grid.t(n);
    parallel_for(P, exec, [&](std::size_t begin, std::size_t end) {
      FieldWorkspace ws(field);
      Mat S(idx(d), idx(m)), Zt(idx(d), idx(m)), z(idx(d), idx(d)),
          zs(idx(d), idx(m)), bx(idx(d), idx(d));
      Vec gx(idx(d)), fx(idx(d)), yh(idx(d)), yn(idx(d));
      for (std::size_t p = begin; p < end; ++p) {
        ConstVecMap xb = bar.state(p, n);
        ConstVecMap ub = bar.control(p, n);
        yh = yhat.row(idx(p)).transpose();
        Zt = Eigen::Map<const Mat>(zt.col(idx(p)).data(), idx(d), idx(m));
        if (Zt.isZero(0.0)) {
          z.setZero();
          zs.setZero();
        } else {
          field.sigma_into(t, xb, ub, S, ws);
          pseudo_solve(Zt, S, z);
          for (Eigen::Index c = 0; c < idx(m); ++c)
            kernel::gemv(z, S.col(c).data(), zs.col(c).data(), false);
        }
        field.contracted_grad_x_into(zs, t, xb, ub, gx, ws);
        drift.jacobian_x(t, xb, ub, bx);
        cost.running_grad_x(t, xb, ub, fx);
        kernel::gemv_t(bx, yh.data(), gx.data(), true);
        yn = yh + (gx + fx) * dt;
        if (!yn.allFinite())
          throw SolverError("non-finite adjoint at node " + std::to_string(n) +
                            " on path " + std::to_string(p));
        std::copy(yn.data(), yn.data() + d, y_ptr(p, n));
        std::copy(yh.data(), yh.data() + d, yp_ptr(p, n));
        std::copy(z.data(), z.data() + d * d,
                  adj.z.data() + (p * nodes + n) * d * d);
      }
    });
  }
  return adj;
}

DualityResult duality_gap(const Problem& problem, const AdjointTriple& adj,
                          const PathBundle& bar, const PathBundle& hat) {
  problem.validate();
  const MartingaleField& field = *problem.field;
  const std::size_t d = field.state_dim();
  const std::size_t k = field.control_dim();
  if (!(adj.grid == bar.grid) || !(hat.grid == bar.grid) ||
      adj.n_paths != bar.n_paths || hat.n_paths != bar.n_paths)
    throw InputError("adjoint, reference and variational bundles differ in shape");
  if (!shares_noise(bar, hat))
    throw InputError("variational bundle must reuse the reference increments");
  const std::size_t N = bar.grid.n_steps();
  const double dt = bar.grid.dt();
  std::vector<double> lhs(bar.n_paths), rhs(bar.n_paths), gap(bar.n_paths);
  FieldWorkspace ws(field);
  Mat bu(idx(d), idx(k));
  Vec gu(idx(k)), fx(idx(d));
  std::vector<double> terms(N);
  for (std::size_t p = 0; p < bar.n_paths; ++p) {
    for (std::size_t n = 0; n < N; ++n) {
      const double t = bar.grid.t(n);
      ConstVecMap xb = bar.state(p, n);
      ConstVecMap ub = bar.control(p, n);
      problem.drift->jacobian_u(t, xb, ub, bu);
      field.trace_form_grad_u_into(adj.z_at(p, n), t, xb, ub, gu, ws);
      problem.cost->running_grad_x(t, xb, ub, fx);
      const Vec hu = bu.transpose() * adj.y_at(p, n + 1) + gu;
      terms[n] = hu.dot(hat.control(p, n)) - fx.dot(hat.state(p, n));
    }
    lhs[p] = adj.y_at(p, N).dot(hat.state(p, N));
    rhs[p] = pairwise_sum(terms) * dt;
    gap[p] = lhs[p] - rhs[p];
  }
  return {estimate(gap), estimate(lhs), estimate(rhs)};
}

void write_adjoint_csv(const AdjointTriple& adj, const std::string& file,
                       const std::string& config_hash, std::size_t max_paths) {
  std::ofstream out(file);
  if (!out) throw InputError("cannot write '" + file + "'");
  const std::size_t d = adj.state_dim;
  out << "# config_hash=" << config_hash << "\n";
  out << "path_id,t";
  for (std::size_t i = 1; i <= d; ++i) out << ",y_" << i;
  for (std::size_t i = 1; i <= d; ++i)
    for (std::size_t j = 1; j <= d; ++j) out << ",z_" << i << j;
  out << "\n" << std::setprecision(17);
  const std::size_t paths = std::min(max_paths, adj.n_paths);
  for (std::size_t p = 0; p < paths; ++p) {
    for (std::size_t n = 0; n < adj.grid.nodes(); ++n) {
      out << p << ',' << adj.grid.t(n);
      const auto y = adj.y_at(p, n);
      for (Eigen::Index i = 0; i < y.size(); ++i) out << ',' << y(i);
      const auto z = adj.z_at(p, n);
      for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) out << ',' << z(i, j);
      out << '\n';
    }
  }
}

}  // namespace smpf
