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

#include "smpf/martingale_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smpf/errors.hpp"
#include "smpf/rng.hpp"

namespace smpf {

namespace {

std::string dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

LinearFactor::LinearFactor(MatrixSchedule C, MatrixSchedule D, MatrixSchedule e)
    : SigmaFactor(static_cast<std::size_t>(C.rows()),
                  static_cast<std::size_t>(D.cols())),
      C_(std::move(C)),
      D_(std::move(D)),
      e_(std::move(e)) {
  if (C_.empty() || D_.empty())
    throw InputError("linear factor needs C and D coefficients");
  if (C_.rows() != C_.cols())
    throw InputError("linear factor C must be square, got " +
                     dims(C_.rows(), C_.cols()));
  if (D_.rows() != C_.rows())
    throw InputError("linear factor D must have " + std::to_string(C_.rows()) +
                     " rows, got " + dims(D_.rows(), D_.cols()));
  if (!e_.empty() && (e_.rows() != C_.rows() || e_.cols() != 1))
    throw InputError("linear factor offset must be a column of length " +
                     std::to_string(C_.rows()));
}

void LinearFactor::eval(double t, ConstVecRef x, ConstVecRef u,
                        VecRef out) const {
  kernel::gemv(C_.at(t), x.data(), out.data(), false);
  kernel::gemv(D_.at(t), u.data(), out.data(), true);
  if (!e_.empty()) {
    const Mat& e = e_.at(t);
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += e(i, 0);
  }
}

void LinearFactor::grad_x(double t, ConstVecRef, ConstVecRef,
                          MatRef out) const {
  kernel::copy(C_.at(t), out.data(), out.outerStride());
}

void LinearFactor::grad_u(double t, ConstVecRef, ConstVecRef,
                          MatRef out) const {
  kernel::copy(D_.at(t), out.data(), out.outerStride());
}

FunctionFactor::FunctionFactor(std::size_t state_dim, std::size_t control_dim,
                               EvalFn eval, JacFn grad_x, JacFn grad_u,
                               std::string label)
    : SigmaFactor(state_dim, control_dim),
      eval_(std::move(eval)),
      grad_x_(std::move(grad_x)),
      grad_u_(std::move(grad_u)),
      label_(std::move(label)) {
  if (!eval_ || !grad_x_ || !grad_u_)
    throw InputError("function factor needs eval, grad_x and grad_u");
}

FiniteDifferenceFactor::FiniteDifferenceFactor(std::size_t state_dim,
                                               std::size_t control_dim,
                                               FunctionFactor::EvalFn eval,
                                               double h, std::string label)
    : SigmaFactor(state_dim, control_dim),
      eval_(std::move(eval)),
      h_(h),
      label_(std::move(label)) {
  if (!eval_) throw InputError("finite-difference factor needs eval");
  if (!(h_ > 0.0)) throw InputError("finite-difference step must be positive");
}

void FiniteDifferenceFactor::grad_x(double t, ConstVecRef x, ConstVecRef u,
                                    MatRef out) const {
  const auto d = static_cast<Eigen::Index>(state_dim());
  Vec xp = x, xm = x, fp(d), fm(d);
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h_ * (1.0 + std::abs(x(j)));
    xp(j) = x(j) + step;
    xm(j) = x(j) - step;
    eval_(t, xp, u, fp);
    eval_(t, xm, u, fm);
    out.col(j) = (fp - fm) / (2.0 * step);
    xp(j) = xm(j) = x(j);
  }
}

void FiniteDifferenceFactor::grad_u(double t, ConstVecRef x, ConstVecRef u,
                                    MatRef out) const {
  const auto d = static_cast<Eigen::Index>(state_dim());
  Vec up = u, um = u, fp(d), fm(d);
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double step = h_ * (1.0 + std::abs(u(j)));
    up(j) = u(j) + step;
    um(j) = u(j) - step;
    eval_(t, x, up, fp);
    eval_(t, x, um, fm);
    out.col(j) = (fp - fm) / (2.0 * step);
    up(j) = um(j) = u(j);
  }
}

FieldWorkspace::FieldWorkspace(const MartingaleField& field) {
  const auto d = static_cast<Eigen::Index>(field.state_dim());
  const auto k = static_cast<Eigen::Index>(field.control_dim());
  s.resize(d);
  s_other.resize(d);
  gx.resize(d, d);
  gu.resize(d, k);
  zs.resize(d);
}

MartingaleField::MartingaleField(
    std::size_t state_dim, std::size_t control_dim,
    std::vector<std::shared_ptr<const SigmaFactor>> factors)
    : state_dim_(state_dim),
      control_dim_(control_dim),
      factors_(std::move(factors)) {
  if (state_dim_ == 0) throw InputError("martingale field needs state_dim >= 1");
  if (factors_.empty())
    throw InputError("martingale field needs at least one factor");
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    if (!factors_[k]) throw InputError("null factor " + std::to_string(k));
    if (factors_[k]->state_dim() != state_dim_ ||
        factors_[k]->control_dim() != control_dim_)
      throw InputError("factor " + std::to_string(k) + " maps (" +
                       std::to_string(factors_[k]->state_dim()) + "," +
                       std::to_string(factors_[k]->control_dim()) +
                       ") but the field is (" + std::to_string(state_dim_) +
                       "," + std::to_string(control_dim_) + ")");
  }
}

MartingaleField MartingaleField::zero(std::size_t state_dim,
                                      std::size_t control_dim) {
  const auto d = static_cast<Eigen::Index>(state_dim);
  const auto k = static_cast<Eigen::Index>(control_dim);
  return MartingaleField(
      state_dim, control_dim,
      {std::make_shared<LinearFactor>(MatrixSchedule(Mat::Zero(d, d)),
                                      MatrixSchedule(Mat::Zero(d, k)))});
}

bool MartingaleField::has_fd_factors() const {
  return std::any_of(factors_.begin(), factors_.end(),
                     [](const auto& f) { return !f->analytic_gradients(); });
}

void MartingaleField::check_point(const Vec& x, const Vec& u) const {
  if (static_cast<std::size_t>(x.size()) != state_dim_)
    throw InputError("state has dimension " + std::to_string(x.size()) +
                     ", field expects " + std::to_string(state_dim_));
  if (static_cast<std::size_t>(u.size()) != control_dim_)
    throw InputError("control has dimension " + std::to_string(u.size()) +
                     ", field expects " + std::to_string(control_dim_));
}

Mat MartingaleField::sigma_matrix(double t, const Vec& x, const Vec& u) const {
  check_point(x, u);
  FieldWorkspace ws(*this);
  Mat out(static_cast<Eigen::Index>(state_dim_),
          static_cast<Eigen::Index>(brownian_dim()));
  sigma_into(t, x, u, out, ws);
  return out;
}

Mat MartingaleField::local_characteristic(double t, const Vec& x, const Vec& u,
                                          const Vec& y, const Vec& v) const {
  check_point(x, u);
  check_point(y, v);
  const auto d = static_cast<Eigen::Index>(state_dim_);
  Mat q = Mat::Zero(d, d);
  Vec sx(d), sy(d);
  for (const auto& f : factors_) {
    f->eval(t, x, u, sx);
    f->eval(t, y, v, sy);
    q.noalias() += sx * sy.transpose();
  }
  return q;
}

Vec MartingaleField::increment(double t, const Vec& x, const Vec& u,
                               const Vec& dW) const {
  check_point(x, u);
  if (static_cast<std::size_t>(dW.size()) != brownian_dim())
    throw InputError("Brownian increment has dimension " +
                     std::to_string(dW.size()) + ", field has " +
                     std::to_string(brownian_dim()) + " factors");
  FieldWorkspace ws(*this);
  Vec out(static_cast<Eigen::Index>(state_dim_));
  increment_into(t, x, u, dW.data(), out, ws);
  return out;
}

Vec MartingaleField::trace_form_grad_x(const Mat& z, double t, const Vec& x,
                                       const Vec& u) const {
  check_point(x, u);
  const auto d = static_cast<Eigen::Index>(state_dim_);
  if (z.rows() != d || z.cols() != d)
    throw InputError("z must be " + dims(d, d) + ", got " +
                     dims(z.rows(), z.cols()));
  FieldWorkspace ws(*this);
  Vec out(d);
  trace_form_grad_x_into(z, t, x, u, out, ws);
  return out;
}

Vec MartingaleField::trace_form_grad_u(const Mat& z, double t, const Vec& x,
                                       const Vec& u) const {
  check_point(x, u);
  const auto d = static_cast<Eigen::Index>(state_dim_);
  if (z.rows() != d || z.cols() != d)
    throw InputError("z must be " + dims(d, d) + ", got " +
                     dims(z.rows(), z.cols()));
  FieldWorkspace ws(*this);
  Vec out(static_cast<Eigen::Index>(control_dim_));
  trace_form_grad_u_into(z, t, x, u, out, ws);
  return out;
}

double MartingaleField::trace_form(const Mat& z, double t, const Vec& xbar,
                                   const Vec& ubar, const Vec& x,
                                   const Vec& u) const {
  check_point(xbar, ubar);
  check_point(x, u);
  const auto d = static_cast<Eigen::Index>(state_dim_);
  if (z.rows() != d || z.cols() != d)
    throw InputError("z must be " + dims(d, d));
  Vec sa(d), sb(d);
  double acc = 0.0;
  for (const auto& f : factors_) {
    f->eval(t, xbar, ubar, sa);
    f->eval(t, x, u, sb);
    acc += sb.dot(z * sa);
  }
  return acc;
}

double MartingaleField::condition_q_residual(double t, const Vec& x,
                                             const Vec& u, const Vec& y,
                                             const Vec& v, const Mat& A) const {
  check_point(x, u);
  check_point(y, v);
  const auto d = static_cast<Eigen::Index>(state_dim_);
  if (A.rows() != d || A.cols() != d)
    throw InputError("A must be " + dims(d, d));
  // q^T(x,u,y,v) = sum_k sigma_k(y,v) sigma_k(x,u)^T, so
  // tr[A q^T(x,u,y,v)] = sum_k sigma_k(x,u)^T A sigma_k(y,v).
  const Mat qt_xy = local_characteristic(t, y, v, x, u);
  const Mat qt_xx = local_characteristic(t, x, u, x, u);
  const double lhs = (A * (qt_xy - qt_xx)).trace();
  // First-order expansion in (y, v): gradients of the trace form with A^T.
  const Mat At = A.transpose();
  const Vec gx = trace_form_grad_x(At, t, x, u);
  const Vec gu = trace_form_grad_u(At, t, x, u);
  return lhs - gx.dot(y - x) - gu.dot(v - u);
}

void MartingaleField::sigma_into(double t, ConstVecRef x, ConstVecRef u,
                                 MatRef out, FieldWorkspace& ws) const {
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    factors_[k]->eval(t, x, u, ws.s);
    double* col = out.data() + static_cast<Eigen::Index>(k) * out.outerStride();
    for (Eigen::Index i = 0; i < ws.s.size(); ++i) col[i] = ws.s(i);
  }
}

void MartingaleField::increment_into(double t, ConstVecRef x, ConstVecRef u,
                                     const double* dW, VecRef out,
                                     FieldWorkspace& ws) const {
  // Every sum below assigns on its first term; zeroing first would cost a
  // memset call per path and step.
  if (factors_.empty()) return out.setZero(), void();
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    factors_[k]->eval(t, x, u, ws.s);
    const double w = dW[k];
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out(i) = (k == 0 ? 0.0 : out(i)) + w * ws.s(i);
  }
}

void MartingaleField::variational_increment_into(
    double t, ConstVecRef x, ConstVecRef u, ConstVecRef xhat, ConstVecRef du,
    const double* dW, VecRef out, FieldWorkspace& ws) const {
  if (factors_.empty()) return out.setZero(), void();
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    factors_[k]->grad_x(t, x, u, ws.gx);
    factors_[k]->grad_u(t, x, u, ws.gu);
    kernel::gemv(ws.gx, xhat.data(), ws.s.data(), false);
    kernel::gemv(ws.gu, du.data(), ws.s.data(), true);
    const double w = dW[k];
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out(i) = (k == 0 ? 0.0 : out(i)) + w * ws.s(i);
  }
}

void MartingaleField::trace_form_grad_x_into(ConstMatRef z, double t,
                                             ConstVecRef x, ConstVecRef u,
                                             VecRef out,
                                             FieldWorkspace& ws) const {
  if (factors_.empty()) return out.setZero(), void();
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    factors_[k]->eval(t, x, u, ws.s);
    factors_[k]->grad_x(t, x, u, ws.gx);
    kernel::gemv(z.data(), z.rows(), z.cols(), z.outerStride(), ws.s.data(),
                 ws.zs.data(), false);
    kernel::gemv_t(ws.gx, ws.zs.data(), out.data(), k > 0);
  }
}

void MartingaleField::trace_form_grad_u_into(ConstMatRef z, double t,
                                             ConstVecRef x, ConstVecRef u,
                                             VecRef out,
                                             FieldWorkspace& ws) const {
  if (factors_.empty()) return out.setZero(), void();
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    factors_[k]->eval(t, x, u, ws.s);
    factors_[k]->grad_u(t, x, u, ws.gu);
    kernel::gemv(z.data(), z.rows(), z.cols(), z.outerStride(), ws.s.data(),
                 ws.zs.data(), false);
    kernel::gemv_t(ws.gu, ws.zs.data(), out.data(), k > 0);
  }
}

void MartingaleField::contracted_grad_x_into(ConstMatRef zs, double t,
                                             ConstVecRef x, ConstVecRef u,
                                             VecRef out,
                                             FieldWorkspace& ws) const {
  if (factors_.empty()) return out.setZero(), void();
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    factors_[k]->grad_x(t, x, u, ws.gx);
    kernel::gemv_t(ws.gx, zs.data() + static_cast<Eigen::Index>(k) * zs.outerStride(),
                   out.data(), k > 0);
  }
}

void MartingaleField::contracted_grad_u_into(ConstMatRef zs, double t,
                                             ConstVecRef x, ConstVecRef u,
                                             VecRef out,
                                             FieldWorkspace& ws) const {
  if (factors_.empty()) return out.setZero(), void();
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    factors_[k]->grad_u(t, x, u, ws.gu);
    kernel::gemv_t(ws.gu, zs.data() + static_cast<Eigen::Index>(k) * zs.outerStride(),
                   out.data(), k > 0);
  }
}

// ---------------------------------------------------------------------------
// Factor library

namespace {

std::shared_ptr<const SigmaFactor> scalar_factor(
    std::function<double(double, double)> s,
    std::function<double(double, double)> sx,
    std::function<double(double, double)> su, std::string label) {
  return std::make_shared<FunctionFactor>(
      1, 1,
      [s](double, ConstVecRef x, ConstVecRef u, VecRef out) {
        out(0) = s(x(0), u(0));
      },
      [sx](double, ConstVecRef x, ConstVecRef u, MatRef out) {
        out(0, 0) = sx(x(0), u(0));
      },
      [su](double, ConstVecRef x, ConstVecRef u, MatRef out) {
        out(0, 0) = su(x(0), u(0));
      },
      std::move(label));
}

void require_scalar(std::size_t d, std::size_t k, const std::string& name) {
  if (d != 1 || k != 1)
    throw InputError("field '" + name + "' is scalar (state_dim = control_dim = 1)");
}

void populate_field_library(Library<MartingaleField>& lib) {
  lib.add("zero", "identically zero field (one factor)",
          [](const ParamBlock& p, std::size_t d, std::size_t k) {
            p.require_only({}, "field 'zero'");
            return MartingaleField::zero(d, k);
          });
  lib.add("constant", "additive noise: columns of S (d x m) as constant factors",
          [](const ParamBlock& p, std::size_t d, std::size_t k) {
            p.require_only({"S"}, "field 'constant'");
            const Mat& S = p.matrix("S");
            if (static_cast<std::size_t>(S.rows()) != d)
              throw InputError("field 'constant': S must have state_dim rows");
            std::vector<std::shared_ptr<const SigmaFactor>> fs;
            const auto di = static_cast<Eigen::Index>(d);
            const auto ki = static_cast<Eigen::Index>(k);
            for (Eigen::Index j = 0; j < S.cols(); ++j) {
              fs.push_back(std::make_shared<LinearFactor>(
                  MatrixSchedule(Mat::Zero(di, di)),
                  MatrixSchedule(Mat::Zero(di, ki)),
                  MatrixSchedule(Mat(S.col(j)))));
            }
            return MartingaleField(d, k, std::move(fs));
          });
  lib.add("linear", "sigma_j = C_j x + D_j u (+ e_j); list 'factors' of {C, D, e}",
          [](const ParamBlock& p, std::size_t d, std::size_t k) {
            p.require_only({}, "field 'linear'");
            if (p.items.empty())
              throw InputError("field 'linear' needs a non-empty 'factors' list");
            const auto di = static_cast<Eigen::Index>(d);
            const auto ki = static_cast<Eigen::Index>(k);
            std::vector<std::shared_ptr<const SigmaFactor>> fs;
            for (const auto& item : p.items) {
              item.require_only({"C", "D", "e"}, "field 'linear' factor");
              MatrixSchedule e;
              if (item.has("e")) e = MatrixSchedule(Mat(item.vector("e")));
              fs.push_back(std::make_shared<LinearFactor>(
                  MatrixSchedule(item.matrix_or("C", Mat::Zero(di, di))),
                  MatrixSchedule(item.matrix_or("D", Mat::Zero(di, ki))),
                  std::move(e)));
            }
            return MartingaleField(d, k, std::move(fs));
          });
  lib.add("bilinear", "scalar sigma = a x + b u + c x u",
          [](const ParamBlock& p, std::size_t d, std::size_t k) {
            p.require_only({"a", "b", "c"}, "field 'bilinear'");
            require_scalar(d, k, "bilinear");
            const double a = p.scalar_or("a", 1.0);
            const double b = p.scalar_or("b", 1.0);
            const double c = p.scalar_or("c", 0.0);
            return MartingaleField(
                1, 1,
                {scalar_factor(
                    [=](double x, double u) { return a * x + b * u + c * x * u; },
                    [=](double, double u) { return a + c * u; },
                    [=](double x, double) { return b + c * x; }, "bilinear")});
          });
  lib.add("scalar-gbm", "scalar sigma = s x",
          [](const ParamBlock& p, std::size_t d, std::size_t k) {
            p.require_only({"s"}, "field 'scalar-gbm'");
            require_scalar(d, k, "scalar-gbm");
            const double s = p.scalar_or("s", 1.0);
            return MartingaleField(
                1, 1,
                {scalar_factor([=](double x, double) { return s * x; },
                               [=](double, double) { return s; },
                               [](double, double) { return 0.0; },
                               "scalar-gbm")});
          });
  lib.add("quadratic", "scalar sigma = c x^2 (violates the linearity condition)",
          [](const ParamBlock& p, std::size_t d, std::size_t k) {
            p.require_only({"c"}, "field 'quadratic'");
            require_scalar(d, k, "quadratic");
            const double c = p.scalar_or("c", 1.0);
            return MartingaleField(
                1, 1,
                {scalar_factor([=](double x, double) { return c * x * x; },
                               [=](double x, double) { return 2.0 * c * x; },
                               [](double, double) { return 0.0; },
                               "quadratic")});
          });
}

struct Sampler {
  NormalStream rng;
  double radius;

  Vec point(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
      v(i) = radius * (2.0 * rng.next_uniform() - 1.0);
    return v;
  }
};

double mixed_rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace

Library<MartingaleField>& field_library() {
  static Library<MartingaleField>& lib = *[] {
    auto* l = new Library<MartingaleField>();
    populate_field_library(*l);
    return l;
  }();
  return lib;
}

double factor_gradient_error(const MartingaleField& field,
                             const FieldSampleBox& box) {
  const auto d = static_cast<Eigen::Index>(field.state_dim());
  const auto k = static_cast<Eigen::Index>(field.control_dim());
  Sampler s{NormalStream(box.seed, 0), box.radius};
  double worst = 0.0;
  Vec fp(d), fm(d);
  Mat gx(d, d), gu(d, k);
  for (std::size_t i = 0; i < box.samples; ++i) {
    const Vec x = s.point(d), u = s.point(k);
    for (std::size_t f = 0; f < field.brownian_dim(); ++f) {
      const SigmaFactor& fac = field.factor(f);
      fac.grad_x(box.t, x, u, gx);
      fac.grad_u(box.t, x, u, gu);
      for (Eigen::Index j = 0; j < d; ++j) {
        const double h = 1e-5 * (1.0 + std::abs(x(j)));
        Vec xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        fac.eval(box.t, xp, u, fp);
        fac.eval(box.t, xm, u, fm);
        const Vec fd = (fp - fm) / (2.0 * h);
        for (Eigen::Index r = 0; r < d; ++r)
          worst = std::max(worst, mixed_rel(gx(r, j), fd(r)));
      }
      for (Eigen::Index j = 0; j < k; ++j) {
        const double h = 1e-5 * (1.0 + std::abs(u(j)));
        Vec up = u, um = u;
        up(j) += h;
        um(j) -= h;
        fac.eval(box.t, x, up, fp);
        fac.eval(box.t, x, um, fm);
        const Vec fd = (fp - fm) / (2.0 * h);
        for (Eigen::Index r = 0; r < d; ++r)
          worst = std::max(worst, mixed_rel(gu(r, j), fd(r)));
      }
    }
  }
  return worst;
}

double trace_form_gradient_error(const MartingaleField& field,
                                 const FieldSampleBox& box) {
  const auto d = static_cast<Eigen::Index>(field.state_dim());
  const auto k = static_cast<Eigen::Index>(field.control_dim());
  Sampler s{NormalStream(box.seed, 1), box.radius};
  double worst = 0.0;
  for (std::size_t i = 0; i < box.samples; ++i) {
    const Vec x = s.point(d), u = s.point(k);
    Mat z(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) z(r, c) = s.rng.next();
    const Vec gx = field.trace_form_grad_x(z, box.t, x, u);
    const Vec gu = field.trace_form_grad_u(z, box.t, x, u);
    // x' -> tr[z q(t, x, u, x', u')] = trace_form(z, anchor=(x,u), varying).
    for (Eigen::Index j = 0; j < d; ++j) {
      const double h = 1e-5 * (1.0 + std::abs(x(j)));
      Vec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const double fd = (field.trace_form(z, box.t, x, u, xp, u) -
                         field.trace_form(z, box.t, x, u, xm, u)) /
                        (2.0 * h);
      worst = std::max(worst, mixed_rel(gx(j), fd));
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      const double h = 1e-5 * (1.0 + std::abs(u(j)));
      Vec up = u, um = u;
      up(j) += h;
      um(j) -= h;
      const double fd = (field.trace_form(z, box.t, x, u, x, up) -
                         field.trace_form(z, box.t, x, u, x, um)) /
                        (2.0 * h);
      worst = std::max(worst, mixed_rel(gu(j), fd));
    }
  }
  return worst;
}

SymmetryReport characteristic_symmetry(const MartingaleField& field,
                                       const FieldSampleBox& box) {
  const auto d = static_cast<Eigen::Index>(field.state_dim());
  const auto k = static_cast<Eigen::Index>(field.control_dim());
  Sampler s{NormalStream(box.seed, 2), box.radius};
  SymmetryReport rep;
  rep.min_diagonal_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < box.samples; ++i) {
    const Vec x = s.point(d), u = s.point(k), y = s.point(d), v = s.point(k);
    const Mat qxy = field.local_characteristic(box.t, x, u, y, v);
    const Mat qyx = field.local_characteristic(box.t, y, v, x, u);
    rep.max_transpose_asymmetry = std::max(
        rep.max_transpose_asymmetry, (qxy - qyx.transpose()).cwiseAbs().maxCoeff());
    const Mat qxx = field.local_characteristic(box.t, x, u, x, u);
    Eigen::SelfAdjointEigenSolver<Mat> eig(qxx, Eigen::EigenvaluesOnly);
    rep.min_diagonal_eigenvalue =
        std::min(rep.min_diagonal_eigenvalue, eig.eigenvalues().minCoeff());
  }
  return rep;
}

double polarization_constant(const MartingaleField& field,
                             const FieldSampleBox& box) {
  const auto d = static_cast<Eigen::Index>(field.state_dim());
  const auto k = static_cast<Eigen::Index>(field.control_dim());
  Sampler s{NormalStream(box.seed, 3), box.radius};
  double worst = 0.0;
  for (std::size_t i = 0; i < box.samples; ++i) {
    const Vec x = s.point(d), u = s.point(k), y = s.point(d), v = s.point(k);
    const double dist = (x - y).squaredNorm() + (u - v).squaredNorm();
    if (dist < 1e-12) continue;
    const Mat second = field.local_characteristic(box.t, x, u, x, u) -
                       2.0 * field.local_characteristic(box.t, x, u, y, v) +
                       field.local_characteristic(box.t, y, v, y, v);
    worst = std::max(worst, second.norm() / dist);
  }
  return worst;
}

}  // namespace smpf
