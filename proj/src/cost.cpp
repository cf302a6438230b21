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

#include "smpf/cost.hpp"

#include <algorithm>
#include <cmath>

#include "smpf/errors.hpp"
#include "smpf/rng.hpp"

namespace smpf {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

}  // namespace

QuadraticCost::QuadraticCost(MatrixSchedule Q, MatrixSchedule R, Mat G)
    : CostSpec(static_cast<std::size_t>(Q.rows()),
               static_cast<std::size_t>(R.rows())),
      Q_(std::move(Q)),
      R_(std::move(R)),
      G_(std::move(G)) {
  if (Q_.empty() || R_.empty()) throw InputError("quadratic cost needs Q and R");
  if (Q_.rows() != Q_.cols() || R_.rows() != R_.cols())
    throw InputError("quadratic cost Q and R must be square");
  if (G_.rows() != Q_.rows() || G_.cols() != Q_.rows())
    throw InputError("quadratic cost G must match Q in shape");
}

namespace {

// v^T S v without temporaries.
double quadratic_form(const Mat& S, ConstVecRef v) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < S.cols(); ++j) acc += v(j) * S.col(j).dot(v);
  return acc;
}

}  // namespace

double QuadraticCost::running(double t, ConstVecRef x, ConstVecRef u) const {
  return 0.5 * (quadratic_form(Q_.at(t), x) + quadratic_form(R_.at(t), u));
}

void QuadraticCost::running_grad_x(double t, ConstVecRef x, ConstVecRef,
                                   VecRef out) const {
  const Mat& Q = Q_.at(t);
  kernel::gemv(Q, x.data(), out.data(), false);
  kernel::gemv_t(Q, x.data(), out.data(), true);
  out *= 0.5;
}

void QuadraticCost::running_grad_u(double t, ConstVecRef, ConstVecRef u,
                                   VecRef out) const {
  const Mat& R = R_.at(t);
  kernel::gemv(R, u.data(), out.data(), false);
  kernel::gemv_t(R, u.data(), out.data(), true);
  out *= 0.5;
}

double QuadraticCost::terminal(ConstVecRef x) const {
  return 0.5 * quadratic_form(G_, x);
}

void QuadraticCost::terminal_grad(ConstVecRef x, VecRef out) const {
  kernel::gemv(G_, x.data(), out.data(), false);
  kernel::gemv_t(G_, x.data(), out.data(), true);
  out *= 0.5;
}

FunctionCost::FunctionCost(std::size_t state_dim, std::size_t control_dim,
                           RunningFn f, RunningGradFn f_x, RunningGradFn f_u,
                           TerminalFn phi, TerminalGradFn phi_x)
    : CostSpec(state_dim, control_dim),
      f_(std::move(f)),
      f_x_(std::move(f_x)),
      f_u_(std::move(f_u)),
      phi_(std::move(phi)),
      phi_x_(std::move(phi_x)) {
  if (!f_ || !f_x_ || !f_u_ || !phi_ || !phi_x_)
    throw InputError("function cost needs f, f_x, f_u, Phi and Phi_x");
}

namespace {

void populate_cost_library(Library<std::shared_ptr<const CostSpec>>& lib) {
  lib.add("zero", "f = 0, Phi = 0",
          [](const ParamBlock& p, std::size_t d, std::size_t k)
              -> std::shared_ptr<const CostSpec> {
            p.require_only({}, "cost 'zero'");
            return std::make_shared<QuadraticCost>(
                MatrixSchedule(Mat::Zero(idx(d), idx(d))),
                MatrixSchedule(Mat::Zero(idx(k), idx(k))), Mat::Zero(idx(d), idx(d)));
          });
  lib.add("quadratic", "f = (x'Qx + u'Ru)/2, Phi = x'Gx/2",
          [](const ParamBlock& p, std::size_t d, std::size_t k)
              -> std::shared_ptr<const CostSpec> {
            p.require_only({"Q", "R", "G"}, "cost 'quadratic'");
            auto c = std::make_shared<QuadraticCost>(
                MatrixSchedule(p.matrix_or("Q", Mat::Zero(idx(d), idx(d)))),
                MatrixSchedule(p.matrix_or("R", Mat::Zero(idx(k), idx(k)))),
                p.matrix_or("G", Mat::Zero(idx(d), idx(d))));
            if (c->state_dim() != d || c->control_dim() != k)
              throw InputError("cost 'quadratic' has the wrong dimensions");
            return c;
          });
  lib.add("quartic", "scalar f = (q x^2 + r u^2)/2 + a x^4/4, Phi = g x^2/2",
          [](const ParamBlock& p, std::size_t d, std::size_t k)
              -> std::shared_ptr<const CostSpec> {
            p.require_only({"q", "r", "a", "g"}, "cost 'quartic'");
            if (d != 1 || k != 1)
              throw InputError("cost 'quartic' is scalar (state_dim = control_dim = 1)");
            const double q = p.scalar_or("q", 1.0);
            const double r = p.scalar_or("r", 1.0);
            const double a = p.scalar_or("a", 1.0);
            const double g = p.scalar_or("g", 1.0);
            return std::make_shared<FunctionCost>(
                1, 1,
                [=](double, ConstVecRef x, ConstVecRef u) {
                  const double x2 = x(0) * x(0);
                  return 0.5 * (q * x2 + r * u(0) * u(0)) + 0.25 * a * x2 * x2;
                },
                [=](double, ConstVecRef x, ConstVecRef, VecRef o) {
                  o(0) = q * x(0) + a * x(0) * x(0) * x(0);
                },
                [=](double, ConstVecRef, ConstVecRef u, VecRef o) { o(0) = r * u(0); },
                [=](ConstVecRef x) { return 0.5 * g * x(0) * x(0); },
                [=](ConstVecRef x, VecRef o) { o(0) = g * x(0); });
          });
}

double mixed_rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace

Library<std::shared_ptr<const CostSpec>>& cost_library() {
  static Library<std::shared_ptr<const CostSpec>>& lib = *[] {
    auto* l = new Library<std::shared_ptr<const CostSpec>>();
    populate_cost_library(*l);
    return l;
  }();
  return lib;
}

double cost_gradient_error(const CostSpec& cost, const FieldSampleBox& box) {
  const auto d = idx(cost.state_dim());
  const auto k = idx(cost.control_dim());
  NormalStream rng(box.seed, 11);
  auto point = [&](Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
      v(i) = box.radius * (2.0 * rng.next_uniform() - 1.0);
    return v;
  };
  double worst = 0.0;
  Vec gx(d), gu(k), gphi(d);
  for (std::size_t i = 0; i < box.samples; ++i) {
    const Vec x = point(d), u = point(k);
    cost.running_grad_x(box.t, x, u, gx);
    cost.running_grad_u(box.t, x, u, gu);
    cost.terminal_grad(x, gphi);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double h = 1e-5 * (1.0 + std::abs(x(j)));
      Vec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const double fd_f =
          (cost.running(box.t, xp, u) - cost.running(box.t, xm, u)) / (2.0 * h);
      const double fd_phi = (cost.terminal(xp) - cost.terminal(xm)) / (2.0 * h);
      worst = std::max({worst, mixed_rel(gx(j), fd_f), mixed_rel(gphi(j), fd_phi)});
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      const double h = 1e-5 * (1.0 + std::abs(u(j)));
      Vec up = u, um = u;
      up(j) += h;
      um(j) -= h;
      const double fd =
          (cost.running(box.t, x, up) - cost.running(box.t, x, um)) / (2.0 * h);
      worst = std::max(worst, mixed_rel(gu(j), fd));
    }
  }
  return worst;
}

void Problem::validate() const {
  if (!field || !drift || !cost)
    throw InputError("problem needs a field, a drift and a cost");
  const std::size_t d = field->state_dim();
  const std::size_t k = field->control_dim();
  if (drift->state_dim() != d || drift->control_dim() != k)
    throw InputError("drift dimensions (" + std::to_string(drift->state_dim()) +
                     "," + std::to_string(drift->control_dim()) +
                     ") disagree with the field (" + std::to_string(d) + "," +
                     std::to_string(k) + ")");
  if (cost->state_dim() != d || cost->control_dim() != k)
    throw InputError("cost dimensions disagree with the field");
  if (static_cast<std::size_t>(x0.size()) != d)
    throw InputError("x0 has dimension " + std::to_string(x0.size()) +
                     ", expected " + std::to_string(d));
  if (!x0.allFinite()) throw InputError("x0 must be finite");
}

std::vector<double> path_costs(const Problem& problem, const PathBundle& bundle) {
  if (bundle.state_dim != problem.state_dim() ||
      bundle.control_dim != problem.control_dim())
    throw InputError("bundle does not match the problem dimensions");
  const CostSpec& c = *problem.cost;
  const std::size_t N = bundle.grid.n_steps();
  const double dt = bundle.grid.dt();
  std::vector<double> out(bundle.n_paths);
  std::vector<double> terms(N);
  for (std::size_t p = 0; p < bundle.n_paths; ++p) {
    for (std::size_t n = 0; n < N; ++n)
      terms[n] = c.running(bundle.grid.t(n), bundle.state(p, n), bundle.control(p, n));
    out[p] = pairwise_sum(terms) * dt + c.terminal(bundle.state(p, N));
  }
  return out;
}

Estimate expected_cost(const Problem& problem, const PathBundle& bundle) {
  return estimate(path_costs(problem, bundle));
}

}  // namespace smpf
