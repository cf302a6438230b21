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

// Cost functional J(u) = E[ int_0^T f(t, x, u) dt + Phi(x(T)) ] and the
// control problem bundle (field, drift, cost, x0, grid).

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "smpf/forward_sde.hpp"
#include "smpf/martingale_field.hpp"
#include "smpf/registry.hpp"
#include "smpf/types.hpp"

namespace smpf {

class CostSpec {
 public:
  CostSpec(std::size_t state_dim, std::size_t control_dim)
      : state_dim_(state_dim), control_dim_(control_dim) {}
  virtual ~CostSpec() = default;

  virtual double running(double t, ConstVecRef x, ConstVecRef u) const = 0;
  virtual void running_grad_x(double t, ConstVecRef x, ConstVecRef u,
                              VecRef out) const = 0;
  virtual void running_grad_u(double t, ConstVecRef x, ConstVecRef u,
                              VecRef out) const = 0;
  virtual double terminal(ConstVecRef x) const = 0;
  virtual void terminal_grad(ConstVecRef x, VecRef out) const = 0;

  std::size_t state_dim() const { return state_dim_; }
  std::size_t control_dim() const { return control_dim_; }

 private:
  std::size_t state_dim_;
  std::size_t control_dim_;
};

/// f = 1/2 (x^T Q x + u^T R u), Phi = 1/2 x^T G x.
class QuadraticCost final : public CostSpec {
 public:
  QuadraticCost(MatrixSchedule Q, MatrixSchedule R, Mat G);

  double running(double t, ConstVecRef x, ConstVecRef u) const override;
  void running_grad_x(double t, ConstVecRef x, ConstVecRef u,
                      VecRef out) const override;
  void running_grad_u(double t, ConstVecRef x, ConstVecRef u,
                      VecRef out) const override;
  double terminal(ConstVecRef x) const override;
  void terminal_grad(ConstVecRef x, VecRef out) const override;

  const MatrixSchedule& Q() const { return Q_; }
  const MatrixSchedule& R() const { return R_; }
  const Mat& G() const { return G_; }

 private:
  MatrixSchedule Q_;
  MatrixSchedule R_;
  Mat G_;
};

class FunctionCost final : public CostSpec {
 public:
  using RunningFn = std::function<double(double, ConstVecRef, ConstVecRef)>;
  using RunningGradFn =
      std::function<void(double, ConstVecRef, ConstVecRef, VecRef)>;
  using TerminalFn = std::function<double(ConstVecRef)>;
  using TerminalGradFn = std::function<void(ConstVecRef, VecRef)>;

  FunctionCost(std::size_t state_dim, std::size_t control_dim, RunningFn f,
               RunningGradFn f_x, RunningGradFn f_u, TerminalFn phi,
               TerminalGradFn phi_x);

  double running(double t, ConstVecRef x, ConstVecRef u) const override {
    return f_(t, x, u);
  }
  void running_grad_x(double t, ConstVecRef x, ConstVecRef u,
                      VecRef out) const override {
    f_x_(t, x, u, out);
  }
  void running_grad_u(double t, ConstVecRef x, ConstVecRef u,
                      VecRef out) const override {
    f_u_(t, x, u, out);
  }
  double terminal(ConstVecRef x) const override { return phi_(x); }
  void terminal_grad(ConstVecRef x, VecRef out) const override {
    phi_x_(x, out);
  }

 private:
  RunningFn f_;
  RunningGradFn f_x_;
  RunningGradFn f_u_;
  TerminalFn phi_;
  TerminalGradFn phi_x_;
};

/// Registered costs ("zero", "quadratic", "quartic").
Library<std::shared_ptr<const CostSpec>>& cost_library();

/// Worst mixed relative error |analytic - fd| / (1 + |fd|) of f_x, f_u and
/// Phi_x against central differences on the sampled box.
double cost_gradient_error(const CostSpec& cost, const FieldSampleBox& box);

struct Problem {
  std::shared_ptr<const MartingaleField> field;
  std::shared_ptr<const Drift> drift;
  std::shared_ptr<const CostSpec> cost;
  Vec x0;
  TimeGrid grid{1.0, 1};
  /// User declaration that H is convex in (x, u) and Phi is convex.
  bool convex = false;

  std::size_t state_dim() const { return field->state_dim(); }
  std::size_t control_dim() const { return field->control_dim(); }
  /// Throws InputError when the components disagree in dimension.
  void validate() const;
};

/// Per-path discrete cost sum_{n<N} f(t_n, x_n, u_n) dt + Phi(x_N).
std::vector<double> path_costs(const Problem& problem, const PathBundle& bundle);

Estimate expected_cost(const Problem& problem, const PathBundle& bundle);

}  // namespace smpf
