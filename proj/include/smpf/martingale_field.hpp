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

// Martingale fields with spatial parameters, represented through a finite
// factor decomposition
//
//   M(t, x, u) = sum_k  int_0^t sigma_k(s, x, u) dW^k_s ,
//
// so that the local characteristic (the density of the joint quadratic
// covariation of M(., x, u) and M(., y, v)) is
//
//   q(t, x, u, y, v) = sum_k sigma_k(t, x, u) sigma_k(t, y, v)^T .
//
// q is never stored; every query recomputes it from the factors, which makes
// transpose symmetry and diagonal positive semidefiniteness hold by
// construction.
//
// Gradient convention: all gradients are column vectors. The trace form that
// enters the adjoint driver and the control gradient of the Hamiltonian is
//
//   trace_form_grad_x(z) = sum_k (d sigma_k / dx)^T z sigma_k ,
//
// i.e. the derivative of x' -> tr[z q(t, x, u, x', u')] at x' = x (equivalently
// the derivative of tr[z q^T(t, x', u', x, u)] in its first slot). This is the
// contraction that matches d<int z dM, int d_x M(ds) xhat> and therefore the
// one under which the duality identity holds for d > 1.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "smpf/registry.hpp"
#include "smpf/types.hpp"

namespace smpf {

/// One column sigma_k of the diffusion, with its Jacobians.
class SigmaFactor {
 public:
  SigmaFactor(std::size_t state_dim, std::size_t control_dim)
      : state_dim_(state_dim), control_dim_(control_dim) {}
  virtual ~SigmaFactor() = default;

  virtual void eval(double t, ConstVecRef x, ConstVecRef u,
                    VecRef out) const = 0;
  /// d x d Jacobian d sigma / dx.
  virtual void grad_x(double t, ConstVecRef x, ConstVecRef u,
                      MatRef out) const = 0;
  /// d x k Jacobian d sigma / du.
  virtual void grad_u(double t, ConstVecRef x, ConstVecRef u,
                      MatRef out) const = 0;

  /// False for factors whose Jacobians come from finite differences.
  virtual bool analytic_gradients() const { return true; }
  virtual std::string describe() const = 0;

  std::size_t state_dim() const { return state_dim_; }
  std::size_t control_dim() const { return control_dim_; }

 private:
  std::size_t state_dim_;
  std::size_t control_dim_;
};

/// sigma(t, x, u) = C(t) x + D(t) u + e(t).
class LinearFactor final : public SigmaFactor {
 public:
  LinearFactor(MatrixSchedule C, MatrixSchedule D, MatrixSchedule e = {});

  void eval(double t, ConstVecRef x, ConstVecRef u, VecRef out) const override;
  void grad_x(double t, ConstVecRef x, ConstVecRef u,
              MatRef out) const override;
  void grad_u(double t, ConstVecRef x, ConstVecRef u,
              MatRef out) const override;
  std::string describe() const override { return "linear"; }

  const MatrixSchedule& C() const { return C_; }
  const MatrixSchedule& D() const { return D_; }

 private:
  MatrixSchedule C_;
  MatrixSchedule D_;
  MatrixSchedule e_;
};

/// Factor built from user callables with analytic Jacobians.
class FunctionFactor final : public SigmaFactor {
 public:
  using EvalFn = std::function<void(double, ConstVecRef, ConstVecRef, VecRef)>;
  using JacFn = std::function<void(double, ConstVecRef, ConstVecRef, MatRef)>;

  FunctionFactor(std::size_t state_dim, std::size_t control_dim, EvalFn eval,
                 JacFn grad_x, JacFn grad_u, std::string label = "function");

  void eval(double t, ConstVecRef x, ConstVecRef u, VecRef out) const override {
    eval_(t, x, u, out);
  }
  void grad_x(double t, ConstVecRef x, ConstVecRef u,
              MatRef out) const override {
    grad_x_(t, x, u, out);
  }
  void grad_u(double t, ConstVecRef x, ConstVecRef u,
              MatRef out) const override {
    grad_u_(t, x, u, out);
  }
  std::string describe() const override { return label_; }

 private:
  EvalFn eval_;
  JacFn grad_x_;
  JacFn grad_u_;
  std::string label_;
};

/// Fallback for factors without analytic Jacobians: central differences with
/// step h * (1 + |coordinate|). Reports flag fields that contain one.
class FiniteDifferenceFactor final : public SigmaFactor {
 public:
  FiniteDifferenceFactor(std::size_t state_dim, std::size_t control_dim,
                         FunctionFactor::EvalFn eval, double h = 1e-6,
                         std::string label = "finite-difference");

  void eval(double t, ConstVecRef x, ConstVecRef u, VecRef out) const override {
    eval_(t, x, u, out);
  }
  void grad_x(double t, ConstVecRef x, ConstVecRef u,
              MatRef out) const override;
  void grad_u(double t, ConstVecRef x, ConstVecRef u,
              MatRef out) const override;
  bool analytic_gradients() const override { return false; }
  std::string describe() const override { return label_; }

 private:
  FunctionFactor::EvalFn eval_;
  double h_;
  std::string label_;
};

class MartingaleField;

/// Scratch space for the allocation-free hot-path methods.
struct FieldWorkspace {
  explicit FieldWorkspace(const MartingaleField& field);

  Vec s;
  Vec s_other;
  Mat gx;
  Mat gu;
  Vec zs;
};

class MartingaleField {
 public:
  MartingaleField(std::size_t state_dim, std::size_t control_dim,
                  std::vector<std::shared_ptr<const SigmaFactor>> factors);

  /// Single identically-zero factor.
  static MartingaleField zero(std::size_t state_dim, std::size_t control_dim);

  std::size_t state_dim() const { return state_dim_; }
  std::size_t control_dim() const { return control_dim_; }
  std::size_t brownian_dim() const { return factors_.size(); }
  const SigmaFactor& factor(std::size_t k) const { return *factors_[k]; }
  /// True when any factor relies on finite-difference Jacobians.
  bool has_fd_factors() const;

  // Checked API. Dimension mismatches throw InputError.

  /// d x m matrix [sigma_1 ... sigma_m].
  Mat sigma_matrix(double t, const Vec& x, const Vec& u) const;
  Mat local_characteristic(double t, const Vec& x, const Vec& u, const Vec& y,
                           const Vec& v) const;
  Vec increment(double t, const Vec& x, const Vec& u, const Vec& dW) const;
  Vec trace_form_grad_x(const Mat& z, double t, const Vec& x,
                        const Vec& u) const;
  Vec trace_form_grad_u(const Mat& z, double t, const Vec& x,
                        const Vec& u) const;
  /// tr[z q(t, xbar, ubar, x, u)] = sum_k sigma_k(x, u)^T z sigma_k(xbar, ubar).
  /// Its gradient in (x, u) at the anchor is trace_form_grad_x/u.
  double trace_form(const Mat& z, double t, const Vec& xbar, const Vec& ubar,
                    const Vec& x, const Vec& u) const;
  /// tr[A (q^T(x,u,y,v) - q^T(x,u,x,u))] minus its first-order expansion in
  /// (y, v) around (x, u). Zero for fields that are linear in (x, u).
  double condition_q_residual(double t, const Vec& x, const Vec& u,
                              const Vec& y, const Vec& v, const Mat& A) const;

  // Unchecked hot-path variants; callers validate dimensions once up front.

  void sigma_into(double t, ConstVecRef x, ConstVecRef u, MatRef out,
                  FieldWorkspace& ws) const;
  void increment_into(double t, ConstVecRef x, ConstVecRef u,
                      const double* dW, VecRef out, FieldWorkspace& ws) const;
  /// sum_k (d_x sigma_k xhat + d_u sigma_k du) dW_k, Jacobians at (x, u).
  void variational_increment_into(double t, ConstVecRef x, ConstVecRef u,
                                  ConstVecRef xhat, ConstVecRef du,
                                  const double* dW, VecRef out,
                                  FieldWorkspace& ws) const;
  void trace_form_grad_x_into(ConstMatRef z, double t, ConstVecRef x,
                              ConstVecRef u, VecRef out,
                              FieldWorkspace& ws) const;
  void trace_form_grad_u_into(ConstMatRef z, double t, ConstVecRef x,
                              ConstVecRef u, VecRef out,
                              FieldWorkspace& ws) const;
  /// Same contractions given the products z sigma_k as columns of zs (d x m).
  void contracted_grad_x_into(ConstMatRef zs, double t, ConstVecRef x,
                              ConstVecRef u, VecRef out,
                              FieldWorkspace& ws) const;
  void contracted_grad_u_into(ConstMatRef zs, double t, ConstVecRef x,
                              ConstVecRef u, VecRef out,
                              FieldWorkspace& ws) const;

 private:
  void check_point(const Vec& x, const Vec& u) const;

  std::size_t state_dim_;
  std::size_t control_dim_;
  std::vector<std::shared_ptr<const SigmaFactor>> factors_;
};

/// Registered factor libraries ("zero", "constant", "linear", "bilinear",
/// "scalar-gbm", "quadratic").
Library<MartingaleField>& field_library();

// Empirical diagnostics on sampled points.

struct FieldSampleBox {
  double t = 0.0;
  double radius = 2.0;
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
};

/// Worst mixed relative error |analytic - fd| / (1 + |fd|) between factor
/// Jacobians and central differences with step 1e-5 (1 + |coordinate|).
double factor_gradient_error(const MartingaleField& field,
                             const FieldSampleBox& box);

/// Worst mixed relative error between trace_form_grad_x/u and central
/// differences of x' -> tr[z q(t, x, u, x', u')] for random z.
double trace_form_gradient_error(const MartingaleField& field,
                                 const FieldSampleBox& box);

struct SymmetryReport {
  double max_transpose_asymmetry = 0.0;  // |q(x,y) - q(y,x)^T|_max
  double min_diagonal_eigenvalue = 0.0;  // over q(x,u,x,u)
};
SymmetryReport characteristic_symmetry(const MartingaleField& field,
                                       const FieldSampleBox& box);

/// Largest ratio |q(x,x) - 2 q(x,y) + q(y,y)| / (|x-y|^2 + |u-v|^2) seen on
/// the sampled box. Finite values are what the forward-error bound needs.
double polarization_constant(const MartingaleField& field,
                             const FieldSampleBox& box);

}  // namespace smpf
