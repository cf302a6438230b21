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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>

#include "fixtures.hpp"
#include "smpf/adjoint_solver.hpp"
#include "smpf/errors.hpp"
#include "smpf/lq.hpp"
#include "smpf/max_principle.hpp"

using namespace smpf;
using namespace smpf::testing;

namespace {

struct ScalarModel {
  double A, B, Q, R, G, C, D;
};

// Brute-force dynamic programming for the scalar Euler-discretized problem.
// V_n(x) = min_u [ (Q x^2 + R u^2) dt / 2 + E V_{n+1}(x + (Ax + Bu) dt + (Cx + Du) dW) ]
// with the expectation by 3-point Gauss-Hermite quadrature and the
// minimization by the exact vertex of the parabola through u = -1, 0, 1.
// No quadratic form of V is assumed; the recursion evaluates V pointwise.
class BruteForceDP {
 public:
  BruteForceDP(ScalarModel m, std::size_t n_steps)
      : m_(m), N_(n_steps), dt_(1.0 / static_cast<double>(n_steps)) {}

  double value(std::size_t n, double x) const {
    if (n == N_) return 0.5 * m_.G * x * x;
    return stage(n, x, argmin(n, x));
  }

  double argmin(std::size_t n, double x) const {
    const double cm = stage(n, x, -1.0), c0 = stage(n, x, 0.0), cp = stage(n, x, 1.0);
    const double a = 0.5 * (cp + cm - 2.0 * c0);
    const double b = 0.5 * (cp - cm);
    return -b / (2.0 * a);
  }

 private:
  double stage(std::size_t n, double x, double u) const {
    static const double nodes[3] = {-std::sqrt(3.0), 0.0, std::sqrt(3.0)};
    static const double weights[3] = {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0};
    const double sd = std::sqrt(dt_);
    double ev = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double next = x + (m_.A * x + m_.B * u) * dt_ + (m_.C * x + m_.D * u) * sd * nodes[i];
      ev += weights[i] * value(n + 1, next);
    }
    return 0.5 * (m_.Q * x * x + m_.R * u * u) * dt_ + ev;
  }

  ScalarModel m_;
  std::size_t N_;
  double dt_;
};

LQSpec to_spec(const ScalarModel& m) { return scalar_lq(m.A, m.B, m.Q, m.R, m.G, m.C, m.D, 1.0); }

}  // namespace

TEST_CASE("LQ spec validation") {
  CHECK_NOTHROW(benchmark_lq(0.5).validate());
  LQSpec s = benchmark_lq(0.0);
  s.R = MatrixSchedule(m1(0.0));
  CHECK_THROWS_AS(s.validate(), InputError);
  s = benchmark_lq(0.0);
  s.r_min = 2.0;
  CHECK_THROWS_AS(s.validate(), InputError);
  s = benchmark_lq(0.0);
  s.Q = MatrixSchedule(m1(-1.0));
  CHECK_THROWS_AS(s.validate(), InputError);
  s = benchmark_lq(0.0);
  s.G = m1(-0.5);
  CHECK_THROWS_AS(s.validate(), InputError);
  s = benchmark_lq(0.0);
  s.Q = MatrixSchedule((Mat(2, 2) << 1, 0, 1, 1).finished());
  CHECK_THROWS_AS(s.validate(), InputError);
  s = benchmark_lq(0.0);
  s.x0 = Vec::Zero(2);
  CHECK_THROWS_AS(s.validate(), InputError);
  s = benchmark_lq(0.0);
  s.factors.push_back({MatrixSchedule(Mat::Zero(2, 2)), MatrixSchedule(m1(1))});
  CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("zero cost gives a zero Riccati solution") {
  const LQSpec s = scalar_lq(0.4, 1.0, 0.0, 1.0, 0.0, 0.2, 0.3, 1.0);
  const RiccatiSolution sol = riccati_oracle(s, TimeGrid(1.0, 10));
  for (const Mat& P : sol.P) CHECK(P.isZero(0.0));
  for (const Mat& K : sol.K) CHECK(K.isZero(0.0));
}

TEST_CASE("scalar benchmark P(0) converges to tanh(1) at first order") {
  const LQSpec s = benchmark_lq(0.0);
  double prev = 0.0;
  for (std::size_t N : {250u, 500u, 1000u}) {
    const RiccatiSolution sol = riccati_oracle(s, TimeGrid(1.0, N));
    const double err = std::abs(sol.P[0](0, 0) - std::tanh(1.0));
    CAPTURE(N);
    CHECK(err < 2e-3);
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(2.0).epsilon(0.05));
    prev = err;
    CHECK(sol.P[N](0, 0) == 0.0);
  }
}

TEST_CASE("Riccati recursion agrees with brute-force dynamic programming") {
  const ScalarModel models[] = {
      {0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0},  {0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.5},
      {0.3, 0.7, 2.0, 0.5, 1.0, 0.4, 0.0},  {-0.5, 1.2, 0.5, 2.0, 3.0, 0.3, 0.8},
      {1.0, -1.0, 0.0, 1.0, 1.0, 1.0, 1.0},
  };
  for (const auto& m : models) {
    for (std::size_t N = 1; N <= 4; ++N) {
      CAPTURE(N);
      CAPTURE(m.D);
      const RiccatiSolution sol = riccati_oracle(to_spec(m), TimeGrid(1.0, N));
      const BruteForceDP dp(m, N);
      for (std::size_t n = 0; n < N; ++n) {
        for (double x : {1.0, -0.7}) {
          CHECK(-dp.argmin(n, x) / x == doctest::Approx(sol.K[n](0, 0)).epsilon(1e-8));
          CHECK(2.0 * dp.value(n, x) / (x * x) ==
                doctest::Approx(sol.P[n](0, 0)).epsilon(1e-8));
        }
      }
    }
  }
}

TEST_CASE("control-dependent noise changes the gain") {
  const TimeGrid grid(1.0, 200);
  const RiccatiSolution a = riccati_oracle(benchmark_lq(0.0), grid);
  const RiccatiSolution b = riccati_oracle(benchmark_lq(0.8), grid);
  CHECK(b.K[0](0, 0) < a.K[0](0, 0) - 1e-3);
  // Continuous-time gain (R + D^2 P)^{-1} B P at the same P, up to O(dt).
  const double P = b.P[1](0, 0);
  CHECK(b.K[0](0, 0) == doctest::Approx(P / (1.0 + 0.64 * P)).epsilon(1e-2));
}

TEST_CASE("multidimensional Riccati solution is symmetric PSD and prices the control") {
  LQSpec s;
  Mat A(2, 2), B(2, 1), Q(2, 2), C(2, 2), D(2, 1);
  A << 0.1, 1.0, -0.5, 0.2;
  B << 0.0, 1.0;
  Q << 1.0, 0.2, 0.2, 0.5;
  C << 0.1, 0.0, 0.0, 0.2;
  D << 0.3, 0.1;
  s.A = MatrixSchedule(A);
  s.B = MatrixSchedule(B);
  s.Q = MatrixSchedule(Q);
  s.R = MatrixSchedule(m1(0.5));
  s.G = Mat::Identity(2, 2);
  s.x0 = (Vec(2) << 1.0, -0.5).finished();
  const TimeGrid grid(1.0, 100);
  const RiccatiSolution sol = riccati_oracle(s, grid);
  for (const Mat& P : sol.P) {
    CHECK((P - P.transpose()).norm() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(P).eigenvalues().minCoeff() >= -1e-12);
  }
  LQSpec det = s;
  det.factors.clear();
  const RiccatiSolution dsol = riccati_oracle(det, grid);
  const Problem dp = make_problem(det, grid);
  const PathBundle db = simulate_state(*dp.field, *dp.drift, riccati_law(dsol), det.x0, grid, 1, 1);
  CHECK(lq_cost(det, db).mean == doctest::Approx(dsol.value(det.x0)).epsilon(1e-10));

  s.factors.push_back({MatrixSchedule(C), MatrixSchedule(D)});
  const RiccatiSolution ssol = riccati_oracle(s, grid);
  const Problem sp = make_problem(s, grid);
  const PathBundle sb = simulate_state(*sp.field, *sp.drift, riccati_law(ssol), s.x0, grid, 4000, 5);
  const Estimate J = lq_cost(s, sb);
  CHECK(std::abs(J.mean - ssol.value(s.x0)) <= 3.0 * J.se);
}

TEST_CASE("lq_cost examples") {
  const TimeGrid grid(1.0, 50);
  {
    const LQSpec s = scalar_lq(0, 1, 1, 1, 1, 0, 0, 0.0);
    const Problem p = make_problem(s, grid);
    const PathBundle b =
        simulate_state(*p.field, *p.drift, ControlLaw::constant(v1(0)), s.x0, grid, 3, 1);
    CHECK(lq_cost(s, b).mean == 0.0);
  }
  {
    const LQSpec s = scalar_lq(0, 0, 0, 1, 1, 0, 0, 2.0);
    const Problem p = make_problem(s, grid);
    const PathBundle b =
        simulate_state(*p.field, *p.drift, ControlLaw::constant(v1(0)), s.x0, grid, 3, 1);
    const Estimate J = lq_cost(s, b);
    CHECK(J.mean == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(J.deterministic());
  }
  {
    const LQSpec s = benchmark_lq(0.0);
    const TimeGrid fine(1.0, 1000);
    const RiccatiSolution sol = riccati_oracle(s, fine);
    const Problem p = make_problem(s, fine);
    const PathBundle b = simulate_state(*p.field, *p.drift, riccati_law(sol), s.x0, fine, 2, 1);
    CHECK(lq_cost(s, b).mean == doctest::Approx(0.5 * std::tanh(1.0)).epsilon(0.02));
    CHECK(lq_cost(s, b).mean == doctest::Approx(sol.value(s.x0)).epsilon(1e-12));
  }
}

TEST_CASE("stationarity residual") {
  const TimeGrid grid(1.0, 50);
  SUBCASE("zero-cost problem at zero control") {
    const LQSpec s = scalar_lq(0, 1, 0, 1, 0, 0, 0.5, 1.0);
    const Problem p = make_problem(s, grid);
    const PathBundle bar =
        simulate_state(*p.field, *p.drift, ControlLaw::constant(v1(0)), s.x0, grid, 200, 1);
    const StationarityReport r = stationarity_residual(s, solve_adjoint(p, bar), bar);
    CHECK(r.max_abs == 0.0);
    CHECK(r.pass);
  }
  for (double D : {0.0, 0.5}) {
    CAPTURE(D);
    const LQSpec s = benchmark_lq(D);
    const Problem p = make_problem(s, grid);
    const RiccatiSolution sol = riccati_oracle(s, grid);
    const PathBundle bar =
        simulate_state(*p.field, *p.drift, riccati_law(sol), s.x0, grid, 4000, 2);
    const StationarityReport r = stationarity_residual(s, solve_adjoint(p, bar), bar);
    CHECK(r.pass);
    CHECK(r.residual.size() == grid.n_steps());

    const PathBundle zero =
        simulate_state(*p.field, *p.drift, ControlLaw::constant(v1(0)), s.x0, grid, 4000, 2);
    const StationarityReport rz = stationarity_residual(s, solve_adjoint(p, zero), zero);
    CHECK_FALSE(rz.pass);
    CHECK(rz.violations > grid.n_steps() / 2);
  }
}

TEST_CASE("optimality certificate") {
  const TimeGrid grid(1.0, 40);
  SufficiencyOptions opt;
  opt.n_samples = 10;
  SUBCASE("zero problem") {
    const LQSpec s = scalar_lq(0, 1, 0, 1, 0, 0, 0, 0.0);
    const Problem p = make_problem(s, grid);
    const ControlLaw law = ControlLaw::constant(v1(0));
    const PathBundle bar = simulate_state(*p.field, *p.drift, law, s.x0, grid, 100, 1);
    const SufficiencyReport r =
        lq_optimality_certificate(s, law, bar, solve_adjoint(p, bar), opt);
    CHECK(r.pass);
  }
  for (double D : {0.0, 0.5}) {
    CAPTURE(D);
    const LQSpec s = benchmark_lq(D);
    const Problem p = make_problem(s, grid);
    const RiccatiSolution sol = riccati_oracle(s, grid);
    const ControlLaw law = riccati_law(sol);
    const PathBundle bar = simulate_state(*p.field, *p.drift, law, s.x0, grid, 2000, 4);
    const SufficiencyReport r =
        lq_optimality_certificate(s, law, bar, solve_adjoint(p, bar), opt);
    CHECK(r.pass);
    CHECK(r.mean_excess.mean > 0.0);
    CHECK(r.samples.size() == opt.n_samples + 1);
    CHECK_FALSE(r.convexity_warning);

    const ControlLaw zero = ControlLaw::constant(v1(0));
    const PathBundle zbar = simulate_state(*p.field, *p.drift, zero, s.x0, grid, 2000, 4);
    const SufficiencyReport rz =
        lq_optimality_certificate(s, zero, zbar, solve_adjoint(p, zbar), opt);
    CHECK_FALSE(rz.pass);
    // The oracle gap J(0) - J(ubar) is what the Riccati candidate exposes.
    CHECK(rz.samples.back().diff.mean < -3.0 * rz.samples.back().diff.se);
  }
}

TEST_CASE("cost is monotone along perturbations of the Riccati control") {
  const LQSpec s = benchmark_lq(0.5);
  const TimeGrid grid(1.0, 40);
  const Problem p = make_problem(s, grid);
  const RiccatiSolution sol = riccati_oracle(s, grid);
  auto noise = BrownianIncrements::generate(9, 2000, grid.n_steps(), 1, grid.dt());
  const PathBundle bar = simulate_state(*p.field, *p.drift, riccati_law(sol), s.x0, grid, noise);
  const auto base = std::make_shared<const ControlPath>(bar.u);
  Mat dir(1, grid.nodes());
  for (std::size_t n = 0; n < grid.nodes(); ++n) dir(0, static_cast<Eigen::Index>(n)) = std::sin(3.0 * grid.t(n));
  const auto du = std::make_shared<const ControlPath>(ControlPath::shared(2000, dir));
  const std::vector<double> j0 = path_costs(p, bar);
  for (double eps : {1.0, 0.3, 0.1, -0.5}) {
    const PathBundle b = simulate_state(*p.field, *p.drift, ControlLaw::realized(base, du, eps),
                                        s.x0, grid, noise);
    const std::vector<double> j = path_costs(p, b);
    std::vector<double> diff(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) diff[i] = j[i] - j0[i];
    const Estimate e = estimate(diff);
    CAPTURE(eps);
    CHECK(e.mean >= -3.0 * e.se);
  }
}

TEST_CASE("linear fields satisfy the linearity condition") {
  LQSpec s = benchmark_lq(0.5);
  s.factors.push_back({MatrixSchedule(m1(0.7)), MatrixSchedule(m1(-0.2))});
  CHECK(linear_condition_residual(s, FieldSampleBox{}) <= 1e-12);
}

TEST_CASE("Riccati CSV export") {
  const RiccatiSolution sol = riccati_oracle(benchmark_lq(0.0), TimeGrid(1.0, 4));
  const std::string file = "test_riccati_export.csv";
  write_riccati_csv(sol, file, "h1");
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# config_hash=h1");
  std::getline(in, line);
  CHECK(line == "t,P_1_1,K_1_1");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
  std::remove(file.c_str());
}
