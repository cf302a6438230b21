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
#include <memory>
#include <vector>

#include "fixtures.hpp"
#include "smpf/adjoint_solver.hpp"
#include "smpf/lq.hpp"
#include "smpf/max_principle.hpp"

using namespace smpf;
using namespace smpf::testing;

namespace {

/// sigma = x, b = 0, f = (x^2 + u^2)/2, Phi = 0.
Problem gbm_problem() {
  Problem p;
  ParamBlock f = block("scalar-gbm");
  f.values["s"] = m1(1.0);
  p.field = std::make_shared<const MartingaleField>(field_library().build(f, 1, 1));
  p.drift = drift_library().build(block("zero"), 1, 1);
  ParamBlock c = block("quadratic");
  c.values["Q"] = m1(1.0);
  c.values["R"] = m1(1.0);
  c.values["G"] = m1(0.0);
  p.cost = cost_library().build(c, 1, 1);
  p.x0 = v1(1.0);
  p.grid = TimeGrid(1.0, 10);
  return p;
}

}  // namespace

TEST_CASE("Hamiltonian worked examples") {
  const Problem p = gbm_problem();
  CHECK(hamiltonian(p, 0.0, v1(1), v1(1), v1(0), m1(0), v1(1), v1(1)) == doctest::Approx(1.0));
  // sigma = x with z = c and anchor xbar = 2 contributes 2 c x.
  const double c = 0.7, x = 1.5;
  CHECK(hamiltonian(p, 0.0, v1(x), v1(0), v1(0), m1(c), v1(2), v1(0)) ==
        doctest::Approx(2.0 * c * x + 0.5 * x * x));

  const Problem bl = bilinear_problem(TimeGrid(1.0, 10));
  // b = u pairs linearly with y.
  const double h1 = hamiltonian(bl, 0.0, v1(0.3), v1(2.0), v1(1.0), m1(0), v1(0.3), v1(2.0));
  const double h2 = hamiltonian(bl, 0.0, v1(0.3), v1(2.0), v1(3.0), m1(0), v1(0.3), v1(2.0));
  CHECK(h2 - h1 == doctest::Approx(2.0 * 2.0));
}

TEST_CASE("Hamiltonian control gradient") {
  const Problem bl = bilinear_problem(TimeGrid(1.0, 10));
  const LQSpec zero = scalar_lq(0, 0, 0, 1, 0, 0, 0, 0.0);
  const Problem pz = make_problem(zero, TimeGrid(1.0, 10));
  CHECK(hamiltonian_u(pz, 0.0, v1(0), v1(0), v1(0), m1(0))(0) == 0.0);
  CHECK(hamiltonian_u(pz, 0.0, v1(0.4), v1(1.7), v1(0), m1(0))(0) == doctest::Approx(1.7));
  // b = u, sigma = x + u: H_u = y + z (xbar + ubar) + u.
  const double xb = 0.4, ub = -0.3, y = 1.1, z = 0.6;
  CHECK(hamiltonian_u(bl, 0.2, v1(xb), v1(ub), v1(y), m1(z))(0) ==
        doctest::Approx(y + z * (xb + ub) + ub));
  CHECK(hamiltonian_gradient_error(bl, FieldSampleBox{}) < 1e-4);
  CHECK(hamiltonian_gradient_error(gbm_problem(), FieldSampleBox{}) < 1e-4);
}

TEST_CASE("Gateaux derivative") {
  const TimeGrid grid(1.0, 40);
  GateauxOptions opt;
  opt.n_paths = 2000;
  SUBCASE("zero direction") {
    const Problem p = bilinear_problem(grid);
    const ControlLaw u = ControlLaw::constant(v1(0.2));
    const GateauxReport r = gateaux_check(p, u, u, opt);
    CHECK(r.formula.mean == 0.0);
    CHECK(r.extrapolated.mean == 0.0);
    CHECK(r.pass);
  }
  SUBCASE("deterministic LQ") {
    const LQSpec s = scalar_lq(0.3, 1.0, 1.0, 1.0, 1.0, 0, 0, 1.0);
    const Problem p = make_problem(s, grid);
    const GateauxReport r =
        gateaux_check(p, ControlLaw::constant(v1(0)), ControlLaw::constant(v1(-1)), opt);
    CHECK(r.pass);
    CHECK(r.formula.deterministic());
    CHECK(r.extrapolated.mean == doctest::Approx(r.formula.mean).epsilon(1e-6));
    CHECK(r.fd.size() == opt.eps.size());
  }
  SUBCASE("bilinear with feedback") {
    const Problem p = bilinear_problem(grid);
    const ControlLaw ubar = ControlLaw::linear_feedback({m1(0.5)});
    const ControlLaw u = ControlLaw::constant(v1(-0.5));
    const GateauxReport r = gateaux_check(p, ubar, u, opt);
    CHECK(r.pass);
    CHECK(std::abs(r.discrepancy.mean) <= r.tolerance);
    CHECK(r.noise_checksum != 0);
  }
}

TEST_CASE("variational inequality scan") {
  const TimeGrid grid(1.0, 40);
  SUBCASE("the reference control itself gives zero") {
    const Problem p = bilinear_problem(grid);
    const ControlLaw ubar = ControlLaw::linear_feedback({m1(0.5)});
    const PathBundle bar = simulate_state(*p.field, *p.drift, ubar, p.x0, grid, 500, 3);
    const VIReport r = variational_inequality_scan(p, bar, solve_adjoint(p, bar), {ubar});
    CHECK(r.min_mean == 0.0);
    CHECK(r.violations == 0);
    CHECK(r.pass);
  }
  SUBCASE("deterministic Riccati control satisfies it and zero control violates it") {
    const LQSpec s = benchmark_lq(0.0);
    const Problem p = make_problem(s, grid);
    const RiccatiSolution sol = riccati_oracle(s, grid);
    const PathBundle bar = simulate_state(*p.field, *p.drift, riccati_law(sol), s.x0, grid, 1, 1);
    const std::vector<ControlLaw> cands{ControlLaw::constant(v1(1)), ControlLaw::constant(v1(-1)),
                                        ControlLaw::constant(v1(0))};
    const VIReport r = variational_inequality_scan(p, bar, solve_adjoint(p, bar), cands);
    CHECK(r.pass);
    CHECK(std::abs(r.min_mean) < 1e-12);
    CHECK(r.residual.size() == 3);
    CHECK(r.residual[0].size() == grid.n_steps());

    const PathBundle zbar =
        simulate_state(*p.field, *p.drift, ControlLaw::constant(v1(0)), s.x0, grid, 1, 1);
    const VIReport rz = variational_inequality_scan(p, zbar, solve_adjoint(p, zbar), cands);
    CHECK_FALSE(rz.pass);
    CHECK(rz.min_mean < -0.1);
    CHECK(rz.argmin_candidate == 1);
  }
  SUBCASE("agrees with the classical pointwise form") {
    const LQSpec s = scalar_lq(0.2, 1.3, 1.0, 0.8, 0.5, 0.4, 0.6, 1.0);
    const Problem p = make_problem(s, grid);
    const ControlLaw ubar = ControlLaw::linear_feedback({m1(0.4)});
    const PathBundle bar = simulate_state(*p.field, *p.drift, ubar, s.x0, grid, 300, 7);
    const AdjointTriple adj = solve_adjoint(p, bar);
    const double cand = 0.25;
    const VIReport r =
        variational_inequality_scan(p, bar, adj, {ControlLaw::constant(v1(cand))});
    for (std::size_t n = 0; n < grid.n_steps(); ++n) {
      double sum = 0.0;
      for (std::size_t i = 0; i < bar.n_paths; ++i) {
        const double x = bar.state(i, n)(0), u = bar.control(i, n)(0);
        const double y = adj.y_hat(i, n)(0), z = adj.z_at(i, n)(0, 0);
        sum += (1.3 * y + 0.6 * z * (0.4 * x + 0.6 * u) + 0.8 * u) * (cand - u);
      }
      CAPTURE(n);
      CHECK(r.residual[0][n].mean ==
            doctest::Approx(sum / static_cast<double>(bar.n_paths)).epsilon(1e-10));
    }
  }
}

TEST_CASE("sufficiency check") {
  const TimeGrid grid(1.0, 40);
  SufficiencyOptions opt;
  opt.n_samples = 8;
  SUBCASE("zero problem") {
    const LQSpec s = scalar_lq(0, 1, 0, 1, 0, 0, 0, 0.0);
    Problem p = make_problem(s, grid);
    const ControlLaw u = ControlLaw::constant(v1(0));
    const PathBundle bar = simulate_state(*p.field, *p.drift, u, p.x0, grid, 50, 1);
    const SufficiencyReport r = sufficiency_check(p, u, solve_adjoint(p, bar), bar, opt);
    CHECK(r.pass);
    CHECK(r.samples.size() == opt.n_samples);
    for (const auto& smp : r.samples) {
      CHECK(smp.l2_norm == doctest::Approx(1.0));
      // J(u) - J(0) = E int u^2 / 2 dt = 1/2 exactly.
      CHECK(smp.diff.mean == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
  SUBCASE("stochastic LQ optimum and a suboptimal reference") {
    const LQSpec s = benchmark_lq(0.5);
    const Problem p = make_problem(s, grid);
    const RiccatiSolution sol = riccati_oracle(s, grid);
    const ControlLaw law = riccati_law(sol);
    const PathBundle bar = simulate_state(*p.field, *p.drift, law, s.x0, grid, 2000, 2);
    const SufficiencyReport r = sufficiency_check(p, law, solve_adjoint(p, bar), bar, opt, {});
    CHECK(r.pass);
    CHECK(r.mean_excess.mean > 0.0);
    CHECK(r.min_diff > 0.0);
    CHECK_FALSE(r.convexity_warning);

    const ControlLaw zero = ControlLaw::constant(v1(0));
    const PathBundle zbar = simulate_state(*p.field, *p.drift, zero, s.x0, grid, 2000, 2);
    const SufficiencyReport rz =
        sufficiency_check(p, zero, solve_adjoint(p, zbar), zbar, opt, {law});
    CHECK_FALSE(rz.pass);
    CHECK(rz.samples.size() == opt.n_samples + 1);
  }
  SUBCASE("box constraint keeps perturbed controls admissible") {
    const Problem p = bilinear_problem(grid);
    const ControlLaw u = ControlLaw::constant(v1(0)).with_box(v1(-0.1), v1(0.1));
    const PathBundle bar = simulate_state(*p.field, *p.drift, u, p.x0, grid, 200, 4);
    const SufficiencyReport r = sufficiency_check(p, u, solve_adjoint(p, bar), bar, opt);
    for (const auto& smp : r.samples) CHECK(smp.l2_norm <= 0.1 + 1e-12);
  }
}
