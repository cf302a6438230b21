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

#include "fixtures.hpp"
#include "smpf/cost.hpp"
#include "smpf/errors.hpp"

using namespace smpf;
using namespace smpf::testing;

TEST_CASE("quadratic cost values and gradients") {
  Mat Q(2, 2);
  Q << 2, 1, 1, 3;
  const QuadraticCost c(MatrixSchedule(Q), MatrixSchedule(m1(4.0)), Mat::Identity(2, 2));
  const Vec x = (Vec(2) << 1, -1).finished();
  const Vec u = v1(0.5);
  // x'Qx = 2 - 2 + 3 = 3, u'Ru = 1.
  CHECK(c.running(0.0, x, u) == doctest::Approx(2.0));
  CHECK(c.terminal(x) == doctest::Approx(1.0));
  Vec gx(2), gu(1), px(2);
  c.running_grad_x(0.0, x, u, gx);
  c.running_grad_u(0.0, x, u, gu);
  c.terminal_grad(x, px);
  CHECK(gx(0) == doctest::Approx(1.0));
  CHECK(gx(1) == doctest::Approx(-2.0));
  CHECK(gu(0) == doctest::Approx(2.0));
  CHECK(px(0) == doctest::Approx(1.0));
  CHECK(px(1) == doctest::Approx(-1.0));
}

TEST_CASE("non-symmetric weights use their symmetric part") {
  Mat Q(2, 2);
  Q << 1, 2, 0, 1;
  const QuadraticCost c(MatrixSchedule(Q), MatrixSchedule(m1(1.0)), Mat::Zero(2, 2));
  const Vec x = (Vec(2) << 1, 1).finished();
  Vec g(2);
  c.running_grad_x(0.0, x, v1(0), g);
  CHECK(g(0) == doctest::Approx(2.0));
  CHECK(g(1) == doctest::Approx(2.0));
}

TEST_CASE("cost gradients agree with finite differences") {
  FieldSampleBox box;
  box.samples = 500;
  ParamBlock q = block("quadratic");
  Mat Q(2, 2);
  Q << 2, 0.5, 0.5, 1;
  q.values["Q"] = Q;
  q.values["R"] = m1(3.0);
  q.values["G"] = Mat::Identity(2, 2);
  CHECK(cost_gradient_error(*cost_library().build(q, 2, 1), box) < 1e-5);
  ParamBlock quartic = block("quartic");
  quartic.values["a"] = m1(2.0);
  CHECK(cost_gradient_error(*cost_library().build(quartic, 1, 1), box) < 1e-5);
}

TEST_CASE("path cost is the left-point sum plus the terminal cost") {
  Problem p = bilinear_problem(TimeGrid(1.0, 2), 0.0);
  p.field = std::make_shared<const MartingaleField>(MartingaleField::zero(1, 1));
  const PathBundle b = simulate_state(*p.field, *p.drift, ControlLaw::constant(v1(1.0)),
                                      p.x0, p.grid, 3, 1);
  // x = 0, 0.5, 1; f = 0.5, 0.625; dt = 0.5; Phi = 0.5.
  const auto costs = path_costs(p, b);
  REQUIRE(costs.size() == 3);
  for (double c : costs) CHECK(c == doctest::Approx(1.0625).epsilon(1e-14));
  const Estimate e = expected_cost(p, b);
  CHECK(e.deterministic());
  CHECK(e.mean == doctest::Approx(1.0625));
}

TEST_CASE("zero state and control cost nothing") {
  Problem p = bilinear_problem(TimeGrid(1.0, 8), 0.0);
  p.field = std::make_shared<const MartingaleField>(MartingaleField::zero(1, 1));
  const PathBundle b = simulate_state(*p.field, *p.drift, ControlLaw::constant(v1(0.0)),
                                      p.x0, p.grid, 4, 1);
  CHECK(expected_cost(p, b).mean == 0.0);
}

TEST_CASE("problem and library validation") {
  Problem p = bilinear_problem(TimeGrid(1.0, 4));
  CHECK_NOTHROW(p.validate());
  ParamBlock q = block("quadratic");
  q.values["Q"] = Mat::Identity(2, 2);
  q.values["R"] = m1(1.0);
  q.values["G"] = Mat::Identity(2, 2);
  p.cost = cost_library().build(q, 2, 1);
  CHECK_THROWS_AS(p.validate(), InputError);

  ParamBlock bad = block("quadratic");
  bad.values["W"] = m1(1.0);
  CHECK_THROWS_AS(cost_library().build(bad, 1, 1), InputError);
  CHECK_THROWS(cost_library().build(block("no-such-cost"), 1, 1));
  CHECK_THROWS_AS(QuadraticCost(MatrixSchedule(m1(1)), MatrixSchedule(m1(1)),
                                Mat::Identity(2, 2)),
                  InputError);
  CHECK_THROWS_AS(FunctionCost(1, 1, nullptr, nullptr, nullptr, nullptr, nullptr),
                  InputError);
}
