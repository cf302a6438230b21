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


// Benchmark problems shared by the unit and acceptance tests.

#pragma once

#include <memory>
#include <string>

#include "smpf/cost.hpp"
#include "smpf/forward_sde.hpp"
#include "smpf/lq.hpp"
#include "smpf/martingale_field.hpp"

namespace smpf::testing {

inline Vec v1(double a) { return Vec::Constant(1, a); }
inline Mat m1(double a) { return Mat::Constant(1, 1, a); }

inline ParamBlock block(const std::string& name) {
  ParamBlock p;
  p.name = name;
  return p;
}

/// Scalar LQ: A, B, Q, R, G with one factor sigma = C x + D u (omitted when
/// C = D = 0).
inline LQSpec scalar_lq(double A, double B, double Q, double R, double G,
                        double C, double D, double x0) {
  LQSpec s;
  s.A = MatrixSchedule(m1(A));
  s.B = MatrixSchedule(m1(B));
  s.Q = MatrixSchedule(m1(Q));
  s.R = MatrixSchedule(m1(R));
  s.G = m1(G);
  if (C != 0.0 || D != 0.0)
    s.factors.push_back({MatrixSchedule(m1(C)), MatrixSchedule(m1(D))});
  s.x0 = v1(x0);
  return s;
}

/// The scalar benchmark: A = 0, B = 1, Q = R = 1, G = 0, C = 0, x0 = 1.
inline LQSpec benchmark_lq(double D) { return scalar_lq(0, 1, 1, 1, 0, 0, D, 1); }

/// Bilinear benchmark: b = u, sigma = x + u, f = (x^2 + u^2)/2, Phi = x^2/2.
inline Problem bilinear_problem(const TimeGrid& grid, double x0 = 1.0) {
  Problem p;
  ParamBlock f = block("bilinear");
  f.values["a"] = m1(1.0);
  f.values["b"] = m1(1.0);
  p.field = std::make_shared<const MartingaleField>(field_library().build(f, 1, 1));
  p.drift = drift_library().build(block("bilinear"), 1, 1);
  ParamBlock c = block("quadratic");
  c.values["Q"] = m1(1.0);
  c.values["R"] = m1(1.0);
  c.values["G"] = m1(1.0);
  p.cost = cost_library().build(c, 1, 1);
  p.x0 = v1(x0);
  p.grid = grid;
  p.convex = true;
  return p;
}

}  // namespace smpf::testing
