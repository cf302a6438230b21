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
#include <vector>

#include "smpf/rng.hpp"
#include "smpf/types.hpp"

using namespace smpf;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::apply(C{0, 0, 0, 0}, K{0, 0}) ==
        C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                          K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                          K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal streams are reproducible and independent of order") {
  NormalStream a(42, 7), b(42, 7), c(42, 8);
  std::vector<double> va, vc;
  for (int i = 0; i < 100; ++i) {
    va.push_back(a.next());
    vc.push_back(c.next());
  }
  for (int i = 0; i < 100; ++i) CHECK(b.next() == va[i]);
  CHECK(va != vc);
}

TEST_CASE("normal stream moments") {
  NormalStream s(1, 0);
  const int n = 200000;
  std::vector<double> v(n), v2(n);
  for (int i = 0; i < n; ++i) {
    v[i] = s.next();
    v2[i] = v[i] * v[i];
  }
  const Estimate m = estimate(v);
  const Estimate m2 = estimate(v2);
  CHECK(std::abs(m.mean) < 4.0 * m.se);
  CHECK(std::abs(m2.mean - 1.0) < 4.0 * m2.se);
}

TEST_CASE("uniforms lie in the open unit interval") {
  NormalStream s(3, 1);
  for (int i = 0; i < 10000; ++i) {
    const double u = s.next_uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("brownian increments: moments at the CLT bound") {
  const double dt = 1e-2;
  auto inc = BrownianIncrements::generate(11, 4000, 100, 2, dt);
  std::vector<double> v(inc->raw().begin(), inc->raw().end());
  std::vector<double> v2(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) v2[i] = v[i] * v[i];
  const Estimate m = estimate(v);
  const Estimate m2 = estimate(v2);
  CHECK(std::abs(m.mean) < 3.0 * m.se);
  CHECK(std::abs(m2.mean - dt) < 3.0 * m2.se);
}

TEST_CASE("brownian increments do not depend on the thread count") {
  auto one = BrownianIncrements::generate(5, 257, 33, 3, 0.01, {1});
  auto four = BrownianIncrements::generate(5, 257, 33, 3, 0.01, {4});
  CHECK(one->checksum() == four->checksum());
  CHECK(std::equal(one->raw().begin(), one->raw().end(), four->raw().begin()));
  auto other = BrownianIncrements::generate(6, 257, 33, 3, 0.01, {1});
  CHECK(one->checksum() != other->checksum());
}

TEST_CASE("coarsened increments sum consecutive steps") {
  auto fine = BrownianIncrements::generate(9, 3, 8, 2, 0.125);
  auto coarse = fine->coarsened(2);
  CHECK(coarse->n_steps() == 4);
  CHECK(coarse->dt() == doctest::Approx(0.25));
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t j = 0; j < 2; ++j)
        CHECK(coarse->step(p, n)[j] ==
              fine->step(p, 2 * n)[j] + fine->step(p, 2 * n + 1)[j]);
}

TEST_CASE("pairwise sum and estimates") {
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
  const Estimate e = estimate(v);
  CHECK(e.deterministic());
  CHECK(e.mean == 0.1);
  CHECK(estimate(std::vector<double>{1.0, 3.0}).se == doctest::Approx(1.0));
}
