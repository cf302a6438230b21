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

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "smpf/errors.hpp"
#include "smpf/experiments.hpp"

using namespace smpf;

namespace {

const char* kLQ = R"(
name: small-lq
problem:
  lq: {A: 0, B: 1, Q: 1, R: 1, G: 0, factors: [{C: 0, D: 0.5}]}
  x0: [1]
  direction: {kind: constant, value: [-1]}
  candidates:
    - {kind: constant, value: [1]}
grid: {T: 1, n_steps: 40}
mc: {n_paths: 5000, seed: 3}
checks:
  lemma31:
  thm32:
  lemma33:
  thm34: {relative_floor: 0.02}
  lq44:
  thm35: {n_samples: 4}
  lqcert: {n_samples: 4}
)";

std::string with_checks(const std::string& checks, const std::string& extra = "") {
  return "name: t\n" + extra +
         "problem:\n  lq: {A: 0, B: 1, Q: 1, R: 1, G: 0, factors: [{C: 0, D: 0.5}]}\n"
         "  x0: [1]\n  reference: {kind: zero}\n  direction: {kind: riccati}\n"
         "grid: {n_steps: 20}\nmc: {n_paths: 200}\n" + checks;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string first_line(const std::string& file) {
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("slope of exact power laws") {
  const std::vector<double> xs{0.2, 0.1, 0.05, 0.025};
  std::vector<double> sq, cst(4, 3.0);
  for (double x : xs) sq.push_back(x * x);
  const SlopeEstimate s = slope(xs, sq);
  CHECK(s.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.half_width < 1e-12);
  CHECK(s.points == 4);
  CHECK(std::abs(slope(xs, cst).slope) < 1e-12);
}

TEST_CASE("slope interval uses the Student-t quantile") {
  const std::vector<double> xs{1.0, 2.0, 4.0, 8.0};
  const std::vector<double> ys{1.0, 2.5, 3.5, 9.0};
  const SlopeEstimate s = slope(xs, ys);
  // Independent OLS on (log x, log y).
  double mx = 0, my = 0;
  for (int i = 0; i < 4; ++i) {
    mx += std::log(xs[i]) / 4;
    my += std::log(ys[i]) / 4;
  }
  double sxx = 0, sxy = 0;
  for (int i = 0; i < 4; ++i) {
    sxx += std::pow(std::log(xs[i]) - mx, 2);
    sxy += (std::log(xs[i]) - mx) * (std::log(ys[i]) - my);
  }
  const double b = sxy / sxx, a = my - b * mx;
  double rss = 0;
  for (int i = 0; i < 4; ++i) rss += std::pow(std::log(ys[i]) - a - b * std::log(xs[i]), 2);
  const double se = std::sqrt(rss / 2 / sxx);
  CHECK(s.slope == doctest::Approx(b).epsilon(1e-14));
  CHECK(s.se == doctest::Approx(se).epsilon(1e-12));
  // Two-sided 95% quantile with 2 degrees of freedom.
  CHECK(s.half_width == doctest::Approx(4.302652729911275 * se).epsilon(1e-10));
  CHECK(s.lower() < s.slope);
  CHECK(s.upper() > s.slope);
}

TEST_CASE("slope input errors") {
  CHECK_THROWS_AS(slope({1, 2}, {1, 2}), InputError);
  CHECK_THROWS_AS(slope({1, 2, 3}, {1, 0, 2}), InputError);
  CHECK_THROWS_AS(slope({1, -2, 3}, {1, 1, 2}), InputError);
  CHECK_THROWS_AS(slope({1, 2, 3}, {1, 2}), InputError);
  CHECK_THROWS_AS(slope({2, 2, 2}, {1, 2, 3}), InputError);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(kLQ);
  CHECK(c.name == "small-lq");
  CHECK(c.lq.has_value());
  CHECK(c.state_dim == 1);
  CHECK(c.reference.kind == ControlSpec::Kind::Riccati);
  CHECK(c.direction.kind == ControlSpec::Kind::Constant);
  CHECK(c.candidates.size() == 1);
  CHECK(c.n_steps == 40);
  CHECK(c.n_paths == 5000);
  CHECK(c.seed == 3);
  CHECK(c.checks.size() == 7);
  CHECK(c.find_check("thm34")->params.scalar("relative_floor") == 0.02);
  CHECK(c.find_check("prop32") == nullptr);
}

TEST_CASE("config errors name the block") {
  CHECK(config_error(with_checks("foo: 1\n")).find("block '<document>': unknown key 'foo'") !=
        std::string::npos);
  CHECK(config_error(with_checks("", "grid: {T: 1, dt: 0.1}\n"))
            .find("block 'grid'") != std::string::npos);
  CHECK(config_error(with_checks("checks:\n  lemma99:\n")).find("unknown check 'lemma99'") !=
        std::string::npos);
  CHECK(config_error(with_checks("checks:\n  lq44: {tol: 1}\n"))
            .find("block 'checks.lq44': unknown key 'tol'") != std::string::npos);
  CHECK(config_error(with_checks("checks:\n  lemma31: {eps: [0.1, 0.2]}\n"))
            .find("checks.lemma31.eps") != std::string::npos);
  CHECK(config_error(with_checks("checks:\n  lemma33:\n", "expect_fail: [thm34]\n"))
            .find("block 'expect_fail'") != std::string::npos);
  CHECK(config_error("name: t\nproblem:\n  lq: {A: 0, B: 1, Q: 1, R: 0}\n  x0: [1]\n")
            .find("block 'problem.lq'") != std::string::npos);
  CHECK(config_error("name: t\nproblem:\n  lq: {A: [[1, 2]], B: 1, Q: 1, R: 1}\n  x0: [1]\n")
            .find("problem.lq") != std::string::npos);
  const std::string generic =
      "name: t\nproblem:\n  state_dim: 1\n  control_dim: 1\n  field: {name: nope}\n"
      "  drift: {name: zero}\n  cost: {name: zero}\n  x0: [1]\n";
  CHECK(config_error(generic).find("block 'problem.field'") != std::string::npos);
  CHECK(config_error(generic + "  reference: {kind: riccati}\n").find("problem.reference") !=
        std::string::npos);
  CHECK(config_error("name: t\nproblem: [1, 2\n").find("<document>") != std::string::npos);
  CHECK(config_error("name: t\nproblem:\n  lq: {A: 0, B: 1, Q: 1, R: 1}\n  x0: [1]\n"
                     "  reference: {kind: constant, value: [1, 2]}\n")
            .find("problem.reference") != std::string::npos);
  CHECK(config_error("name: t\nproblem:\n  lq: {A: 0, B: 1, Q: 1, R: 1}\n  x0: [1]\n"
                     "  reference: {kind: zero, value: [1]}\n")
            .find("does not apply") != std::string::npos);
  CHECK(config_error(
            "name: t\nproblem:\n  state_dim: 1\n  control_dim: 1\n  field: {name: zero}\n"
            "  drift: {name: zero}\n  cost: {name: zero}\n  x0: [1]\nchecks:\n  lq44:\n")
            .find("needs an 'lq' problem") != std::string::npos);
}

TEST_CASE("config hash") {
  ExperimentConfig a = parse_config(kLQ);
  const ExperimentConfig b = parse_config(kLQ);
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  a.seed = 4;
  CHECK(a.hash() != b.hash());
  a.seed = b.seed;
  a.n_paths = 5001;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("empty checks block") {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentReport r = run(parse_config(with_checks("checks: {}\n")));
  CHECK(r.checks.empty());
  CHECK(r.exit_code() == 0);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 0.5);
  CHECK(r.text().find("verdict: PASS") != std::string::npos);
}

TEST_CASE("run writes a report and one CSV per check, all naming the config hash") {
  const ExperimentConfig c = parse_config(kLQ);
  const std::string dir = "test_experiments_out";
  std::filesystem::remove_all(dir);
  RunOptions opt;
  opt.out_dir = dir;
  const ExperimentReport r = run(c, opt);
  CHECK(r.exit_code() == 0);
  REQUIRE(r.checks.size() == 7);
  // Dependency order, independent of the order in the file.
  const std::vector<std::string> order{"lemma31", "thm32", "lemma33", "thm34",
                                       "lq44",    "thm35", "lqcert"};
  for (std::size_t i = 0; i < order.size(); ++i) {
    CAPTURE(order[i]);
    CHECK(r.checks[i].name == order[i]);
    CHECK(r.checks[i].pass);
    CHECK(first_line(r.checks[i].csv_file) == "# config_hash=" + c.hash());
    for (const auto& m : r.checks[i].metrics) {
      CAPTURE(m.name);
      CHECK(std::isfinite(m.value));
      CHECK((m.deterministic || m.se > 0.0));
    }
  }
  for (const char* f : {"paths.csv", "adjoint.csv", "riccati.csv"})
    CHECK(first_line(dir + "/" + f).rfind("# config_hash=" + c.hash(), 0) == 0);
  std::ifstream in(dir + "/report.txt");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("config_hash: " + c.hash()) != std::string::npos);
  CHECK(text.find("seed: 3") != std::string::npos);
  CHECK(text.find("version: ") != std::string::npos);
  CHECK(text.find("wall_clock_seconds") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reports are identical across thread counts") {
  const ExperimentConfig c = parse_config(kLQ);
  RunOptions one, many;
  many.exec.threads = 3;
  const std::string a = run(c, one).text(false);
  const std::string b = run(c, many).text(false);
  CHECK(a == b);
  CHECK(a.find("seconds") == std::string::npos);
}

TEST_CASE("expected-failure semantics") {
  const std::string checks =
      "checks:\n  lemma33:\n  thm34: {relative_floor: 0.02}\n  lq44:\n";
  const ExperimentReport bad = run(parse_config(with_checks(checks)));
  CHECK(bad.exit_code() == 1);
  CHECK_FALSE(bad.checks[1].pass);

  const ExperimentReport expected =
      run(parse_config(with_checks(checks, "expect_fail: [thm34, lq44]\n")));
  CHECK(expected.exit_code() == 0);
  CHECK(expected.expected_failure_mode());
  CHECK(expected.text().find("EXPECTED-FAILURE-MODE") != std::string::npos);

  const ExperimentReport unexpected =
      run(parse_config(with_checks(checks, "expect_fail: [lemma33, thm34, lq44]\n")));
  CHECK(unexpected.exit_code() == 1);
  CHECK(unexpected.text().find("UNEXPECTED-PASS") != std::string::npos);
}

TEST_CASE("run errors name the offending check") {
  const std::string text =
      "name: blowup\nproblem:\n  lq: {A: 1.0e300, B: 1, Q: 1, R: 1}\n  x0: [1]\n"
      "  reference: {kind: zero}\n  direction: {kind: zero}\n"
      "grid: {n_steps: 10}\nmc: {n_paths: 4}\nchecks:\n  lemma33:\n";
  try {
    run(parse_config(text));
    FAIL("expected a simulation error");
  } catch (const SimulationError& e) {
    CHECK(std::string(e.what()).find("check 'lemma33'") != std::string::npos);
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("block 'problem'") != std::string::npos);
  }
}

TEST_CASE("shipped configs are valid") {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(SMPF_CONFIG_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
    ++n;
  }
  CHECK(n >= 5);
}

TEST_CASE("list_problems covers every check") {
  const auto list = list_problems();
  for (const auto& name : check_names()) {
    const bool found = std::any_of(list.begin(), list.end(),
                                   [&](const auto& p) { return p.first == "check " + name; });
    CHECK(found);
  }
}
