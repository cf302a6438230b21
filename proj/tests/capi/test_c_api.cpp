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


// Exercises libsmpf through its C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <string>

#include "smpf/smpf.h"

namespace {

const char* kConfig = R"(
name: capi-lq
problem:
  lq: {A: 0, B: 1, Q: 1, R: 1, G: 0}
  x0: [1]
  direction: {kind: constant, value: [-1]}
grid: {n_steps: 50}
mc: {n_paths: 10}
checks:
  thm32: {rel_tol: 0, abs_tol: 1.0e-6}
  lemma33:
  lq44:
)";

}  // namespace

TEST_CASE("version and component listing") {
  CHECK(std::strlen(smpf_version()) > 0);
  const std::string list = smpf_list_problems();
  CHECK(list.find("check lq44:") != std::string::npos);
  CHECK(list.find("field bilinear:") != std::string::npos);
}

TEST_CASE("config lifecycle and run") {
  smpf_config* cfg = nullptr;
  REQUIRE(smpf_config_parse(kConfig, &cfg) == SMPF_OK);
  const char* name = nullptr;
  CHECK(smpf_config_name(cfg, &name) == SMPF_OK);
  CHECK(std::string(name) == "capi-lq");
  size_t n = 0;
  CHECK(smpf_config_check_count(cfg, &n) == SMPF_OK);
  CHECK(n == 3);
  const char* h1 = nullptr;
  CHECK(smpf_config_hash(cfg, &h1) == SMPF_OK);
  const std::string hash1 = h1;
  CHECK(smpf_config_set_seed(cfg, 9) == SMPF_OK);
  CHECK(smpf_config_set_paths(cfg, 20) == SMPF_OK);
  const char* h2 = nullptr;
  smpf_config_hash(cfg, &h2);
  CHECK(hash1 != h2);
  CHECK(smpf_config_set_paths(cfg, 0) == SMPF_ERR_INPUT);

  smpf_report* rep = nullptr;
  REQUIRE(smpf_run(cfg, nullptr, 2, &rep) == SMPF_OK);
  int code = -1;
  CHECK(smpf_report_exit_code(rep, &code) == SMPF_OK);
  CHECK(code == 0);
  CHECK(smpf_report_check_count(rep, &n) == SMPF_OK);
  CHECK(n == 3);
  const char* check = nullptr;
  int pass = -1, xfail = -1;
  CHECK(smpf_report_check(rep, 2, &check, &pass, &xfail) == SMPF_OK);
  CHECK(std::string(check) == "lq44");
  CHECK(pass == 1);
  CHECK(xfail == 0);
  double value = -1, se = -1;
  CHECK(smpf_report_metric(rep, 1, "gap", &value, &se) == SMPF_OK);
  CHECK(std::abs(value) < 1e-8);
  CHECK(se == 0.0);
  CHECK(smpf_report_metric(rep, 1, "nope", &value, &se) == SMPF_ERR_INPUT);
  CHECK(std::string(smpf_last_error()).find("nope") != std::string::npos);
  CHECK(smpf_report_check(rep, 7, nullptr, nullptr, nullptr) == SMPF_ERR_INPUT);
  const char* text = nullptr;
  CHECK(smpf_report_text(rep, 0, &text) == SMPF_OK);
  CHECK(std::string(text).find("verdict: PASS") != std::string::npos);
  CHECK(std::string(text).find("wall_clock") == std::string::npos);
  smpf_report_free(rep);
  smpf_config_free(cfg);
}

TEST_CASE("error codes") {
  smpf_config* cfg = nullptr;
  CHECK(smpf_config_parse("name: x\nbogus: 1\n", &cfg) == SMPF_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(smpf_last_error()).find("bogus") != std::string::npos);
  CHECK(smpf_config_load("/nonexistent/file.yaml", &cfg) == SMPF_ERR_CONFIG);
  CHECK(smpf_config_parse(nullptr, &cfg) == SMPF_ERR_INPUT);
  CHECK(smpf_run(nullptr, nullptr, 1, nullptr) == SMPF_ERR_INPUT);
  int code = 0;
  CHECK(smpf_report_exit_code(nullptr, &code) == SMPF_ERR_INPUT);
  REQUIRE(smpf_config_parse(kConfig, &cfg) == SMPF_OK);
  CHECK(std::string(smpf_last_error()).empty());
  smpf_config_free(cfg);
  smpf_config_free(nullptr);
  smpf_report_free(nullptr);
}

TEST_CASE("slope") {
  const double xs[] = {0.2, 0.1, 0.05, 0.025};
  const double ys[] = {0.04, 0.01, 0.0025, 0.000625};
  double s = 0, lo = 0, hi = 0;
  CHECK(smpf_slope(xs, ys, 4, &s, &lo, &hi) == SMPF_OK);
  CHECK(s == doctest::Approx(2.0));
  CHECK(lo <= s);
  CHECK(hi >= s);
  CHECK(smpf_slope(xs, ys, 2, &s, &lo, &hi) == SMPF_ERR_INPUT);
}
