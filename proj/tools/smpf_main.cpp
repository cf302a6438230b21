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


// Command-line front end. Links only the C interface of libsmpf.
//
//   smpf run <config> [--out DIR] [--seed N] [--paths N] [--threads N]
//   smpf validate <config>
//   smpf list-problems
//
// Exit codes: 0 pass (or expected-failure mode), 1 check failure, 2 error.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "smpf/smpf.h"

namespace {

int report_error(const char* what) {
  std::fprintf(stderr, "error: %s: %s\n", what, smpf_last_error());
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo verification of the stochastic maximum principle"};
  app.set_version_flag("--version", std::string(smpf_version()));
  app.require_subcommand(1);

  std::string config_file, out_dir;
  std::uint64_t seed = 0, paths = 0;
  unsigned threads = 1;
  auto* run = app.add_subcommand("run", "run the checks of an experiment config");
  run->add_option("config", config_file, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory for the report and CSVs");
  auto* seed_opt = run->add_option("--seed", seed, "override mc.seed");
  auto* paths_opt = run->add_option("--paths", paths, "override mc.n_paths")->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "worker threads (0 = all cores)");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config_file, "experiment config file")->required();

  auto* list = app.add_subcommand("list-problems", "list registered components and checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    std::fputs(smpf_list_problems(), stdout);
    return 0;
  }

  smpf_config* config = nullptr;
  if (smpf_config_load(config_file.c_str(), &config) != SMPF_OK) return report_error(config_file.c_str());

  if (validate->parsed()) {
    const char* name = nullptr;
    size_t checks = 0;
    smpf_config_name(config, &name);
    smpf_config_check_count(config, &checks);
    std::printf("%s: valid (%zu checks)\n", name, checks);
    smpf_config_free(config);
    return 0;
  }

  if ((*seed_opt && smpf_config_set_seed(config, seed) != SMPF_OK) ||
      (*paths_opt && smpf_config_set_paths(config, paths) != SMPF_OK)) {
    smpf_config_free(config);
    return report_error("overrides");
  }
  smpf_report* report = nullptr;
  const smpf_status status =
      smpf_run(config, out_dir.empty() ? nullptr : out_dir.c_str(), threads, &report);
  smpf_config_free(config);
  if (status != SMPF_OK) return report_error("run");
  const char* text = nullptr;
  int code = 2;
  smpf_report_text(report, 1, &text);
  smpf_report_exit_code(report, &code);
  std::fputs(text, stdout);
  smpf_report_free(report);
  return code;
}
