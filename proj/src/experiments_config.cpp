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


#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "smpf/errors.hpp"
#include "smpf/experiments.hpp"
#include "smpf/martingale_field.hpp"

namespace smpf {

namespace {

[[noreturn]] void fail(const std::string& block, const std::string& what) {
  throw ConfigError("block '" + block + "': " + what);
}

void allow_keys(const YAML::Node& node, std::initializer_list<const char*> allowed,
                const std::string& block) {
  if (!node.IsMap()) fail(block, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      fail(block, "unknown key '" + key + "'");
  }
}

double to_double(const YAML::Node& node, const std::string& block) {
  if (!node.IsScalar()) fail(block, "expected a number");
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    fail(block, "'" + node.Scalar() + "' is not a number");
  }
}

std::size_t to_count(const YAML::Node& node, const std::string& block) {
  const double v = to_double(node, block);
  if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
    fail(block, "expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::string to_string(const YAML::Node& node, const std::string& block) {
  if (!node.IsScalar()) fail(block, "expected a string");
  return node.Scalar();
}

bool to_bool(const YAML::Node& node, const std::string& block) {
  try {
    return node.as<bool>();
  } catch (const YAML::Exception&) {
    fail(block, "expected true or false");
  }
}

/// Scalar -> 1 x 1, list -> column, list of lists -> rows.
Mat to_matrix(const YAML::Node& node, const std::string& block) {
  if (node.IsScalar()) return Mat::Constant(1, 1, to_double(node, block));
  if (!node.IsSequence() || node.size() == 0) fail(block, "expected a number or matrix literal");
  if (node[0].IsScalar()) {
    Mat m(static_cast<Eigen::Index>(node.size()), 1);
    for (std::size_t i = 0; i < node.size(); ++i)
      m(static_cast<Eigen::Index>(i), 0) = to_double(node[i], block);
    return m;
  }
  const std::size_t rows = node.size();
  const std::size_t cols = node[0].IsSequence() ? node[0].size() : 0;
  if (cols == 0) fail(block, "malformed matrix literal");
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!node[i].IsSequence() || node[i].size() != cols)
      fail(block, "matrix rows must have equal length");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_double(node[i][j], block);
  }
  return m;
}

Vec to_vector(const YAML::Node& node, const std::string& block) {
  const Mat m = to_matrix(node, block);
  if (m.cols() != 1) fail(block, "expected a vector");
  return m.col(0);
}

/// {name: ..., key: matrix, factors: [{...}]} as a ParamBlock.
ParamBlock to_params(const YAML::Node& node, const std::string& block) {
  if (!node.IsMap()) fail(block, "expected a mapping with a 'name'");
  ParamBlock p;
  if (!node["name"]) fail(block, "missing 'name'");
  p.name = to_string(node["name"], block + ".name");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (key == "name") continue;
    if (key == "factors") {
      if (!kv.second.IsSequence()) fail(block + ".factors", "expected a list");
      for (std::size_t i = 0; i < kv.second.size(); ++i) {
        const std::string sub = block + ".factors[" + std::to_string(i) + "]";
        ParamBlock item;
        item.name = "factor";
        if (!kv.second[i].IsMap()) fail(sub, "expected a mapping");
        for (const auto& f : kv.second[i])
          item.values[f.first.as<std::string>()] =
              to_matrix(f.second, sub + "." + f.first.as<std::string>());
        p.items.push_back(std::move(item));
      }
      continue;
    }
    p.values[key] = to_matrix(kv.second, block + "." + key);
  }
  return p;
}

ControlSpec to_control(const YAML::Node& node, const std::string& block) {
  allow_keys(node, {"kind", "value", "values", "gain", "lower", "upper"}, block);
  if (!node["kind"]) fail(block, "missing 'kind'");
  static const std::map<std::string, ControlSpec::Kind> kinds{
      {"riccati", ControlSpec::Kind::Riccati}, {"zero", ControlSpec::Kind::Zero},
      {"constant", ControlSpec::Kind::Constant}, {"table", ControlSpec::Kind::Table},
      {"feedback", ControlSpec::Kind::Feedback}};
  const std::string kind = to_string(node["kind"], block + ".kind");
  const auto it = kinds.find(kind);
  if (it == kinds.end()) fail(block, "unknown control kind '" + kind + "'");
  ControlSpec c;
  c.kind = it->second;
  const char* needs = nullptr;
  switch (c.kind) {
    case ControlSpec::Kind::Constant: needs = "value"; break;
    case ControlSpec::Kind::Table: needs = "values"; break;
    case ControlSpec::Kind::Feedback: needs = "gain"; break;
    default: break;
  }
  for (const char* key : {"value", "values", "gain"}) {
    const bool wanted = needs != nullptr && std::string(key) == needs;
    if (node[key] && !wanted) fail(block, "key '" + std::string(key) + "' does not apply to kind '" + kind + "'");
    if (!node[key] && wanted) fail(block, "kind '" + kind + "' needs '" + key + "'");
    if (wanted) c.value = to_matrix(node[key], block + "." + key);
  }
  if (c.kind == ControlSpec::Kind::Constant) c.value = to_vector(node["value"], block + ".value");
  if (node["lower"] || node["upper"]) {
    if (!node["lower"] || !node["upper"]) fail(block, "a box needs both 'lower' and 'upper'");
    c.lower = to_vector(node["lower"], block + ".lower");
    c.upper = to_vector(node["upper"], block + ".upper");
  }
  return c;
}

const std::map<std::string, std::vector<const char*>>& check_params() {
  static const std::map<std::string, std::vector<const char*>> params{
      {"lemma31", {"eps", "slope_min", "slope_max"}},
      {"prop32", {"eps", "ratio"}},
      {"thm32", {"eps", "rel_tol", "abs_tol", "roundoff"}},
      {"lemma33", {"abs_tol"}},
      {"thm34", {"relative_floor"}},
      {"lq44", {"rel_tol"}},
      {"thm35", {"n_samples", "modes", "seed", "roundoff"}},
      {"lqcert", {"n_samples", "modes", "seed", "roundoff", "bias_band", "reference_value"}},
  };
  return params;
}

void check_control_dims(const ControlSpec& c, std::size_t d, std::size_t k,
                        const std::string& block) {
  const auto di = static_cast<Eigen::Index>(d);
  const auto ki = static_cast<Eigen::Index>(k);
  switch (c.kind) {
    case ControlSpec::Kind::Constant:
      if (c.value.rows() != ki) fail(block, "value must have length " + std::to_string(k));
      break;
    case ControlSpec::Kind::Table:
      if (c.value.rows() != ki) fail(block, "values must have " + std::to_string(k) + " rows");
      break;
    case ControlSpec::Kind::Feedback:
      if (c.value.rows() != ki || c.value.cols() != di)
        fail(block, "gain must be " + std::to_string(k) + " x " + std::to_string(d));
      break;
    default:
      break;
  }
  if (c.lower.size() != 0) {
    if (c.lower.size() != ki || c.upper.size() != ki)
      fail(block, "box bounds must have length " + std::to_string(k));
    if ((c.lower.array() > c.upper.array()).any()) fail(block, "box has lower > upper");
  }
}

LQSpec to_lq(const YAML::Node& node, const std::string& block) {
  allow_keys(node, {"A", "B", "Q", "R", "G", "factors", "r_min"}, block);
  for (const char* key : {"A", "B", "Q", "R"})
    if (!node[key]) fail(block, "missing '" + std::string(key) + "'");
  LQSpec s;
  s.A = MatrixSchedule(to_matrix(node["A"], block + ".A"));
  s.B = MatrixSchedule(to_matrix(node["B"], block + ".B"));
  s.Q = MatrixSchedule(to_matrix(node["Q"], block + ".Q"));
  s.R = MatrixSchedule(to_matrix(node["R"], block + ".R"));
  const auto d = s.A.rows();
  s.G = node["G"] ? to_matrix(node["G"], block + ".G") : Mat(Mat::Zero(d, d));
  if (node["r_min"]) s.r_min = to_double(node["r_min"], block + ".r_min");
  if (node["factors"]) {
    if (!node["factors"].IsSequence()) fail(block + ".factors", "expected a list");
    for (std::size_t i = 0; i < node["factors"].size(); ++i) {
      const std::string sub = block + ".factors[" + std::to_string(i) + "]";
      const YAML::Node f = node["factors"][i];
      allow_keys(f, {"C", "D"}, sub);
      LinearFactorSpec lf;
      lf.C = MatrixSchedule(f["C"] ? to_matrix(f["C"], sub + ".C") : Mat(Mat::Zero(d, d)));
      lf.D = MatrixSchedule(f["D"] ? to_matrix(f["D"], sub + ".D")
                                   : Mat(Mat::Zero(d, s.B.cols())));
      s.factors.push_back(std::move(lf));
    }
  }
  return s;
}

void parse_problem(const YAML::Node& node, ExperimentConfig& c) {
  const std::string block = "problem";
  allow_keys(node, {"lq", "field", "drift", "cost", "state_dim", "control_dim", "convex", "x0",
                    "reference", "direction", "candidates"},
             block);
  if (!node["x0"]) fail(block, "missing 'x0'");
  c.x0 = to_vector(node["x0"], block + ".x0");
  if (node["lq"]) {
    for (const char* key : {"field", "drift", "cost", "state_dim", "control_dim", "convex"})
      if (node[key]) fail(block, "key '" + std::string(key) + "' conflicts with 'lq'");
    LQSpec s = to_lq(node["lq"], block + ".lq");
    s.x0 = c.x0;
    try {
      s.validate();
    } catch (const InputError& e) {
      fail(block + ".lq", e.what());
    }
    c.state_dim = s.state_dim();
    c.control_dim = s.control_dim();
    c.convex = true;
    c.lq = std::move(s);
  } else {
    for (const char* key : {"field", "drift", "cost", "state_dim", "control_dim"})
      if (!node[key]) fail(block, "missing '" + std::string(key) + "' (or give an 'lq' block)");
    c.state_dim = to_count(node["state_dim"], block + ".state_dim");
    c.control_dim = to_count(node["control_dim"], block + ".control_dim");
    if (c.state_dim == 0 || c.control_dim == 0) fail(block, "dimensions must be positive");
    c.field = to_params(node["field"], block + ".field");
    c.drift = to_params(node["drift"], block + ".drift");
    c.cost = to_params(node["cost"], block + ".cost");
    if (node["convex"]) c.convex = to_bool(node["convex"], block + ".convex");
    if (static_cast<std::size_t>(c.x0.size()) != c.state_dim)
      fail(block + ".x0", "length must equal state_dim");
  }
  c.reference.kind = c.lq ? ControlSpec::Kind::Riccati : ControlSpec::Kind::Zero;
  if (node["reference"]) c.reference = to_control(node["reference"], block + ".reference");
  if (node["direction"]) c.direction = to_control(node["direction"], block + ".direction");
  if (node["candidates"]) {
    if (!node["candidates"].IsSequence()) fail(block + ".candidates", "expected a list");
    for (std::size_t i = 0; i < node["candidates"].size(); ++i)
      c.candidates.push_back(
          to_control(node["candidates"][i], block + ".candidates[" + std::to_string(i) + "]"));
  }
  auto check = [&](const ControlSpec& s, const std::string& b) {
    if (s.kind == ControlSpec::Kind::Riccati && !c.lq) fail(b, "kind 'riccati' needs an 'lq' problem");
    check_control_dims(s, c.state_dim, c.control_dim, b);
  };
  check(c.reference, block + ".reference");
  check(c.direction, block + ".direction");
  for (std::size_t i = 0; i < c.candidates.size(); ++i)
    check(c.candidates[i], block + ".candidates[" + std::to_string(i) + "]");
}

void parse_checks(const YAML::Node& node, ExperimentConfig& c) {
  if (node.IsNull()) return;
  if (!node.IsMap()) fail("checks", "expected a mapping of check names");
  for (const auto& kv : node) {
    const auto name = kv.first.as<std::string>();
    const auto it = check_params().find(name);
    if (it == check_params().end()) fail("checks", "unknown check '" + name + "'");
    const std::string block = "checks." + name;
    CheckSpec spec;
    spec.name = name;
    spec.params.name = name;
    if (!kv.second.IsNull()) {
      if (!kv.second.IsMap()) fail(block, "expected a mapping of tolerances");
      for (const auto& p : kv.second) {
        const auto key = p.first.as<std::string>();
        if (std::find_if(it->second.begin(), it->second.end(),
                         [&](const char* a) { return key == a; }) == it->second.end())
          fail(block, "unknown key '" + key + "'");
        spec.params.values[key] = to_matrix(p.second, block + "." + key);
      }
    }
    c.checks.push_back(std::move(spec));
  }
  for (const auto& spec : c.checks) {
    if ((spec.name == "lq44" || spec.name == "lqcert") && !c.lq)
      fail("checks." + spec.name, "needs an 'lq' problem");
    if (spec.params.has("eps")) {
      const Vec eps = spec.params.vector("eps");
      if (eps.size() < 2 || (eps.array() <= 0.0).any())
        fail("checks." + spec.name + ".eps", "needs at least two positive values");
      for (Eigen::Index i = 1; i < eps.size(); ++i)
        if (eps(i) >= eps(i - 1)) fail("checks." + spec.name + ".eps", "must be decreasing");
    }
  }
  for (const auto& name : c.expect_fail)
    if (c.find_check(name) == nullptr)
      fail("expect_fail", "check '" + name + "' is not in the checks block");
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> order{"lemma31", "prop32", "thm32", "lemma33",
                                              "thm34",   "lq44",   "thm35", "lqcert"};
  return order;
}

const CheckSpec* ExperimentConfig::find_check(const std::string& check) const {
  for (const auto& c : checks)
    if (c.name == check) return &c;
  return nullptr;
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  mix(source);
  mix("\nseed=" + std::to_string(seed) + "\npaths=" + std::to_string(n_paths));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("block '<document>': " + std::string(e.what()));
  }
  ExperimentConfig c;
  c.source = text;
  allow_keys(root, {"name", "description", "expect_fail", "problem", "grid", "mc", "regression",
                    "checks", "output"},
             "<document>");
  if (!root["name"]) fail("<document>", "missing 'name'");
  c.name = to_string(root["name"], "name");
  if (root["description"]) c.description = to_string(root["description"], "description");
  if (!root["problem"]) fail("<document>", "missing 'problem'");
  parse_problem(root["problem"], c);

  if (const YAML::Node g = root["grid"]) {
    allow_keys(g, {"T", "n_steps"}, "grid");
    if (g["T"]) c.horizon = to_double(g["T"], "grid.T");
    if (g["n_steps"]) c.n_steps = to_count(g["n_steps"], "grid.n_steps");
    if (!(c.horizon > 0.0) || c.n_steps == 0) fail("grid", "needs T > 0 and n_steps > 0");
  }
  if (const YAML::Node m = root["mc"]) {
    allow_keys(m, {"n_paths", "seed"}, "mc");
    if (m["n_paths"]) c.n_paths = to_count(m["n_paths"], "mc.n_paths");
    if (m["seed"]) c.seed = to_count(m["seed"], "mc.seed");
    if (c.n_paths == 0) fail("mc", "n_paths must be positive");
  }
  if (const YAML::Node r = root["regression"]) {
    allow_keys(r, {"basis", "degree", "bins", "ridge"}, "regression");
    if (r["basis"]) {
      const std::string b = to_string(r["basis"], "regression.basis");
      if (b == "polynomial") c.regression.kind = RegressionBasis::Kind::Polynomial;
      else if (b == "piecewise-linear") c.regression.kind = RegressionBasis::Kind::PiecewiseLinear;
      else fail("regression.basis", "expected 'polynomial' or 'piecewise-linear'");
    }
    if (r["degree"]) c.regression.degree = static_cast<int>(to_count(r["degree"], "regression.degree"));
    if (r["bins"]) c.regression.bins = to_count(r["bins"], "regression.bins");
    if (r["ridge"]) c.regression.ridge = to_double(r["ridge"], "regression.ridge");
    if (c.regression.ridge < 0.0) fail("regression.ridge", "must be non-negative");
  }
  if (const YAML::Node o = root["output"]) {
    allow_keys(o, {"csv_paths"}, "output");
    if (o["csv_paths"]) c.csv_paths = to_count(o["csv_paths"], "output.csv_paths");
  }
  if (const YAML::Node e = root["expect_fail"]) {
    if (!e.IsSequence()) fail("expect_fail", "expected a list of check names");
    for (const auto& item : e) c.expect_fail.push_back(to_string(item, "expect_fail"));
  }
  if (root["checks"]) parse_checks(root["checks"], c);
  else parse_checks(YAML::Node(), c);

  // Component names and parameters are resolved now so that errors surface
  // before any simulation.
  if (!c.lq) {
    try {
      build_problem(c);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("block 'problem': " + std::string(e.what()));
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("block '<document>': cannot open '" + file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Problem build_problem(const ExperimentConfig& config) {
  if (config.lq) {
    Problem p = make_problem(*config.lq, config.grid());
    return p;
  }
  Problem p;
  const std::size_t d = config.state_dim, k = config.control_dim;
  auto named = [](const char* block, auto&& make) {
    try {
      return make();
    } catch (const Error& e) {
      throw ConfigError("block 'problem." + std::string(block) + "': " + e.what());
    }
  };
  p.field = named("field", [&] {
    return std::make_shared<const MartingaleField>(field_library().build(config.field, d, k));
  });
  p.drift = named("drift", [&] { return drift_library().build(config.drift, d, k); });
  p.cost = named("cost", [&] { return cost_library().build(config.cost, d, k); });
  p.x0 = config.x0;
  p.grid = config.grid();
  p.convex = config.convex;
  named("x0", [&] {
    p.validate();
    return 0;
  });
  return p;
}

ControlLaw build_control(const ControlSpec& spec, std::size_t state_dim,
                         std::size_t control_dim, const RiccatiSolution* riccati) {
  (void)state_dim;
  const auto k = static_cast<Eigen::Index>(control_dim);
  std::optional<ControlLaw> law;
  switch (spec.kind) {
    case ControlSpec::Kind::Riccati:
      if (riccati == nullptr) throw InputError("Riccati control needs an LQ problem");
      law = riccati_law(*riccati);
      break;
    case ControlSpec::Kind::Zero:
      law = ControlLaw::constant(Vec::Zero(k));
      break;
    case ControlSpec::Kind::Constant:
      law = ControlLaw::constant(spec.value.col(0));
      break;
    case ControlSpec::Kind::Table:
      law = ControlLaw::table(spec.value);
      break;
    case ControlSpec::Kind::Feedback:
      law = ControlLaw::linear_feedback({spec.value});
      break;
  }
  if (spec.lower.size() != 0) return law->with_box(spec.lower, spec.upper);
  return *law;
}

std::vector<std::pair<std::string, std::string>> list_problems() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [n, s] : field_library().list()) out.emplace_back("field " + n, s);
  for (const auto& [n, s] : drift_library().list()) out.emplace_back("drift " + n, s);
  for (const auto& [n, s] : cost_library().list()) out.emplace_back("cost " + n, s);
  out.emplace_back("problem lq", "linear dynamics, factors sigma_j = C_j x + D_j u, quadratic cost");
  out.emplace_back("control riccati", "u = -K(t) x from the discrete Riccati oracle (lq only)");
  out.emplace_back("control zero", "u = 0");
  out.emplace_back("control constant", "u = value");
  out.emplace_back("control table", "column n of 'values' at node n");
  out.emplace_back("control feedback", "u = -gain x");
  static const std::map<std::string, std::string> checks{
      {"lemma31", "slope of sup_t E|x^eps - xbar|^2 against eps"},
      {"prop32", "decay of sup_t E|(x^eps - xbar)/eps - xhat|^2 along the eps ladder"},
      {"thm32", "extrapolated finite-difference cost derivative against the variational formula"},
      {"lemma33", "duality between the adjoint and the variational process"},
      {"thm34", "variational inequality H_u (u - ubar) >= 0 over the candidates"},
      {"lq44", "LQ stationarity residual"},
      {"thm35", "sufficiency: J(u) - J(ubar) >= 0 over random admissible perturbations"},
      {"lqcert", "LQ optimality certificate and closed-form value"},
  };
  for (const auto& name : check_names()) out.emplace_back("check " + name, checks.at(name));
  return out;
}

}  // namespace smpf
