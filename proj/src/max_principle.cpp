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

#include "smpf/max_principle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "smpf/errors.hpp"
#include "smpf/rng.hpp"

namespace smpf {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

double mixed_rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

void check_dims(const Problem& problem, const Vec& x, const Vec& u) {
  if (static_cast<std::size_t>(x.size()) != problem.state_dim() ||
      static_cast<std::size_t>(u.size()) != problem.control_dim())
    throw InputError("Hamiltonian argument has the wrong dimension");
}

std::vector<double> paired_difference(const std::vector<double>& a,
                                      const std::vector<double>& b,
                                      double scale) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] - b[i]) * scale;
  return out;
}

}  // namespace

double hamiltonian(const Problem& problem, double t, const Vec& x, const Vec& u,
                   const Vec& y, const Mat& z, const Vec& xbar, const Vec& ubar) {
  problem.validate();
  check_dims(problem, x, u);
  check_dims(problem, xbar, ubar);
  const auto d = idx(problem.state_dim());
  if (y.size() != d || z.rows() != d || z.cols() != d)
    throw InputError("adjoint arguments must be y in R^d and z in R^{d x d}");
  Vec b(d);
  problem.drift->eval(t, x, u, b);
  return y.dot(b) + problem.field->trace_form(z, t, xbar, ubar, x, u) +
         problem.cost->running(t, x, u);
}

Vec hamiltonian_u(const Problem& problem, double t, const Vec& xbar,
                  const Vec& ubar, const Vec& y, const Mat& z) {
  problem.validate();
  check_dims(problem, xbar, ubar);
  const auto d = idx(problem.state_dim());
  const auto k = idx(problem.control_dim());
  if (y.size() != d || z.rows() != d || z.cols() != d)
    throw InputError("adjoint arguments must be y in R^d and z in R^{d x d}");
  Mat bu(d, k);
  problem.drift->jacobian_u(t, xbar, ubar, bu);
  Vec fu(k);
  problem.cost->running_grad_u(t, xbar, ubar, fu);
  return bu.transpose() * y + problem.field->trace_form_grad_u(z, t, xbar, ubar) + fu;
}

double hamiltonian_gradient_error(const Problem& problem, const FieldSampleBox& box) {
  problem.validate();
  const auto d = idx(problem.state_dim());
  const auto k = idx(problem.control_dim());
  NormalStream rng(box.seed, 21);
  auto point = [&](Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
      v(i) = box.radius * (2.0 * rng.next_uniform() - 1.0);
    return v;
  };
  double worst = 0.0;
  for (std::size_t s = 0; s < box.samples; ++s) {
    const Vec x = point(d), u = point(k), y = point(d);
    Mat z(d, d);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.next();
    const Vec g = hamiltonian_u(problem, box.t, x, u, y, z);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double h = 1e-5 * (1.0 + std::abs(u(j)));
      Vec up = u, um = u;
      up(j) += h;
      um(j) -= h;
      const double fd = (hamiltonian(problem, box.t, x, up, y, z, x, u) -
                         hamiltonian(problem, box.t, x, um, y, z, x, u)) /
                        (2.0 * h);
      worst = std::max(worst, mixed_rel(g(j), fd));
    }
  }
  return worst;
}

ControlPath evaluate_along(const ControlLaw& law, const PathBundle& bar) {
  const std::size_t nodes = bar.grid.nodes();
  const std::size_t k = bar.control_dim;
  if (law.control_dim() != k)
    throw InputError("control law dimension differs from the reference bundle");
  Vec u(idx(k));
  if (law.path_independent()) {
    Mat table(idx(k), idx(nodes));
    for (std::size_t n = 0; n < nodes; ++n) {
      law.evaluate(0, n, bar.grid.t(n), bar.state(0, n), u);
      table.col(idx(n)) = u;
    }
    return ControlPath::shared(bar.n_paths, table);
  }
  ControlPath out(bar.n_paths, nodes, k);
  for (std::size_t p = 0; p < bar.n_paths; ++p) {
    for (std::size_t n = 0; n < nodes; ++n) {
      law.evaluate(p, n, bar.grid.t(n), bar.state(p, n), u);
      std::copy(u.data(), u.data() + k, out.at(p, n));
    }
  }
  return out;
}

GateauxReport gateaux_check(const Problem& problem, const ControlLaw& ubar,
                            const ControlLaw& u, const GateauxOptions& options,
                            const ExecOptions& exec) {
  problem.validate();
  if (options.eps.size() < 2)
    throw InputError("the Gateaux check needs at least two perturbation sizes");
  for (double e : options.eps)
    if (!(e > 0.0 && e <= 1.0))
      throw InputError("perturbation sizes must lie in (0, 1]");
  const MartingaleField& field = *problem.field;
  auto noise = BrownianIncrements::generate(options.seed, options.n_paths,
                                            problem.grid.n_steps(),
                                            field.brownian_dim(),
                                            problem.grid.dt(), exec);
  const PathBundle bar =
      simulate_state(field, *problem.drift, ubar, problem.x0, problem.grid, noise, exec);
  const std::vector<double> j_bar = path_costs(problem, bar);

  auto base = std::make_shared<const ControlPath>(bar.u);
  auto dir = std::make_shared<const ControlPath>(evaluate_along(u, bar).minus(bar.u));

  GateauxReport rep;
  rep.eps = options.eps;
  rep.noise_checksum = noise->checksum();
  std::vector<std::vector<double>> quotients;
  for (double e : options.eps) {
    const PathBundle pert =
        simulate_state(field, *problem.drift, ControlLaw::realized(base, dir, e),
                       problem.x0, problem.grid, noise, exec);
    if (pert.noise_checksum() != rep.noise_checksum)
      throw SimulationError(0, 0, "common random numbers were not reused");
    quotients.push_back(paired_difference(path_costs(problem, pert), j_bar, 1.0 / e));
    rep.fd.push_back(estimate(quotients.back()));
  }

  // Richardson extrapolation of FD(eps) = D + c eps from the two smallest eps.
  std::vector<std::size_t> order(options.eps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return options.eps[a] < options.eps[b]; });
  const std::size_t i1 = order[0], i2 = order[1];
  const double e1 = options.eps[i1], e2 = options.eps[i2];
  std::vector<double> extrap(bar.n_paths);
  for (std::size_t p = 0; p < bar.n_paths; ++p)
    extrap[p] = (e2 * quotients[i1][p] - e1 * quotients[i2][p]) / (e2 - e1);
  rep.extrapolated = estimate(extrap);

  const PathBundle hat = simulate_variational(field, *problem.drift, bar, *dir, exec);
  const std::size_t N = problem.grid.n_steps();
  const double dt = problem.grid.dt();
  const auto d = idx(problem.state_dim());
  const auto k = idx(problem.control_dim());
  std::vector<double> formula(bar.n_paths), terms(N);
  Vec fx(d), fu(k), px(d);
  for (std::size_t p = 0; p < bar.n_paths; ++p) {
    for (std::size_t n = 0; n < N; ++n) {
      const double t = problem.grid.t(n);
      problem.cost->running_grad_x(t, bar.state(p, n), bar.control(p, n), fx);
      problem.cost->running_grad_u(t, bar.state(p, n), bar.control(p, n), fu);
      terms[n] = fx.dot(hat.state(p, n)) + fu.dot(dir->value(p, n));
    }
    problem.cost->terminal_grad(bar.state(p, N), px);
    formula[p] = pairwise_sum(terms) * dt + px.dot(hat.state(p, N));
  }
  rep.formula = estimate(formula);
  rep.discrepancy = estimate(paired_difference(extrap, formula, 1.0));
  const double roundoff =
      options.roundoff * (1.0 + std::abs(estimate(j_bar).mean)) / e1;
  rep.tolerance = std::max({3.0 * rep.discrepancy.se,
                            options.rel_tol * std::abs(rep.formula.mean),
                            options.abs_tol}) +
                  roundoff;
  rep.pass = std::abs(rep.discrepancy.mean) <= rep.tolerance;
  return rep;
}

VIReport variational_inequality_scan(const Problem& problem,
                                     const PathBundle& bar,
                                     const AdjointTriple& adj,
                                     const std::vector<ControlLaw>& candidates,
                                     double relative_floor,
                                     const ExecOptions& exec) {
  problem.validate();
  if (!(adj.grid == bar.grid) || adj.n_paths != bar.n_paths)
    throw InputError("adjoint was not solved along this reference bundle");
  const MartingaleField& field = *problem.field;
  const std::size_t N = bar.grid.n_steps();
  const std::size_t P = bar.n_paths;
  const auto d = idx(problem.state_dim());
  const auto k = idx(problem.control_dim());
  VIReport rep;
  rep.min_mean = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const ControlPath du = evaluate_along(candidates[c], bar).minus(bar.u);
    std::vector<double> prod(P * N), mag(P * N);
    parallel_for(P, exec, [&](std::size_t begin, std::size_t end) {
      FieldWorkspace ws(field);
      Mat bu(d, k);
      Vec a(k), g(k), f(k);
      for (std::size_t p = begin; p < end; ++p) {
        for (std::size_t n = 0; n < N; ++n) {
          const double t = bar.grid.t(n);
          ConstVecMap xb = bar.state(p, n);
          ConstVecMap ub = bar.control(p, n);
          problem.drift->jacobian_u(t, xb, ub, bu);
          kernel::gemv_t(bu, adj.y_hat(p, n).data(), a.data(), false);
          field.trace_form_grad_u_into(adj.z_at(p, n), t, xb, ub, g, ws);
          problem.cost->running_grad_u(t, xb, ub, f);
          ConstVecMap v = du.value(p, n);
          prod[n * P + p] = (a + g + f).dot(v);
          mag[n * P + p] =
              (a.cwiseAbs() + g.cwiseAbs() + f.cwiseAbs()).dot(v.cwiseAbs());
        }
      }
    });
    std::vector<Estimate> node_est(N);
    std::vector<double> node_scale(N);
    for (std::size_t n = 0; n < N; ++n) {
      node_est[n] = estimate(std::span<const double>(prod.data() + n * P, P));
      node_scale[n] =
          pairwise_sum(std::span<const double>(mag.data() + n * P, P)) /
          static_cast<double>(P);
      const double bound = -3.0 * node_est[n].se - relative_floor * node_scale[n];
      if (node_est[n].mean < bound) ++rep.violations;
      if (node_est[n].mean < rep.min_mean) {
        rep.min_mean = node_est[n].mean;
        rep.argmin_candidate = c;
        rep.argmin_node = n;
        rep.at_min = node_est[n];
      }
    }
    rep.residual.push_back(std::move(node_est));
    rep.scale.push_back(std::move(node_scale));
  }
  if (candidates.empty()) rep.min_mean = 0.0;
  rep.pass = rep.violations == 0;
  return rep;
}

namespace {

/// Smooth unit-norm open-loop direction built from cosine modes.
Mat random_direction(std::size_t k, const TimeGrid& grid, std::size_t modes,
                     NormalStream& rng) {
  const std::size_t nodes = grid.nodes();
  Mat a(idx(k), idx(modes));
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.next();
  Mat table = Mat::Zero(idx(k), idx(nodes));
  for (std::size_t n = 0; n < nodes; ++n) {
    const double s = grid.t(n) / grid.horizon();
    for (std::size_t i = 0; i < modes; ++i)
      table.col(idx(n)) +=
          a.col(idx(i)) * std::cos(std::numbers::pi * static_cast<double>(i) * s);
  }
  double norm2 = 0.0;
  for (std::size_t n = 0; n + 1 < nodes; ++n)
    norm2 += table.col(idx(n)).squaredNorm() * grid.dt();
  if (norm2 > 0.0) table /= std::sqrt(norm2);
  return table;
}

ControlPath project(ControlPath values, const ControlLaw& law) {
  if (law.unconstrained()) return values;
  const std::size_t rows = values.is_shared() ? 1 : values.n_paths();
  for (std::size_t p = 0; p < rows; ++p)
    for (std::size_t n = 0; n < values.n_nodes(); ++n) {
      double* v = values.at(p, n);
      for (std::size_t j = 0; j < values.control_dim(); ++j)
        v[j] = std::clamp(v[j], law.lower()(idx(j)), law.upper()(idx(j)));
    }
  return values;
}

}  // namespace

SufficiencyReport sufficiency_check(const Problem& problem, const ControlLaw& ubar,
                                    const AdjointTriple& adj,
                                    const PathBundle& bar,
                                    const SufficiencyOptions& options,
                                    const std::vector<ControlLaw>& extra,
                                    const ExecOptions& exec) {
  problem.validate();
  if (!(adj.grid == bar.grid) || adj.n_paths != bar.n_paths)
    throw InputError("adjoint was not solved along this reference bundle");
  const MartingaleField& field = *problem.field;
  const std::vector<double> j_bar = path_costs(problem, bar);
  SufficiencyReport rep;
  rep.j_bar = estimate(j_bar);
  const double floor = options.roundoff * (1.0 + std::abs(rep.j_bar.mean));
  const std::size_t k = problem.control_dim();

  auto record = [&](std::string label, const PathBundle& b, double l2) {
    SufficiencySample s;
    s.label = std::move(label);
    s.l2_norm = l2;
    s.diff = estimate(paired_difference(path_costs(problem, b), j_bar, 1.0));
    rep.samples.push_back(std::move(s));
  };

  for (std::size_t s = 0; s < options.n_samples; ++s) {
    NormalStream rng(options.seed, s);
    const Mat table = random_direction(k, problem.grid, options.modes, rng);
    ControlPath values = bar.u.plus_scaled(ControlPath::shared(bar.n_paths, table), 1.0);
    values = project(std::move(values), ubar);
    auto base = std::make_shared<const ControlPath>(std::move(values));
    const double l2 = std::sqrt(base->minus(bar.u).mean_l2_squared(problem.grid.dt()));
    const PathBundle b = simulate_state(field, *problem.drift, ControlLaw::realized(base),
                                        problem.x0, problem.grid, bar.noise, exec);
    record("random-" + std::to_string(s), b, l2);
  }
  for (std::size_t c = 0; c < extra.size(); ++c) {
    const PathBundle b = simulate_state(field, *problem.drift, extra[c], problem.x0,
                                        problem.grid, bar.noise, exec);
    const double l2 = std::sqrt(b.u.minus(bar.u).mean_l2_squared(problem.grid.dt()));
    record("candidate-" + std::to_string(c), b, l2);
  }

  rep.pass = true;
  rep.min_diff = std::numeric_limits<double>::infinity();
  bool any_se = false;
  std::vector<double> means;
  for (const auto& s : rep.samples) {
    if (s.diff.mean < -3.0 * s.diff.se - floor) rep.pass = false;
    rep.min_diff = std::min(rep.min_diff, s.diff.mean);
    if (s.diff.se > 0.0) {
      const double z = s.diff.mean / s.diff.se;
      rep.min_z = any_se ? std::min(rep.min_z, z) : z;
      any_se = true;
    }
    means.push_back(s.diff.mean);
  }
  if (rep.samples.empty()) rep.min_diff = 0.0;
  rep.mean_excess = estimate(means);

  // Midpoint convexity of H in (x, u) with (y, z) frozen, and of Phi.
  NormalStream rng(options.seed, 1u << 20);
  const auto d = idx(problem.state_dim());
  const std::size_t trials = 200;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto p = static_cast<std::size_t>(rng.next_uniform() * static_cast<double>(bar.n_paths));
    const auto n = static_cast<std::size_t>(rng.next_uniform() *
                                            static_cast<double>(bar.grid.n_steps()));
    const Vec xb = bar.state(p, n), ub = bar.control(p, n);
    const Vec y = adj.y_hat(p, n);
    const Mat z = adj.z_at(p, n);
    Vec x1 = xb, x2 = xb, u1 = ub, u2 = ub;
    for (Eigen::Index j = 0; j < d; ++j) {
      x1(j) += rng.next() * (1.0 + std::abs(xb(j)));
      x2(j) += rng.next() * (1.0 + std::abs(xb(j)));
    }
    for (Eigen::Index j = 0; j < idx(k); ++j) {
      u1(j) += rng.next() * (1.0 + std::abs(ub(j)));
      u2(j) += rng.next() * (1.0 + std::abs(ub(j)));
    }
    const double t = bar.grid.t(n);
    const double h1 = hamiltonian(problem, t, x1, u1, y, z, xb, ub);
    const double h2 = hamiltonian(problem, t, x2, u2, y, z, xb, ub);
    const double hm = hamiltonian(problem, t, 0.5 * (x1 + x2), 0.5 * (u1 + u2), y, z, xb, ub);
    const double tol = 1e-9 * (1.0 + std::abs(h1) + std::abs(h2));
    if (hm > 0.5 * (h1 + h2) + tol) ++rep.convexity_violations;
    const double p1 = problem.cost->terminal(x1), p2 = problem.cost->terminal(x2);
    const double pm = problem.cost->terminal(0.5 * (x1 + x2));
    if (pm > 0.5 * (p1 + p2) + 1e-9 * (1.0 + std::abs(p1) + std::abs(p2)))
      ++rep.convexity_violations;
  }
  rep.convexity_warning = rep.convexity_violations > 0;
  return rep;
}

}  // namespace smpf
