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

#include "smpf/forward_sde.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "smpf/errors.hpp"

namespace smpf {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void require_scalar(std::size_t d, std::size_t k, const std::string& name) {
  if (d != 1 || k != 1)
    throw InputError("drift '" + name + "' is scalar (state_dim = control_dim = 1)");
}

}  // namespace

TimeGrid::TimeGrid(double horizon, std::size_t n_steps)
    : horizon_(horizon), n_steps_(n_steps) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
    throw InputError("time horizon must be positive and finite");
  if (n_steps_ == 0) throw InputError("time grid needs at least one step");
}

LinearDrift::LinearDrift(MatrixSchedule A, MatrixSchedule B, MatrixSchedule c)
    : Drift(static_cast<std::size_t>(A.rows()),
            static_cast<std::size_t>(B.cols())),
      A_(std::move(A)),
      B_(std::move(B)),
      c_(std::move(c)) {
  if (A_.empty() || B_.empty()) throw InputError("linear drift needs A and B");
  if (A_.rows() != A_.cols()) throw InputError("linear drift A must be square");
  if (B_.rows() != A_.rows())
    throw InputError("linear drift B must have as many rows as A");
  if (!c_.empty() && (c_.rows() != A_.rows() || c_.cols() != 1))
    throw InputError("linear drift offset must be a column of length d");
}

void LinearDrift::eval(double t, ConstVecRef x, ConstVecRef u,
                       VecRef out) const {
  kernel::gemv(A_.at(t), x.data(), out.data(), false);
  kernel::gemv(B_.at(t), u.data(), out.data(), true);
  if (!c_.empty()) {
    const Mat& c = c_.at(t);
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += c(i, 0);
  }
}

void LinearDrift::jacobian_x(double t, ConstVecRef, ConstVecRef,
                             MatRef out) const {
  kernel::copy(A_.at(t), out.data(), out.outerStride());
}

void LinearDrift::jacobian_u(double t, ConstVecRef, ConstVecRef,
                             MatRef out) const {
  kernel::copy(B_.at(t), out.data(), out.outerStride());
}

FunctionDrift::FunctionDrift(std::size_t state_dim, std::size_t control_dim,
                             EvalFn eval, JacFn jac_x, JacFn jac_u)
    : Drift(state_dim, control_dim),
      eval_(std::move(eval)),
      jac_x_(std::move(jac_x)),
      jac_u_(std::move(jac_u)) {
  if (!eval_ || !jac_x_ || !jac_u_)
    throw InputError("function drift needs eval, jacobian_x and jacobian_u");
}

namespace {

void populate_drift_library(Library<std::shared_ptr<const Drift>>& lib) {
  lib.add("zero", "b = 0",
          [](const ParamBlock& p, std::size_t d, std::size_t k)
              -> std::shared_ptr<const Drift> {
            p.require_only({}, "drift 'zero'");
            return std::make_shared<LinearDrift>(
                MatrixSchedule(Mat::Zero(idx(d), idx(d))),
                MatrixSchedule(Mat::Zero(idx(d), idx(k))));
          });
  lib.add("linear", "b = A x + B u + c",
          [](const ParamBlock& p, std::size_t d, std::size_t k)
              -> std::shared_ptr<const Drift> {
            p.require_only({"A", "B", "c"}, "drift 'linear'");
            MatrixSchedule c;
            if (p.has("c")) c = MatrixSchedule(Mat(p.vector("c")));
            auto drift = std::make_shared<LinearDrift>(
                MatrixSchedule(p.matrix_or("A", Mat::Zero(idx(d), idx(d)))),
                MatrixSchedule(p.matrix_or("B", Mat::Zero(idx(d), idx(k)))),
                std::move(c));
            if (drift->state_dim() != d || drift->control_dim() != k)
              throw InputError("drift 'linear' has the wrong dimensions");
            return drift;
          });
  lib.add("bilinear", "scalar b = a x + b u + c x u",
          [](const ParamBlock& p, std::size_t d, std::size_t k)
              -> std::shared_ptr<const Drift> {
            p.require_only({"a", "b", "c"}, "drift 'bilinear'");
            require_scalar(d, k, "bilinear");
            const double a = p.scalar_or("a", 0.0);
            const double b = p.scalar_or("b", 1.0);
            const double c = p.scalar_or("c", 0.0);
            return std::make_shared<FunctionDrift>(
                1, 1,
                [=](double, ConstVecRef x, ConstVecRef u, VecRef out) {
                  out(0) = a * x(0) + b * u(0) + c * x(0) * u(0);
                },
                [=](double, ConstVecRef, ConstVecRef u, MatRef out) {
                  out(0, 0) = a + c * u(0);
                },
                [=](double, ConstVecRef x, ConstVecRef, MatRef out) {
                  out(0, 0) = b + c * x(0);
                });
          });
}

}  // namespace

Library<std::shared_ptr<const Drift>>& drift_library() {
  static Library<std::shared_ptr<const Drift>>& lib = *[] {
    auto* l = new Library<std::shared_ptr<const Drift>>();
    populate_drift_library(*l);
    return l;
  }();
  return lib;
}

ControlPath::ControlPath(std::size_t n_paths, std::size_t n_nodes,
                         std::size_t control_dim)
    : n_paths_(n_paths),
      n_nodes_(n_nodes),
      k_(control_dim),
      values_(n_paths * n_nodes * control_dim, 0.0) {}

ControlPath ControlPath::shared(std::size_t n_paths, const Mat& per_node) {
  ControlPath c;
  c.n_paths_ = n_paths;
  c.n_nodes_ = static_cast<std::size_t>(per_node.cols());
  c.k_ = static_cast<std::size_t>(per_node.rows());
  c.shared_ = true;
  c.values_.assign(per_node.data(), per_node.data() + per_node.size());
  return c;
}

ControlPath ControlPath::plus_scaled(const ControlPath& other,
                                     double scale) const {
  if (other.n_nodes_ != n_nodes_ || other.k_ != k_ ||
      other.n_paths_ != n_paths_)
    throw InputError("control paths differ in shape");
  if (shared_ && other.shared_) {
    ControlPath c = *this;
    for (std::size_t i = 0; i < values_.size(); ++i)
      c.values_[i] += scale * other.values_[i];
    return c;
  }
  ControlPath c(n_paths_, n_nodes_, k_);
  for (std::size_t p = 0; p < n_paths_; ++p) {
    for (std::size_t n = 0; n < n_nodes_; ++n) {
      const double* a = at(p, n);
      const double* b = other.at(p, n);
      double* o = c.at(p, n);
      for (std::size_t j = 0; j < k_; ++j) o[j] = a[j] + scale * b[j];
    }
  }
  return c;
}

ControlPath ControlPath::minus(const ControlPath& other) const {
  return plus_scaled(other, -1.0);
}

double ControlPath::mean_l2_squared(double dt) const {
  if (n_nodes_ < 2 || n_paths_ == 0) return 0.0;
  const std::size_t rows = shared_ ? 1 : n_paths_;
  std::vector<double> per_path(rows);
  for (std::size_t p = 0; p < rows; ++p) {
    double s = 0.0;
    for (std::size_t n = 0; n + 1 < n_nodes_; ++n) {
      const double* v = at(p, n);
      for (std::size_t j = 0; j < k_; ++j) s += v[j] * v[j];
    }
    per_path[p] = s * dt;
  }
  return pairwise_sum(per_path) / static_cast<double>(rows);
}

ControlLaw ControlLaw::constant(const Vec& value) {
  if (value.size() == 0) throw InputError("constant control needs k >= 1");
  ControlLaw law;
  law.kind_ = Kind::OpenLoop;
  law.k_ = static_cast<std::size_t>(value.size());
  law.table_ = value;
  return law;
}

ControlLaw ControlLaw::table(const Mat& per_node) {
  if (per_node.size() == 0) throw InputError("control table is empty");
  ControlLaw law;
  law.kind_ = Kind::OpenLoop;
  law.k_ = static_cast<std::size_t>(per_node.rows());
  law.table_ = per_node;
  return law;
}

ControlLaw ControlLaw::feedback(std::size_t control_dim, FeedbackFn fn) {
  if (!fn) throw InputError("feedback control needs a function");
  if (control_dim == 0) throw InputError("feedback control needs k >= 1");
  ControlLaw law;
  law.kind_ = Kind::Feedback;
  law.k_ = control_dim;
  law.feedback_ = std::move(fn);
  return law;
}

ControlLaw ControlLaw::linear_feedback(std::vector<Mat> gains) {
  if (gains.empty()) throw InputError("linear feedback needs at least one gain");
  const auto k = static_cast<std::size_t>(gains[0].rows());
  auto shared = std::make_shared<const std::vector<Mat>>(std::move(gains));
  return feedback(k, [shared](std::size_t node, double, ConstVecRef x,
                              VecRef u) {
    const Mat& K = (*shared)[std::min(node, shared->size() - 1)];
    kernel::gemv(K, x.data(), u.data(), false);
    u = -u;
  });
}

ControlLaw ControlLaw::realized(std::shared_ptr<const ControlPath> base,
                                std::shared_ptr<const ControlPath> direction,
                                double eps) {
  if (!base) throw InputError("realized control needs base values");
  if (direction &&
      (direction->n_nodes() != base->n_nodes() ||
       direction->control_dim() != base->control_dim() ||
       direction->n_paths() != base->n_paths()))
    throw InputError("realized control direction differs in shape from base");
  ControlLaw law;
  law.kind_ = Kind::Realized;
  law.k_ = base->control_dim();
  law.base_ = std::move(base);
  law.direction_ = std::move(direction);
  law.eps_ = eps;
  return law;
}

ControlLaw ControlLaw::with_box(const Vec& lower, const Vec& upper) const {
  if (static_cast<std::size_t>(lower.size()) != k_ ||
      static_cast<std::size_t>(upper.size()) != k_)
    throw InputError("control box bounds must have length k");
  if ((lower.array() > upper.array()).any())
    throw InputError("control box has lower > upper");
  ControlLaw law = *this;
  law.lower_ = lower;
  law.upper_ = upper;
  return law;
}

void ControlLaw::evaluate(std::size_t path, std::size_t node, double t,
                          ConstVecRef x, VecRef out) const {
  switch (kind_) {
    case Kind::OpenLoop:
      out = table_.col(std::min<Eigen::Index>(idx(node), table_.cols() - 1));
      break;
    case Kind::Feedback:
      feedback_(node, t, x, out);
      break;
    case Kind::Realized:
      out = base_->value(path, node);
      if (direction_) out += eps_ * direction_->value(path, node);
      break;
  }
  if (lower_.size() != 0) out = out.cwiseMax(lower_).cwiseMin(upper_);
}

bool ControlLaw::path_independent() const {
  if (kind_ == Kind::OpenLoop) return true;
  if (kind_ == Kind::Realized)
    return base_->is_shared() && (!direction_ || direction_->is_shared());
  return false;
}

bool shares_noise(const PathBundle& a, const PathBundle& b) {
  if (!a.noise || !b.noise) return false;
  if (a.noise == b.noise) return true;
  return a.noise->n_paths() == b.noise->n_paths() &&
         a.noise->n_steps() == b.noise->n_steps() &&
         a.noise->dim() == b.noise->dim() &&
         a.noise->checksum() == b.noise->checksum();
}

PathBundle simulate_state(const MartingaleField& field, const Drift& drift,
                          const ControlLaw& law, const Vec& x0,
                          const TimeGrid& grid, std::size_t n_paths,
                          std::uint64_t seed, const ExecOptions& exec) {
  if (n_paths == 0) throw InputError("simulation needs n_paths >= 1");
  auto noise = BrownianIncrements::generate(seed, n_paths, grid.n_steps(),
                                            field.brownian_dim(), grid.dt(),
                                            exec);
  return simulate_state(field, drift, law, x0, grid, std::move(noise), exec);
}

PathBundle simulate_state(const MartingaleField& field, const Drift& drift,
                          const ControlLaw& law, const Vec& x0,
                          const TimeGrid& grid,
                          std::shared_ptr<const BrownianIncrements> noise,
                          const ExecOptions& exec) {
  const std::size_t d = field.state_dim();
  const std::size_t k = field.control_dim();
  if (drift.state_dim() != d || drift.control_dim() != k)
    throw InputError("drift and field dimensions disagree");
  if (law.control_dim() != k)
    throw InputError("control law has dimension " +
                     std::to_string(law.control_dim()) + ", field expects " +
                     std::to_string(k));
  if (static_cast<std::size_t>(x0.size()) != d)
    throw InputError("x0 has dimension " + std::to_string(x0.size()) +
                     ", field expects " + std::to_string(d));
  if (!x0.allFinite()) throw InputError("x0 must be finite");
  if (!noise) throw InputError("simulation needs Brownian increments");
  if (noise->n_steps() != grid.n_steps() ||
      noise->dim() != field.brownian_dim() ||
      std::abs(noise->dt() - grid.dt()) > 1e-12 * grid.dt())
    throw InputError("Brownian increments do not match the grid and field");

  PathBundle b;
  b.grid = grid;
  b.n_paths = noise->n_paths();
  b.state_dim = d;
  b.control_dim = k;
  b.noise = noise;
  const std::size_t nodes = grid.nodes();
  const std::size_t N = grid.n_steps();
  const double dt = grid.dt();
  b.x.resize(b.n_paths * nodes * d);

  const bool shared = law.path_independent();
  if (shared) {
    Mat table(idx(k), idx(nodes));
    Vec u(idx(k));
    for (std::size_t n = 0; n < nodes; ++n) {
      law.evaluate(0, n, grid.t(n), x0, u);
      table.col(idx(n)) = u;
    }
    b.u = ControlPath::shared(b.n_paths, table);
  } else {
    b.u = ControlPath(b.n_paths, nodes, k);
  }

  parallel_for(b.n_paths, exec, [&](std::size_t begin, std::size_t end) {
    FieldWorkspace ws(field);
    Vec drift_val(idx(d)), dm(idx(d)), u(idx(k));
    for (std::size_t p = begin; p < end; ++p) {
      double* xp = b.x.data() + p * nodes * d;
      std::copy(x0.data(), x0.data() + d, xp);
      const double* dW = noise->path_data(p);
      for (std::size_t n = 0; n <= N; ++n) {
        ConstVecMap xn(xp + n * d, idx(d));
        const double t = grid.t(n);
        if (shared) {
          u = b.u.value(p, n);
        } else {
          law.evaluate(p, n, t, xn, u);
          if (!u.allFinite())
            throw SimulationError(p, n, "non-finite control");
          std::copy(u.data(), u.data() + k, b.u.at(p, n));
        }
        if (n == N) break;
        drift.eval(t, xn, u, drift_val);
        field.increment_into(t, xn, u, dW + n * field.brownian_dim(), dm, ws);
        VecMap next(xp + (n + 1) * d, idx(d));
        next = xn + drift_val * dt + dm;
        if (!next.allFinite()) throw SimulationError(p, n, "non-finite state");
      }
    }
  });
  return b;
}

PathBundle simulate_variational(const MartingaleField& field, const Drift& drift,
                                const PathBundle& bar, const ControlPath& du,
                                const ExecOptions& exec) {
  const std::size_t d = field.state_dim();
  const std::size_t k = field.control_dim();
  const std::size_t nodes = bar.grid.nodes();
  if (bar.state_dim != d || bar.control_dim != k)
    throw InputError("reference bundle does not match the field");
  if (drift.state_dim() != d || drift.control_dim() != k)
    throw InputError("drift and field dimensions disagree");
  if (du.n_nodes() != nodes || du.control_dim() != k ||
      du.n_paths() != bar.n_paths)
    throw InputError("direction table does not match the reference grid/paths");
  if (!bar.noise) throw InputError("reference bundle carries no increments");

  PathBundle h;
  h.grid = bar.grid;
  h.n_paths = bar.n_paths;
  h.state_dim = d;
  h.control_dim = k;
  h.noise = bar.noise;
  h.u = du;
  h.x.assign(h.n_paths * nodes * d, 0.0);
  const std::size_t N = bar.grid.n_steps();
  const double dt = bar.grid.dt();
  const std::size_t m = field.brownian_dim();

  parallel_for(h.n_paths, exec, [&](std::size_t begin, std::size_t end) {
    FieldWorkspace ws(field);
    Mat bx(idx(d), idx(d)), bu(idx(d), idx(k));
    Vec dm(idx(d)), lin(idx(d));
    for (std::size_t p = begin; p < end; ++p) {
      double* hp = h.x.data() + p * nodes * d;
      const double* dW = bar.noise->path_data(p);
      for (std::size_t n = 0; n < N; ++n) {
        const double t = bar.grid.t(n);
        ConstVecMap xbar = bar.state(p, n);
        ConstVecMap ubar = bar.control(p, n);
        ConstVecMap xh(hp + n * d, idx(d));
        ConstVecMap dv = du.value(p, n);
        drift.jacobian_x(t, xbar, ubar, bx);
        drift.jacobian_u(t, xbar, ubar, bu);
        field.variational_increment_into(t, xbar, ubar, xh, dv, dW + n * m, dm,
                                         ws);
        VecMap next(hp + (n + 1) * d, idx(d));
        kernel::gemv(bx, xh.data(), lin.data(), false);
        kernel::gemv(bu, dv.data(), lin.data(), true);
        next = xh + lin * dt + dm;
        if (!next.allFinite())
          throw SimulationError(p, n, "non-finite variational state");
      }
    }
  });
  return h;
}

Mat ito_integral(const MartingaleField& field, const PathBundle& bundle) {
  const std::size_t d = field.state_dim();
  if (bundle.state_dim != d || bundle.control_dim != field.control_dim() ||
      !bundle.noise || bundle.noise->dim() != field.brownian_dim())
    throw InputError("bundle was not simulated on this field");
  Mat out = Mat::Zero(idx(bundle.n_paths), idx(d));
  FieldWorkspace ws(field);
  Vec dm(idx(d)), acc(idx(d));
  for (std::size_t p = 0; p < bundle.n_paths; ++p) {
    acc.setZero();
    for (std::size_t n = 0; n < bundle.grid.n_steps(); ++n) {
      field.increment_into(bundle.grid.t(n), bundle.state(p, n),
                           bundle.control(p, n), bundle.dW(p, n).data(), dm, ws);
      acc += dm;
    }
    out.row(idx(p)) = acc.transpose();
  }
  return out;
}

CovariationResult realized_covariation(const MartingaleField& field,
                                       const PathBundle& X,
                                       const PathBundle& Y) {
  const std::size_t d = field.state_dim();
  if (!(X.grid == Y.grid) || X.n_paths != Y.n_paths)
    throw InputError("covariation bundles must share grid and paths");
  if (!shares_noise(X, Y))
    throw InputError("covariation bundles must share Brownian increments");
  if (X.state_dim != d || Y.state_dim != d)
    throw InputError("bundle was not simulated on this field");
  CovariationResult r;
  r.realized.reserve(X.n_paths);
  r.predicted.reserve(X.n_paths);
  FieldWorkspace ws(field);
  const auto m = idx(field.brownian_dim());
  Mat sx(idx(d), m), sy(idx(d), m);
  Vec dx(idx(d)), dy(idx(d));
  std::vector<double> sq(X.n_paths);
  const double dt = X.grid.dt();
  for (std::size_t p = 0; p < X.n_paths; ++p) {
    Mat real = Mat::Zero(idx(d), idx(d));
    Mat pred = Mat::Zero(idx(d), idx(d));
    for (std::size_t n = 0; n < X.grid.n_steps(); ++n) {
      const double t = X.grid.t(n);
      field.sigma_into(t, X.state(p, n), X.control(p, n), sx, ws);
      field.sigma_into(t, Y.state(p, n), Y.control(p, n), sy, ws);
      ConstVecMap w(X.dW(p, n).data(), m);
      dx.noalias() = sx * w;
      dy.noalias() = sy * w;
      real.noalias() += dx * dy.transpose();
      pred.noalias() += (sx * sy.transpose()) * dt;
    }
    sq[p] = (real - pred).squaredNorm();
    r.realized.push_back(std::move(real));
    r.predicted.push_back(std::move(pred));
  }
  r.rms_discrepancy =
      std::sqrt(pairwise_sum(sq) / static_cast<double>(X.n_paths));
  return r;
}

namespace {

void require_crn(const PathBundle& a, const PathBundle& b, const char* what) {
  if (!(a.grid == b.grid) || a.n_paths != b.n_paths ||
      a.state_dim != b.state_dim)
    throw InputError(std::string(what) + ": bundles differ in grid or shape");
  if (!shares_noise(a, b))
    throw InputError(std::string(what) +
                     ": bundles must share Brownian increments");
}

template <typename Sample>
NodeProfile node_profile(const PathBundle& bar, Sample&& sample) {
  NodeProfile out;
  const std::size_t nodes = bar.grid.nodes();
  out.nodes.resize(nodes);
  std::vector<double> values(bar.n_paths);
  for (std::size_t n = 0; n < nodes; ++n) {
    for (std::size_t p = 0; p < bar.n_paths; ++p) values[p] = sample(p, n);
    out.nodes[n] = estimate(values);
    if (n == 0 || out.nodes[n].mean > out.sup) {
      out.sup = out.nodes[n].mean;
      out.argsup = n;
    }
  }
  return out;
}

}  // namespace

NodeProfile perturbation_gap(const PathBundle& bar, double eps,
                             const PathBundle& pert) {
  if (!(eps >= 0.0 && eps <= 1.0))
    throw InputError("perturbation size must lie in [0, 1]");
  require_crn(bar, pert, "perturbation_gap");
  return node_profile(bar, [&](std::size_t p, std::size_t n) {
    return (pert.state(p, n) - bar.state(p, n)).squaredNorm();
  });
}

NodeProfile remainder_profile(const PathBundle& bar, double eps,
                              const PathBundle& pert, const PathBundle& hat) {
  if (!(eps > 0.0 && eps <= 1.0))
    throw InputError("remainder needs a perturbation size in (0, 1]");
  require_crn(bar, pert, "remainder_profile");
  require_crn(bar, hat, "remainder_profile");
  return node_profile(bar, [&](std::size_t p, std::size_t n) {
    return ((pert.state(p, n) - bar.state(p, n)) / eps - hat.state(p, n))
        .squaredNorm();
  });
}

void write_paths_csv(const PathBundle& bundle, const std::string& file,
                     const std::string& config_hash, std::size_t max_paths) {
  std::ofstream out(file);
  if (!out) throw InputError("cannot write '" + file + "'");
  out << "# config_hash=" << config_hash << " seed=" << bundle.seed() << "\n";
  out << "path_id,t";
  for (std::size_t i = 1; i <= bundle.state_dim; ++i) out << ",x_" << i;
  for (std::size_t j = 1; j <= bundle.control_dim; ++j) out << ",u_" << j;
  out << "\n" << std::setprecision(17);
  const std::size_t paths = std::min(max_paths, bundle.n_paths);
  for (std::size_t p = 0; p < paths; ++p) {
    for (std::size_t n = 0; n < bundle.grid.nodes(); ++n) {
      out << p << ',' << bundle.grid.t(n);
      const auto x = bundle.state(p, n);
      for (Eigen::Index i = 0; i < x.size(); ++i) out << ',' << x(i);
      const auto u = bundle.control(p, n);
      for (Eigen::Index j = 0; j < u.size(); ++j) out << ',' << u(j);
      out << '\n';
    }
  }
}

}  // namespace smpf
