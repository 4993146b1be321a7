#include "curvlab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "curvlab/chern.hpp"
#include "curvlab/error.hpp"
#include "curvlab/parallel.hpp"

namespace curvlab {

HermitianMatrix thcf_velocity(const MetricJet2& jet, const TauParam& tau) {
  require(tau.role() == TauRole::Source, "thcf_velocity: tau must be a source-role parameter");
  if (tau.value() == 0.0) fail(ErrorKind::Config, "thcf_velocity: tau must be positive");
  const ChernPackage pkg = chern_package(jet);
  const CMatrix v = -ric_tau(pkg, tau).matrix() - jet.g.matrix();
  return HermitianMatrix::hermitian_part(v);
}

const char* to_string(Boundary b) { return b == Boundary::Frozen ? "frozen" : "periodic"; }

Boundary parse_boundary(const std::string& name) {
  if (name == "frozen") return Boundary::Frozen;
  if (name == "periodic") return Boundary::Periodic;
  fail(ErrorKind::Config, "unknown boundary policy '" + name + "' (frozen or periodic)");
}

const char* to_string(Stepper s) { return s == Stepper::Euler ? "euler" : "heun"; }

Stepper parse_stepper(const std::string& name) {
  if (name == "euler") return Stepper::Euler;
  if (name == "heun") return Stepper::Heun;
  fail(ErrorKind::Config, "unknown stepper '" + name + "' (euler or heun)");
}

GridMetricField::GridMetricField(std::size_t n, const CVector& center, double half_width,
                                 std::size_t resolution, Boundary boundary)
    : n_(n), res_(resolution), boundary_(boundary) {
  if (n != 1 && n != 2) fail(ErrorKind::Config, "flow grids support n = 1 or 2");
  if (resolution < 5) fail(ErrorKind::Config, "grid resolution must be at least 5");
  if (!(half_width > 0.0) || !std::isfinite(half_width)) fail(ErrorKind::Config, "grid extent must be positive");
  require(static_cast<std::size_t>(center.size()) == n, "grid centre has wrong dimension");
  // Periodic lattices leave out the far edge so the wrap has uniform spacing.
  dx_ = boundary == Boundary::Periodic ? 2.0 * half_width / static_cast<double>(res_)
                                       : 2.0 * half_width / static_cast<double>(res_ - 1);
  origin_ = center - CVector::Constant(static_cast<Eigen::Index>(n), cplx(half_width, half_width));
  std::size_t count = 1;
  for (std::size_t a = 0; a < 2 * n; ++a) count *= res_;
  values_.assign(count, HermitianMatrix::identity(n));
}

GridMetricField GridMetricField::sample(const MetricSpec& spec, const CVector& center, double half_width,
                                        std::size_t resolution, Boundary boundary) {
  GridMetricField f(spec.dim(), center, half_width, resolution, boundary);
  for (std::size_t k = 0; k < f.node_count(); ++k) {
    const CVector z = f.coords(k);
    if (!spec.region().contains(z))
      fail(ErrorKind::Domain, "grid node leaves the validity region of metric '" + spec.name() + "'");
    f.values_[k] = spec.value(z);
  }
  return f;
}

std::vector<std::size_t> GridMetricField::multi_index(std::size_t node) const {
  std::vector<std::size_t> idx(2 * n_);
  for (std::size_t a = 0; a < 2 * n_; ++a) {
    idx[a] = node % res_;
    node /= res_;
  }
  return idx;
}

std::size_t GridMetricField::node_at(const std::vector<long>& index) const {
  std::size_t node = 0, stride = 1;
  const long r = static_cast<long>(res_);
  for (std::size_t a = 0; a < 2 * n_; ++a) {
    long i = index[a];
    if (boundary_ == Boundary::Periodic) {
      i = ((i % r) + r) % r;
    } else if (i < 0 || i >= r) {
      fail(ErrorKind::Domain, "finite-difference stencil leaves the grid");
    }
    node += static_cast<std::size_t>(i) * stride;
    stride *= res_;
  }
  return node;
}

CVector GridMetricField::coords(std::size_t node) const {
  const std::vector<std::size_t> idx = multi_index(node);
  CVector z = origin_;
  for (std::size_t a = 0; a < 2 * n_; ++a) {
    const double s = static_cast<double>(idx[a]) * dx_;
    z(a / 2) += (a % 2 == 0) ? cplx(s, 0.0) : cplx(0.0, s);
  }
  return z;
}

std::size_t GridMetricField::center_node() const {
  return node_at(std::vector<long>(2 * n_, static_cast<long>(res_ / 2)));
}

bool GridMetricField::is_interior(std::size_t node, int reach) const {
  if (boundary_ == Boundary::Periodic) return true;
  for (std::size_t i : multi_index(node))
    if (static_cast<long>(i) < reach || static_cast<long>(i) + reach >= static_cast<long>(res_)) return false;
  return true;
}

MetricJet2 GridMetricField::jet(std::size_t node, int order) const {
  require(order == 2 || order == 4, "lattice jet order must be 2 or 4");
  const int reach = order / 2;
  if (!is_interior(node, reach)) fail(ErrorKind::Domain, "finite-difference stencil leaves the grid");
  const std::vector<std::size_t> base = multi_index(node);
  const CVector p = coords(node);
  // Stencil points are lattice points; look them up by rounding.
  MetricSampler lookup = [&](const CVector& z) -> CMatrix {
    std::vector<long> idx(2 * n_);
    for (std::size_t a = 0; a < 2 * n_; ++a) {
      const cplx d = z(a / 2) - p(a / 2);
      const double off = ((a % 2 == 0) ? d.real() : d.imag()) / dx_;
      const double r = std::round(off);
      require(std::abs(off - r) < 1e-6, "lattice lookup off the grid");
      idx[a] = static_cast<long>(base[a]) + static_cast<long>(r);
    }
    return values_[node_at(idx)].matrix();
  };
  Scheme s;
  s.h = dx_;
  s.order = order;
  s.richardson = 0;
  s.use_exact = false;
  return eval_jet2_fd(lookup, n_, p, s);
}

namespace {

std::vector<std::size_t> active_nodes(const FlowState& state) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < state.field.node_count(); ++k)
    if (state.field.is_interior(k, state.order / 2)) out.push_back(k);
  return out;
}

double max_abs_eigenvalue(const HermitianMatrix& m) {
  const RVector ev = m.eigenvalues();
  return ev.cwiseAbs().maxCoeff();
}

// One explicit update of size dt; false when some node loses positivity.
bool advance(const GridMetricField& from, const std::vector<HermitianMatrix>& velocity, double dt,
             GridMetricField& to) {
  to = from;
  for (std::size_t k = 0; k < from.node_count(); ++k) {
    const CMatrix g = from.value(k).matrix() + dt * velocity[k].matrix();
    HermitianMatrix h = HermitianMatrix::hermitian_part(g);
    if (!h.is_positive_definite()) return false;
    to.set_value(k, std::move(h));
  }
  return true;
}

bool substep(const FlowState& s, double dt, Stepper method, GridMetricField& out) {
  const std::vector<HermitianMatrix> v0 = velocity_field(s);
  if (method == Stepper::Euler) return advance(s.field, v0, dt, out);
  GridMetricField mid = s.field;
  if (!advance(s.field, v0, dt, mid)) return false;
  FlowState ms = s;
  ms.field = mid;
  const std::vector<HermitianMatrix> v1 = velocity_field(ms);
  std::vector<HermitianMatrix> avg(v0.size());
  for (std::size_t k = 0; k < v0.size(); ++k)
    avg[k] = HermitianMatrix::hermitian_part(0.5 * (v0[k].matrix() + v1[k].matrix()));
  return advance(s.field, avg, dt, out);
}

double scalar_trace(const FlowState& state, std::size_t node) {
  const CVector z = state.field.coords(node);
  const CMatrix& g = state.field.value(node).matrix();
  const CMatrix h = state.reference->evaluate(z);
  return (g.llt().solve(h)).trace().real();
}

}  // namespace

std::vector<HermitianMatrix> velocity_field(const FlowState& state) {
  const std::size_t n = state.field.dim();
  std::vector<HermitianMatrix> v(state.field.node_count(), HermitianMatrix::from(CMatrix::Zero(n, n), 0.0));
  const std::vector<std::size_t> nodes = active_nodes(state);
  parallel_for(nodes.size(), [&](std::size_t i) {
    const std::size_t k = nodes[i];
    v[k] = thcf_velocity(state.field.jet(k, state.order), state.tau);
  });
  return v;
}

double cfl_limit(const FlowState& state, const std::vector<HermitianMatrix>& velocity) {
  double lam_min = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (std::size_t k = 0; k < state.field.node_count(); ++k) {
    lam_min = std::min(lam_min, state.field.value(k).min_eigenvalue());
    vmax = std::max(vmax, max_abs_eigenvalue(velocity[k]));
  }
  if (vmax == 0.0) return std::numeric_limits<double>::infinity();
  const double dx = state.field.spacing();
  return 0.2 * dx * dx * lam_min / vmax;
}

FlowDiagnostics diagnose(const FlowState& state, const std::vector<HermitianMatrix>& velocity) {
  FlowDiagnostics d;
  d.time = state.time;
  d.sup_trace = std::numeric_limits<double>::quiet_NaN();
  d.min_eigenvalue = std::numeric_limits<double>::infinity();
  if (state.reference) d.sup_trace = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < state.field.node_count(); ++k) {
    d.max_velocity = std::max(d.max_velocity, max_abs_eigenvalue(velocity[k]));
    d.min_eigenvalue = std::min(d.min_eigenvalue, state.field.value(k).min_eigenvalue());
    if (state.reference) d.sup_trace = std::max(d.sup_trace, scalar_trace(state, k));
  }
  d.center_trace = state.field.value(state.field.center_node()).matrix().trace().real();
  return d;
}

FlowState step(const FlowState& state, double dt, Stepper method) {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::Config, "time step must be positive");
  const std::vector<HermitianMatrix> v0 = velocity_field(state);
  const double limit = cfl_limit(state, v0);
  int k = 0;
  while (k <= 8 && dt / std::ldexp(1.0, k) > limit) ++k;
  for (; k <= 8; ++k) {
    const std::size_t count = std::size_t{1} << k;
    const double h = dt / static_cast<double>(count);
    FlowState s = state;
    bool ok = true;
    for (std::size_t i = 0; i < count && ok; ++i) {
      GridMetricField next = s.field;
      ok = substep(s, h, method, next);
      if (ok) {
        s.field = std::move(next);
        s.time = state.time + static_cast<double>(i + 1) * h;
      }
    }
    if (!ok) continue;
    s.time = state.time + dt;
    FlowDiagnostics d = diagnose(s, velocity_field(s));
    d.dt = dt;
    d.substeps = count;
    s.history.push_back(d);
    return s;
  }
  fail(ErrorKind::Numerical, "flow step rejected after 8 halvings (step guard or loss of positivity)");
}

FlowState step_euler(const FlowState& state, double dt) { return step(state, dt, Stepper::Euler); }
FlowState step_heun(const FlowState& state, double dt) { return step(state, dt, Stepper::Heun); }

ParabolicResidual parabolic_schwarz_residual(const std::vector<HermitianMatrix>& velocity,
                                             const FlowState& state, double kappa0, std::size_t node) {
  if (!state.reference) fail(ErrorKind::Config, "parabolic residual needs a reference metric");
  require(velocity.size() == state.field.node_count(), "velocity field size does not match the grid");
  const GridMetricField& F = state.field;
  const std::size_t n = F.dim();
  const int reach = 2;
  if (!F.is_interior(node, reach)) fail(ErrorKind::Domain, "finite-difference stencil leaves the grid");

  ParabolicResidual r;
  const MetricJet2 jet = F.jet(node, state.order);
  const CMatrix& g = jet.g.matrix();
  const CMatrix gi = jet.g_inv.matrix();
  const CMatrix h = state.reference->evaluate(F.coords(node));
  const CMatrix& V = velocity[node].matrix();
  r.trace = (gi * h).trace().real();
  r.dt_trace = -(gi * V * gi * h).trace().real();

  // Lattice Laplacian of the trace with fourth-order differences.
  const std::vector<std::size_t> base = F.multi_index(node);
  auto u = [&](std::size_t a, long sa, std::size_t b, long sb) {
    std::vector<long> idx(base.begin(), base.end());
    idx[a] += sa;
    idx[b] += sb;
    return scalar_trace(state, F.node_at(idx));
  };
  const double dx = F.spacing();
  static const double c4[5] = {1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0};
  const std::size_t m = 2 * n;
  std::vector<double> d2(m * m, 0.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      double v = 0.0;
      if (a == b) {
        v = (-u(a, 2, a, 0) + 16.0 * u(a, 1, a, 0) - 30.0 * r.trace + 16.0 * u(a, -1, a, 0) - u(a, -2, a, 0)) /
            12.0;
      } else {
        for (long p = -2; p <= 2; ++p)
          for (long q = -2; q <= 2; ++q)
            if (p != 0 && q != 0) v += c4[p + 2] * c4[q + 2] * u(a, p, b, q);
      }
      d2[a * m + b] = d2[b * m + a] = v / (dx * dx);
    }
  const cplx I(0.0, 1.0);
  cplx lap = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto D = [&](std::size_t a, std::size_t b) { return d2[a * m + b]; };
      lap += gi(j, i) * 0.25 * (D(2 * i, 2 * j) + D(2 * i + 1, 2 * j + 1) + I * (D(2 * i, 2 * j + 1) - D(2 * i + 1, 2 * j)));
    }
  r.laplacian_trace = lap.real();

  r.lhs = r.dt_trace - r.laplacian_trace;
  r.rhs = -kappa0 / static_cast<double>(n) * r.trace * r.trace + r.trace;
  r.residual = r.lhs - r.rhs;

  const ChernPackage pkg = chern_package(jet);
  const CMatrix slack = V + ric_tau(pkg, state.tau).matrix() + g;
  // Form version in the unitary frame, where the order is the eigenvalue order.
  const UnitaryFrame frame = UnitaryFrame::from_metric(jet.g);
  const CMatrix su = frame.L_inverse() * slack * frame.L_inverse().adjoint();
  r.form_precondition = HermitianMatrix::hermitian_part(su).min_eigenvalue();
  r.trace_precondition = (gi * slack).trace().real();
  const double scale = std::max({1.0, V.cwiseAbs().maxCoeff(), g.cwiseAbs().maxCoeff()});
  r.precondition_ok = r.form_precondition >= -1e-9 * scale && r.trace_precondition >= -1e-9 * scale;
  r.tolerance = std::max(1e-7, std::pow(dx, state.order)) *
                std::max({1.0, std::abs(r.lhs), std::abs(r.rhs), std::abs(r.laplacian_trace)});
  return r;
}

double trace_time_derivative_fd(const FlowState& state, std::size_t node, double dt) {
  if (!state.reference) fail(ErrorKind::Config, "trace derivative needs a reference metric");
  const double t0 = scalar_trace(state, node);
  const FlowState next = step_heun(state, dt);
  return (scalar_trace(next, node) - t0) / dt;
}

}  // namespace curvlab
