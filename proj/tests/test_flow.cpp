#include <doctest.h>

#include <cmath>
#include <limits>

#include "curvlab/error.hpp"
#include "curvlab/flow.hpp"
#include "oracles.hpp"

using namespace curvlab;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

FlowState flat_state(std::size_t n, std::size_t res, Boundary b) {
  const MetricSpec flat = resolve_metric("builtin:flat(" + std::to_string(n) + ")");
  return FlowState(GridMetricField::sample(flat, CVector::Zero(n), 1.0, res, b), TauParam::source(kInf), flat);
}

FlowState disk_state(double half_width = 0.3, std::size_t res = 17) {
  const MetricSpec d = resolve_metric("builtin:poincare_polydisk(1)");
  return FlowState(GridMetricField::sample(d, CVector::Zero(1), half_width, res, Boundary::Frozen),
                   TauParam::source(kInf), d);
}

}  // namespace

TEST_CASE("velocity at a point") {
  const MetricJet2 flat = eval_jet2(resolve_metric("builtin:flat(2)"), CVector::Zero(2));
  CHECK((thcf_velocity(flat, TauParam::source(2.0)).matrix() + CMatrix::Identity(2, 2)).norm() == 0.0);

  // Ric^(2) = -2 g on the disk, so the velocity is g.
  CVector z(1);
  z << cplx(0.4, 0.2);
  const MetricJet2 d = eval_jet2(resolve_metric("builtin:poincare_polydisk(1)"), z);
  CHECK(thcf_velocity(d, TauParam::source(kInf))(0, 0).real() == doctest::Approx(oracle::poincare_g(z(0))));

  // Seeded example at the origin: -(0.4 + 8/4) - 1 on the (1,1) entry.
  const MetricJet2 e = eval_jet2(resolve_metric("builtin:example22"), CVector::Zero(2));
  CHECK(thcf_velocity(e, TauParam::source(kInf))(0, 0).real() == doctest::Approx(-3.4));
  CHECK(thcf_velocity(e, TauParam::source(1.0))(0, 0).real() == doctest::Approx(-1.4));
  CHECK_THROWS_AS(thcf_velocity(e, TauParam::target(0.0)), Error);
}

TEST_CASE("lattice geometry") {
  const GridMetricField fr(2, CVector::Zero(2), 1.0, 5, Boundary::Frozen);
  CHECK(fr.node_count() == 625);
  CHECK(fr.spacing() == doctest::Approx(0.5));
  CHECK(std::abs(fr.coords(0)(0) - cplx(-1.0, -1.0)) < 1e-15);
  CHECK(fr.coords(fr.center_node()).norm() < 1e-15);
  CHECK(fr.is_interior(fr.center_node(), 2));
  CHECK_FALSE(fr.is_interior(0, 1));
  CHECK_THROWS_AS(fr.node_at({-1, 0, 0, 0}), Error);

  const GridMetricField pe(1, CVector::Zero(1), 1.0, 8, Boundary::Periodic);
  CHECK(pe.spacing() == doctest::Approx(0.25));
  CHECK(pe.node_at({-1, 0}) == pe.node_at({7, 0}));
  CHECK(pe.is_interior(0, 3));

  CHECK_THROWS_AS(GridMetricField(1, CVector::Zero(1), 1.0, 4, Boundary::Frozen), Error);
  CHECK_THROWS_AS(GridMetricField::sample(resolve_metric("builtin:poincare_polydisk(1)"), CVector::Zero(1), 1.0, 9,
                                          Boundary::Frozen),
                  Error);
  CHECK(parse_boundary("periodic") == Boundary::Periodic);
  CHECK_THROWS_AS(parse_boundary("open"), Error);
  CHECK(parse_stepper("euler") == Stepper::Euler);
  CHECK_THROWS_AS(parse_stepper("rk4"), Error);
}

TEST_CASE("lattice jets approximate the exact jet") {
  const MetricSpec d = resolve_metric("builtin:poincare_polydisk(1)");
  CVector c(1);
  c << cplx(0.1, -0.1);
  const GridMetricField f = GridMetricField::sample(d, c, 0.2, 17, Boundary::Frozen);
  const std::size_t node = f.center_node();
  const MetricJet2 exact = eval_jet2(d, f.coords(node));
  const MetricJet2 lat = f.jet(node);
  CHECK((lat.g.matrix() - exact.g.matrix()).norm() == 0.0);
  CHECK(max_abs_diff(lat.d_g, exact.d_g) < 1e-4);
  CHECK(max_abs_diff(lat.dd_g, exact.dd_g) < 1e-4);
}

TEST_CASE("flat metric decays with the stepper's amplification factor") {
  for (Stepper s : {Stepper::Euler, Stepper::Heun}) {
    FlowState st = flat_state(1, 8, Boundary::Periodic);
    const double dt = 0.01;
    for (int k = 0; k < 10; ++k) st = step(st, dt, s);
    const double want = s == Stepper::Euler ? oracle::flat_flow_euler(dt, 10) : oracle::flat_flow_heun(dt, 10);
    for (std::size_t node = 0; node < st.field.node_count(); ++node)
      CHECK(st.field.value(node)(0, 0).real() == doctest::Approx(want).epsilon(1e-12));
    CHECK(st.history.size() == 10);
    CHECK(st.history.back().time == doctest::Approx(0.1));
    CHECK(st.history.back().substeps == 1);
  }
  FlowState st = flat_state(1, 8, Boundary::Periodic);
  for (int k = 0; k < 10; ++k) st = step_heun(st, 0.01);
  CHECK(std::abs(st.field.value(0)(0, 0).real() - oracle::flat_flow_exact(0.1)) < 1e-4);
  st = flat_state(1, 8, Boundary::Periodic);
  for (int k = 0; k < 10; ++k) st = step_euler(st, 0.01);
  CHECK(std::abs(st.field.value(0)(0, 0).real() - oracle::flat_flow_exact(0.1)) > 1e-4);
}

TEST_CASE("frozen boundary nodes do not move") {
  FlowState st = flat_state(1, 9, Boundary::Frozen);
  st = step_heun(st, 0.01);
  CHECK(st.field.value(0)(0, 0).real() == 1.0);
  CHECK(st.field.value(st.field.center_node())(0, 0).real() ==
        doctest::Approx(oracle::flat_flow_heun(0.01, 1)).epsilon(1e-12));
}

TEST_CASE("oversized steps are split, then rejected") {
  FlowState st = flat_state(1, 8, Boundary::Periodic);
  const double limit = cfl_limit(st, velocity_field(st));
  CHECK(limit == doctest::Approx(0.2 * 0.25 * 0.25));
  const FlowState split = step_euler(st, 3.0 * limit);
  CHECK(split.history.back().substeps == 4);
  CHECK(split.field.value(0)(0, 0).real() == doctest::Approx(std::pow(1.0 - 0.75 * limit, 4)).epsilon(1e-12));
  try {
    step_heun(st, 1000.0 * limit);
    FAIL("expected a rejected step");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
  }
}

TEST_CASE("parabolic residual: flat metrics") {
  FlowState st = flat_state(2, 5, Boundary::Periodic);
  const std::size_t c = st.field.center_node();
  for (double k0 : {0.0, 1.0, 3.0}) {
    const ParabolicResidual r = parabolic_schwarz_residual(velocity_field(st), st, k0, c);
    CHECK(r.trace == doctest::Approx(2.0));
    CHECK(r.dt_trace == doctest::Approx(2.0));
    CHECK(std::abs(r.laplacian_trace) < 1e-12);
    CHECK(r.residual == doctest::Approx(2.0 * k0));
    CHECK(r.precondition_ok);
  }
  // A static metric: no time derivative, so the residual is -tr = -n.
  const std::vector<HermitianMatrix> still(st.field.node_count(), HermitianMatrix::from(CMatrix::Zero(2, 2)));
  CHECK(parabolic_schwarz_residual(still, st, 0.0, c).residual == doctest::Approx(-2.0));
  FlowState bare(st.field, st.tau);
  CHECK_THROWS_AS(parabolic_schwarz_residual(velocity_field(bare), bare, 1.0, c), Error);
}

TEST_CASE("parabolic residual: the disk against itself is an equality case") {
  // g(t) = c(t) g0 with c' = 2 - c, so tr = 1/c and both sides equal (c - 2)/c^2.
  FlowState st = disk_state();
  const std::size_t c = st.field.center_node();
  // Stay inside the step guard: substeps carry frozen boundary values inward.
  const double dt = 0.5 * cfl_limit(st, velocity_field(st));
  for (int k = 0; k < 3; ++k) {
    const ParabolicResidual r = parabolic_schwarz_residual(velocity_field(st), st, 2.0, c);
    CHECK(std::abs(r.residual) < 1e-3);
    CHECK(r.precondition_ok);
    CHECK(std::abs(r.form_precondition) < 1e-9);
    CHECK(parabolic_schwarz_residual(velocity_field(st), st, 3.0, c).residual > 0.5 * r.trace * r.trace);
    if (k < 2) st = step_heun(st, dt);
  }
  CHECK(st.history.back().substeps == 1);
  CHECK(st.field.value(c)(0, 0).real() == doctest::Approx(2.0 - std::exp(-st.time)).epsilon(1e-7));
  CHECK_THROWS_AS(parabolic_schwarz_residual(velocity_field(st), st, 2.0, 0), Error);
}

TEST_CASE("the time derivative of the trace matches a difference quotient") {
  const MetricSpec flat = resolve_metric("builtin:flat(1)");
  const MetricSpec d = resolve_metric("builtin:poincare_polydisk(1)");
  CVector z(1);
  z << cplx(0.2, 0.1);
  const FlowState st(GridMetricField::sample(d, z, 0.3, 17, Boundary::Frozen), TauParam::source(kInf), flat);
  const std::size_t c = st.field.center_node();
  const double analytic = parabolic_schwarz_residual(velocity_field(st), st, 1.0, c).dt_trace;
  const double e1 = std::abs(trace_time_derivative_fd(st, c, 2e-3) - analytic);
  const double e2 = std::abs(trace_time_derivative_fd(st, c, 1e-3) - analytic);
  CHECK(e1 < 1e-2 * std::abs(analytic));
  CHECK(e2 < 0.6 * e1);
}
