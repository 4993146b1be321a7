#include <doctest.h>

#include <random>
#include <string>

#include "curvlab/error.hpp"
#include "curvlab/schwarz.hpp"

using namespace curvlab;

namespace {

CVector point2(cplx a, cplx b) {
  CVector z(2);
  z << a, b;
  return z;
}

struct MapCase {
  const char* map;
  const char* source;
  const char* target;
  CVector z;
};

std::vector<MapCase> map_cases() {
  return {
      {"id", "builtin:hopf(2)", "builtin:hopf(2)", point2(cplx(0.7, 0.2), cplx(-0.4, 0.5))},
      {"id", "builtin:poincare_polydisk(2)", "builtin:example22", point2(0.1, 0.1)},
      {"z1 + 0.5*z2^2 + 1, z2 - z1*z2 + 0.5", "builtin:example22", "builtin:hopf(2)",
       point2(cplx(0.05, 0.03), cplx(-0.04, 0.06))},
      {"0.5*z1 + 0.3*z2^2", "builtin:poincare_polydisk(2)", "builtin:poincare_polydisk(1)",
       point2(cplx(0.2, 0.1), cplx(-0.3, 0.2))},
  };
}

SchwarzReport report_for(const MapCase& c, const LaplacianScheme& fd = {}) {
  const MetricSpec source = resolve_metric(c.source);
  return laplacian_energy_assembled(HoloMapSpec::parse(c.map, source.dim()), source, resolve_metric(c.target), c.z,
                                    Scheme{}, fd);
}

}  // namespace

TEST_CASE("holomorphic map specifications") {
  const HoloMapSpec id = HoloMapSpec::identity(2);
  const CVector z = point2(cplx(0.3, 0.1), cplx(-0.2, 0.4));
  CHECK((id.value(z) - z).norm() == 0.0);
  CHECK((id.jacobian(z) - CMatrix::Identity(2, 2)).norm() == 0.0);

  const HoloMapSpec f = HoloMapSpec::parse("z1*z2, z1^3", 2);
  CHECK(f.target_dim() == 2);
  const CMatrix j = f.jacobian(z);
  CHECK(std::abs(j(0, 0) - z(1)) < 1e-15);
  CHECK(std::abs(j(1, 0) - 3.0 * z(0) * z(0)) < 1e-14);
  CHECK(std::abs(j(1, 1)) == 0.0);
  CHECK(f.cauchy_riemann_residual(z) < 1e-9);
  CHECK(std::abs(map_jet(f, z).second(1, 0, 0) - 6.0 * z(0)) < 1e-14);

  CHECK_THROWS_AS(HoloMapSpec::parse("conj(z1)", 1), Error);
  CHECK_THROWS_AS(HoloMapSpec::parse("z1 + abs2(z2)", 2), Error);
  CHECK_THROWS_AS(HoloMapSpec::parse("z3", 2), Error);
}

TEST_CASE("energy density and frame Jacobian") {
  const MetricSpec flat = resolve_metric("builtin:flat(3)");
  const CVector z = CVector::Zero(3);
  const MetricJet2 jf = eval_jet2(flat, z);
  CHECK(energy_density(map_jet(HoloMapSpec::identity(3), z), jf, jf) == doctest::Approx(3.0));

  // Energy is |F|^2 in unitary frames and the trace of g^-1 h for the identity.
  const MetricSpec hopf = resolve_metric("builtin:hopf(2)");
  const MetricSpec poin = resolve_metric("builtin:poincare_polydisk(2)");
  const CVector p = point2(cplx(0.3, 0.2), cplx(-0.1, 0.4));
  const MetricJet2 g = eval_jet2(poin, p), h = eval_jet2(hopf, p);
  const CMatrix F = frame_jacobian(CMatrix::Identity(2, 2), g.g, h.g);
  const double u = energy_density(map_jet(HoloMapSpec::identity(2), p), g, h);
  CHECK(F.squaredNorm() == doctest::Approx(u));
  CHECK(trace(g.g, h.g) == doctest::Approx(u));

  CMatrix r1(2, 2);
  r1 << 1.0, 2.0, 2.0, 4.0;
  CHECK(numerical_rank(r1) == 1);
  CHECK(numerical_rank(CMatrix::Identity(3, 3)) == 3);
  CHECK(numerical_rank(CMatrix::Zero(2, 2)) == 0);
}

TEST_CASE("Laplacian of the energy: assembly matches differencing") {
  for (const MapCase& c : map_cases()) {
    const SchwarzReport r = report_for(c);
    CHECK_MESSAGE(r.relative_error < 1e-4, c.map << " " << c.source << " -> " << c.target);
    CHECK_MESSAGE(r.skew_identity_residual < 1e-8, c.map << " " << c.source << " -> " << c.target);
    CHECK(r.hessian_norm2 == doctest::Approx(r.sym_norm2 + r.skew_norm2));
    CHECK(r.rank == numerical_rank(frame_jacobian(
                        map_jet(HoloMapSpec::parse(c.map, c.z.size()), c.z).jacobian,
                        eval_jet2(resolve_metric(c.source), c.z).g,
                        eval_jet2(resolve_metric(c.target), HoloMapSpec::parse(c.map, c.z.size()).value(c.z)).g)));
  }
  // The rank-one map into the disk.
  CHECK(report_for(map_cases()[3]).rank == 1);
}

TEST_CASE("energy Laplacian differences converge at fourth order") {
  const MapCase c = map_cases()[2];
  const MetricSpec source = resolve_metric(c.source);
  const HoloMapSpec map = HoloMapSpec::parse(c.map, 2);
  const double exact = report_for(c).laplacian_assembled;
  LaplacianScheme fd;
  fd.richardson = 0;
  fd.h = 0.02;
  const double e1 = std::abs(laplacian_energy_fd(map, source, resolve_metric(c.target), c.z, fd) - exact);
  fd.h = 0.01;
  const double e2 = std::abs(laplacian_energy_fd(map, source, resolve_metric(c.target), c.z, fd) - exact);
  const double rate = std::log2(e1 / e2);
  CHECK_MESSAGE(rate > 3.5, "rate " << rate);

  fd.h = 0.2;
  CHECK_THROWS_AS(laplacian_energy_fd(map, source, resolve_metric(c.target), c.z, fd), Error);
}

TEST_CASE("tempered lower bound never exceeds the Laplacian") {
  for (const MapCase& c : map_cases()) {
    const SchwarzReport r = report_for(c);
    for (double tau : {0.1, 0.5, 1.0, 2.0, 10.0}) {
      const double lb = tempered_lower_bound(r, tau);
      CHECK(lb <= r.laplacian_assembled + 1e-10 * std::max(1.0, std::abs(r.laplacian_assembled)));
    }
    // At tau = 1 the bound drops exactly the Hessian norm.
    CHECK(r.laplacian_assembled - tempered_lower_bound(r, 1.0) ==
          doctest::Approx(r.hessian_norm2).epsilon(1e-8));
  }
}

TEST_CASE("the Laplacian does not depend on the Gauduchon connections used") {
  for (const MapCase& c : map_cases()) {
    const MetricSpec source = resolve_metric(c.source);
    const HoloMapSpec map = HoloMapSpec::parse(c.map, source.dim());
    const MetricSpec target = resolve_metric(c.target);
    for (double ts : {-1.0, 0.0, 0.5, 1.0, 3.0})
      for (double tt : {-2.0, 0.0, 1.0})
        CHECK_MESSAGE(std::abs(connection_invariance_residual(map, source, target, c.z, ts, tt)) < 1e-8,
                      c.map << " t=" << ts << "," << tt);
  }
}

TEST_CASE("identity of the Poincare disk is the equality case") {
  const MetricSpec d = resolve_metric("builtin:poincare_polydisk(1)");
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) {
    const CVector z = d.region().sample(1, rng) * 0.8;
    const SchwarzReport r = laplacian_energy_assembled(HoloMapSpec::identity(1), d, d, z);
    CHECK(r.energy == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r.laplacian_assembled) < 1e-9);
    // Ric^(2) = -2 g and HSC = -2: C1 = 2, kappa0 = 2.
    CHECK(std::abs(schwarz_inequality_slack(r, 2.0, 0.0, 2.0, 1, 1)) < 1e-6);
    CHECK(schwarz_inequality_slack(r, 2.0, 0.0, 2.5, 1, 1) < 0.0);
  }
}

TEST_CASE("Bismut forms of the tempered terms agree with the Chern forms") {
  for (const MapCase& c : map_cases()) {
    const MetricSpec source = resolve_metric(c.source);
    const HoloMapSpec map = HoloMapSpec::parse(c.map, source.dim());
    for (double tau : {0.3, 1.0, 4.0}) {
      const BismutSchwarzReport b = bismut_schwarz_report(map, source, resolve_metric(c.target), c.z, tau);
      CHECK(b.source_check < 1e-9);
      CHECK(b.target_check < 1e-9);
      CHECK(b.margin >= -1e-9);
      CHECK(b.lower_bound == doctest::Approx(b.source_term - b.target_term));
    }
  }
}

TEST_CASE("Young split and eigenvalue estimate slacks are nonnegative") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.01, 20.0);
  for (int k = 0; k < 200; ++k) {
    CVector a(3), b(3);
    for (int i = 0; i < 3; ++i) {
      a(i) = cplx(N(rng), N(rng));
      b(i) = cplx(N(rng), N(rng));
    }
    const double tau = U(rng);
    CHECK(young_split_slack(a, b, tau) >= -1e-12);
    // Equality when sqrt(tau) a = b / sqrt(tau).
    CHECK(std::abs(young_split_slack(a, tau * a, tau)) < 1e-10 * (1.0 + tau * tau) * a.squaredNorm());

    RVector l(3);
    for (int i = 0; i < 3; ++i) l(i) = N(rng);
    CHECK(eigenvalue_estimate_slack(l, U(rng), U(rng), 3) >= -1e-12);
    CHECK(eigenvalue_estimate_slack(l.head(2), U(rng), U(rng), 3) >= -1e-12);
  }
  CHECK(eigenvalue_estimate_slack(RVector::Constant(3, 0.7), 1.0, 2.0, 3) == doctest::Approx(0.0));
  CHECK_THROWS_AS(young_split_slack(CVector::Zero(1), CVector::Zero(1), 0.0), Error);
}
