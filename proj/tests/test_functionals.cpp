#include <doctest.h>

#include <random>

#include "curvlab/error.hpp"
#include "curvlab/functionals.hpp"
#include "oracles.hpp"

using namespace curvlab;

namespace {

CVector random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  CVector v(n);
  for (std::size_t k = 0; k < n; ++k) v(k) = cplx(N(rng), N(rng));
  return v;
}

PSDForm random_form(std::size_t n, std::mt19937_64& rng) {
  CMatrix b(n, n);
  for (std::size_t k = 0; k < n; ++k) b.col(k) = random_vector(n, rng);
  return PSDForm::make(HermitianMatrix::hermitian_part(b * b.adjoint()));
}

ChernPackage unitary_at(const char* ref, const CVector& z) {
  return chern_package_unitary(eval_jet2(resolve_metric(ref), z));
}

CVector hopf_point() {
  CVector z(2);
  z << cplx(0.7, 0.2), cplx(-0.4, 0.5);
  return z;
}

}  // namespace

TEST_CASE("tau parameters") {
  CHECK_THROWS_AS(TauParam::target(-0.1), Error);
  CHECK_THROWS_AS(TauParam::target(std::numeric_limits<double>::infinity()), Error);
  CHECK_THROWS_AS(TauParam::source(0.0), Error);
  CHECK(TauParam::source(std::numeric_limits<double>::infinity()).one_minus_inverse() == 1.0);
  CHECK(TauParam::source(2.0).one_minus_inverse() == 0.5);
  CHECK_THROWS_AS(TauParam::target(0.0).one_minus_inverse(), Error);
  CHECK(parse_functional("rbc_tau") == FunctionalId::RBCTau);
  CHECK_THROWS_AS(parse_functional("ricci"), Error);
}

TEST_CASE("holomorphic sectional curvature of a product of disks") {
  CVector z(2);
  z << cplx(0.3, 0.1), cplx(-0.2, 0.5);
  const ChernPackage u = unitary_at("builtin:poincare_polydisk(2)", z);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const CVector v = random_vector(2, rng);
    CHECK(hsc(u, v) == doctest::Approx(oracle::poincare_product_hsc(v)));
    CHECK(hsc(u, 2.5 * v) == doctest::Approx(hsc(u, v)));
  }
  CHECK_THROWS_AS(hsc(u, CVector::Zero(2)), Error);
  CHECK_THROWS_AS(hsc(chern_package(eval_jet2(resolve_metric("builtin:poincare_polydisk(2)"), z)), CVector::Ones(2)),
                  Error);
}

TEST_CASE("rank-one forms reduce the bisectional functionals to HSC") {
  std::mt19937_64 rng(8);
  const ChernPackage u = unitary_at("builtin:hopf(2)", hopf_point());
  for (int k = 0; k < 10; ++k) {
    const CVector v = random_vector(2, rng);
    const PSDForm xi = PSDForm::rank_one(v);
    CHECK(rbc(u, xi) == doctest::Approx(hsc(u, v)));
    CHECK(hbc(u, v, v) == doctest::Approx(hsc(u, v)));
  }
}

TEST_CASE("tempering at tau = 1 is the identity") {
  std::mt19937_64 rng(11);
  const ChernPackage u = unitary_at("builtin:example22", CVector::Zero(2));
  for (int k = 0; k < 10; ++k) {
    const PSDForm xi = random_form(2, rng);
    CHECK(rbc_tau(u, TauParam::target(1.0), xi) == rbc(u, xi));
  }
  CHECK((ric_tau(u, TauParam::source(1.0)).matrix() - u.ric[1]).norm() == 0.0);
  CHECK_THROWS_AS(ric_tau(u, TauParam::target(1.0)), Error);
}

TEST_CASE("tempered curvature at the seeded example's origin") {
  // At the origin the tempered tensor is -1/2 A conj(A) - eps delta delta.
  const ChernPackage u = unitary_at("builtin:example22", CVector::Zero(2));
  const oracle::TorsionSeed seed{2, {0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
  std::mt19937_64 rng(21);
  for (int k = 0; k < 10; ++k) {
    const PSDForm xi = random_form(2, rng);
    cplx want = 0.0;
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t c = 0; c < 2; ++c)
          for (std::size_t d = 0; d < 2; ++d)
            want += oracle::example22_tempered(seed, 0.1, a, b, c, d) * xi.xi(a, b) * xi.xi(c, d);
    CHECK(rbc_tau(u, TauParam::target(0.0), xi) == doctest::Approx(want.real() / (xi.norm * xi.norm)));
    CHECK(rbc_tau(u, TauParam::target(0.0), xi) < 0.0);
  }
  // Second Ricci at tau = inf: 0.4 + 8/4 on the (1,1) entry.
  CHECK(ric_tau(u, TauParam::source(std::numeric_limits<double>::infinity()))(0, 0).real() ==
        doctest::Approx(2.4));
}

TEST_CASE("pluriclosed metrics: RBC^0 is half the altered HSC") {
  const MetricSpec spec = resolve_metric("builtin:hopf(2)");
  std::mt19937_64 rng(13);
  for (int p = 0; p < 3; ++p) {
    const ChernPackage u = chern_package_unitary(eval_jet2(spec, spec.region().sample(2, rng)));
    for (int k = 0; k < 8; ++k) {
      const PSDForm xi = random_form(2, rng);
      CHECK(std::abs(rbc_tau(u, TauParam::target(0.0), xi) - 0.5 * altered_hsc(u, xi)) < 1e-10);
      CHECK(torsion_form(u, xi) >= 0.0);
    }
  }
}

TEST_CASE("extremizer certificates") {
  const MetricSpec spec = resolve_metric("builtin:poincare_polydisk(2)");
  ExtremumRequest req;
  req.functional = FunctionalId::HSC;
  req.points = {CVector::Zero(2)};
  req.seed = 42;
  req.budget.starts = 16;
  req.kind = BoundKind::Sup;
  const BoundCertificate sup = estimate_extremum(spec, req);
  req.kind = BoundKind::Inf;
  const BoundCertificate inf = estimate_extremum(spec, req);
  CHECK(sup.value == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(inf.value == doctest::Approx(-2.0).epsilon(1e-6));

  // The witness reproduces the reported value.
  const ChernPackage u = chern_package_unitary(eval_jet2(spec, sup.point));
  CHECK(evaluate_functional(u, sup.functional, sup.tau, sup.witness_vectors, sup.witness_form) ==
        doctest::Approx(sup.value));

  // Same seed, same answer.
  const BoundCertificate again = estimate_extremum(spec, req);
  CHECK(again.value == inf.value);
  CHECK((again.witness_vectors[0] - inf.witness_vectors[0]).norm() == 0.0);
}

TEST_CASE("extremizer over forms and sampled points") {
  const MetricSpec hopf = resolve_metric("builtin:hopf(2)");
  ExtremumRequest req;
  req.functional = FunctionalId::AlteredGap;
  req.seed = 5;
  req.budget.starts = 8;
  req.budget.steps = 40;
  const BoundCertificate gap = estimate_extremum(hopf, req);
  CHECK(std::abs(gap.value) < 1e-10);
  CHECK(gap.witness_form.has_value());
  CHECK(hopf.region().contains(gap.point));

  const MetricSpec flat = resolve_metric("builtin:flat(2)");
  req.functional = FunctionalId::RBC;
  CHECK(estimate_extremum(flat, req).value == 0.0);
}
