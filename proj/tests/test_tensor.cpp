#include <doctest.h>

#include <random>

#include "curvlab/error.hpp"
#include "curvlab/tensor.hpp"

using namespace curvlab;

namespace {

CMatrix random_pd(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  CMatrix b(n, n);
  for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = cplx(N(rng), N(rng));
  return b * b.adjoint() + CMatrix::Identity(n, n);
}

}  // namespace

TEST_CASE("tensor indexing is row-major over slots") {
  ComplexTensor t = ComplexTensor::uniform(2, {Variance::HoloDown, Variance::HoloDown, Variance::HoloUp});
  t(1, 0, 1) = cplx(3, -1);
  CHECK(t.size() == 8);
  CHECK(t.entries()[4 + 1] == cplx(3, -1));
  const std::array<std::size_t, 3> idx{1, 0, 1};
  CHECK(t.at(idx) == cplx(3, -1));
  CHECK(t.max_abs() == doctest::Approx(std::sqrt(10.0)));
}

TEST_CASE("contract pairs upper with lower slots only") {
  ComplexTensor m = ComplexTensor::uniform(2, {Variance::HoloUp, Variance::HoloDown});
  ComplexTensor v = ComplexTensor::uniform(2, {Variance::HoloUp});
  m(0, 0) = 1.0;
  m(0, 1) = 2.0;
  m(1, 0) = cplx(0, 1);
  m(1, 1) = -1.0;
  v(0) = 3.0;
  v(1) = cplx(0, 2);
  const ComplexTensor mv = contract(m, v, {{1, 0}});
  CHECK(std::abs(mv(0) - (3.0 + cplx(0, 4))) < 1e-15);
  CHECK(std::abs(mv(1) - (cplx(0, 3) - cplx(0, 2))) < 1e-15);
  CHECK_THROWS_AS(contract(m, v, {{0, 0}}), Error);
}

TEST_CASE("apply_metric lowers a vector into an anti-holomorphic covector") {
  std::mt19937_64 rng(4);
  const CMatrix g = random_pd(3, rng);
  ComplexTensor v = ComplexTensor::uniform(3, {Variance::HoloUp});
  for (std::size_t k = 0; k < 3; ++k) v(k) = cplx(1.0 + k, 0.5 * k);
  const ComplexTensor low = apply_metric(v, 0, g);
  CHECK(low.slot(0).variance == Variance::AntiDown);
  for (std::size_t l = 0; l < 3; ++l) {
    cplx want = 0.0;
    for (std::size_t k = 0; k < 3; ++k) want += g(k, l) * v(k);
    CHECK(std::abs(low(l) - want) < 1e-13);
  }
  const ComplexTensor back = apply_metric(low, 0, g);
  CHECK(max_abs_diff(back, v) < 1e-12);
}

TEST_CASE("hermitian matrices reject asymmetric input") {
  CMatrix m(2, 2);
  m << 1.0, cplx(0, 1), cplx(0, 1), 2.0;
  CHECK_THROWS_AS(HermitianMatrix::from(m), Error);
  m(1, 0) = cplx(0, -1);
  const HermitianMatrix h = HermitianMatrix::from(m);
  CHECK(h.is_positive_definite());
  CHECK(h.min_eigenvalue() == doctest::Approx(1.5 - std::sqrt(1.25)));
}

TEST_CASE("psd projection clips and normalizes") {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 3.0;
  m(1, 1) = -1.0;
  const PSDForm p = psd_project(HermitianMatrix::hermitian_part(m));
  CHECK(p.xi.min_eigenvalue() > -1e-15);
  CHECK(p.xi.matrix().norm() == doctest::Approx(1.0));
  CHECK(std::abs(p.xi(1, 1)) < 1e-15);
  CHECK_THROWS_AS(psd_project(HermitianMatrix::hermitian_part(-CMatrix::Identity(2, 2))), Error);
  CHECK_THROWS_AS(PSDForm::make(HermitianMatrix::hermitian_part(m)), Error);
}

TEST_CASE("unitary frame makes the metric the identity") {
  std::mt19937_64 rng(9);
  for (std::size_t n : {1u, 2u, 3u}) {
    const HermitianMatrix g = HermitianMatrix::from(random_pd(n, rng), 1e-10);
    const UnitaryFrame f = UnitaryFrame::from_metric(g);
    CHECK((f.L() * f.L().adjoint() - g.matrix()).norm() < 1e-12);
    CHECK((form_to_unitary_frame(g.matrix(), f) - CMatrix::Identity(n, n)).norm() < 1e-12);

    // Metric tensor through the generic slot transform.
    const ComplexTensor gt = as_tensor(g.matrix());
    CHECK((as_matrix(to_unitary_frame(gt, f)) - CMatrix::Identity(n, n)).norm() < 1e-12);

    // |v|_g^2 is frame independent.
    CVector v(n);
    for (std::size_t k = 0; k < n; ++k) v(k) = cplx(0.3 * k + 1.0, -0.2 * k);
    const CVector vu = vector_to_unitary_frame(v, f);
    const double norm_g = (v.transpose() * g.matrix() * v.conjugate())(0, 0).real();
    CHECK(vu.squaredNorm() == doctest::Approx(norm_g));
    CHECK((vector_from_unitary_frame(vu, f) - v).norm() < 1e-12);
  }
}

TEST_CASE("tensor frame change round-trips for mixed variances") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N;
  const UnitaryFrame f = UnitaryFrame::from_metric(HermitianMatrix::from(random_pd(2, rng), 1e-10));
  ComplexTensor t = ComplexTensor::uniform(
      2, {Variance::HoloDown, Variance::AntiDown, Variance::HoloUp, Variance::AntiUp});
  for (cplx& e : t.entries()) e = cplx(N(rng), N(rng));
  CHECK(max_abs_diff(from_unitary_frame(to_unitary_frame(t, f), f), t) < 1e-12);

  // A full contraction is a scalar and must not depend on the frame.
  ComplexTensor v = ComplexTensor::uniform(2, {Variance::HoloUp, Variance::AntiUp});
  ComplexTensor w = ComplexTensor::uniform(2, {Variance::HoloDown, Variance::AntiDown});
  for (cplx& e : v.entries()) e = cplx(N(rng), N(rng));
  for (cplx& e : w.entries()) e = cplx(N(rng), N(rng));
  const ComplexTensor s = contract(contract(t, v, {{0, 0}, {1, 1}}), w, {{0, 0}, {1, 1}});
  const ComplexTensor su = contract(contract(to_unitary_frame(t, f), to_unitary_frame(v, f), {{0, 0}, {1, 1}}),
                                    to_unitary_frame(w, f), {{0, 0}, {1, 1}});
  CHECK(std::abs(s.entries()[0] - su.entries()[0]) < 1e-11);
}
