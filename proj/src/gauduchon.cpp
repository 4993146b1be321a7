#include "curvlab/gauduchon.hpp"

#include <cmath>

#include "curvlab/error.hpp"

namespace curvlab {

namespace {

void require_unitary(const ChernPackage& u, const char* what) {
  if (u.frame != Frame::Unitary)
    fail(ErrorKind::Domain, std::string(what) + ": Chern data must be in the unitary frame");
}

void require_invertible(double t, const char* what) {
  if (t == 0.0 || t == 0.5)
    fail(ErrorKind::Domain, std::string(what) + ": t = 0 and t = 1/2 are poles of the inverse formulas");
}

ComplexTensor curvature_shape(std::size_t n) {
  return ComplexTensor::uniform(
      n, {Variance::HoloDown, Variance::AntiDown, Variance::HoloDown, Variance::AntiDown});
}

// Quadratic torsion tensors on four indices (i, jbar, k, lbar), r summed:
//   A = T^r_{ik} conj(T^r_{jl})     B = T^l_{ir} conj(T^k_{jr})
//   C = T^j_{kr} conj(T^i_{lr})     D = T^l_{kr} conj(T^i_{jr})
//   E = T^j_{ir} conj(T^k_{lr})
struct TorsionQuadratics {
  ComplexTensor A, B, C, D, E;
};

TorsionQuadratics torsion_quadratics(const ComplexTensor& T) {
  const std::size_t n = T.slot(0).dim;
  TorsionQuadratics q{curvature_shape(n), curvature_shape(n), curvature_shape(n), curvature_shape(n),
                      curvature_shape(n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          cplx a = 0.0, b = 0.0, c = 0.0, d = 0.0, e = 0.0;
          for (std::size_t r = 0; r < n; ++r) {
            a += T(i, k, r) * std::conj(T(j, l, r));
            b += T(i, r, l) * std::conj(T(j, r, k));
            c += T(k, r, j) * std::conj(T(l, r, i));
            d += T(k, r, l) * std::conj(T(j, r, i));
            e += T(i, r, j) * std::conj(T(l, r, k));
          }
          q.A(i, j, k, l) = a;
          q.B(i, j, k, l) = b;
          q.C(i, j, k, l) = c;
          q.D(i, j, k, l) = d;
          q.E(i, j, k, l) = e;
        }
  return q;
}

// sum X(a, b, c, d) xi(a, b) xi(c, d)
cplx pair_form(const ComplexTensor& X, const CMatrix& x) {
  const auto n = static_cast<std::size_t>(x.rows());
  cplx acc = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d) acc += X(a, b, c, d) * x(a, b) * x(c, d);
  return acc;
}

}  // namespace

ComplexTensor gauduchon_christoffel(const ComplexTensor& chern_gamma, const ComplexTensor& T, double t) {
  ComplexTensor out = chern_gamma;
  out -= cplx(0.5 * (1.0 - t)) * T;
  return out;
}

GauduchonPackage gauduchon_forward(const ChernPackage& unitary, double t) {
  require_unitary(unitary, "gauduchon_forward");
  const std::size_t n = unitary.dim();
  GauduchonPackage gp;
  gp.t = t;
  if (t == 1.0) {
    gp.tT = unitary.T;
    gp.tR = unitary.R;
  } else {
    const ComplexTensor& T = unitary.T;
    const ComplexTensor& R = unitary.R;
    const double s = 0.5 * (1.0 - t);
    gp.tT = cplx(t) * T;
    gp.tR = curvature_shape(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          for (std::size_t l = 0; l < n; ++l) {
            cplx quad = 0.0;
            for (std::size_t r = 0; r < n; ++r)
              quad += T(i, k, r) * std::conj(T(j, l, r)) - T(i, r, l) * std::conj(T(j, r, k));
            gp.tR(i, j, k, l) = t * R(i, j, k, l) + s * (R(k, j, i, l) + R(i, l, k, j)) + s * s * quad;
          }
  }
  gp.ric = ricci_traces(gp.tR, CMatrix::Identity(n, n));
  return gp;
}

ComplexTensor chern_from_gauduchon(const GauduchonPackage& gp) {
  const double t = gp.t;
  require_invertible(t, "chern_from_gauduchon");
  if (t == 1.0) return gp.tR;
  const std::size_t n = gp.dim();
  const ComplexTensor& tR = gp.tR;
  const TorsionQuadratics q = torsion_quadratics(gp.tT);
  const double d = 2.0 * t - 1.0;
  const double t2 = t * t, t3 = t2 * t, u = t - 1.0;
  const double cR = (t2 + 2.0 * t - 1.0) / (2.0 * t * d);
  const double cRswap = u * u / (2.0 * t * d);
  const double cRmix = u / (2.0 * d);
  const double cA = -u * u / (4.0 * t2 * d);
  const double cB = u * u * (t2 + 2.0 * t - 1.0) / (8.0 * t3 * d);
  const double cC = u * u * u * u / (8.0 * t3 * d);
  const double cDE = u * u * u / (8.0 * t2 * d);
  ComplexTensor R = curvature_shape(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l)
          R(i, j, k, l) = cR * tR(i, j, k, l) + cRswap * tR(k, l, i, j) +
                          cRmix * (tR(k, j, i, l) + tR(i, l, k, j)) + cA * q.A(i, j, k, l) +
                          cB * q.B(i, j, k, l) + cC * q.C(i, j, k, l) +
                          cDE * (q.D(i, j, k, l) + q.E(i, j, k, l));
  return R;
}

HermitianMatrix torsion_trace_pairing(const ComplexTensor& T) {
  const std::size_t n = T.slot(0).dim;
  CVector trace = CVector::Zero(static_cast<Eigen::Index>(n));  // sum_i T^i_{ir}
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < n; ++i) trace(r) += T(i, r, i);
  CMatrix a = CMatrix::Zero(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t r = 0; r < n; ++r) a(k, l) += T(k, r, l) * std::conj(trace(r));
  return HermitianMatrix::hermitian_part(a);
}

HermitianMatrix torsion_square_first(const ComplexTensor& T) {
  const std::size_t n = T.slot(0).dim;
  CMatrix m = CMatrix::Zero(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < n; ++r) m(k, l) += T(i, k, r) * std::conj(T(i, l, r));
  return HermitianMatrix::hermitian_part(m);
}

HermitianMatrix torsion_square_upper(const ComplexTensor& T) {
  const std::size_t n = T.slot(0).dim;
  CMatrix m = CMatrix::Zero(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < n; ++r) m(k, l) += T(i, r, l) * std::conj(T(i, r, k));
  return HermitianMatrix::hermitian_part(m);
}

HermitianMatrix ric_tau_from_gauduchon(const GauduchonPackage& gp, const TauParam& tau) {
  if (tau.role() != TauRole::Source) fail(ErrorKind::Domain, "ric_tau: tau must have the source role");
  const double t = gp.t;
  require_invertible(t, "ric_tau_from_gauduchon");
  const double d = 2.0 * t - 1.0, t2 = t * t, t3 = t2 * t, u = t - 1.0;
  const CMatrix& r1 = gp.ric[0];
  const CMatrix& r2 = gp.ric[1];
  const CMatrix& r3 = gp.ric[2];
  const CMatrix& r4 = gp.ric[3];
  CMatrix m = (t2 + 2.0 * t - 1.0) / (2.0 * t * d) * r2 + u * u / (2.0 * t * d) * r1 +
              u / (2.0 * d) * (r3 + r4);
  m += u * u * (t2 - 4.0 * t + 1.0) / (8.0 * t3 * d) * torsion_square_first(gp.tT).matrix();
  m += u * u * u / (4.0 * t2 * d) * torsion_trace_pairing(gp.tT).matrix();
  m += (u * u * (t2 + 2.0 * t - 1.0) / (8.0 * t3 * d) + tau.one_minus_inverse() / (4.0 * t2)) *
       torsion_square_upper(gp.tT).matrix();
  return HermitianMatrix::hermitian_part(m);
}

double altered_rbc(const GauduchonPackage& gp, const PSDForm& xi) {
  require(xi.norm > 0.0, "altered_rbc: zero form");
  const std::size_t n = gp.dim();
  const CMatrix& x = xi.xi.matrix();
  cplx acc = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t dd = 0; dd < n; ++dd) acc += gp.tR(a, dd, c, b) * x(a, b) * x(c, dd);
  return acc.real() / (xi.norm * xi.norm);
}

double rbc_tau_from_gauduchon(const GauduchonPackage& gp, const TauParam& tau, const PSDForm& xi) {
  if (tau.role() != TauRole::Target) fail(ErrorKind::Domain, "rbc_tau: tau must have the target role");
  const double t = gp.t;
  require_invertible(t, "rbc_tau_from_gauduchon");
  require(xi.norm > 0.0, "rbc_tau_from_gauduchon: zero form");
  const double d = 2.0 * t - 1.0, t2 = t * t, u = t - 1.0;
  const CMatrix& x = xi.xi.matrix();
  const TorsionQuadratics q = torsion_quadratics(gp.tT);
  const double n2 = xi.norm * xi.norm;
  const cplx plain = pair_form(gp.tR, x);
  const cplx torsion = -(u * u / (4.0 * t2 * d) + (1.0 - tau.value()) / (4.0 * t2)) * pair_form(q.A, x) +
                       u * u / (4.0 * t * d) * pair_form(q.B, x) +
                       u * u * u / (4.0 * t2 * d) * pair_form(q.E, x);
  return (t / d * plain.real() + u / d * altered_rbc(gp, xi) * n2 + torsion.real()) / n2;
}

BismutPackage bismut_package(const ChernPackage& unitary) {
  BismutPackage bp;
  bp.bismut = gauduchon_forward(unitary, -1.0);
  const auto& r = bp.bismut.ric;
  const CMatrix m = 2.0 * (r[0] + torsion_trace_pairing(bp.bismut.tT).matrix()) - r[1] + r[2] + r[3];
  bp.source_matrix = HermitianMatrix::from(m, 1e-10);
  return bp;
}

double mixed_torsion_skew_residual(const ChernPackage& unitary, double t, std::mt19937_64& rng,
                                   std::size_t samples) {
  require_unitary(unitary, "mixed_torsion_skew_residual");
  const std::size_t n = unitary.dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_vector = [&] {
    CVector v(static_cast<Eigen::Index>(n));
    for (auto& c : v) c = cplx(normal(rng), normal(rng));
    return v;
  };
  const double s = 0.5 * (1.0 - t);
  auto M = [&](const CVector& u, const CVector& v, const CVector& w) {
    cplx acc = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      cplx tuw = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) tuw += unitary.T(i, j, a) * u(i) * w(j);
      acc += v(a) * std::conj(tuw);
    }
    return s * acc;
  };
  double r = 0.0;
  for (std::size_t q = 0; q < samples; ++q) {
    const CVector u = random_vector(), v = random_vector(), w = random_vector();
    r = std::max(r, std::abs(M(u, v, w) + M(w, v, u)));
  }
  return r;
}

}  // namespace curvlab
