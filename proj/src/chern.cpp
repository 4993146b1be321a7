#include "curvlab/chern.hpp"

#include <algorithm>
#include <cmath>

#include "curvlab/error.hpp"

namespace curvlab {

const char* to_string(Frame f) { return f == Frame::Chart ? "chart" : "unitary"; }

namespace {

ComplexTensor torsion_shape(std::size_t n) {
  return ComplexTensor::uniform(n, {Variance::HoloDown, Variance::HoloDown, Variance::HoloUp});
}

ComplexTensor curvature_shape(std::size_t n) {
  return ComplexTensor::uniform(
      n, {Variance::HoloDown, Variance::AntiDown, Variance::HoloDown, Variance::AntiDown});
}

}  // namespace

ComplexTensor chern_christoffel(const MetricJet2& jet) {
  const std::size_t n = jet.dim();
  const CMatrix& gi = jet.g_inv.matrix();
  ComplexTensor gamma = torsion_shape(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t p = 0; p < n; ++p) {
        cplx acc = 0.0;
        for (std::size_t q = 0; q < n; ++q) acc += gi(q, p) * jet.d_g(i, k, q);
        gamma(i, k, p) = acc;
      }
  return gamma;
}

ComplexTensor chern_torsion(const MetricJet2& jet) {
  const std::size_t n = jet.dim();
  const CMatrix& gi = jet.g_inv.matrix();
  ComplexTensor T = torsion_shape(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        cplx acc = 0.0;
        for (std::size_t l = 0; l < n; ++l) acc += gi(l, k) * (jet.d_g(i, j, l) - jet.d_g(j, i, l));
        T(i, j, k) = acc;
      }
  return T;
}

ComplexTensor chern_curvature(const MetricJet2& jet) {
  const std::size_t n = jet.dim();
  const ComplexTensor gamma = chern_christoffel(jet);
  ComplexTensor R = curvature_shape(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          cplx acc = -jet.dd_g(i, j, k, l);
          for (std::size_t p = 0; p < n; ++p) acc += gamma(i, k, p) * jet.dbar_g(j, p, l);
          R(i, j, k, l) = acc;
        }
  return R;
}

std::array<CMatrix, 4> ricci_traces(const ComplexTensor& R, const CMatrix& g_inv) {
  const auto n = static_cast<std::size_t>(g_inv.rows());
  std::array<CMatrix, 4> ric;
  for (auto& m : ric) m = CMatrix::Zero(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const cplx w = g_inv(j, i);  // g^{i jbar}
          ric[0](k, l) += w * R(k, l, i, j);
          ric[1](k, l) += w * R(i, j, k, l);
          ric[2](k, l) += w * R(k, j, i, l);
          ric[3](k, l) += w * R(i, l, k, j);
        }
  return ric;
}

std::pair<HermitianMatrix, HermitianMatrix> q_tensors(const MetricJet2& jet, const ComplexTensor& T) {
  const std::size_t n = jet.dim();
  const UnitaryFrame frame = UnitaryFrame::from_metric(jet.g);
  const ComplexTensor Tu = to_unitary_frame(T, frame);
  CMatrix q2u = CMatrix::Zero(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) q2u(k, l) += Tu(p, q, l) * std::conj(Tu(p, q, k));
  const CMatrix q2 = form_from_unitary_frame(q2u, frame);

  // Chart-covariant: g^{p p'bar} g^{q q'bar} (T^a_{pq} g_{a lbar}) conj(T^b_{p'q'} g_{b kbar}).
  const CMatrix& G = jet.g.matrix();
  const CMatrix& gi = jet.g_inv.matrix();
  ComplexTensor lowered = ComplexTensor::uniform(n, {Variance::HoloDown, Variance::HoloDown, Variance::AntiDown});
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t l = 0; l < n; ++l) {
        cplx acc = 0.0;
        for (std::size_t a = 0; a < n; ++a) acc += T(p, q, a) * G(a, l);
        lowered(p, q, l) = acc;
      }
  CMatrix qc = CMatrix::Zero(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t pp = 0; pp < n; ++pp)
          for (std::size_t q = 0; q < n; ++q)
            for (std::size_t qq = 0; qq < n; ++qq)
              qc(k, l) += gi(pp, p) * gi(qq, q) * lowered(p, q, l) * std::conj(lowered(pp, qq, k));
  return {HermitianMatrix::hermitian_part(q2), HermitianMatrix::hermitian_part(qc)};
}

CVector torsion_one_form(const ChernPackage& unitary) {
  if (unitary.frame != Frame::Unitary)
    fail(ErrorKind::Domain, "torsion_one_form: package must be in the unitary frame");
  const std::size_t n = unitary.dim();
  CVector eta = CVector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) eta(j) += unitary.T(i, j, i);
  return eta;
}

ChernPackage chern_package(const MetricJet2& jet) {
  ChernPackage pkg;
  pkg.frame = Frame::Chart;
  pkg.g = jet.g.matrix();
  pkg.T = chern_torsion(jet);
  pkg.R = chern_curvature(jet);
  pkg.ric = ricci_traces(pkg.R, jet.g_inv.matrix());
  auto [q2, qc] = q_tensors(jet, pkg.T);
  pkg.Q2 = q2;
  pkg.Q_circ = qc;
  // The trace over the upper and one lower slot is frame independent.
  const std::size_t n = jet.dim();
  pkg.eta = CVector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) pkg.eta(j) += pkg.T(i, j, i);
  return pkg;
}

ChernPackage to_unitary(const ChernPackage& chart, const UnitaryFrame& frame) {
  if (chart.frame != Frame::Chart) fail(ErrorKind::Domain, "to_unitary: package is not in the chart frame");
  ChernPackage u;
  u.frame = Frame::Unitary;
  const std::size_t n = chart.dim();
  u.g = CMatrix::Identity(n, n);
  u.T = to_unitary_frame(chart.T, frame);
  u.R = to_unitary_frame(chart.R, frame);
  for (std::size_t a = 0; a < 4; ++a) u.ric[a] = form_to_unitary_frame(chart.ric[a], frame);
  u.Q2 = HermitianMatrix::hermitian_part(form_to_unitary_frame(chart.Q2.matrix(), frame));
  u.Q_circ = HermitianMatrix::hermitian_part(form_to_unitary_frame(chart.Q_circ.matrix(), frame));
  u.eta = torsion_one_form(u);
  return u;
}

ChernPackage chern_package_unitary(const MetricJet2& jet) {
  return to_unitary(chern_package(jet), UnitaryFrame::from_metric(jet.g));
}

double curvature_hermitian_defect(const ComplexTensor& R) {
  const std::size_t n = R.slot(0).dim;
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l)
          r = std::max(r, std::abs(R(i, j, k, l) - std::conj(R(j, i, l, k))));
  return r;
}

double torsion_antisymmetry_defect(const ComplexTensor& T) {
  const std::size_t n = T.slot(0).dim;
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) r = std::max(r, std::abs(T(i, j, k) + T(j, i, k)));
  return r;
}

// ---------------------------------------------------------------------------

double bianchi_residual(const MetricSpec& spec, const CVector& point, const Scheme& scheme,
                        double outer_h) {
  const std::size_t n = spec.dim();
  const double h = outer_h > 0.0 ? outer_h : 1e-2 * std::max(1.0, point.cwiseAbs().maxCoeff());
  const MetricJet2 jet0 = eval_jet2(spec, point, scheme);
  const ComplexTensor R = chern_curvature(jet0);
  const CMatrix& gi = jet0.g_inv.matrix();

  // Order-4 central difference with one Richardson level, per real direction.
  auto torsion_at = [&](std::size_t a, double t) {
    CVector z = point;
    z(static_cast<Eigen::Index>(a / 2)) += (a % 2 == 0) ? cplx(t, 0.0) : cplx(0.0, t);
    return chern_torsion(eval_jet2(spec, z, scheme));
  };
  auto first = [&](std::size_t a, double s) {
    ComplexTensor d = (1.0 / 12.0) * torsion_at(a, -2 * s);
    d -= (8.0 / 12.0) * torsion_at(a, -s);
    d += (8.0 / 12.0) * torsion_at(a, s);
    d -= (1.0 / 12.0) * torsion_at(a, 2 * s);
    d *= 1.0 / s;
    return d;
  };
  std::vector<ComplexTensor> dx(2 * n);
  for (std::size_t a = 0; a < 2 * n; ++a) {
    const ComplexTensor coarse = first(a, h);
    const ComplexTensor fine = first(a, h / 2);
    dx[a] = (16.0 / 15.0) * fine - (1.0 / 15.0) * coarse;
  }

  double r = 0.0;
  const cplx I(0.0, 1.0);
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
          const cplx lhs = 0.5 * (dx[2 * l](i, j, k) + I * dx[2 * l + 1](i, j, k));
          cplx rhs = 0.0;
          // R_{a lbar b}^k = R_{a lbar b qbar} g^{k qbar}
          for (std::size_t q = 0; q < n; ++q) rhs += (R(j, l, i, q) - R(i, l, j, q)) * gi(q, k);
          r = std::max(r, std::abs(lhs - rhs));
        }
  return r;
}

PluriclosedResidual pluriclosed_residual(const MetricJet2& jet) {
  const std::size_t n = jet.dim();
  const ComplexTensor R = chern_curvature(jet);
  const ComplexTensor T = chern_torsion(jet);
  const CMatrix& G = jet.g.matrix();
  PluriclosedResidual res;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d) {
          // i d dbar omega has components antisymmetrized in (a, c) and (b, d).
          const cplx direct = jet.dd_g(a, b, c, d) - jet.dd_g(c, b, a, d) - jet.dd_g(a, d, c, b) +
                              jet.dd_g(c, d, a, b);
          cplx sym = R(a, b, c, d) - R(c, b, a, d) - R(a, d, c, b) + R(c, d, a, b);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t s = 0; s < n; ++s) sym -= T(a, c, r) * std::conj(T(b, d, s)) * G(r, s);
          res.direct = std::max(res.direct, std::abs(direct));
          res.symmetry = std::max(res.symmetry, std::abs(sym));
        }
  return res;
}

PluriclosedResidual pluriclosed_residual(const MetricSpec& spec, const CVector& point,
                                         const Scheme& scheme) {
  return pluriclosed_residual(eval_jet2(spec, point, scheme));
}

// ---------------------------------------------------------------------------

CVector NormalCoordinates::to_chart(const CVector& w) const {
  const auto n = w.size();
  CVector u = w;
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k)
        u(l) += 0.5 * quad(static_cast<std::size_t>(l), static_cast<std::size_t>(i),
                           static_cast<std::size_t>(k)) * w(i) * w(k);
  return center + linear * u;
}

CMatrix NormalCoordinates::jacobian(const CVector& w) const {
  const auto n = w.size();
  CMatrix du = CMatrix::Identity(n, n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index k = 0; k < n; ++k)
        du(l, a) += quad(static_cast<std::size_t>(l), static_cast<std::size_t>(a),
                         static_cast<std::size_t>(k)) * w(k);
  return linear * du;
}

CMatrix NormalCoordinates::pulled_back(const CVector& w) const {
  const CMatrix J = jacobian(w);
  return J.transpose() * source(to_chart(w)) * J.conjugate();
}

NormalCoordinates build_chern_normal_coordinates(const MetricSpec& spec, const CVector& point,
                                                 const Scheme& scheme) {
  const std::size_t n = spec.dim();
  const MetricJet2 jet = eval_jet2(spec, point, scheme);
  const UnitaryFrame frame = UnitaryFrame::from_metric(jet.g);
  // d(i, k, l): first derivatives of the metric in the linear coordinates u, z = p + A u.
  const ComplexTensor d = to_unitary_frame(jet.d_g, frame);
  NormalCoordinates nc;
  nc.center = point;
  nc.linear = frame.L_inverse().transpose();
  nc.quad = ComplexTensor::uniform(n, {Variance::HoloUp, Variance::HoloDown, Variance::HoloDown});
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) nc.quad(l, i, k) = -0.5 * (d(i, k, l) + d(k, i, l));
  nc.source = spec.sampler();
  return nc;
}

NormalCoordinateCheck check_chern_normal_coordinates(const MetricSpec& spec, const CVector& point,
                                                     const Scheme& scheme) {
  const std::size_t n = spec.dim();
  NormalCoordinateCheck out;
  out.coords = build_chern_normal_coordinates(spec, point, scheme);
  const NormalCoordinates& nc = out.coords;
  Scheme fd = scheme;
  fd.use_exact = false;
  fd.h = scheme.h > 0.0 ? scheme.h : 1e-3;
  const CVector origin = CVector::Zero(static_cast<Eigen::Index>(n));
  out.jet = eval_jet2_fd([&nc](const CVector& w) { return nc.pulled_back(w); }, n, origin, fd);
  out.unitary = chern_package_unitary(eval_jet2(spec, point, scheme));
  const ComplexTensor& T = out.unitary.T;
  const ComplexTensor& R = out.unitary.R;

  out.metric_residual = (out.jet.g.matrix() - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        out.first_residual = std::max(out.first_residual, std::abs(out.jet.d_g(i, k, l) - 0.5 * T(i, k, l)));
        for (std::size_t j = 0; j < n; ++j) {
          cplx expect = -R(i, j, k, l);
          for (std::size_t p = 0; p < n; ++p) expect += 0.25 * T(i, k, p) * std::conj(T(j, l, p));
          out.second_residual = std::max(out.second_residual, std::abs(out.jet.dd_g(i, j, k, l) - expect));
        }
      }
  return out;
}

}  // namespace curvlab
