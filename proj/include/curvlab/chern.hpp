#pragma once

// Chern connection data assembled from a metric 2-jet.
//
// Storage:
//   T(i, j, k) = T^k_{ij}          slots (holo-down, holo-down, holo-up)
//   R(i, j, k, l) = R_{i jbar k lbar}
//   ric[0..3] = Ric^(1..4)         (k, lbar) matrices
// Ric^(1) and Ric^(2) are Hermitian; Ric^(3) and Ric^(4) are conjugate
// transposes of each other and are kept as plain matrices.

#include <array>

#include "curvlab/metric.hpp"
#include "curvlab/tensor.hpp"

namespace curvlab {

enum class Frame { Chart, Unitary };

const char* to_string(Frame f);

struct ChernPackage {
  Frame frame = Frame::Chart;
  CMatrix g;  // identity in the unitary frame
  ComplexTensor T;
  ComplexTensor R;
  std::array<CMatrix, 4> ric;
  CVector eta;  // eta_j = sum_i T^i_{ij}
  HermitianMatrix Q2;
  HermitianMatrix Q_circ;

  std::size_t dim() const { return static_cast<std::size_t>(g.rows()); }
};

/// Gamma(i, k, p) = Gamma^p_{ik} = g^{p qbar} d_i g_{k qbar}.
ComplexTensor chern_christoffel(const MetricJet2& jet);
ComplexTensor chern_torsion(const MetricJet2& jet);
ComplexTensor chern_curvature(const MetricJet2& jet);

/// The four traces against the inverse metric g_inv (the matrix G^{-1}).
std::array<CMatrix, 4> ricci_traces(const ComplexTensor& R, const CMatrix& g_inv);

/// Q2 through the unitary frame and Q_circ through the chart-covariant
/// contraction; both returned in the chart frame.
std::pair<HermitianMatrix, HermitianMatrix> q_tensors(const MetricJet2& jet, const ComplexTensor& T);

/// eta_j = sum_i T^i_{ij}. Requires a unitary-frame package.
CVector torsion_one_form(const ChernPackage& unitary);

ChernPackage chern_package(const MetricJet2& jet);
ChernPackage to_unitary(const ChernPackage& chart, const UnitaryFrame& frame);
/// Convenience: chern_package followed by to_unitary at the jet's own frame.
ChernPackage chern_package_unitary(const MetricJet2& jet);

/// Max |R(i,j,k,l) - conj(R(j,i,l,k))|.
double curvature_hermitian_defect(const ComplexTensor& R);
/// Max |T(i,j,k) + T(j,i,k)|.
double torsion_antisymmetry_defect(const ComplexTensor& T);

/// Max-norm of dbar_l T^k_{ij} - (R_{j lbar i}^k - R_{i lbar j}^k), the
/// anti-holomorphic derivative taken by differencing the torsion at nearby
/// points with step `outer_h` (0 selects 1e-2 * max(1, |z|_inf)).
double bianchi_residual(const MetricSpec& spec, const CVector& point, const Scheme& scheme = {},
                        double outer_h = 0.0);

struct PluriclosedResidual {
  double direct = 0.0;    // coefficients of i d dbar omega from the 2-jet
  double symmetry = 0.0;  // curvature/torsion symmetry defect
};

PluriclosedResidual pluriclosed_residual(const MetricJet2& jet);
PluriclosedResidual pluriclosed_residual(const MetricSpec& spec, const CVector& point,
                                         const Scheme& scheme = {});

/// Holomorphic coordinates w around p with z = p + A (w + c(w, w) / 2).
struct NormalCoordinates {
  CVector center;
  CMatrix linear;       // A
  ComplexTensor quad;   // quad(l, i, k) = c^l_{ik}, symmetric in (i, k)
  MetricSampler source;

  CVector to_chart(const CVector& w) const;
  /// J(k, a) = dz_k / dw_a.
  CMatrix jacobian(const CVector& w) const;
  /// J^T G(z(w)) conj(J).
  CMatrix pulled_back(const CVector& w) const;
};

struct NormalCoordinateCheck {
  NormalCoordinates coords;
  MetricJet2 jet;       // finite-difference jet of the pulled-back metric at w = 0
  ChernPackage unitary; // Chern data at p in the frame dz/dw
  double metric_residual = 0.0;  // |g - delta|
  double first_residual = 0.0;   // |d_i g_{k lbar} - T^l_{ik} / 2|
  double second_residual = 0.0;  // |d_i d_jbar g_{k lbar} + R - T Tbar / 4|
};

NormalCoordinates build_chern_normal_coordinates(const MetricSpec& spec, const CVector& point,
                                                 const Scheme& scheme = {});
NormalCoordinateCheck check_chern_normal_coordinates(const MetricSpec& spec, const CVector& point,
                                                     const Scheme& scheme = {});

}  // namespace curvlab
