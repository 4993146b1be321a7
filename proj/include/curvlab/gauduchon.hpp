#pragma once

// Gauduchon connections t*(Chern) + (1-t)*(Lichnerowicz) in unitary frames.
// t = 1 is the Chern connection, t = -1 the Strominger-Bismut connection.
// Storage matches ChernPackage: tT(i, j, k) = tT^k_{ij}, tR(i, j, k, l).

#include <array>
#include <random>

#include "curvlab/chern.hpp"
#include "curvlab/functionals.hpp"

namespace curvlab {

struct GauduchonPackage {
  double t = 1.0;
  ComplexTensor tT;
  ComplexTensor tR;
  std::array<CMatrix, 4> ric;  // traces of tR, same conventions as the Chern traces

  std::size_t dim() const { return tT.slot(0).dim; }
};

/// Christoffel shift: tGamma^k_{ij} = Gamma^k_{ij} - (1 - t)/2 T^k_{ij}.
ComplexTensor gauduchon_christoffel(const ComplexTensor& chern_gamma, const ComplexTensor& T, double t);

GauduchonPackage gauduchon_forward(const ChernPackage& unitary, double t);
/// Chern curvature rebuilt from t-data; t must avoid 0 and 1/2.
ComplexTensor chern_from_gauduchon(const GauduchonPackage& gp);

/// Tempered Chern quantities expressed through t-data.
HermitianMatrix ric_tau_from_gauduchon(const GauduchonPackage& gp, const TauParam& tau);
double rbc_tau_from_gauduchon(const GauduchonPackage& gp, const TauParam& tau, const PSDForm& xi);
/// The t-altered bisectional form sum tR_{a dbar c bbar} xi^{a bbar} xi^{c dbar} / |xi|^2.
double altered_rbc(const GauduchonPackage& gp, const PSDForm& xi);

/// Hermitian part of A_{k lbar} = sum_{r,i} T^l_{kr} conj(T^i_{ir}).
HermitianMatrix torsion_trace_pairing(const ComplexTensor& T);
/// Sum_{i,r} T^r_{ik} conj(T^r_{il}).
HermitianMatrix torsion_square_first(const ComplexTensor& T);
/// Sum_{i,r} T^l_{ir} conj(T^k_{ir}).
HermitianMatrix torsion_square_upper(const ComplexTensor& T);

struct BismutPackage {
  GauduchonPackage bismut;
  /// 2(Ric1 + Re A) - Ric2 + Ric3 + Ric4 in Bismut data.
  HermitianMatrix source_matrix;
};

BismutPackage bismut_package(const ChernPackage& unitary);

/// Defect of the skew identity for the (1,1) torsion part
/// M(u, v, w) = (1 - t)/2 sum_a v^a conj(T^a(u, w)) on random vectors.
double mixed_torsion_skew_residual(const ChernPackage& unitary, double t, std::mt19937_64& rng,
                                   std::size_t samples = 16);

}  // namespace curvlab
