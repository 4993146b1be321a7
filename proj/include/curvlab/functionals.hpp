#pragma once

// Curvature functionals on unitary-frame Chern data, and a multistart
// extremizer that reports its result as a certificate.
//
// Directions are given in the unitary frame: a vector zeta has components
// zeta^a, a (1,1)-form xi has components xi^{a bbar} = xi(a, b).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "curvlab/chern.hpp"

namespace curvlab {

enum class TauRole { Target, Source };

/// Tempering parameter. Target role: tau in [0, inf). Source role: tau in (0, inf].
class TauParam {
 public:
  static TauParam target(double tau);
  static TauParam source(double tau);  // pass +infinity for tau = inf

  double value() const { return value_; }
  TauRole role() const { return role_; }
  bool is_infinite() const;
  /// 1 - 1/tau, equal to 1 at infinity.
  double one_minus_inverse() const;

 private:
  TauParam(double v, TauRole r) : value_(v), role_(r) {}
  double value_;
  TauRole role_;
};

double hsc(const ChernPackage& u, const CVector& zeta);
double hbc(const ChernPackage& u, const CVector& zeta, const CVector& nu);
/// Untempered real bisectional curvature.
double rbc(const ChernPackage& u, const PSDForm& xi);
/// sum_rho T^rho_{ac} conj(T^rho_{bd}) xi^{a bbar} xi^{c dbar} / |xi|^2, nonnegative.
double torsion_form(const ChernPackage& u, const PSDForm& xi);
/// rbc - (1 - tau)/4 * torsion_form; returns rbc itself at tau = 1.
double rbc_tau(const ChernPackage& u, const TauParam& tau, const PSDForm& xi);
double altered_hsc(const ChernPackage& u, const PSDForm& xi);
/// Ric^(2) + (1 - 1/tau)/4 Q_circ, in the package's frame; Ric^(2) itself at tau = 1.
HermitianMatrix ric_tau(const ChernPackage& pkg, const TauParam& tau);

enum class FunctionalId { HSC, HBC, RBC, RBCTau, AlteredHSC, AlteredGap };

const char* to_string(FunctionalId f);
FunctionalId parse_functional(const std::string& name);

enum class BoundKind { Sup, Inf };

struct ExtremizerBudget {
  std::size_t starts = 64;
  std::size_t steps = 200;
  double step = 1e-2;
  double fd_step = 1e-5;
};

struct BoundCertificate {
  FunctionalId functional = FunctionalId::HSC;
  BoundKind kind = BoundKind::Sup;
  double value = 0.0;
  CVector point;
  std::vector<CVector> witness_vectors;  // zeta (and nu for HBC)
  std::optional<PSDForm> witness_form;   // xi for form functionals
  std::size_t samples = 0;
  std::size_t iterations = 0;
  double tolerance = 0.0;
  double tau = 1.0;
};

struct ExtremumRequest {
  FunctionalId functional = FunctionalId::HSC;
  BoundKind kind = BoundKind::Sup;
  double tau = 1.0;                 // for RBCTau (target role)
  std::vector<CVector> points;      // empty: sample the region
  ExtremizerBudget budget;
  std::uint64_t seed = 0;
  Scheme scheme;
};

/// Evaluates a functional at a point of the request's kind, for certificate checks.
double evaluate_functional(const ChernPackage& u, FunctionalId f, double tau,
                           const std::vector<CVector>& vectors, const std::optional<PSDForm>& xi);

BoundCertificate estimate_extremum(const MetricSpec& spec, const ExtremumRequest& req);

}  // namespace curvlab
