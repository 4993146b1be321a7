#pragma once

// Holomorphic maps between charts and the pointwise Schwarz-lemma terms.
// Frame components: F(alpha, i) = f_i^alpha with respect to the Cholesky
// unitary frames of the source metric g at p and the target metric h at f(p).

#include <string>
#include <vector>

#include "curvlab/chern.hpp"
#include "curvlab/expression.hpp"
#include "curvlab/functionals.hpp"
#include "curvlab/metric.hpp"

namespace curvlab {

class HoloMapSpec {
 public:
  /// Components in z1..zm. Throws Config when a component mentions conj().
  HoloMapSpec(std::size_t m, std::vector<Expr> components, std::string name = "map");
  static HoloMapSpec identity(std::size_t m);
  /// "id" or comma-separated component expressions.
  static HoloMapSpec parse(std::string_view text, std::size_t source_dim);

  std::size_t source_dim() const { return m_; }
  std::size_t target_dim() const { return components_.size(); }
  const std::string& name() const { return name_; }
  const Expr& component(std::size_t a) const { return components_[a]; }

  CVector value(const CVector& z) const;
  /// J(alpha, i) = d_i f^alpha.
  CMatrix jacobian(const CVector& z) const;
  /// Max |d_ibar f^alpha| by finite differences at z.
  double cauchy_riemann_residual(const CVector& z) const;

  const Expr& first_derivative(std::size_t a, std::size_t i) const { return first_[a * m_ + i]; }
  const Expr& second_derivative(std::size_t a, std::size_t i, std::size_t j) const {
    return second_[(a * m_ + i) * m_ + j];
  }

 private:
  std::size_t m_;
  std::vector<Expr> components_;
  std::vector<Expr> first_;   // alpha * m + i
  std::vector<Expr> second_;  // (alpha * m + i) * m + j
  std::string name_;
};

struct HoloMapJet {
  CVector point;
  CVector value;
  CMatrix jacobian;      // (alpha, i)
  ComplexTensor second;  // (alpha, i, j) = d_i d_j f^alpha
};

HoloMapJet map_jet(const HoloMapSpec& map, const CVector& z);

/// g^{i jbar} h_{alpha betabar} f_i^alpha conj(f_j^beta).
double energy_density(const HoloMapJet& f, const MetricJet2& source, const MetricJet2& target);
double energy_density(const CMatrix& jacobian, const CMatrix& g, const CMatrix& h);
/// g^{k lbar} h_{k lbar}.
double trace(const HermitianMatrix& g, const HermitianMatrix& h);

/// Frame Jacobian F = L_h^T J L_g^{-T}.
CMatrix frame_jacobian(const CMatrix& jacobian, const HermitianMatrix& g, const HermitianMatrix& h);
/// Numerical rank with threshold 1e-8 * largest singular value.
std::size_t numerical_rank(const CMatrix& m);

struct SchwarzReport {
  double energy = 0.0;
  double laplacian_fd = 0.0;
  double laplacian_assembled = 0.0;
  double hessian_norm2 = 0.0;
  double sym_norm2 = 0.0;
  double skew_norm2 = 0.0;
  double source_term = 0.0;  // Ric^(2)(f, f)
  double target_term = 0.0;  // target curvature on xi = F F^*
  double tf_norm2 = 0.0;     // sum |T^p_{kl} f_p^alpha|^2
  double tff_norm2 = 0.0;    // sum |T~^alpha_{gamma rho} f_k^gamma f_l^rho|^2
  double skew_identity_residual = 0.0;
  double relative_error = 0.0;
  std::size_t rank = 0;
  RVector singular_values;
  double fd_h = 0.0;
  int fd_order = 0;
};

struct LaplacianScheme {
  double h = 1e-2;
  int order = 4;
  int richardson = 1;
};

/// Assembled Laplacian terms from Chern data; laplacian_fd from finite
/// differences of the energy density sampled on metric values only.
SchwarzReport laplacian_energy_assembled(const HoloMapSpec& map, const MetricSpec& source,
                                         const MetricSpec& target, const CVector& point,
                                         const Scheme& scheme = {}, const LaplacianScheme& fd = {});

/// Finite-difference Laplacian of the energy density alone.
double laplacian_energy_fd(const HoloMapSpec& map, const MetricSpec& source, const MetricSpec& target,
                           const CVector& point, const LaplacianScheme& fd);

/// Delta|df|^2 - ( -C1 |df|^2 + (kappa0 / r + C2 / n) |df|^4 ), using the
/// assembled Laplacian. The kappa0 / r term is dropped when |df| = 0.
double schwarz_inequality_slack(const SchwarzReport& report, double c1, double c2, double kappa0,
                                std::size_t r, std::size_t n);

/// Lower bound Ric^tau(f, f) - RBC^tau(xi)|xi|^2 assembled from the report's
/// split terms; never exceeds the Laplacian.
double tempered_lower_bound(const SchwarzReport& report, double tau);

/// |Sym(t-Hessian)|^2 + torsion square + source - target, minus the Chern
/// assembly. t_source and t_target pick Gauduchon connections on each side.
double connection_invariance_residual(const HoloMapSpec& map, const MetricSpec& source,
                                      const MetricSpec& target, const CVector& point, double t_source,
                                      double t_target, const Scheme& scheme = {});

struct BismutSchwarzReport {
  double laplacian = 0.0;      // assembled Chern value
  double source_term = 0.0;    // Ric^tau via Bismut data, contracted with f
  double target_term = 0.0;    // RBC^tau(xi)|xi|^2 via Bismut data
  double lower_bound = 0.0;    // source - target
  double margin = 0.0;         // laplacian - lower_bound
  double source_check = 0.0;   // |source via Bismut - source via Chern|
  double target_check = 0.0;   // |target via Bismut - target via Chern|
  HermitianMatrix hypothesis_matrix;  // 2(Ric1 + Re A) - Ric2 + Ric3 + Ric4, source Bismut data
};

BismutSchwarzReport bismut_schwarz_report(const HoloMapSpec& map, const MetricSpec& source,
                                          const MetricSpec& target, const CVector& point, double tau,
                                          const Scheme& scheme = {});

/// 1/4|a - b|^2 - 1/4(1 - tau)|a|^2 - 1/4(1 - 1/tau)|b|^2 for tau > 0.
double young_split_slack(const CVector& a, const CVector& b, double tau);
/// (-C1 sum l^2 + C2 sum l^4) - (-C1 sum l^2 + C2/n (sum l^2)^2).
double eigenvalue_estimate_slack(const RVector& lambda, double c1, double c2, std::size_t n);

}  // namespace curvlab
