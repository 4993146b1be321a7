#pragma once

// Hermitian metrics on coordinate charts and their Wirtinger 2-jets.

#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "curvlab/expression.hpp"
#include "curvlab/tensor.hpp"

namespace curvlab {

enum class RegionType { Ball, Polydisk, Punctured };

const char* to_string(RegionType t);

/// Validity region of a chart, centred at the origin. A punctured region is
/// the ball minus the origin.
struct Region {
  RegionType type = RegionType::Ball;
  double radius = std::numeric_limits<double>::infinity();

  bool contains(const CVector& z) const;
  /// Random interior point well away from the boundary (and from the puncture).
  CVector sample(std::size_t n, std::mt19937_64& rng) const;
};

/// Finite-difference settings for jet evaluation.
struct Scheme {
  double h = 0.0;        // 0 selects 1e-3 * max(1, |z|_inf)
  int order = 4;         // 2 or 4
  int richardson = 1;    // extrapolation levels
  bool use_exact = true; // take the builtin closed form when one exists

  double step_at(const CVector& z) const;
};

struct MetricJet2 {
  CVector point;
  HermitianMatrix g;
  HermitianMatrix g_inv;
  ComplexTensor d_g;     // d_i g_{k lbar}: slots (i, k, lbar)
  ComplexTensor dbar_g;  // d_jbar g_{k lbar}: slots (jbar, k, lbar)
  ComplexTensor dd_g;    // d_i d_jbar g_{k lbar}: slots (i, jbar, k, lbar)

  double h = 0.0;  // 0 for exact jets
  int order = 0;
  int richardson = 0;
  bool exact = false;
  double tolerance = 0.0;

  std::size_t dim() const { return g.dim(); }
};

using MetricSampler = std::function<CMatrix(const CVector&)>;
using ExactJetHook = std::function<void(const CVector&, MetricJet2&)>;

class MetricSpec {
 public:
  MetricSpec(std::size_t n, std::vector<Expr> entries, Region region, std::string name = "dsl");

  std::size_t dim() const { return n_; }
  const Region& region() const { return region_; }
  const std::string& name() const { return name_; }
  const Expr& entry(std::size_t k, std::size_t l) const { return entries_[k * n_ + l]; }
  bool has_exact_jet() const { return static_cast<bool>(exact_); }
  const std::string& exact_hook_id() const { return exact_id_; }

  void set_exact_jet(std::string id, ExactJetHook hook);
  void set_region(Region r) { region_ = r; }
  void set_name(std::string name) { name_ = std::move(name); }

  /// Raw matrix of entry values; throws Numerical on non-finite values.
  CMatrix evaluate(const CVector& z) const;
  /// Checked Hermitian value.
  HermitianMatrix value(const CVector& z) const;
  MetricSampler sampler() const;

  /// Fills g, d_g, dbar_g, dd_g from the closed form. Requires has_exact_jet().
  void exact_jet(const CVector& z, MetricJet2& jet) const;

  /// Text form suitable for a metric file.
  std::string to_json() const;

 private:
  std::size_t n_;
  std::vector<Expr> entries_;
  Region region_;
  std::string name_;
  std::string exact_id_;
  ExactJetHook exact_;
};

/// Parses the JSON metric format {"n", "entries", "region"}. Checks conjugate
/// symmetry at 32 pseudo-random points to 1e-10 and positive-definiteness at
/// the region's base point.
MetricSpec parse_metric_spec(std::string_view source);

/// Base point used for the positive-definiteness check: the origin, or a point
/// at half the radius on the first axis for punctured regions.
CVector base_point(const MetricSpec& spec);

MetricSpec builtin_flat(std::size_t n);
MetricSpec builtin_poincare_polydisk(std::size_t n);
/// a(l, i, k) = A^l_{ik}, antisymmetric in (i, k); eps >= 0.
MetricSpec builtin_example22(std::size_t n, const std::vector<cplx>& a, double eps,
                             double radius = 0.25);
/// The default fixture: n = 2, A^1_{12} = -A^1_{21} = 1, eps = 0.1.
MetricSpec builtin_example22_default(double eps = 0.1);
MetricSpec builtin_hopf(std::size_t n);

/// Resolves "builtin:name(args)", "file:path" or an inline JSON object.
MetricSpec resolve_metric(std::string_view ref);

/// Closed-form jet when the metric has one and the scheme allows it, else finite differences.
MetricJet2 eval_jet2(const MetricSpec& spec, const CVector& point, const Scheme& scheme = {});
/// Finite-difference jet of an arbitrary matrix-valued sampler.
MetricJet2 eval_jet2_fd(const MetricSampler& metric, std::size_t n, const CVector& point,
                        const Scheme& scheme = {});

/// Max of |dbar_g(j,k,l) - conj(d_g(j,l,k))| and the dd_g pair-symmetry defect.
double jet_symmetry_residual(const MetricJet2& jet);

}  // namespace curvlab
