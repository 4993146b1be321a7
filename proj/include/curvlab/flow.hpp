#pragma once

// Tempered Hermitian curvature flow on a lattice over a chart:
//   d/dt g = -Ric^(2) - 1/4 (1 - 1/tau) Q^2 - g.
// Spatial jets come from finite differences of the lattice values with step
// equal to the lattice spacing.

#include <optional>
#include <string>
#include <vector>

#include "curvlab/functionals.hpp"
#include "curvlab/metric.hpp"

namespace curvlab {

/// Velocity -Ric^tau - g in the jet's chart, with Ric^tau = Ric^(2) + 1/4 (1 - 1/tau) Q^2.
HermitianMatrix thcf_velocity(const MetricJet2& jet, const TauParam& tau);

enum class Boundary { Frozen, Periodic };

const char* to_string(Boundary b);
Boundary parse_boundary(const std::string& name);

/// Regular lattice in the 2n real coordinates of C^n, `resolution` nodes per
/// axis. Real axis a is Re z_{a/2} for even a and Im z_{a/2} for odd a.
class GridMetricField {
 public:
  GridMetricField(std::size_t n, const CVector& center, double half_width, std::size_t resolution,
                  Boundary boundary);

  /// Samples spec at every node; throws Domain if a node leaves its region.
  static GridMetricField sample(const MetricSpec& spec, const CVector& center, double half_width,
                                std::size_t resolution, Boundary boundary);

  std::size_t dim() const { return n_; }
  std::size_t resolution() const { return res_; }
  std::size_t node_count() const { return values_.size(); }
  double spacing() const { return dx_; }
  Boundary boundary() const { return boundary_; }

  CVector coords(std::size_t node) const;
  std::vector<std::size_t> multi_index(std::size_t node) const;
  std::size_t node_at(const std::vector<long>& index) const;  // wraps when periodic
  /// Node closest to the lattice centre.
  std::size_t center_node() const;
  /// True when a stencil reaching `reach` nodes along every axis stays on the lattice.
  bool is_interior(std::size_t node, int reach) const;

  const HermitianMatrix& value(std::size_t node) const { return values_[node]; }
  void set_value(std::size_t node, HermitianMatrix g) { values_[node] = std::move(g); }

  /// Lattice jet at a node with step = spacing and no extrapolation.
  MetricJet2 jet(std::size_t node, int order = 4) const;

 private:
  std::size_t n_;
  std::size_t res_;
  double dx_;
  CVector origin_;  // coordinates of node 0
  Boundary boundary_;
  std::vector<HermitianMatrix> values_;
};

struct FlowDiagnostics {
  double time = 0.0;
  double dt = 0.0;
  std::size_t substeps = 0;
  double sup_trace = 0.0;     // sup over nodes of tr_g h; NaN without a reference metric
  double max_velocity = 0.0;  // largest |eigenvalue| of the velocity over nodes
  double min_eigenvalue = 0.0;
  double center_trace = 0.0;  // tr of the centre-node metric
};

enum class Stepper { Euler, Heun };

const char* to_string(Stepper s);
Stepper parse_stepper(const std::string& name);

struct FlowState {
  double time = 0.0;
  GridMetricField field;
  TauParam tau;
  std::optional<MetricSpec> reference;
  int order = 4;  // lattice difference order
  std::vector<FlowDiagnostics> history;

  FlowState(GridMetricField f, TauParam t, std::optional<MetricSpec> ref = std::nullopt)
      : field(std::move(f)), tau(t), reference(std::move(ref)) {}
};

/// THCF velocity at every node. Frozen-boundary nodes whose stencil leaves the
/// lattice get zero velocity.
std::vector<HermitianMatrix> velocity_field(const FlowState& state);

/// Largest dt allowed by 0.2 dx^2 lambda_min(g) / max |lambda(V)|.
double cfl_limit(const FlowState& state, const std::vector<HermitianMatrix>& velocity);

/// Advances by dt. When dt breaks the guard or a node loses positivity the
/// step is split into 2^k substeps, k <= 8; beyond that the step throws
/// Numerical. Appends one diagnostics record.
FlowState step_euler(const FlowState& state, double dt);
FlowState step_heun(const FlowState& state, double dt);
FlowState step(const FlowState& state, double dt, Stepper method);

/// Diagnostics of the current state (time and dt fields from the caller).
FlowDiagnostics diagnose(const FlowState& state, const std::vector<HermitianMatrix>& velocity);

struct ParabolicResidual {
  double trace = 0.0;            // tr_g h
  double dt_trace = 0.0;         // -tr(g^-1 V g^-1 h)
  double laplacian_trace = 0.0;  // g^{i jbar} d_i d_jbar tr_g h, lattice differences
  double lhs = 0.0;
  double rhs = 0.0;              // -kappa0/n tr^2 + tr
  double residual = 0.0;         // lhs - rhs
  double form_precondition = 0.0;   // lambda_min(V + Ric^tau + g)
  double trace_precondition = 0.0;  // tr_g(V + Ric^tau + g)
  bool precondition_ok = false;
  double tolerance = 0.0;
};

/// Pointwise residual of the parabolic trace inequality at a node, with the
/// time derivative taken from the supplied velocity field. Needs the
/// state's reference metric.
ParabolicResidual parabolic_schwarz_residual(const std::vector<HermitianMatrix>& velocity,
                                             const FlowState& state, double kappa0, std::size_t node);

/// Difference quotient of tr_g h at a node across one Heun step of size dt.
double trace_time_derivative_fd(const FlowState& state, std::size_t node, double dt);

}  // namespace curvlab
