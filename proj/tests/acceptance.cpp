// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "curvlab/chern.hpp"
#include "curvlab/error.hpp"
#include "curvlab/flow.hpp"
#include "curvlab/functionals.hpp"
#include "curvlab/gauduchon.hpp"
#include "curvlab/schwarz.hpp"
#include "oracles.hpp"

using namespace curvlab;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

const char* const kFixtures[] = {"builtin:example22", "builtin:hopf(2)", "builtin:poincare_polydisk(1)",
                                 "builtin:poincare_polydisk(2)", "builtin:flat(2)"};

// Sampled points kept away from the outer edge so difference stencils fit.
std::vector<CVector> interior_points(const MetricSpec& spec, std::size_t count, std::mt19937_64& rng) {
  std::vector<CVector> pts;
  const bool shrink = spec.region().type != RegionType::Punctured && std::isfinite(spec.region().radius);
  for (std::size_t k = 0; k < count; ++k) {
    const CVector z = spec.region().sample(spec.dim(), rng);
    pts.push_back(shrink ? CVector(0.8 * z) : z);
  }
  return pts;
}

PSDForm random_form(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  CMatrix b(n, n);
  for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = cplx(N(rng), N(rng));
  return PSDForm::make(HermitianMatrix::hermitian_part(b * b.adjoint()));
}

CVector point2(cplx a, cplx b) {
  CVector z(2);
  z << a, b;
  return z;
}

Outcome c1_example() {
  const auto start = std::chrono::steady_clock::now();
  const ChernPackage pkg = chern_package(eval_jet2(resolve_metric("builtin:example22"), CVector::Zero(2)));
  const ChernPackage u = chern_package_unitary(eval_jet2(resolve_metric("builtin:example22"), CVector::Zero(2)));
  // Tempered entry (R - 1/4 T Tbar)_{1 1bar 2 2bar} = R_{1 1bar 2 2bar} - 1/4 sum_p |T^p_{12}|^2.
  const oracle::TorsionSeed seed{2, {0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
  const double want_tempered = oracle::example22_tempered(seed, 0.1, 0, 0, 1, 1).real();
  cplx tt = 0.0;
  for (std::size_t p = 0; p < 2; ++p) tt += u.T(0, 1, p) * std::conj(u.T(0, 1, p));
  const double tempered = (u.R(0, 0, 1, 1) - 0.25 * tt).real();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double err = std::max({std::abs(pkg.T(0, 1, 0) - 2.0), std::abs(pkg.R(0, 0, 1, 1) - 0.5),
                               std::abs(tempered - want_tempered), std::abs(want_tempered + 0.5)});
  return {err <= 1e-6 && secs < 1.0, fmt("max err %.2e, %.3f s", err, secs)};
}

Outcome c2_normal() {
  CVector p(1);
  p << cplx(0.3, 0.0);
  const NormalCoordinateCheck c = check_chern_normal_coordinates(resolve_metric("builtin:poincare_polydisk(1)"), p);
  const double worst = std::max({c.metric_residual, c.first_residual, c.second_residual});
  return {worst <= 1e-8, fmt("max residual %.2e", worst)};
}

Outcome c3_pluriclosed() {
  const MetricSpec hopf = resolve_metric("builtin:hopf(2)");
  std::mt19937_64 rng(2023);
  double gap = 0.0, plc = 0.0;
  for (const CVector& z : interior_points(hopf, 4, rng)) {
    const ChernPackage u = chern_package_unitary(eval_jet2(hopf, z));
    for (int k = 0; k < 8; ++k) {
      const PSDForm xi = random_form(2, rng);
      gap = std::max(gap, std::abs(rbc_tau(u, TauParam::target(0.0), xi) - 0.5 * altered_hsc(u, xi)));
    }
    const PluriclosedResidual r = pluriclosed_residual(hopf, z);
    plc = std::max({plc, r.direct, r.symmetry});
  }
  return {gap <= 1e-8 && plc <= 1e-6, fmt("gap %.2e, pluriclosed %.2e", gap, plc)};
}

Outcome c4_tau_one() {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (const char* ref : kFixtures) {
    const MetricSpec spec = resolve_metric(ref);
    for (const CVector& z : interior_points(spec, 3, rng)) {
      const ChernPackage u = chern_package_unitary(eval_jet2(spec, z));
      for (int k = 0; k < 5; ++k) {
        const PSDForm xi = random_form(spec.dim(), rng);
        worst = std::max(worst, std::abs(rbc_tau(u, TauParam::target(1.0), xi) - rbc(u, xi)));
      }
      worst = std::max(worst, (ric_tau(u, TauParam::source(1.0)).matrix() - u.ric[1]).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-14, fmt("max diff %.2e", worst)};
}

Outcome c5_round_trip() {
  std::mt19937_64 rng(5);
  double worst = 0.0, at_one = 0.0;
  for (const char* ref : kFixtures) {
    const MetricSpec spec = resolve_metric(ref);
    for (const CVector& z : interior_points(spec, 2, rng)) {
      const ChernPackage u = chern_package_unitary(eval_jet2(spec, z));
      for (double t : {-2.0, -1.0, -0.5, 0.25, 0.75, 2.0, 5.0})
        worst = std::max(worst, max_abs_diff(chern_from_gauduchon(gauduchon_forward(u, t)), u.R));
      const GauduchonPackage one = gauduchon_forward(u, 1.0);
      at_one = std::max({at_one, max_abs_diff(one.tR, u.R), max_abs_diff(chern_from_gauduchon(one), u.R)});
    }
  }
  return {worst <= 1e-9 && at_one == 0.0, fmt("max residual %.2e, t=1 diff %.1e", worst, at_one)};
}

Outcome c6_cross_check() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> T(-3.0, 3.0), Tau(0.05, 5.0);
  double worst = 0.0;
  for (const char* ref : kFixtures) {
    const MetricSpec spec = resolve_metric(ref);
    for (const CVector& z : interior_points(spec, 2, rng)) {
      const ChernPackage u = chern_package_unitary(eval_jet2(spec, z));
      for (int k = 0; k < 10; ++k) {
        double t = T(rng);
        if (std::abs(t) < 0.05 || std::abs(t - 0.5) < 0.05) t += 0.2;
        const double tau = Tau(rng);
        const GauduchonPackage gp = gauduchon_forward(u, t);
        const PSDForm xi = random_form(spec.dim(), rng);
        worst = std::max(worst, std::abs(rbc_tau_from_gauduchon(gp, TauParam::target(tau), xi) -
                                         rbc_tau(u, TauParam::target(tau), xi)));
        worst = std::max(worst, (ric_tau_from_gauduchon(gp, TauParam::source(tau)).matrix() -
                                 ric_tau(u, TauParam::source(tau)).matrix())
                                    .cwiseAbs()
                                    .maxCoeff());
      }
    }
  }
  return {worst <= 1e-9, fmt("max diff %.2e", worst)};
}

struct MapFixture {
  const char* map;
  const char* source;
  const char* target;
  CVector z;
};

std::vector<MapFixture> map_fixtures() {
  return {
      {"id", "builtin:hopf(2)", "builtin:hopf(2)", point2(cplx(0.7, 0.2), cplx(-0.4, 0.5))},
      {"id", "builtin:poincare_polydisk(2)", "builtin:example22", point2(0.1, 0.1)},
      {"z1 + 0.5*z2^2 + 1, z2 - z1*z2 + 0.5", "builtin:example22", "builtin:hopf(2)",
       point2(cplx(0.05, 0.03), cplx(-0.04, 0.06))},
  };
}

Outcome c7_lu_identity() {
  double rel = 0.0, skew = 0.0, rate = std::numeric_limits<double>::infinity();
  int rated = 0;
  for (const MapFixture& f : map_fixtures()) {
    const MetricSpec source = resolve_metric(f.source), target = resolve_metric(f.target);
    const HoloMapSpec map = HoloMapSpec::parse(f.map, source.dim());
    const SchwarzReport r = laplacian_energy_assembled(map, source, target, f.z);
    rel = std::max(rel, r.relative_error);
    skew = std::max(skew, r.skew_identity_residual);
    LaplacianScheme fd;
    fd.richardson = 0;
    fd.h = 0.02;
    const double e1 = std::abs(laplacian_energy_fd(map, source, target, f.z, fd) - r.laplacian_assembled);
    fd.h = 0.01;
    const double e2 = std::abs(laplacian_energy_fd(map, source, target, f.z, fd) - r.laplacian_assembled);
    // A constant energy density (identity onto the same metric) has no truncation error to measure.
    if (e1 < 1e-9) continue;
    rate = std::min(rate, std::log2(e1 / e2));
    ++rated;
  }
  return {rel <= 1e-4 && skew <= 1e-8 && rated >= 2 && rate >= 3.5,
          fmt("rel err %.2e, skew %.2e", rel, skew) + fmt(", order %.2f on %.0f fixtures", rate, rated)};
}

Outcome c8_invariance() {
  // Identity between different metrics; onto the same metric every term cancels trivially.
  const MapFixture f = map_fixtures()[1];
  const MetricSpec source = resolve_metric(f.source), target = resolve_metric(f.target);
  const HoloMapSpec id = HoloMapSpec::identity(2);
  double worst = 0.0;
  for (double ts : {-2.0, -1.0, 0.0, 1.0, 3.0})
    for (double tt : {-2.0, -1.0, 0.0, 1.0, 3.0})
      worst = std::max(worst, std::abs(connection_invariance_residual(id, source, target, f.z, ts, tt)));
  return {worst <= 1e-8, fmt("max residual %.2e over 25 pairs", worst)};
}

Outcome c9_equality() {
  const double C1 = 2.0, k0 = 2.0, C2 = 0.0;
  const std::size_t r = 1, n = 1;
  const double bound = C1 * r * n / (k0 * n + r * C2);
  const MetricSpec d = resolve_metric("builtin:poincare_polydisk(1)");
  std::mt19937_64 rng(9);
  double energy_err = 0.0, slack = 0.0;
  for (const CVector& z : interior_points(d, 5, rng)) {
    const SchwarzReport rep = laplacian_energy_assembled(HoloMapSpec::identity(1), d, d, z);
    energy_err = std::max(energy_err, std::abs(rep.energy - bound));
    slack = std::max(slack, std::abs(schwarz_inequality_slack(rep, C1, C2, k0, r, n)));
    slack = std::max(slack, std::abs(rep.laplacian_assembled - tempered_lower_bound(rep, 1.0)));
  }
  return {energy_err <= 1e-9 && slack <= 1e-6, fmt("|u - bound| %.2e, slack %.2e", energy_err, slack)};
}

Outcome c10_inequalities() {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.01, 50.0);
  std::uniform_int_distribution<int> dim(1, 5);
  double young = kInf, eig = kInf;
  for (int k = 0; k < 1000; ++k) {
    const int m = dim(rng);
    CVector a(m), b(m);
    for (int i = 0; i < m; ++i) {
      a(i) = cplx(N(rng), N(rng));
      b(i) = cplx(N(rng), N(rng));
    }
    young = std::min(young, young_split_slack(a, b, U(rng)));
  }
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = static_cast<std::size_t>(dim(rng));
    std::uniform_int_distribution<int> rk(1, static_cast<int>(n));
    RVector l(rk(rng));
    for (Eigen::Index i = 0; i < l.size(); ++i) l(i) = N(rng);
    eig = std::min(eig, eigenvalue_estimate_slack(l, U(rng), U(rng), n));
  }
  return {young >= -1e-12 && eig >= -1e-12, fmt("min slack young %.2e, eigenvalue %.2e", young, eig)};
}

Outcome c11_poincare() {
  const MetricSpec d = resolve_metric("builtin:poincare_polydisk(1)");
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (const CVector& z : interior_points(d, 10, rng))
    worst = std::max(worst, std::abs(hsc(chern_package_unitary(eval_jet2(d, z)), CVector::Ones(1)) + 2.0));
  const MetricSpec p2 = resolve_metric("builtin:poincare_polydisk(2)");
  ExtremumRequest req;
  req.functional = FunctionalId::HSC;
  req.points = {CVector::Zero(2)};
  req.seed = 11;
  req.kind = BoundKind::Sup;
  const double sup = estimate_extremum(p2, req).value;
  req.kind = BoundKind::Inf;
  const double inf = estimate_extremum(p2, req).value;
  return {worst <= 1e-6 && std::abs(sup + 1.0) <= 1e-3 && std::abs(inf + 2.0) <= 1e-3,
          fmt("max |HSC + 2| %.2e, ", worst) + fmt("sup %.6f, inf %.6f", sup, inf)};
}

Outcome c12_flow() {
  const MetricSpec flat = resolve_metric("builtin:flat(2)");
  FlowState st(GridMetricField::sample(flat, CVector::Zero(2), 1.0, 5, Boundary::Periodic), TauParam::source(kInf));
  for (int k = 0; k < 10; ++k) st = step_heun(st, 0.01);
  double flat_err = 0.0;
  for (std::size_t node = 0; node < st.field.node_count(); ++node)
    flat_err = std::max(flat_err, (st.field.value(node).matrix() -
                                   oracle::flat_flow_exact(0.1) * CMatrix::Identity(2, 2))
                                      .cwiseAbs()
                                      .maxCoeff());

  // kappa0 from the extremizer: RBC^tau of the reference is bounded by -kappa0.
  const MetricSpec disk = resolve_metric("builtin:poincare_polydisk(1)");
  ExtremumRequest req;
  req.functional = FunctionalId::RBCTau;
  req.tau = 1.0;
  req.kind = BoundKind::Sup;
  req.seed = 12;
  const double kappa0 = -estimate_extremum(disk, req).value;
  const FlowState ps(GridMetricField::sample(disk, CVector::Zero(1), 0.3, 17, Boundary::Frozen),
                     TauParam::source(1.0), disk);
  const std::vector<HermitianMatrix> v = velocity_field(ps);
  const std::size_t c = ps.field.center_node();
  const ParabolicResidual r = parabolic_schwarz_residual(v, ps, kappa0, c);
  const ParabolicResidual inflated = parabolic_schwarz_residual(v, ps, 10.0 * kappa0, c);
  const bool ok = flat_err <= 1e-4 && r.precondition_ok && r.residual <= 1e-3 && inflated.residual > 0.0;
  return {ok, fmt("flat err %.2e, kappa0 %.6f, ", flat_err, kappa0) +
                  fmt("residual %.2e, inflated %.3f", r.residual, inflated.residual)};
}

Outcome c13_bianchi() {
  std::mt19937_64 rng(13);
  double worst = 0.0;
  for (const char* ref : kFixtures) {
    const MetricSpec spec = resolve_metric(ref);
    for (const CVector& z : interior_points(spec, 4, rng)) worst = std::max(worst, bianchi_residual(spec, z));
  }
  return {worst <= 1e-6, fmt("max residual %.2e", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"seeded example closed forms", c1_example},
      {"Chern normal coordinates", c2_normal},
      {"pluriclosed RBC^0 identity", c3_pluriclosed},
      {"tau = 1 degeneration", c4_tau_one},
      {"Gauduchon round trip", c5_round_trip},
      {"Gauduchon cross-check", c6_cross_check},
      {"energy Laplacian identity", c7_lu_identity},
      {"connection invariance", c8_invariance},
      {"Poincare equality case", c9_equality},
      {"Young and eigenvalue slacks", c10_inequalities},
      {"Poincare curvature and extremizer", c11_poincare},
      {"flow and parabolic residual", c12_flow},
      {"Bianchi identity", c13_bianchi},
  };
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d of %zu criteria failed, %.1f s\n", failed, criteria.size(), secs);
  return failed == 0 ? 0 : 1;
}
