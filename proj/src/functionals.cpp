#include "curvlab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "curvlab/error.hpp"
#include "curvlab/parallel.hpp"

namespace curvlab {

TauParam TauParam::target(double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau))
    fail(ErrorKind::Domain, "target tau must be a finite number >= 0");
  return TauParam(tau, TauRole::Target);
}

TauParam TauParam::source(double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::Domain, "source tau must be > 0 (or inf)");
  return TauParam(tau, TauRole::Source);
}

bool TauParam::is_infinite() const { return std::isinf(value_); }

double TauParam::one_minus_inverse() const {
  if (is_infinite()) return 1.0;
  if (value_ == 0.0) fail(ErrorKind::Domain, "1 - 1/tau is undefined at tau = 0");
  return 1.0 - 1.0 / value_;
}

namespace {

void require_unitary(const ChernPackage& u, const char* what) {
  if (u.frame != Frame::Unitary)
    fail(ErrorKind::Domain, std::string(what) + ": Chern data must be in the unitary frame");
}

double real_checked(cplx v, double scale, const char* what) {
  if (std::abs(v.imag()) > 1e-10 * std::max(1.0, scale))
    fail(ErrorKind::Numerical, std::string(what) + ": value has a non-negligible imaginary part");
  return v.real();
}

// sum R(a,b,c,d) x(a,b) y(c,d)
cplx curvature_pairing(const ComplexTensor& R, const CMatrix& x, const CMatrix& y, bool swap_bd) {
  const auto n = static_cast<std::size_t>(x.rows());
  cplx acc = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d)
          acc += (swap_bd ? R(a, d, c, b) : R(a, b, c, d)) * x(a, b) * y(c, d);
  return acc;
}

double rbc_scale(const ChernPackage& u) { return std::max(1.0, u.R.max_abs()); }

}  // namespace

double hsc(const ChernPackage& u, const CVector& zeta) {
  require_unitary(u, "hsc");
  const double n2 = zeta.squaredNorm();
  require(n2 > 0.0, "hsc: zero direction");
  const CMatrix x = zeta * zeta.adjoint();
  return real_checked(curvature_pairing(u.R, x, x, false), rbc_scale(u) * n2 * n2, "hsc") / (n2 * n2);
}

double hbc(const ChernPackage& u, const CVector& zeta, const CVector& nu) {
  require_unitary(u, "hbc");
  const double z2 = zeta.squaredNorm(), v2 = nu.squaredNorm();
  require(z2 > 0.0 && v2 > 0.0, "hbc: zero direction");
  const CMatrix x = zeta * zeta.adjoint();
  const CMatrix y = nu * nu.adjoint();
  return real_checked(curvature_pairing(u.R, x, y, false), rbc_scale(u) * z2 * v2, "hbc") / (z2 * v2);
}

double rbc(const ChernPackage& u, const PSDForm& xi) {
  require_unitary(u, "rbc");
  require(xi.norm > 0.0, "rbc: zero form");
  const CMatrix& x = xi.xi.matrix();
  const double n2 = xi.norm * xi.norm;
  return real_checked(curvature_pairing(u.R, x, x, false), rbc_scale(u) * n2, "rbc") / n2;
}

double torsion_form(const ChernPackage& u, const PSDForm& xi) {
  require_unitary(u, "torsion_form");
  require(xi.norm > 0.0, "torsion_form: zero form");
  const std::size_t n = u.dim();
  const CMatrix& x = xi.xi.matrix();
  // sum_rho |.|^2 structure: S_rho(b, d) = sum_{a,c} T^rho_{ac} x(a,b) x(c,d)
  cplx acc = 0.0;
  for (std::size_t rho = 0; rho < n; ++rho)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t d = 0; d < n; ++d) {
        cplx s = 0.0;
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t c = 0; c < n; ++c) s += u.T(a, c, rho) * x(a, b) * x(c, d);
        acc += s * std::conj(u.T(b, d, rho));
      }
  const double n2 = xi.norm * xi.norm;
  return real_checked(acc, std::max(1.0, u.T.max_abs() * u.T.max_abs()) * n2, "torsion_form") / n2;
}

double rbc_tau(const ChernPackage& u, const TauParam& tau, const PSDForm& xi) {
  if (tau.role() != TauRole::Target) fail(ErrorKind::Domain, "rbc_tau: tau must have the target role");
  const double base = rbc(u, xi);
  if (tau.value() == 1.0) return base;
  return base - 0.25 * (1.0 - tau.value()) * torsion_form(u, xi);
}

double altered_hsc(const ChernPackage& u, const PSDForm& xi) {
  require_unitary(u, "altered_hsc");
  require(xi.norm > 0.0, "altered_hsc: zero form");
  const CMatrix& x = xi.xi.matrix();
  const double n2 = xi.norm * xi.norm;
  const cplx v = curvature_pairing(u.R, x, x, false) + curvature_pairing(u.R, x, x, true);
  return real_checked(v, rbc_scale(u) * n2, "altered_hsc") / n2;
}

HermitianMatrix ric_tau(const ChernPackage& pkg, const TauParam& tau) {
  if (tau.role() != TauRole::Source) fail(ErrorKind::Domain, "ric_tau: tau must have the source role");
  const HermitianMatrix ric2 = HermitianMatrix::hermitian_part(pkg.ric[1]);
  if (tau.value() == 1.0) return ric2;
  return HermitianMatrix::hermitian_part(ric2.matrix() +
                                         0.25 * tau.one_minus_inverse() * pkg.Q_circ.matrix());
}

// ---------------------------------------------------------------------------

const char* to_string(FunctionalId f) {
  switch (f) {
    case FunctionalId::HSC: return "hsc";
    case FunctionalId::HBC: return "hbc";
    case FunctionalId::RBC: return "rbc";
    case FunctionalId::RBCTau: return "rbc_tau";
    case FunctionalId::AlteredHSC: return "altered_hsc";
    case FunctionalId::AlteredGap: return "rbc0_altered_gap";
  }
  return "?";
}

FunctionalId parse_functional(const std::string& name) {
  for (FunctionalId f : {FunctionalId::HSC, FunctionalId::HBC, FunctionalId::RBC, FunctionalId::RBCTau,
                         FunctionalId::AlteredHSC, FunctionalId::AlteredGap})
    if (name == to_string(f)) return f;
  fail(ErrorKind::Config, "unknown functional '" + name +
                              "' (expected hsc, hbc, rbc, rbc_tau, altered_hsc or rbc0_altered_gap)");
}

double evaluate_functional(const ChernPackage& u, FunctionalId f, double tau,
                           const std::vector<CVector>& vectors, const std::optional<PSDForm>& xi) {
  switch (f) {
    case FunctionalId::HSC:
      require(vectors.size() == 1, "hsc needs one direction");
      return hsc(u, vectors[0]);
    case FunctionalId::HBC:
      require(vectors.size() == 2, "hbc needs two directions");
      return hbc(u, vectors[0], vectors[1]);
    default: break;
  }
  require(xi.has_value(), "form functional needs xi");
  switch (f) {
    case FunctionalId::RBC: return rbc(u, *xi);
    case FunctionalId::RBCTau: return rbc_tau(u, TauParam::target(tau), *xi);
    case FunctionalId::AlteredHSC: return altered_hsc(u, *xi);
    case FunctionalId::AlteredGap:
      return std::abs(rbc_tau(u, TauParam::target(0.0), *xi) - 0.5 * altered_hsc(u, *xi));
    default: break;
  }
  return 0.0;
}

namespace {

bool uses_form(FunctionalId f) {
  return f != FunctionalId::HSC && f != FunctionalId::HBC;
}

struct Direction {
  std::vector<CVector> vectors;
  std::optional<PSDForm> xi;
};

// Real parameter layout: vectors as (re, im) pairs; forms as the n diagonal
// entries followed by (re, im) of the strict upper triangle.
class Parametrization {
 public:
  Parametrization(FunctionalId f, std::size_t n) : f_(f), n_(n) {}

  std::size_t size() const {
    if (!uses_form(f_)) return (f_ == FunctionalId::HBC ? 2 : 1) * 2 * n_;
    return n_ * n_;
  }

  Direction decode(const std::vector<double>& p) const {
    Direction d;
    if (!uses_form(f_)) {
      const std::size_t count = f_ == FunctionalId::HBC ? 2 : 1;
      for (std::size_t v = 0; v < count; ++v) {
        CVector z(static_cast<Eigen::Index>(n_));
        for (std::size_t k = 0; k < n_; ++k) z(k) = cplx(p[v * 2 * n_ + 2 * k], p[v * 2 * n_ + 2 * k + 1]);
        d.vectors.push_back(z);
      }
      return d;
    }
    d.xi = psd_project(HermitianMatrix::hermitian_part(to_matrix(p)));
    return d;
  }

  void project(std::vector<double>& p) const {
    if (!uses_form(f_)) {
      const std::size_t count = f_ == FunctionalId::HBC ? 2 : 1;
      for (std::size_t v = 0; v < count; ++v) {
        double s = 0.0;
        for (std::size_t q = 0; q < 2 * n_; ++q) s += p[v * 2 * n_ + q] * p[v * 2 * n_ + q];
        s = std::sqrt(s);
        if (s == 0.0) fail(ErrorKind::Numerical, "direction collapsed to zero");
        for (std::size_t q = 0; q < 2 * n_; ++q) p[v * 2 * n_ + q] /= s;
      }
      return;
    }
    const PSDForm xi = psd_project(HermitianMatrix::hermitian_part(to_matrix(p)));
    p = from_matrix(xi.xi.matrix());
  }

  std::vector<double> random(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::vector<double> p(size());
      for (double& x : p) x = normal(rng);
      try {
        project(p);
        return p;
      } catch (const Error&) {
        // all eigenvalues clipped; draw again
      }
    }
    fail(ErrorKind::Numerical, "could not draw a valid random direction");
  }

 private:
  CMatrix to_matrix(const std::vector<double>& p) const {
    CMatrix m = CMatrix::Zero(n_, n_);
    std::size_t q = 0;
    for (std::size_t k = 0; k < n_; ++k) m(k, k) = p[q++];
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t l = k + 1; l < n_; ++l) {
        m(k, l) = cplx(p[q], p[q + 1]);
        m(l, k) = std::conj(m(k, l));
        q += 2;
      }
    return m;
  }

  std::vector<double> from_matrix(const CMatrix& m) const {
    std::vector<double> p;
    p.reserve(size());
    for (std::size_t k = 0; k < n_; ++k) p.push_back(m(k, k).real());
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t l = k + 1; l < n_; ++l) {
        p.push_back(m(k, l).real());
        p.push_back(m(k, l).imag());
      }
    return p;
  }

  FunctionalId f_;
  std::size_t n_;
};

struct StartResult {
  bool valid = false;
  double objective = -std::numeric_limits<double>::infinity();
  CVector point;
  Direction witness;
  std::size_t iterations = 0;
};

}  // namespace

BoundCertificate estimate_extremum(const MetricSpec& spec, const ExtremumRequest& req) {
  require(req.budget.starts >= 1, "extremizer budget needs at least one start");
  require(req.budget.step > 0.0 && req.budget.fd_step > 0.0, "extremizer steps must be positive");
  if (req.functional == FunctionalId::RBCTau) TauParam::target(req.tau);
  const std::size_t n = spec.dim();
  const Parametrization param(req.functional, n);
  const double sign = req.kind == BoundKind::Sup ? 1.0 : -1.0;

  std::vector<StartResult> results(req.budget.starts);
  parallel_for(req.budget.starts, [&](std::size_t start) {
    std::seed_seq seq{static_cast<std::uint32_t>(req.seed), static_cast<std::uint32_t>(req.seed >> 32),
                      static_cast<std::uint32_t>(start)};
    std::mt19937_64 rng(seq);
    StartResult& res = results[start];

    std::optional<ChernPackage> pkg;
    for (int attempt = 0; attempt < 8 && !pkg; ++attempt) {
      res.point = req.points.empty() ? spec.region().sample(n, rng) : req.points[start % req.points.size()];
      try {
        pkg = chern_package_unitary(eval_jet2(spec, res.point, req.scheme));
      } catch (const Error&) {
        if (!req.points.empty()) return;
      }
    }
    if (!pkg) return;

    auto objective = [&](const std::vector<double>& p) {
      const Direction d = param.decode(p);
      return sign * evaluate_functional(*pkg, req.functional, req.tau, d.vectors, d.xi);
    };

    std::vector<double> x = param.random(rng);
    double fx = objective(x);
    double step = req.budget.step;
    const double h = req.budget.fd_step;
    std::vector<double> grad(x.size());
    for (std::size_t it = 0; it < req.budget.steps; ++it) {
      double gnorm = 0.0;
      for (std::size_t q = 0; q < x.size(); ++q) {
        std::vector<double> xp = x, xm = x;
        xp[q] += h;
        xm[q] -= h;
        grad[q] = (objective(xp) - objective(xm)) / (2.0 * h);
        gnorm += grad[q] * grad[q];
      }
      gnorm = std::sqrt(gnorm);
      if (!(gnorm > 0.0)) break;
      bool moved = false;
      for (int halvings = 0; halvings < 30; ++halvings) {
        std::vector<double> cand(x.size());
        for (std::size_t q = 0; q < x.size(); ++q) cand[q] = x[q] + step * grad[q];
        try {
          param.project(cand);
          const double fc = objective(cand);
          if (fc > fx) {
            x = std::move(cand);
            fx = fc;
            moved = true;
            step = std::min(step * 1.5, 100.0 * req.budget.step);
            break;
          }
        } catch (const Error&) {
          // projection degenerated; shrink the step
        }
        step *= 0.5;
      }
      ++res.iterations;
      if (!moved) break;
    }
    res.valid = true;
    res.objective = fx;
    res.witness = param.decode(x);
  });

  std::size_t best = results.size();
  BoundCertificate cert;
  for (std::size_t s = 0; s < results.size(); ++s) {
    if (!results[s].valid) continue;
    ++cert.samples;
    cert.iterations += results[s].iterations;
    if (best == results.size() || results[s].objective > results[best].objective) best = s;
  }
  if (best == results.size())
    fail(ErrorKind::Numerical, "extremizer found no valid sample in the region");
  cert.functional = req.functional;
  cert.kind = req.kind;
  cert.value = sign * results[best].objective;
  cert.point = results[best].point;
  cert.witness_vectors = results[best].witness.vectors;
  for (CVector& v : cert.witness_vectors) v.normalize();
  cert.witness_form = results[best].witness.xi;
  cert.tolerance = 1e-9;
  cert.tau = req.tau;
  return cert;
}

}  // namespace curvlab
