#include "curvlab/schwarz.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "curvlab/error.hpp"
#include "curvlab/gauduchon.hpp"

namespace curvlab {

HoloMapSpec::HoloMapSpec(std::size_t m, std::vector<Expr> components, std::string name)
    : m_(m), components_(std::move(components)), name_(std::move(name)) {
  if (m_ == 0 || components_.empty()) fail(ErrorKind::Config, "map needs positive source and target dimensions");
  for (std::size_t a = 0; a < components_.size(); ++a) {
    const Expr& f = components_[a];
    if (f.depends_on_conjugates())
      fail(ErrorKind::Config, "map component " + std::to_string(a + 1) + " is not holomorphic (uses conj/abs2)");
    if (f.variable_count() > m_)
      fail(ErrorKind::Config, "map component " + std::to_string(a + 1) + " mentions a variable beyond z" +
                                  std::to_string(m_));
  }
  for (const Expr& f : components_)
    for (std::size_t i = 0; i < m_; ++i) first_.push_back(f.derivative(i, false));
  for (const Expr& d : first_)
    for (std::size_t j = 0; j < m_; ++j) second_.push_back(d.derivative(j, false));
}

HoloMapSpec HoloMapSpec::identity(std::size_t m) {
  std::vector<Expr> c;
  for (std::size_t k = 0; k < m; ++k) c.push_back(Expr::var(k));
  return HoloMapSpec(m, std::move(c), "id");
}

HoloMapSpec HoloMapSpec::parse(std::string_view text, std::size_t source_dim) {
  if (text == "id") return identity(source_dim);
  std::vector<Expr> c;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    const std::string_view part = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    try {
      c.push_back(parse_expression(part));
    } catch (const Error& e) {
      fail(ErrorKind::Config, "map component " + std::to_string(c.size() + 1) + ": " + e.what());
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return HoloMapSpec(source_dim, std::move(c), std::string(text));
}

CVector HoloMapSpec::value(const CVector& z) const {
  CVector v(static_cast<Eigen::Index>(target_dim()));
  for (std::size_t a = 0; a < target_dim(); ++a) v(a) = components_[a].eval(z);
  return v;
}

CMatrix HoloMapSpec::jacobian(const CVector& z) const {
  CMatrix j(target_dim(), m_);
  for (std::size_t a = 0; a < target_dim(); ++a)
    for (std::size_t i = 0; i < m_; ++i) j(a, i) = first_[a * m_ + i].eval(z);
  return j;
}

double HoloMapSpec::cauchy_riemann_residual(const CVector& z) const {
  const double h = 1e-4 * std::max(1.0, z.cwiseAbs().maxCoeff());
  double r = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    auto at = [&](cplx shift) {
      CVector w = z;
      w(i) += shift;
      return value(w);
    };
    const CVector dx = (at(-2 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2 * h)) / (12.0 * h);
    const cplx ih(0.0, h);
    const CVector dy = (at(-2.0 * ih) - 8.0 * at(-ih) + 8.0 * at(ih) - at(2.0 * ih)) / (12.0 * h);
    r = std::max(r, (0.5 * (dx + cplx(0.0, 1.0) * dy)).cwiseAbs().maxCoeff());
  }
  return r;
}

HoloMapJet map_jet(const HoloMapSpec& map, const CVector& z) {
  require(static_cast<std::size_t>(z.size()) == map.source_dim(), "map_jet: point has wrong dimension");
  const std::size_t m = map.source_dim(), n = map.target_dim();
  HoloMapJet j;
  j.point = z;
  j.value = map.value(z);
  j.jacobian = map.jacobian(z);
  j.second = ComplexTensor({{n, Variance::HoloUp}, {m, Variance::HoloDown}, {m, Variance::HoloDown}});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) j.second(a, i, k) = map.second_derivative(a, i, k).eval(z);
  return j;
}

double energy_density(const CMatrix& jacobian, const CMatrix& g, const CMatrix& h) {
  require(jacobian.cols() == g.rows() && jacobian.rows() == h.rows(), "energy_density: dimension mismatch");
  const CMatrix m = jacobian.transpose() * h * jacobian.conjugate();
  const CMatrix gi = g.llt().solve(CMatrix::Identity(g.rows(), g.cols()));
  return (gi * m).trace().real();
}

double energy_density(const HoloMapJet& f, const MetricJet2& source, const MetricJet2& target) {
  return energy_density(f.jacobian, source.g.matrix(), target.g.matrix());
}

double trace(const HermitianMatrix& g, const HermitianMatrix& h) {
  require(g.dim() == h.dim(), "trace: dimension mismatch");
  const CMatrix gi = g.matrix().llt().solve(CMatrix::Identity(g.dim(), g.dim()));
  return (gi * h.matrix()).trace().real();
}

CMatrix frame_jacobian(const CMatrix& jacobian, const HermitianMatrix& g, const HermitianMatrix& h) {
  const UnitaryFrame fg = UnitaryFrame::from_metric(g);
  const UnitaryFrame fh = UnitaryFrame::from_metric(h);
  return fh.L().transpose() * jacobian * fg.L_inverse().transpose();
}

std::size_t numerical_rank(const CMatrix& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  const RVector s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > 1e-8 * s(0)) ++r;
  return r;
}

namespace {

struct Assembly {
  CMatrix F;            // (alpha, i)
  ComplexTensor H;      // frame Hessian (k, i, alpha)
  ChernPackage src;     // unitary
  ChernPackage tgt;     // unitary
  double energy = 0.0;
  double hessian_norm2 = 0.0, sym_norm2 = 0.0, skew_norm2 = 0.0;
  double source_term = 0.0, target_term = 0.0;
  double tf_norm2 = 0.0, tff_norm2 = 0.0;
  double skew_identity_residual = 0.0;
  CMatrix xi;  // F F^*
};

Assembly assemble(const HoloMapSpec& map, const MetricSpec& source, const MetricSpec& target,
                  const CVector& point, const Scheme& scheme, double t_source, double t_target) {
  require(map.source_dim() == source.dim(), "map source dimension does not match the source metric");
  require(map.target_dim() == target.dim(), "map target dimension does not match the target metric");
  const std::size_t m = source.dim(), n = target.dim();
  const HoloMapJet f = map_jet(map, point);
  if (!target.region().contains(f.value))
    fail(ErrorKind::Domain, "f(point) lies outside the target metric's validity region");
  const MetricJet2 gj = eval_jet2(source, point, scheme);
  const MetricJet2 hj = eval_jet2(target, f.value, scheme);

  const ChernPackage src_chart = chern_package(gj);
  const ChernPackage tgt_chart = chern_package(hj);
  const UnitaryFrame fg = UnitaryFrame::from_metric(gj.g);
  const UnitaryFrame fh = UnitaryFrame::from_metric(hj.g);

  Assembly A;
  A.src = to_unitary(src_chart, fg);
  A.tgt = to_unitary(tgt_chart, fh);
  A.energy = energy_density(f, gj, hj);
  A.F = fh.L().transpose() * f.jacobian * fg.L_inverse().transpose();

  const ComplexTensor gam = gauduchon_christoffel(chern_christoffel(gj), src_chart.T, t_source);
  const ComplexTensor gam_t = gauduchon_christoffel(chern_christoffel(hj), tgt_chart.T, t_target);
  const CMatrix& J = f.jacobian;

  // chart Hessian (k, i, alpha)
  std::vector<CMatrix> chart(n, CMatrix::Zero(m, m));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t i = 0; i < m; ++i) {
        cplx v = f.second(a, k, i);
        for (std::size_t c = 0; c < n; ++c)
          for (std::size_t r = 0; r < n; ++r) v += gam_t(c, r, a) * J(c, k) * J(r, i);
        for (std::size_t p = 0; p < m; ++p) v -= gam(k, i, p) * J(a, p);
        chart[a](k, i) = v;
      }
  const CMatrix& Lgi = fg.L_inverse();
  const CMatrix& Lh = fh.L();
  std::vector<CMatrix> lowered(n);
  for (std::size_t a = 0; a < n; ++a) lowered[a] = Lgi * chart[a] * Lgi.transpose();
  A.H = ComplexTensor({{m, Variance::HoloDown}, {m, Variance::HoloDown}, {n, Variance::HoloUp}});
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t a = 0; a < n; ++a) {
        cplx v = 0.0;
        for (std::size_t b = 0; b < n; ++b) v += Lh(b, a) * lowered[b](k, i);
        A.H(k, i, a) = v;
      }

  const ComplexTensor& Ts = A.src.T;
  const ComplexTensor& Tt = A.tgt.T;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t l = 0; l < m; ++l)
      for (std::size_t a = 0; a < n; ++a) {
        const cplx hkl = A.H(k, l, a), hlk = A.H(l, k, a);
        A.hessian_norm2 += std::norm(hkl);
        A.sym_norm2 += std::norm(0.5 * (hkl + hlk));
        A.skew_norm2 += std::norm(0.5 * (hkl - hlk));
        cplx tff = 0.0, tf = 0.0;
        for (std::size_t c = 0; c < n; ++c)
          for (std::size_t r = 0; r < n; ++r) tff += A.F(c, k) * A.F(r, l) * Tt(c, r, a);
        for (std::size_t p = 0; p < m; ++p) tf += Ts(k, l, p) * A.F(a, p);
        A.tff_norm2 += std::norm(tff);
        A.tf_norm2 += std::norm(tf);
        A.skew_identity_residual = std::max(A.skew_identity_residual, std::abs((hkl - hlk) - (tff - tf)));
      }

  const CMatrix& ric2 = A.src.ric[1];
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t a = 0; a < n; ++a) A.source_term += (ric2(k, p) * A.F(a, p) * std::conj(A.F(a, k))).real();

  A.xi = A.F * A.F.adjoint();
  cplx tgt = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d) tgt += A.tgt.R(a, b, c, d) * A.xi(a, b) * A.xi(c, d);
  A.target_term = tgt.real();
  return A;
}

}  // namespace

namespace {

// Real second derivative d_a d_b u with a central stencil of the given order.
double real_second(const std::function<double(const CVector&)>& u, const CVector& p, std::size_t a,
                   std::size_t b, double h, int order) {
  auto at = [&](double sa, double sb) {
    CVector z = p;
    z(a / 2) += (a % 2 == 0) ? cplx(sa, 0.0) : cplx(0.0, sa);
    z(b / 2) += (b % 2 == 0) ? cplx(sb, 0.0) : cplx(0.0, sb);
    return u(z);
  };
  if (a == b) {
    if (order == 2) return (at(h, 0) - 2.0 * u(p) + at(-h, 0)) / (h * h);
    return (-at(2 * h, 0) + 16.0 * at(h, 0) - 30.0 * u(p) + 16.0 * at(-h, 0) - at(-2 * h, 0)) / (12.0 * h * h);
  }
  static const double c4[5] = {1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0};
  static const double c2[3] = {-0.5, 0.0, 0.5};
  double v = 0.0;
  if (order == 2) {
    for (int p1 = -1; p1 <= 1; ++p1)
      for (int q = -1; q <= 1; ++q)
        if (p1 != 0 && q != 0) v += c2[p1 + 1] * c2[q + 1] * at(p1 * h, q * h);
  } else {
    for (int p1 = -2; p1 <= 2; ++p1)
      for (int q = -2; q <= 2; ++q)
        if (p1 != 0 && q != 0) v += c4[p1 + 2] * c4[q + 2] * at(p1 * h, q * h);
  }
  return v / (h * h);
}

}  // namespace

double laplacian_energy_fd(const HoloMapSpec& map, const MetricSpec& source, const MetricSpec& target,
                           const CVector& point, const LaplacianScheme& fd) {
  require(fd.order == 2 || fd.order == 4, "Laplacian order must be 2 or 4");
  require(fd.h > 0.0 && fd.richardson >= 0 && fd.richardson <= 4, "bad Laplacian scheme");
  const std::size_t m = source.dim();
  const double reach = (fd.order == 4 ? 2.0 : 1.0) * fd.h * std::sqrt(2.0);
  for (std::size_t a = 0; a < 2 * m; ++a)
    for (double t : {-reach, reach}) {
      CVector z = point;
      z(a / 2) += (a % 2 == 0) ? cplx(t, 0.0) : cplx(0.0, t);
      if (!source.region().contains(z) || !target.region().contains(map.value(z)))
        fail(ErrorKind::Domain, "Laplacian stencil leaves a validity region");
    }
  const std::function<double(const CVector&)> u = [&](const CVector& z) {
    return energy_density(map.jacobian(z), source.evaluate(z), target.evaluate(map.value(z)));
  };
  auto laplacian_at = [&](double h) {
    cplx lap = 0.0;
    const CMatrix gi = source.evaluate(point).llt().solve(CMatrix::Identity(m, m));
    std::vector<double> d2(4 * m * m);
    for (std::size_t a = 0; a < 2 * m; ++a)
      for (std::size_t b = a; b < 2 * m; ++b) d2[a * 2 * m + b] = d2[b * 2 * m + a] = real_second(u, point, a, b, h, fd.order);
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        auto D = [&](std::size_t a, std::size_t b) { return d2[a * 2 * m + b]; };
        const cplx ddbar = 0.25 * (D(2 * i, 2 * j) + D(2 * i + 1, 2 * j + 1) + I * (D(2 * i, 2 * j + 1) - D(2 * i + 1, 2 * j)));
        lap += gi(j, i) * ddbar;
      }
    return lap.real();
  };
  std::vector<double> level;
  double h = fd.h;
  for (int r = 0; r <= fd.richardson; ++r, h *= 0.5) level.push_back(laplacian_at(h));
  for (int r = 1; r <= fd.richardson; ++r) {
    const double f = std::pow(2.0, fd.order + 2 * (r - 1));
    for (std::size_t k = level.size() - 1; k >= static_cast<std::size_t>(r); --k)
      level[k] = (f * level[k] - level[k - 1]) / (f - 1.0);
  }
  return level.back();
}

SchwarzReport laplacian_energy_assembled(const HoloMapSpec& map, const MetricSpec& source,
                                         const MetricSpec& target, const CVector& point,
                                         const Scheme& scheme, const LaplacianScheme& fd) {
  const Assembly A = assemble(map, source, target, point, scheme, 1.0, 1.0);
  SchwarzReport r;
  r.energy = A.energy;
  r.hessian_norm2 = A.hessian_norm2;
  r.sym_norm2 = A.sym_norm2;
  r.skew_norm2 = A.skew_norm2;
  r.source_term = A.source_term;
  r.target_term = A.target_term;
  r.tf_norm2 = A.tf_norm2;
  r.tff_norm2 = A.tff_norm2;
  r.skew_identity_residual = A.skew_identity_residual;
  r.laplacian_assembled = r.sym_norm2 + r.skew_norm2 + r.source_term - r.target_term;
  r.laplacian_fd = laplacian_energy_fd(map, source, target, point, fd);
  const double scale = std::max(std::abs(r.laplacian_assembled),
                                r.hessian_norm2 + std::abs(r.source_term) + std::abs(r.target_term));
  r.relative_error = scale > 0.0 ? std::abs(r.laplacian_fd - r.laplacian_assembled) / scale
                                 : std::abs(r.laplacian_fd - r.laplacian_assembled);
  Eigen::JacobiSVD<CMatrix> svd(A.F);
  r.singular_values = svd.singularValues();
  r.rank = numerical_rank(A.F);
  r.fd_h = fd.h;
  r.fd_order = fd.order;
  return r;
}

double schwarz_inequality_slack(const SchwarzReport& report, double c1, double c2, double kappa0,
                                std::size_t r, std::size_t n) {
  require(n >= 1, "schwarz_inequality_slack: n must be positive");
  const double u = report.energy;
  double coeff = c2 / static_cast<double>(n);
  if (u > 0.0) {
    if (r == 0 && kappa0 > 0.0) fail(ErrorKind::Domain, "rank 0 with nonzero energy");
    if (r > 0) coeff += kappa0 / static_cast<double>(r);
  }
  const double rhs = -c1 * u + coeff * u * u;
  return report.laplacian_assembled - rhs;
}

double tempered_lower_bound(const SchwarzReport& report, double tau) {
  require(tau > 0.0 && std::isfinite(tau), "tempered_lower_bound: tau must be finite and positive");
  return report.source_term + 0.25 * (1.0 - 1.0 / tau) * report.tf_norm2 - report.target_term +
         0.25 * (1.0 - tau) * report.tff_norm2;
}

double connection_invariance_residual(const HoloMapSpec& map, const MetricSpec& source,
                                      const MetricSpec& target, const CVector& point, double t_source,
                                      double t_target, const Scheme& scheme) {
  const Assembly chern = assemble(map, source, target, point, scheme, 1.0, 1.0);
  const Assembly tcon = assemble(map, source, target, point, scheme, t_source, t_target);
  const double chern_total = chern.sym_norm2 + chern.skew_norm2 + chern.source_term - chern.target_term;
  // The Chern skew part, written through both torsions.
  double torsion_square = 0.0;
  {
    const std::size_t m = source.dim(), n = target.dim();
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t l = 0; l < m; ++l)
        for (std::size_t a = 0; a < n; ++a) {
          cplx tff = 0.0, tf = 0.0;
          for (std::size_t c = 0; c < n; ++c)
            for (std::size_t r = 0; r < n; ++r) tff += tcon.F(c, k) * tcon.F(r, l) * tcon.tgt.T(c, r, a);
          for (std::size_t p = 0; p < m; ++p) tf += tcon.src.T(k, l, p) * tcon.F(a, p);
          torsion_square += 0.25 * std::norm(tff - tf);
        }
  }
  const double assembled = tcon.sym_norm2 + torsion_square + tcon.source_term - tcon.target_term;
  return std::abs(assembled - chern_total);
}

BismutSchwarzReport bismut_schwarz_report(const HoloMapSpec& map, const MetricSpec& source,
                                          const MetricSpec& target, const CVector& point, double tau,
                                          const Scheme& scheme) {
  const TauParam tau_src = TauParam::source(tau);
  const TauParam tau_tgt = TauParam::target(tau);
  const Assembly A = assemble(map, source, target, point, scheme, 1.0, 1.0);
  const std::size_t m = source.dim(), n = target.dim();
  BismutSchwarzReport out;
  out.laplacian = A.sym_norm2 + A.skew_norm2 + A.source_term - A.target_term;

  const BismutPackage src_b = bismut_package(A.src);
  out.hypothesis_matrix = src_b.source_matrix;
  const GauduchonPackage tgt_b = gauduchon_forward(A.tgt, -1.0);

  auto contract_source = [&](const CMatrix& M) {
    double v = 0.0;
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t p = 0; p < m; ++p)
        for (std::size_t a = 0; a < n; ++a) v += (M(k, p) * A.F(a, p) * std::conj(A.F(a, k))).real();
    return v;
  };
  out.source_term = contract_source(ric_tau_from_gauduchon(src_b.bismut, tau_src).matrix());
  const double chern_source = contract_source(ric_tau(A.src, tau_src).matrix());
  out.source_check = std::abs(out.source_term - chern_source);

  const double xi_norm = A.xi.norm();
  if (xi_norm > 0.0) {
    const PSDForm xi = PSDForm::make(HermitianMatrix::hermitian_part(A.xi));
    const double n2 = xi_norm * xi_norm;
    out.target_term = rbc_tau_from_gauduchon(tgt_b, tau_tgt, xi) * n2;
    out.target_check = std::abs(out.target_term - rbc_tau(A.tgt, tau_tgt, xi) * n2);
  }
  out.lower_bound = out.source_term - out.target_term;
  out.margin = out.laplacian - out.lower_bound;
  return out;
}

double young_split_slack(const CVector& a, const CVector& b, double tau) {
  require(tau > 0.0 && std::isfinite(tau), "young_split_slack: tau must be finite and positive");
  return 0.25 * (a - b).squaredNorm() - 0.25 * (1.0 - tau) * a.squaredNorm() -
         0.25 * (1.0 - 1.0 / tau) * b.squaredNorm();
}

double eigenvalue_estimate_slack(const RVector& lambda, double c1, double c2, std::size_t n) {
  require(static_cast<std::size_t>(lambda.size()) <= n, "eigenvalue_estimate_slack: more values than n");
  const double s2 = lambda.squaredNorm();
  const double s4 = lambda.array().pow(4).sum();
  return (-c1 * s2 + c2 * s4) - (-c1 * s2 + c2 / static_cast<double>(n) * s2 * s2);
}

}  // namespace curvlab
