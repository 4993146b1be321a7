#include "curvlab/metric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "curvlab/error.hpp"

namespace curvlab {

using json = nlohmann::json;

const char* to_string(RegionType t) {
  switch (t) {
    case RegionType::Ball: return "ball";
    case RegionType::Polydisk: return "polydisk";
    case RegionType::Punctured: return "punctured";
  }
  return "?";
}

bool Region::contains(const CVector& z) const {
  if (!z.allFinite()) return false;
  switch (type) {
    case RegionType::Ball: return z.norm() < radius;
    case RegionType::Polydisk: return z.size() == 0 || z.cwiseAbs().maxCoeff() < radius;
    case RegionType::Punctured: {
      const double r = z.norm();
      return r > 0.0 && r < radius;
    }
  }
  return false;
}

CVector Region::sample(std::size_t n, std::mt19937_64& rng) const {
  const double r = std::isfinite(radius) ? radius : 1.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector z(static_cast<Eigen::Index>(n));
  if (type == RegionType::Polydisk) {
    for (std::size_t k = 0; k < n; ++k) {
      const double rho = 0.9 * r * std::sqrt(unit(rng));
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      z(static_cast<Eigen::Index>(k)) = std::polar(rho, phase);
    }
    return z;
  }
  for (std::size_t k = 0; k < n; ++k)
    z(static_cast<Eigen::Index>(k)) = cplx(normal(rng), normal(rng));
  double norm = z.norm();
  while (norm == 0.0) {
    z(0) = cplx(normal(rng), normal(rng));
    norm = z.norm();
  }
  z /= norm;
  double rho;
  if (type == RegionType::Punctured) {
    rho = r * (0.25 + 0.65 * unit(rng));
  } else {
    rho = 0.9 * r * std::pow(unit(rng), 1.0 / (2.0 * static_cast<double>(n)));
  }
  return z * rho;
}

double Scheme::step_at(const CVector& z) const {
  if (h > 0.0) return h;
  const double mag = z.size() == 0 ? 0.0 : z.cwiseAbs().maxCoeff();
  return 1e-3 * std::max(1.0, mag);
}

// ---------------------------------------------------------------------------

MetricSpec::MetricSpec(std::size_t n, std::vector<Expr> entries, Region region, std::string name)
    : n_(n), entries_(std::move(entries)), region_(region), name_(std::move(name)) {
  if (n_ == 0) fail(ErrorKind::Config, "metric dimension must be positive");
  if (entries_.size() != n_ * n_)
    fail(ErrorKind::Config, "metric entry matrix must be " + std::to_string(n_) + "x" +
                                std::to_string(n_));
  for (const Expr& e : entries_)
    if (e.variable_count() > n_)
      fail(ErrorKind::Config, "metric entry mentions z" + std::to_string(e.variable_count()) +
                                  " but n = " + std::to_string(n_));
}

void MetricSpec::set_exact_jet(std::string id, ExactJetHook hook) {
  exact_id_ = std::move(id);
  exact_ = std::move(hook);
}

CMatrix MetricSpec::evaluate(const CVector& z) const {
  require(static_cast<std::size_t>(z.size()) == n_, "metric evaluated at a point of wrong dimension");
  CMatrix m(n_, n_);
  for (std::size_t k = 0; k < n_; ++k)
    for (std::size_t l = 0; l < n_; ++l) {
      const cplx v = entry(k, l).eval(z);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        fail(ErrorKind::Numerical, "metric entry (" + std::to_string(k + 1) + "," +
                                       std::to_string(l + 1) + ") is not finite");
      m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = v;
    }
  return m;
}

HermitianMatrix MetricSpec::value(const CVector& z) const {
  return HermitianMatrix::from(evaluate(z), 1e-10);
}

MetricSampler MetricSpec::sampler() const {
  return [spec = *this](const CVector& z) { return spec.evaluate(z); };
}

void MetricSpec::exact_jet(const CVector& z, MetricJet2& jet) const {
  require(has_exact_jet(), "metric '" + name_ + "' has no exact jet");
  exact_(z, jet);
}

std::string MetricSpec::to_json() const {
  json j;
  j["n"] = n_;
  json rows = json::array();
  for (std::size_t k = 0; k < n_; ++k) {
    json row = json::array();
    for (std::size_t l = 0; l < n_; ++l) row.push_back(entry(k, l).to_string());
    rows.push_back(row);
  }
  j["entries"] = rows;
  j["region"] = {{"type", to_string(region_.type)}};
  if (std::isfinite(region_.radius)) j["region"]["radius"] = region_.radius;
  return j.dump(2);
}

CVector base_point(const MetricSpec& spec) {
  CVector z = CVector::Zero(static_cast<Eigen::Index>(spec.dim()));
  if (spec.region().type == RegionType::Punctured) {
    const double r = std::isfinite(spec.region().radius) ? spec.region().radius : 2.0;
    z(0) = 0.5 * r;
  }
  return z;
}

namespace {

Region parse_region(const json& j) {
  Region r;
  if (!j.is_object()) fail(ErrorKind::Config, "metric 'region' must be an object");
  const std::string type = j.value("type", std::string("ball"));
  if (type == "ball") r.type = RegionType::Ball;
  else if (type == "polydisk") r.type = RegionType::Polydisk;
  else if (type == "punctured") r.type = RegionType::Punctured;
  else fail(ErrorKind::Config, "unknown region type '" + type + "'");
  if (j.contains("radius")) {
    if (!j["radius"].is_number()) fail(ErrorKind::Config, "region radius must be a number");
    r.radius = j["radius"].get<double>();
    if (!(r.radius > 0.0)) fail(ErrorKind::Config, "region radius must be positive");
  }
  return r;
}

void check_hermitian_entries(const MetricSpec& spec) {
  const std::size_t n = spec.dim();
  std::mt19937_64 rng(0x6d657472);
  std::size_t checked = 0;
  for (std::size_t attempt = 0; attempt < 256 && checked < 32; ++attempt) {
    const CVector z = spec.region().sample(n, rng);
    CMatrix m;
    try {
      m = spec.evaluate(z);
    } catch (const Error&) {
      continue;  // a pole of some entry; try another point
    }
    ++checked;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = k; l < n; ++l) {
        const auto K = static_cast<Eigen::Index>(k), L = static_cast<Eigen::Index>(l);
        const double scale = std::max({1.0, std::abs(m(K, L)), std::abs(m(L, K))});
        if (std::abs(m(K, L) - std::conj(m(L, K))) > 1e-10 * scale) {
          std::ostringstream os;
          os << "metric entries (" << k + 1 << "," << l + 1 << ") and (" << l + 1 << "," << k + 1
             << ") are not conjugate-symmetric";
          fail(ErrorKind::Config, os.str());
        }
      }
  }
  if (checked == 0) fail(ErrorKind::Config, "metric could not be evaluated anywhere in its region");
}

}  // namespace

MetricSpec parse_metric_spec(std::string_view source) {
  json j;
  try {
    j = json::parse(source);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, std::string("metric file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("entries"))
    fail(ErrorKind::Config, "metric file needs 'n' and 'entries'");
  if (!j["n"].is_number_integer() || j["n"].get<long long>() < 1)
    fail(ErrorKind::Config, "'n' must be a positive integer");
  const auto n = static_cast<std::size_t>(j["n"].get<long long>());
  const json& rows = j["entries"];
  if (!rows.is_array() || rows.size() != n)
    fail(ErrorKind::Config, "'entries' must have n = " + std::to_string(n) + " rows");
  std::vector<Expr> entries;
  entries.reserve(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    const json& row = rows[k];
    if (!row.is_array() || row.size() != n)
      fail(ErrorKind::Config, "entries row " + std::to_string(k + 1) + " must have " +
                                  std::to_string(n) + " columns");
    for (std::size_t l = 0; l < n; ++l) {
      if (!row[l].is_string() && !row[l].is_number())
        fail(ErrorKind::Config, "entries[" + std::to_string(k) + "][" + std::to_string(l) +
                                    "] must be a string");
      const std::string text = row[l].is_string() ? row[l].get<std::string>() : row[l].dump();
      try {
        entries.push_back(parse_expression(text));
      } catch (const Error& e) {
        fail(ErrorKind::Config,
             "entries[" + std::to_string(k) + "][" + std::to_string(l) + "]: " + e.what());
      }
    }
  }
  Region region;
  if (j.contains("region")) region = parse_region(j["region"]);
  MetricSpec spec(n, std::move(entries), region);
  check_hermitian_entries(spec);
  const CVector p = base_point(spec);
  if (!spec.region().contains(p)) fail(ErrorKind::Config, "region excludes its own base point");
  if (!spec.value(p).is_positive_definite())
    fail(ErrorKind::Config, "metric is not positive-definite at the base point");
  return spec;
}

// ---------------------------------------------------------------------------
// Builtins

namespace {

ComplexTensor zero_d(std::size_t n) {
  return ComplexTensor({{n, Variance::HoloDown}, {n, Variance::HoloDown}, {n, Variance::AntiDown}});
}
ComplexTensor zero_dbar(std::size_t n) {
  return ComplexTensor({{n, Variance::AntiDown}, {n, Variance::HoloDown}, {n, Variance::AntiDown}});
}
ComplexTensor zero_dd(std::size_t n) {
  return ComplexTensor({{n, Variance::HoloDown},
                        {n, Variance::AntiDown},
                        {n, Variance::HoloDown},
                        {n, Variance::AntiDown}});
}

void start_exact(MetricJet2& jet, std::size_t n, const CVector& z, const CMatrix& g) {
  jet.point = z;
  jet.g = HermitianMatrix::from(g, 1e-12);
  jet.d_g = zero_d(n);
  jet.dbar_g = zero_dbar(n);
  jet.dd_g = zero_dd(n);
}

Expr var(std::size_t k) { return Expr::var(k); }
Expr cvar(std::size_t k) { return Expr::conj_var(k); }
Expr num(cplx c) { return Expr::constant(c); }

}  // namespace

MetricSpec builtin_flat(std::size_t n) {
  require(n >= 1, "flat: dimension must be positive");
  std::vector<Expr> e(n * n);
  for (std::size_t k = 0; k < n; ++k) e[k * n + k] = num(1.0);
  MetricSpec spec(n, std::move(e), Region{}, "flat(" + std::to_string(n) + ")");
  spec.set_exact_jet("flat", [n](const CVector& z, MetricJet2& jet) {
    start_exact(jet, n, z, CMatrix::Identity(n, n));
  });
  return spec;
}

MetricSpec builtin_poincare_polydisk(std::size_t n) {
  require(n >= 1, "poincare_polydisk: dimension must be positive");
  std::vector<Expr> e(n * n);
  for (std::size_t k = 0; k < n; ++k) e[k * n + k] = num(1.0) / pow(num(1.0) - abs2(var(k)), 2);
  MetricSpec spec(n, std::move(e), Region{RegionType::Polydisk, 1.0},
                  "poincare_polydisk(" + std::to_string(n) + ")");
  spec.set_exact_jet("poincare_polydisk", [n](const CVector& z, MetricJet2& jet) {
    CMatrix g = CMatrix::Zero(n, n);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = 1.0 - std::norm(z(k));
      g(k, k) = 1.0 / (s * s);
    }
    start_exact(jet, n, z, g);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = 1.0 - std::norm(z(k));
      const cplx zk = z(k);
      jet.d_g(k, k, k) = 2.0 * std::conj(zk) / (s * s * s);
      jet.dbar_g(k, k, k) = 2.0 * zk / (s * s * s);
      jet.dd_g(k, k, k, k) = 2.0 / (s * s * s) + 6.0 * std::norm(zk) / (s * s * s * s);
    }
  });
  return spec;
}

MetricSpec builtin_example22(std::size_t n, const std::vector<cplx>& a, double eps, double radius) {
  require(n >= 1, "example22: dimension must be positive");
  require(a.size() == n * n * n, "example22: A must have n^3 components");
  require(eps >= 0.0, "example22: eps must be nonnegative");
  require(radius > 0.0, "example22: radius must be positive");
  // A(l, i, k) = A^l_{ik}
  auto A = [&a, n](std::size_t l, std::size_t i, std::size_t k) { return a[(l * n + i) * n + k]; };
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        require(std::abs(A(l, i, k) + A(l, k, i)) <= 1e-14,
                "example22: A must be antisymmetric in its lower indices");

  // B(i, j, k, l) = 1/2 sum_p A^p_{ik} conj(A^p_{jl})
  std::vector<cplx> b(n * n * n * n, 0.0);
  auto B = [&b, n](std::size_t i, std::size_t j, std::size_t k, std::size_t l) -> cplx& {
    return b[((i * n + j) * n + k) * n + l];
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l)
          for (std::size_t p = 0; p < n; ++p) B(i, j, k, l) += 0.5 * A(p, i, k) * std::conj(A(p, j, l));

  std::vector<Expr> e(n * n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      Expr x = num(k == l ? 1.0 : 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (A(l, i, k) != 0.0) x = x + num(A(l, i, k)) * var(i);
        if (A(k, i, l) != 0.0) x = x + num(std::conj(A(k, i, l))) * cvar(i);
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (B(i, j, k, l) != 0.0) x = x + num(B(i, j, k, l)) * var(i) * cvar(j);
      if (eps != 0.0) x = x + num(eps) * var(l) * cvar(k);
      e[k * n + l] = x;
    }
  MetricSpec spec(n, std::move(e), Region{RegionType::Ball, radius}, "example22");
  spec.set_exact_jet("example22", [n, a, b, eps](const CVector& z, MetricJet2& jet) {
    auto A = [&a, n](std::size_t l, std::size_t i, std::size_t k) { return a[(l * n + i) * n + k]; };
    auto B = [&b, n](std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
      return b[((i * n + j) * n + k) * n + l];
    };
    CMatrix g(n, n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        cplx x = k == l ? 1.0 : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          x += A(l, i, k) * z(i) + std::conj(A(k, i, l) * z(i));
          for (std::size_t j = 0; j < n; ++j) x += B(i, j, k, l) * z(i) * std::conj(z(j));
        }
        x += eps * z(l) * std::conj(z(k));
        g(k, l) = x;
      }
    start_exact(jet, n, z, g);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          // d_i g_{k lbar} = A^l_{ik} + sum_j B(i,j,k,l) zbar_j + eps delta_{il} zbar_k
          cplx d = A(l, i, k);
          // d_ibar g_{k lbar} = conj(A^k_{il}) + sum_j B(j,i,k,l) z_j + eps z_l delta_{ik}
          cplx db = std::conj(A(k, i, l));
          for (std::size_t j = 0; j < n; ++j) {
            d += B(i, j, k, l) * std::conj(z(j));
            db += B(j, i, k, l) * z(j);
          }
          if (i == l) d += eps * std::conj(z(k));
          if (i == k) db += eps * z(l);
          jet.d_g(i, k, l) = d;
          jet.dbar_g(i, k, l) = db;
          for (std::size_t j = 0; j < n; ++j)
            jet.dd_g(i, j, k, l) = B(i, j, k, l) + ((i == l && j == k) ? eps : 0.0);
        }
  });
  return spec;
}

MetricSpec builtin_example22_default(double eps) {
  const std::size_t n = 2;
  std::vector<cplx> a(n * n * n, 0.0);
  a[(0 * n + 0) * n + 1] = 1.0;   // A^1_{12}
  a[(0 * n + 1) * n + 0] = -1.0;  // A^1_{21}
  return builtin_example22(n, a, eps);
}

MetricSpec builtin_hopf(std::size_t n) {
  require(n >= 1, "hopf: dimension must be positive");
  Expr rho = abs2(var(0));
  for (std::size_t k = 1; k < n; ++k) rho = rho + abs2(var(k));
  std::vector<Expr> e(n * n);
  for (std::size_t k = 0; k < n; ++k) e[k * n + k] = num(1.0) / rho;
  MetricSpec spec(n, std::move(e), Region{RegionType::Punctured, 2.0},
                  "hopf(" + std::to_string(n) + ")");
  spec.set_exact_jet("hopf", [n](const CVector& z, MetricJet2& jet) {
    const double rho = z.squaredNorm();
    if (rho == 0.0) fail(ErrorKind::Domain, "hopf metric is singular at the origin");
    start_exact(jet, n, z, CMatrix::Identity(n, n) / rho);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        jet.d_g(i, k, k) = -std::conj(z(i)) / (rho * rho);
        jet.dbar_g(i, k, k) = -z(i) / (rho * rho);
        for (std::size_t j = 0; j < n; ++j)
          jet.dd_g(i, j, k, k) = (i == j ? -1.0 / (rho * rho) : 0.0) +
                                 2.0 * std::conj(z(i)) * z(j) / (rho * rho * rho);
      }
  });
  return spec;
}

namespace {

std::vector<std::string> split_args(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

std::size_t parse_dim(const std::vector<std::string>& args, const std::string& name) {
  if (args.size() != 1) fail(ErrorKind::Config, name + " takes one dimension argument");
  try {
    std::size_t used = 0;
    const long v = std::stol(args[0], &used);
    if (used != args[0].size() || v < 1 || v > 8) throw std::invalid_argument("range");
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    fail(ErrorKind::Config, name + ": bad dimension '" + args[0] + "' (expected 1..8)");
  }
}

MetricSpec resolve_builtin(std::string_view body) {
  std::string name(body);
  std::vector<std::string> args;
  if (const auto open = body.find('('); open != std::string_view::npos) {
    if (body.back() != ')') fail(ErrorKind::Config, "unbalanced parentheses in '" + name + "'");
    args = split_args(body.substr(open + 1, body.size() - open - 2));
    name = std::string(body.substr(0, open));
  }
  if (name == "flat") return builtin_flat(parse_dim(args, name));
  if (name == "poincare_polydisk" || name == "poincare")
    return builtin_poincare_polydisk(args.empty() ? 1 : parse_dim(args, name));
  if (name == "hopf") return builtin_hopf(args.empty() ? 2 : parse_dim(args, name));
  if (name == "example22") {
    if (args.empty()) return builtin_example22_default();
    if (args.size() != 1) fail(ErrorKind::Config, "example22 takes at most one argument (eps)");
    double eps = 0.0;
    try {
      eps = std::stod(args[0]);
    } catch (const std::logic_error&) {
      fail(ErrorKind::Config, "example22: bad eps '" + args[0] + "'");
    }
    if (eps < 0.0) fail(ErrorKind::Config, "example22: eps must be nonnegative");
    return builtin_example22_default(eps);
  }
  fail(ErrorKind::Config, "unknown builtin metric '" + name + "'");
}

}  // namespace

MetricSpec resolve_metric(std::string_view ref) {
  if (ref.starts_with("builtin:")) return resolve_builtin(ref.substr(8));
  if (ref.starts_with("file:")) {
    const std::string path(ref.substr(5));
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Config, "cannot open metric file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    MetricSpec spec = parse_metric_spec(ss.str());
    spec.set_name(path);
    return spec;
  }
  if (!ref.empty() && ref.front() == '{') return parse_metric_spec(ref);
  fail(ErrorKind::Config, "metric reference must start with 'builtin:', 'file:' or '{': '" +
                              std::string(ref) + "'");
}

// ---------------------------------------------------------------------------
// Jets

namespace {

struct RealDerivatives {
  std::vector<CMatrix> d1;  // by real coordinate a
  std::vector<CMatrix> d2;  // by a * m + b
};

CVector shifted(const CVector& z, std::size_t a, double t) {
  CVector w = z;
  const auto k = static_cast<Eigen::Index>(a / 2);
  w(k) += (a % 2 == 0) ? cplx(t, 0.0) : cplx(0.0, t);
  return w;
}

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;  // divided by h (first) or h^2 (second) at use
};

Stencil first_stencil(int order) {
  if (order == 2) return {{-1, 1}, {-0.5, 0.5}};
  return {{-2, -1, 1, 2}, {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0}};
}

Stencil second_stencil(int order) {
  if (order == 2) return {{-1, 0, 1}, {1.0, -2.0, 1.0}};
  return {{-2, -1, 0, 1, 2}, {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0}};
}

RealDerivatives fd_pass(const MetricSampler& f, std::size_t n, const CVector& z, double h,
                        int order) {
  const std::size_t m = 2 * n;
  const Stencil s1 = first_stencil(order);
  const Stencil s2 = second_stencil(order);
  RealDerivatives out;
  out.d1.assign(m, CMatrix::Zero(n, n));
  out.d2.assign(m * m, CMatrix::Zero(n, n));
  const CMatrix f0 = f(z);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t q = 0; q < s1.offsets.size(); ++q)
      out.d1[a] += s1.weights[q] * f(shifted(z, a, s1.offsets[q] * h));
    out.d1[a] /= h;
    for (std::size_t q = 0; q < s2.offsets.size(); ++q)
      out.d2[a * m + a] += s2.weights[q] * (s2.offsets[q] == 0 ? f0 : f(shifted(z, a, s2.offsets[q] * h)));
    out.d2[a * m + a] /= h * h;
  }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      CMatrix acc = CMatrix::Zero(n, n);
      for (std::size_t p = 0; p < s1.offsets.size(); ++p)
        for (std::size_t q = 0; q < s1.offsets.size(); ++q)
          acc += (s1.weights[p] * s1.weights[q]) *
                 f(shifted(shifted(z, a, s1.offsets[p] * h), b, s1.offsets[q] * h));
      acc /= h * h;
      out.d2[a * m + b] = acc;
      out.d2[b * m + a] = acc;
    }
  return out;
}

RealDerivatives extrapolate(const MetricSampler& f, std::size_t n, const CVector& z, double h,
                            int order, int levels) {
  std::vector<RealDerivatives> table;
  for (int j = 0; j <= levels; ++j) table.push_back(fd_pass(f, n, z, h / std::pow(2.0, j), order));
  // Central differences expand in even powers of h.
  for (int lvl = 1; lvl <= levels; ++lvl) {
    const double w = std::pow(2.0, order + 2 * (lvl - 1));
    for (int j = 0; j + lvl <= levels; ++j) {
      RealDerivatives& lo = table[static_cast<std::size_t>(j)];
      const RealDerivatives& hi = table[static_cast<std::size_t>(j + 1)];
      for (std::size_t a = 0; a < lo.d1.size(); ++a) lo.d1[a] = (w * hi.d1[a] - lo.d1[a]) / (w - 1.0);
      for (std::size_t a = 0; a < lo.d2.size(); ++a) lo.d2[a] = (w * hi.d2[a] - lo.d2[a]) / (w - 1.0);
    }
  }
  return table.front();
}

void finish_jet(MetricJet2& jet, const CMatrix& g_raw) {
  const double scale = std::max(1.0, g_raw.cwiseAbs().maxCoeff());
  jet.g = HermitianMatrix::from(g_raw, 1e-10 * scale);
  if (!jet.g.is_positive_definite()) fail(ErrorKind::Numerical, "metric is not positive-definite at the point");
  const auto n = static_cast<Eigen::Index>(jet.g.dim());
  const CMatrix inv = jet.g.matrix().llt().solve(CMatrix::Identity(n, n));
  jet.g_inv = HermitianMatrix::hermitian_part(inv);
  const double defect = (jet.g.matrix() * jet.g_inv.matrix() - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  const RVector ev = jet.g.eigenvalues();
  const double cond = ev.maxCoeff() / ev.minCoeff();
  if (defect > 1e-10 * std::max(1.0, cond))
    fail(ErrorKind::Numerical, "metric inverse is inaccurate (ill-conditioned metric)");
}

}  // namespace

MetricJet2 eval_jet2_fd(const MetricSampler& metric, std::size_t n, const CVector& point,
                        const Scheme& scheme) {
  require(static_cast<std::size_t>(point.size()) == n, "jet point has wrong dimension");
  require(scheme.order == 2 || scheme.order == 4, "scheme order must be 2 or 4");
  require(scheme.richardson >= 0 && scheme.richardson <= 4, "richardson levels must be in 0..4");
  const double h = scheme.step_at(point);
  require(h > 0.0 && std::isfinite(h), "finite-difference step must be positive");

  MetricJet2 jet;
  jet.point = point;
  jet.h = h;
  jet.order = scheme.order;
  jet.richardson = scheme.richardson;
  jet.exact = false;
  const CMatrix g0 = metric(point);
  finish_jet(jet, g0);

  const RealDerivatives D = extrapolate(metric, n, point, h, scheme.order, scheme.richardson);
  const std::size_t m = 2 * n;
  const cplx I(0.0, 1.0);
  jet.d_g = zero_d(n);
  jet.dbar_g = zero_dbar(n);
  jet.dd_g = zero_dd(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        const cplx dx = D.d1[2 * i](k, l), dy = D.d1[2 * i + 1](k, l);
        jet.d_g(i, k, l) = 0.5 * (dx - I * dy);
        jet.dbar_g(i, k, l) = 0.5 * (dx + I * dy);
        for (std::size_t j = 0; j < n; ++j) {
          const cplx xx = D.d2[(2 * i) * m + 2 * j](k, l);
          const cplx yy = D.d2[(2 * i + 1) * m + 2 * j + 1](k, l);
          const cplx xy = D.d2[(2 * i) * m + 2 * j + 1](k, l);
          const cplx yx = D.d2[(2 * i + 1) * m + 2 * j](k, l);
          jet.dd_g(i, j, k, l) = 0.25 * (xx + yy + I * (xy - yx));
        }
      }
  const double scale = std::max({1.0, g0.cwiseAbs().maxCoeff(), jet.d_g.max_abs(), jet.dd_g.max_abs()});
  jet.tolerance = std::max(1e-7, std::pow(h, scheme.order)) * scale;
  const double sym = jet_symmetry_residual(jet);
  if (sym > 10.0 * jet.tolerance)
    fail(ErrorKind::Numerical, "jet conjugation-symmetry residual " + std::to_string(sym) +
                                   " exceeds 10x the scheme tolerance (non-Hermitian metric or step too large)");
  return jet;
}

MetricJet2 eval_jet2(const MetricSpec& spec, const CVector& point, const Scheme& scheme) {
  require(static_cast<std::size_t>(point.size()) == spec.dim(), "jet point has wrong dimension");
  if (!spec.region().contains(point))
    fail(ErrorKind::Domain, "point lies outside the validity region of metric '" + spec.name() + "'");
  if (scheme.use_exact && spec.has_exact_jet()) {
    MetricJet2 jet;
    spec.exact_jet(point, jet);
    jet.exact = true;
    finish_jet(jet, jet.g.matrix());
    const double scale = std::max({1.0, jet.g.matrix().cwiseAbs().maxCoeff(), jet.d_g.max_abs(), jet.dd_g.max_abs()});
    jet.tolerance = 1e-12 * scale;
    return jet;
  }
  const double h = scheme.step_at(point);
  const double reach = 2.0 * h * std::sqrt(2.0);
  for (std::size_t a = 0; a < 2 * spec.dim(); ++a)
    for (double t : {-reach, reach})
      if (!spec.region().contains(shifted(point, a, t)))
        fail(ErrorKind::Domain, "finite-difference stencil leaves the validity region");
  return eval_jet2_fd(spec.sampler(), spec.dim(), point, scheme);
}

double jet_symmetry_residual(const MetricJet2& jet) {
  const std::size_t n = jet.dim();
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        r = std::max(r, std::abs(jet.dbar_g(i, k, l) - std::conj(jet.d_g(i, l, k))));
        for (std::size_t j = 0; j < n; ++j)
          r = std::max(r, std::abs(jet.dd_g(i, j, k, l) - std::conj(jet.dd_g(j, i, l, k))));
      }
  return r;
}

}  // namespace curvlab
