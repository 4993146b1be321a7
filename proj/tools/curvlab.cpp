// curvlab command-line front end.
//
// Exit codes: 0 ok, 1 a requested residual exceeded its tolerance,
// 2 configuration or domain error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "curvlab/chern.hpp"
#include "curvlab/error.hpp"
#include "curvlab/flow.hpp"
#include "curvlab/functionals.hpp"
#include "curvlab/gauduchon.hpp"
#include "curvlab/metric.hpp"
#include "curvlab/schwarz.hpp"

using json = nlohmann::ordered_json;
using namespace curvlab;

namespace {

struct Common {
  std::string metric;
  std::string points;
  std::size_t region = 0;
  double h = 0.0;
  int order = 4;
  int richardson = 1;
  bool fd = false;
  std::uint64_t seed = 0;
  double tol = -1.0;  // < 0: command default
  std::string out;
  std::string format;
};

json cjson(cplx c) { return json::array({c.real(), c.imag()}); }

json vjson(const CVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(cjson(v(i)));
  return a;
}

json rjson(const RVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mjson(const CMatrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(cjson(m(r, c)));
    a.push_back(row);
  }
  return a;
}

json tjson_rec(const ComplexTensor& t, std::vector<std::size_t>& idx) {
  const std::size_t s = idx.size();
  json a = json::array();
  for (std::size_t i = 0; i < t.slot(s).dim; ++i) {
    idx.push_back(i);
    a.push_back(idx.size() == t.rank() ? cjson(t.at(idx)) : tjson_rec(t, idx));
    idx.pop_back();
  }
  return a;
}

json tjson(const ComplexTensor& t) {
  std::vector<std::size_t> idx;
  return tjson_rec(t, idx);
}

double parse_tau(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, "tau must be a number or 'inf': '" + s + "'");
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      fail(ErrorKind::Config, "not a number: '" + item + "'");
    }
  }
  if (out.empty()) fail(ErrorKind::Config, "empty number list");
  return out;
}

// "a,b;c,d" with complex constant expressions per coordinate, e.g. "0.1+0.2*i,0".
std::vector<CVector> parse_points(const std::string& text, std::size_t n) {
  std::vector<CVector> pts;
  std::stringstream ss(text);
  std::string point;
  while (std::getline(ss, point, ';')) {
    std::vector<cplx> coords;
    std::stringstream ps(point);
    std::string c;
    while (std::getline(ps, c, ',')) {
      const Expr e = parse_expression(c);
      if (e.variable_count() != 0 || e.depends_on_conjugates())
        fail(ErrorKind::Config, "point coordinates must be constants: '" + c + "'");
      coords.push_back(e.eval(CVector()));
    }
    if (coords.size() != n)
      fail(ErrorKind::Config, "point '" + point + "' has " + std::to_string(coords.size()) +
                                  " coordinates, metric dimension is " + std::to_string(n));
    pts.push_back(Eigen::Map<const CVector>(coords.data(), static_cast<Eigen::Index>(n)));
  }
  if (pts.empty()) fail(ErrorKind::Config, "no points given");
  return pts;
}

std::vector<CVector> resolve_points(const Common& c, const MetricSpec& spec) {
  if (!c.points.empty() && c.region > 0) fail(ErrorKind::Config, "use either --points or --region");
  if (!c.points.empty()) return parse_points(c.points, spec.dim());
  if (c.region > 0) {
    std::mt19937_64 rng(c.seed);
    std::vector<CVector> pts;
    for (std::size_t k = 0; k < c.region; ++k) pts.push_back(spec.region().sample(spec.dim(), rng));
    return pts;
  }
  return {base_point(spec)};
}

Scheme scheme_of(const Common& c) {
  Scheme s;
  s.h = c.h;
  s.order = c.order;
  s.richardson = c.richardson;
  s.use_exact = !c.fd;
  if (s.order != 2 && s.order != 4) fail(ErrorKind::Config, "--order must be 2 or 4");
  if (s.h < 0.0) fail(ErrorKind::Config, "--h must be nonnegative");
  return s;
}

json scheme_json(const Scheme& s) {
  return json{{"h", s.h}, {"order", s.order}, {"richardson", s.richardson}, {"use_exact", s.use_exact}};
}

json jet_scheme_json(const MetricJet2& j) {
  return json{{"exact", j.exact}, {"h", j.h}, {"order", j.order}, {"richardson", j.richardson},
              {"tolerance", j.tolerance}};
}

json metric_json(const MetricSpec& m) {
  json j = json::parse(m.to_json());
  j["name"] = m.name();
  return j;
}

json config_json(const std::string& command, const Common& c, const Scheme& s) {
  return json{{"command", command}, {"points", c.points}, {"region_samples", c.region},
              {"seed", c.seed},       {"tol", c.tol},       {"scheme", scheme_json(s)}};
}

void require_json(const Common& c) {
  if (!c.format.empty() && c.format != "json")
    fail(ErrorKind::Config, "only the flow command writes csv; use --format json");
}

void emit(const Common& c, const json& report) {
  const std::string text = report.dump(2) + "\n";
  if (c.out.empty() || c.out == "-") {
    std::cout << text;
  } else {
    std::ofstream f(c.out);
    if (!f) fail(ErrorKind::Config, "cannot write '" + c.out + "'");
    f << text;
  }
}

double tol_or(const Common& c, double fallback) { return c.tol >= 0.0 ? c.tol : fallback; }

// ---------------------------------------------------------------- curvature

int cmd_curvature(const Common& c, const std::vector<std::string>& checks) {
  require_json(c);
  if (c.metric.empty()) fail(ErrorKind::Config, "--metric is required");
  const MetricSpec spec = resolve_metric(c.metric);
  const Scheme s = scheme_of(c);
  const double tol = tol_or(c, 1e-6);
  bool want_pc = false, want_bianchi = false, want_normal = false;
  for (const std::string& k : checks) {
    if (k == "pluriclosed" || k == "all") want_pc = true;
    if (k == "bianchi" || k == "all") want_bianchi = true;
    if (k == "normal" || k == "all") want_normal = true;
    if (k != "pluriclosed" && k != "bianchi" && k != "normal" && k != "all")
      fail(ErrorKind::Config, "unknown check '" + k + "' (pluriclosed, bianchi, normal, all)");
  }
  json report{{"config", config_json("curvature", c, s)}, {"metric", metric_json(spec)}};
  report["conventions"] = {{"torsion", "T[i][j][k] = T^k_ij"},
                           {"curvature", "R[i][j][k][l] = R_{i jbar k lbar}"},
                           {"ricci", "ric[0..3] = Ric^(1..4), Ric^(2)_{k lbar} = g^{i jbar} R_{i jbar k lbar}"},
                           {"complex", "[re, im]"}};
  bool breach = false;
  json rows = json::array();
  for (const CVector& p : resolve_points(c, spec)) {
    const MetricJet2 jet = eval_jet2(spec, p, s);
    const ChernPackage chart = chern_package(jet);
    const ChernPackage unit = to_unitary(chart, UnitaryFrame::from_metric(jet.g));
    json r{{"point", vjson(p)}, {"jet", jet_scheme_json(jet)}};
    r["g"] = mjson(jet.g.matrix());
    r["chart"] = {{"torsion", tjson(chart.T)}, {"curvature", tjson(chart.R)}};
    json ric = json::array();
    for (const CMatrix& m : chart.ric) ric.push_back(mjson(m));
    r["chart"]["ricci"] = ric;
    r["chart"]["Q2"] = mjson(chart.Q2.matrix());
    r["unitary"] = {{"torsion", tjson(unit.T)}, {"curvature", tjson(unit.R)},
                    {"eta", vjson(torsion_one_form(unit))}};
    r["defects"] = {{"curvature_hermitian", curvature_hermitian_defect(chart.R)},
                    {"torsion_antisymmetry", torsion_antisymmetry_defect(chart.T)},
                    {"jet_symmetry", jet_symmetry_residual(jet)}};
    json chk = json::object();
    if (want_pc) {
      const PluriclosedResidual pc = pluriclosed_residual(spec, p, s);
      chk["pluriclosed"] = {{"direct", pc.direct}, {"symmetry", pc.symmetry}, {"tol", tol},
                            {"pass", pc.direct <= tol && pc.symmetry <= tol}};
      breach |= !(pc.direct <= tol && pc.symmetry <= tol);
    }
    if (want_bianchi) {
      const double b = bianchi_residual(spec, p, s);
      chk["bianchi"] = {{"residual", b}, {"tol", tol}, {"pass", b <= tol}};
      breach |= !(b <= tol);
    }
    if (want_normal) {
      const NormalCoordinateCheck n = check_chern_normal_coordinates(spec, p, s);
      const double worst = std::max({n.metric_residual, n.first_residual, n.second_residual});
      chk["normal_coordinates"] = {{"metric", n.metric_residual}, {"first", n.first_residual},
                                   {"second", n.second_residual}, {"tol", tol}, {"pass", worst <= tol}};
      breach |= !(worst <= tol);
    }
    if (!chk.empty()) r["checks"] = chk;
    rows.push_back(r);
  }
  report["points"] = rows;
  report["pass"] = !breach;
  emit(c, report);
  return breach ? 1 : 0;
}

// ---------------------------------------------------------------- scan

json certificate_json(const BoundCertificate& b) {
  json j{{"functional", to_string(b.functional)},
         {"kind", b.kind == BoundKind::Sup ? "sup" : "inf"},
         {"value", b.value},
         {"point", vjson(b.point)},
         {"samples", b.samples},
         {"iterations", b.iterations},
         {"tolerance", b.tolerance},
         {"tau", b.tau}};
  json w = json::array();
  for (const CVector& v : b.witness_vectors) w.push_back(vjson(v));
  j["witness_vectors"] = w;
  if (b.witness_form) j["witness_form"] = mjson(b.witness_form->xi.matrix());
  return j;
}

int cmd_scan(const Common& c, const std::string& functional, const std::string& kind, const std::string& tau_s,
             std::size_t starts, std::size_t steps) {
  require_json(c);
  if (c.metric.empty()) fail(ErrorKind::Config, "--metric is required");
  const MetricSpec spec = resolve_metric(c.metric);
  const Scheme s = scheme_of(c);
  ExtremumRequest req;
  req.functional = parse_functional(functional);
  req.tau = parse_tau(tau_s);
  req.seed = c.seed;
  req.scheme = s;
  req.budget.starts = starts;
  req.budget.steps = steps;
  if (!c.points.empty()) req.points = parse_points(c.points, spec.dim());
  else if (c.region > 0) req.budget.starts = std::max(starts, c.region);
  else req.points = {base_point(spec)};
  if (kind != "sup" && kind != "inf" && kind != "both") fail(ErrorKind::Config, "--kind must be sup, inf or both");

  json config = config_json("scan", c, s);
  config["functional"] = functional;
  config["kind"] = kind;
  config["tau"] = tau_s;
  config["starts"] = req.budget.starts;
  config["steps"] = steps;
  json report{{"config", config}, {"metric", metric_json(spec)}};
  json certs = json::array();
  for (BoundKind k : {BoundKind::Sup, BoundKind::Inf}) {
    if ((k == BoundKind::Sup && kind == "inf") || (k == BoundKind::Inf && kind == "sup")) continue;
    req.kind = k;
    certs.push_back(certificate_json(estimate_extremum(spec, req)));
  }
  report["certificates"] = certs;
  bool breach = false;
  if (req.functional == FunctionalId::AlteredGap) {
    double gap = 0.0;
    for (const json& ct : certs) gap = std::max(gap, std::abs(ct["value"].get<double>()));
    const double tol = tol_or(c, 1e-8);
    report["max_discrepancy"] = gap;
    report["pass"] = gap <= tol;
    breach = !(gap <= tol);
  }
  emit(c, report);
  return breach ? 1 : 0;
}

// ---------------------------------------------------------------- schwarz

int cmd_schwarz(const Common& c, const std::string& map_text, const std::string& source_ref,
                const std::string& target_ref, const std::string& tau_s, double lap_h, bool bismut,
                std::optional<double> kappa0, double c1, double c2, std::size_t rank) {
  require_json(c);
  const std::string src_ref = source_ref.empty() ? c.metric : source_ref;
  if (src_ref.empty()) fail(ErrorKind::Config, "--source (or --metric) is required");
  const MetricSpec source = resolve_metric(src_ref);
  const MetricSpec target = resolve_metric(target_ref.empty() ? src_ref : target_ref);
  const HoloMapSpec map = HoloMapSpec::parse(map_text, source.dim());
  if (map.target_dim() != target.dim())
    fail(ErrorKind::Config, "map has " + std::to_string(map.target_dim()) + " components, target dimension is " +
                                std::to_string(target.dim()));
  const Scheme s = scheme_of(c);
  LaplacianScheme fd;
  fd.h = lap_h;
  fd.order = c.order;
  const double tol = tol_or(c, 1e-4);
  const double tau = parse_tau(tau_s);

  json config = config_json("schwarz", c, s);
  config["map"] = map_text;
  config["tau"] = tau_s;
  config["laplacian_scheme"] = {{"h", fd.h}, {"order", fd.order}, {"richardson", fd.richardson}};
  json report{{"config", config}, {"source", metric_json(source)}, {"target", metric_json(target)}};
  bool breach = false;
  json rows = json::array();
  for (const CVector& p : resolve_points(c, source)) {
    const SchwarzReport r = laplacian_energy_assembled(map, source, target, p, s, fd);
    json j{{"point", vjson(p)},
           {"energy", r.energy},
           {"laplacian_fd", r.laplacian_fd},
           {"laplacian_assembled", r.laplacian_assembled},
           {"relative_error", r.relative_error},
           {"terms",
            {{"hessian_norm2", r.hessian_norm2},
             {"sym_norm2", r.sym_norm2},
             {"skew_norm2", r.skew_norm2},
             {"source_ric2", r.source_term},
             {"target_curvature", r.target_term},
             {"tf_norm2", r.tf_norm2},
             {"tff_norm2", r.tff_norm2}}},
           {"skew_identity_residual", r.skew_identity_residual},
           {"rank", r.rank},
           {"singular_values", rjson(r.singular_values)},
           {"cauchy_riemann_residual", map.cauchy_riemann_residual(p)},
           {"fd", {{"h", r.fd_h}, {"order", r.fd_order}}}};
    if (tau > 0.0 && std::isfinite(tau)) j["tempered_lower_bound"] = tempered_lower_bound(r, tau);
    if (kappa0) {
      j["slack"] = {{"c1", c1}, {"c2", c2}, {"kappa0", *kappa0}, {"rank", rank},
                    {"value", schwarz_inequality_slack(r, c1, c2, *kappa0, rank, source.dim())}};
    }
    if (bismut) {
      const BismutSchwarzReport b = bismut_schwarz_report(map, source, target, p, tau, s);
      j["bismut"] = {{"laplacian", b.laplacian},       {"source_term", b.source_term},
                     {"target_term", b.target_term},   {"lower_bound", b.lower_bound},
                     {"margin", b.margin},             {"source_check", b.source_check},
                     {"target_check", b.target_check}, {"hypothesis_matrix", mjson(b.hypothesis_matrix.matrix())}};
    }
    const bool ok = r.relative_error <= tol && r.skew_identity_residual <= 1e-8;
    j["pass"] = ok;
    breach |= !ok;
    rows.push_back(j);
  }
  report["points"] = rows;
  report["tol"] = tol;
  report["pass"] = !breach;
  emit(c, report);
  return breach ? 1 : 0;
}

// ---------------------------------------------------------------- gauduchon

int cmd_gauduchon(const Common& c, const std::string& t_list, bool roundtrip, const std::string& tau_s) {
  require_json(c);
  if (c.metric.empty()) fail(ErrorKind::Config, "--metric is required");
  const MetricSpec spec = resolve_metric(c.metric);
  const Scheme s = scheme_of(c);
  const std::vector<double> ts = parse_list(t_list);
  const double tol = tol_or(c, 1e-9);
  const double tau = parse_tau(tau_s);
  json config = config_json("gauduchon", c, s);
  config["t"] = t_list;
  config["roundtrip"] = roundtrip;
  config["tau"] = tau_s;
  json report{{"config", config}, {"metric", metric_json(spec)}};
  std::mt19937_64 rng(c.seed);
  double worst = 0.0;
  json rows = json::array();
  for (const CVector& p : resolve_points(c, spec)) {
    const ChernPackage u = chern_package_unitary(eval_jet2(spec, p, s));
    for (double t : ts) {
      const GauduchonPackage gp = gauduchon_forward(u, t);
      json j{{"point", vjson(p)}, {"t", t}, {"skew_residual", mixed_torsion_skew_residual(u, t, rng)}};
      if (roundtrip) {
        const double rt = max_abs_diff(chern_from_gauduchon(gp), u.R);
        j["roundtrip_residual"] = rt;
        worst = std::max(worst, rt);
      }
      const TauParam src = TauParam::source(tau);
      j["ric_tau_check"] = (ric_tau_from_gauduchon(gp, src).matrix() - ric_tau(u, src).matrix()).cwiseAbs().maxCoeff();
      if (std::isfinite(tau)) {
        const TauParam tgt = TauParam::target(tau);
        std::normal_distribution<double> N;
        CMatrix b(u.dim(), u.dim());
        for (Eigen::Index a = 0; a < b.size(); ++a) b(a) = cplx(N(rng), N(rng));
        const PSDForm xi = PSDForm::make(HermitianMatrix::hermitian_part(b * b.adjoint()));
        j["rbc_tau_check"] = std::abs(rbc_tau_from_gauduchon(gp, tgt, xi) - rbc_tau(u, tgt, xi));
      }
      rows.push_back(j);
    }
  }
  report["rows"] = rows;
  if (roundtrip) {
    report["max_roundtrip_residual"] = worst;
    report["tol"] = tol;
    report["pass"] = worst <= tol;
  }
  emit(c, report);
  return roundtrip && !(worst <= tol) ? 1 : 0;
}

// ---------------------------------------------------------------- flow

struct FlowOptions {
  std::string config;
  std::string tau = "1";
  double dt = 0.01;
  std::size_t steps = 10;
  double extent = 0.0;  // half-width; 0 picks a default inside the region
  std::size_t resolution = 0;
  std::string boundary = "frozen";
  std::string stepper = "heun";
  std::string reference;
  std::optional<double> kappa0;
};

int cmd_flow(Common c, FlowOptions o, const CLI::App& sub) {
  if (!o.config.empty()) {
    std::ifstream f(o.config);
    if (!f) fail(ErrorKind::Config, "cannot read flow config '" + o.config + "'");
    json j;
    try {
      j = json::parse(f);
    } catch (const json::exception& e) {
      fail(ErrorKind::Config, std::string("flow config: ") + e.what());
    }
    auto given = [&](const char* flag) { return sub.count(flag) > 0; };
    try {
      if (j.contains("metric") && c.metric.empty()) c.metric = j["metric"].get<std::string>();
      if (j.contains("tau") && !given("--tau"))
        o.tau = j["tau"].is_string() ? j["tau"].get<std::string>() : std::to_string(j["tau"].get<double>());
      if (j.contains("dt") && !given("--dt")) o.dt = j["dt"].get<double>();
      if (j.contains("steps") && !given("--steps")) o.steps = j["steps"].get<std::size_t>();
      if (j.contains("reference_metric") && !given("--reference")) o.reference = j["reference_metric"].get<std::string>();
      if (j.contains("stepper") && !given("--stepper")) o.stepper = j["stepper"].get<std::string>();
      if (j.contains("kappa0") && !given("--kappa0")) o.kappa0 = j["kappa0"].get<double>();
      if (j.contains("grid")) {
        const json& g = j["grid"];
        if (g.contains("extent") && !given("--extent")) o.extent = g["extent"].get<double>();
        if (g.contains("resolution") && !given("--resolution")) o.resolution = g["resolution"].get<std::size_t>();
        if (g.contains("boundary") && !given("--boundary")) o.boundary = g["boundary"].get<std::string>();
      }
    } catch (const json::exception& e) {
      fail(ErrorKind::Config, std::string("flow config: ") + e.what());
    }
  }
  if (c.metric.empty()) fail(ErrorKind::Config, "--metric (or a config with \"metric\") is required");
  if (!c.format.empty() && c.format != "csv") fail(ErrorKind::Config, "flow writes csv; use --format csv");
  if (!(o.dt > 0.0)) fail(ErrorKind::Config, "--dt must be positive");
  if (o.kappa0 && o.reference.empty()) fail(ErrorKind::Config, "--kappa0 needs --reference");

  const MetricSpec spec = resolve_metric(c.metric);
  const std::size_t n = spec.dim();
  const CVector center = base_point(spec);
  if (o.extent <= 0.0) {
    const double r = spec.region().radius;
    o.extent = std::isfinite(r) ? 0.3 * r : 2.0;
  }
  if (o.resolution == 0) o.resolution = n == 1 ? 17 : 7;
  std::optional<MetricSpec> reference;
  if (!o.reference.empty()) {
    reference = resolve_metric(o.reference);
    if (reference->dim() != n) fail(ErrorKind::Config, "reference metric dimension differs from the flow metric");
  }
  const double tau = parse_tau(o.tau);
  FlowState state(GridMetricField::sample(spec, center, o.extent, o.resolution, parse_boundary(o.boundary)),
                  TauParam::source(tau), reference);
  if (reference) {
    for (std::size_t k = 0; k < state.field.node_count(); ++k)
      if (!reference->region().contains(state.field.coords(k)))
        fail(ErrorKind::Domain, "grid leaves the reference metric's validity region");
  }
  const Stepper method = parse_stepper(o.stepper);

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!c.out.empty() && c.out != "-") {
    file.open(c.out);
    if (!file) fail(ErrorKind::Config, "cannot write '" + c.out + "'");
    os = &file;
  }
  *os << "# metric=" << spec.name() << " tau=" << o.tau << " dt=" << o.dt << " steps=" << o.steps
      << " extent=" << o.extent << " resolution=" << o.resolution << " boundary=" << o.boundary
      << " stepper=" << o.stepper << " spacing=" << state.field.spacing() << "\n";
  *os << "step,time,dt,substeps,center_g11,center_trace,min_eigenvalue,max_velocity,sup_trace";
  if (o.kappa0) *os << ",parabolic_residual";
  *os << "\n";
  *os << std::setprecision(12);
  auto row = [&](std::size_t k, const FlowDiagnostics& d) {
    const std::size_t cn = state.field.center_node();
    *os << k << ',' << d.time << ',' << d.dt << ',' << d.substeps << ','
        << state.field.value(cn).matrix()(0, 0).real() << ',' << d.center_trace << ',' << d.min_eigenvalue << ','
        << d.max_velocity << ',' << d.sup_trace;
    if (o.kappa0) {
      const ParabolicResidual pr = parabolic_schwarz_residual(velocity_field(state), state, *o.kappa0, cn);
      *os << ',' << pr.residual;
    }
    *os << '\n';
    os->flush();
  };
  row(0, diagnose(state, velocity_field(state)));
  for (std::size_t k = 1; k <= o.steps; ++k) {
    state = step(state, o.dt, method);
    row(k, state.history.back());
  }
  std::cerr << "flow: t=" << state.time << " center g11="
            << std::setprecision(10) << state.field.value(state.field.center_node()).matrix()(0, 0).real() << "\n";
  return 0;
}

// ---------------------------------------------------------------- fixtures

int cmd_fixtures(const Common& c, const std::string& write_dir) {
  require_json(c);
  struct Entry {
    std::string ref;
    std::string note;
  };
  const std::vector<Entry> entries = {
      {"builtin:flat(2)", "Euclidean metric"},
      {"builtin:poincare_polydisk(1)", "Poincare disk, HSC = -2"},
      {"builtin:poincare_polydisk(2)", "product of Poincare disks, HSC in [-2, -1]"},
      {"builtin:example22", "g = delta + eps-perturbation with torsion 2A at the origin, eps = 0.1"},
      {"builtin:hopf(2)", "Hopf-type metric delta/|z|^2 on the punctured ball"},
  };
  json list = json::array();
  for (const Entry& e : entries) {
    const MetricSpec m = resolve_metric(e.ref);
    list.push_back({{"ref", e.ref}, {"note", e.note}, {"metric", metric_json(m)}});
    if (!write_dir.empty()) {
      std::string name = m.name();
      std::erase_if(name, [](char ch) { return !std::isalnum(static_cast<unsigned char>(ch)) && ch != '_'; });
      std::ofstream f(write_dir + "/" + name + ".json");
      if (!f) fail(ErrorKind::Config, "cannot write into '" + write_dir + "'");
      f << m.to_json() << "\n";
    }
  }
  emit(c, json{{"fixtures", list}});
  return 0;
}

void add_common(CLI::App* app, Common& c) {
  // --h is the step size, so help only answers to --help.
  app->set_help_flag("--help", "print this help and exit");
  app->add_option("--metric", c.metric, "metric reference: builtin:NAME, file:PATH or inline JSON");
  app->add_option("--points", c.points, "points 'z1,z2;z1,z2' with complex constants such as 0.1+0.2*i");
  app->add_option("--region", c.region, "sample this many points from the metric's validity region");
  app->add_option("--h", c.h, "finite-difference step (0: automatic)");
  app->add_option("--order", c.order, "finite-difference order, 2 or 4");
  app->add_option("--richardson", c.richardson, "Richardson extrapolation levels");
  app->add_flag("--fd", c.fd, "ignore closed-form jets and difference numerically");
  app->add_option("--seed", c.seed, "64-bit seed");
  app->add_option("--tol", c.tol, "tolerance for pass/fail checks");
  app->add_option("--out", c.out, "output file (default stdout)");
  app->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curvlab: curvature, Schwarz-lemma and flow checks for Hermitian metrics on charts"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  Common c;

  auto* curv = app.add_subcommand("curvature", "Chern torsion, curvature, Ricci traces and identity checks");
  add_common(curv, c);
  std::vector<std::string> checks;
  curv->add_option("--check", checks, "pluriclosed, bianchi, normal or all")->delimiter(',');

  auto* scan = app.add_subcommand("scan", "extremize a curvature functional");
  add_common(scan, c);
  std::string functional = "hsc", kind = "both", scan_tau = "1";
  std::size_t starts = 64, steps = 200;
  scan->add_option("--functional", functional, "hsc, hbc, rbc, rbc_tau, altered_hsc, rbc0_altered_gap");
  scan->add_option("--kind", kind, "sup, inf or both");
  scan->add_option("--tau", scan_tau, "tau for rbc_tau");
  scan->add_option("--starts", starts, "multistart count");
  scan->add_option("--steps", steps, "ascent steps per start");

  auto* sch = app.add_subcommand("schwarz", "Laplacian of the energy density of a holomorphic map");
  add_common(sch, c);
  std::string map_text = "id", source_ref, target_ref, sch_tau = "1";
  double lap_h = 1e-2, c1 = 0.0, c2 = 0.0;
  std::size_t rank = 1;
  bool bismut = false;
  std::optional<double> sch_kappa0;
  sch->add_option("--map", map_text, "'id' or comma-separated components in z1..zm");
  sch->add_option("--source", source_ref, "source metric (default --metric)");
  sch->add_option("--target", target_ref, "target metric (default the source)");
  sch->add_option("--tau", sch_tau, "tempering parameter for the lower bounds");
  sch->add_option("--lap-h", lap_h, "step of the Laplacian finite differences");
  sch->add_flag("--bismut", bismut, "add the Bismut-data lower bound");
  sch->add_option("--kappa0", sch_kappa0, "report the inequality slack with this kappa0");
  sch->add_option("--c1", c1, "C1 for the slack");
  sch->add_option("--c2", c2, "C2 for the slack");
  sch->add_option("--rank", rank, "map rank r for the slack");

  auto* gau = app.add_subcommand("gauduchon", "Gauduchon connection transforms and round trips");
  add_common(gau, c);
  std::string t_list = "-1", gau_tau = "1";
  bool roundtrip = false;
  gau->add_option("--t", t_list, "comma-separated t values");
  gau->add_flag("--roundtrip", roundtrip, "rebuild Chern curvature from t-data and report the residual");
  gau->add_option("--tau", gau_tau, "tau for the tempered cross-checks");

  auto* flw = app.add_subcommand("flow", "tempered Hermitian curvature flow on a lattice (csv)");
  add_common(flw, c);
  FlowOptions fo;
  flw->add_option("--config", fo.config, "flow JSON config");
  flw->add_option("--tau", fo.tau, "tau, or inf");
  flw->add_option("--dt", fo.dt, "time step");
  flw->add_option("--steps", fo.steps, "number of steps");
  flw->add_option("--extent", fo.extent, "lattice half-width");
  flw->add_option("--resolution", fo.resolution, "nodes per real axis");
  flw->add_option("--boundary", fo.boundary, "frozen or periodic");
  flw->add_option("--stepper", fo.stepper, "heun or euler");
  flw->add_option("--reference", fo.reference, "reference metric h for trace diagnostics");
  flw->add_option("--kappa0", fo.kappa0, "report the parabolic trace residual at the centre node");

  auto* fix = app.add_subcommand("fixtures", "list builtin fixtures");
  add_common(fix, c);
  std::string write_dir;
  fix->add_option("--write", write_dir, "also write each fixture as a metric file into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*curv) return cmd_curvature(c, checks);
    if (*scan) return cmd_scan(c, functional, kind, scan_tau, starts, steps);
    if (*sch) return cmd_schwarz(c, map_text, source_ref, target_ref, sch_tau, lap_h, bismut, sch_kappa0, c1, c2, rank);
    if (*gau) return cmd_gauduchon(c, t_list, roundtrip, gau_tau);
    if (*flw) return cmd_flow(c, fo, *flw);
    if (*fix) return cmd_fixtures(c, write_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Numerical ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
