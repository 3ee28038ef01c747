#include "finsler/harness.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "finsler/json_io.hpp"

namespace finsler {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Typed access to the "params" object; unknown keys are a config error.
class Params {
 public:
  explicit Params(const json& j) : j_(j) {
    if (!j_.is_object()) throw ConfigError("\"params\" must be an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }
  double number(const std::string& key, std::optional<double> fallback = {}) {
    if (!has(key)) return require(key, fallback);
    if (!j_[key].is_number()) throw ConfigError("parameter '" + key + "' must be a number");
    return j_[key].get<double>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    if (!j_[key].is_number_integer() || j_[key].get<std::int64_t>() < 0)
      throw ConfigError("parameter '" + key + "' must be a count");
    return j_[key].get<std::size_t>();
  }
  std::string text(const std::string& key, std::optional<std::string> fallback = {}) {
    if (!has(key)) return require(key, fallback);
    if (!j_[key].is_string()) throw ConfigError("parameter '" + key + "' must be a string");
    return j_[key].get<std::string>();
  }
  Vec vec(const std::string& key, std::size_t dim, std::optional<Vec> fallback = {}) {
    if (!has(key)) return require(key, fallback);
    Vec v = vec_param(j_[key]);
    if (static_cast<std::size_t>(v.size()) != dim)
      throw ConfigError("parameter '" + key + "' must have " + std::to_string(dim) + " entries");
    return v;
  }
  Mat mat(const std::string& key, std::size_t dim) {
    if (!has(key)) throw ConfigError("missing parameter '" + key + "'");
    Mat m = mat_param(j_[key]);
    if (m.rows() != static_cast<Eigen::Index>(dim) || m.cols() != static_cast<Eigen::Index>(dim))
      throw ConfigError("parameter '" + key + "' must be " + std::to_string(dim) + "x" +
                        std::to_string(dim));
    return m;
  }
  const json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError("missing parameter '" + key + "'");
    return j_[key];
  }
  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!used_.count(key)) throw ConfigError("unknown parameter '" + key + "'");
  }

 private:
  template <class T>
  static T require(const std::string& key, const std::optional<T>& fallback) {
    if (!fallback) throw ConfigError("missing parameter '" + key + "'");
    return *fallback;
  }

  const json& j_;
  std::set<std::string> used_;
};

struct Ctx {
  const ScenarioConfig& cfg;
  MetricPtr metric;
  Params& params;
  SuiteContext suite;
  RunReport& report;

  const FinslerMetric& m() const { return *metric; }
  std::size_t dim() const { return metric->dim(); }

  /// Opens <out_dir>/<name>.<suffix> and records it as an artifact.
  std::ofstream artifact(const std::string& suffix) const {
    const std::string file = cfg.name + "." + suffix;
    report.artifacts.push_back(file);
    std::ofstream os(fs::path(cfg.out_dir) / file);
    if (!os) throw Error("cannot write " + file);
    os << std::setprecision(17);
    return os;
  }
};

using Runner = std::function<void(Ctx&)>;

void add(Ctx& c, Check check) { c.report.checks.push_back(std::move(check)); }

void add_all(Ctx& c, const std::vector<Check>& checks, const std::string& prefix = {}) {
  for (Check ch : checks) {
    if (!prefix.empty()) ch.name = prefix + "/" + ch.name;
    add(c, std::move(ch));
  }
}

Vec default_point(const Ctx& c) { return c.m().reference_region().center; }

MapProbe map_param(Ctx& c) { return map_from_json(c.metric, c.params.raw("map")); }

std::vector<std::pair<Vec, Vec>> seeded_pairs(const Ctx& c, std::size_t n, double radius) {
  Rng rng(c.cfg.seed);
  const FinslerMetric& m = c.m();
  const Vec center = m.reference_region().center;
  std::vector<std::pair<Vec, Vec>> pairs;
  for (std::size_t tries = 0; pairs.size() < n; ++tries) {
    if (tries > 100 * n) throw ConfigError("radius does not fit inside the patch");
    Vec p = rng.in_ball(center, radius);
    Vec q = rng.in_ball(center, radius);
    if (m.patch().contains(p, 1e-3) && m.patch().contains(q, 1e-3)) pairs.emplace_back(p, q);
  }
  return pairs;
}

void write_row(std::ostream& os, std::initializer_list<Vec> vs, std::initializer_list<double> xs) {
  bool first = true;
  for (const Vec& v : vs)
    for (Eigen::Index i = 0; i < v.size(); ++i, first = false) os << (first ? "" : ",") << v[i];
  for (double x : xs) os << (first ? "" : ",") << x, first = false;
  os << '\n';
}

std::string coord_header(const std::string& prefix, std::size_t dim) {
  std::string h;
  for (std::size_t i = 0; i < dim; ++i) h += (i ? "," : "") + prefix + std::to_string(i + 1);
  return h;
}

void expect_map_verdict(Ctx& c, const std::string& what, double value, double iso_threshold,
                        double reject_threshold) {
  const std::string expect = c.params.text("expect", "isometry");
  if (expect == "isometry") {
    add(c, check_below(what, value, iso_threshold, c.suite.tol_scale));
  } else if (expect == "non-isometry") {
    add(c, check_above(what, value, reject_threshold));
  } else {
    throw ConfigError("\"expect\" must be \"isometry\" or \"non-isometry\"");
  }
  if (c.params.has("expected_value")) {
    const double target = c.params.number("expected_value");
    add(c, check_below(what + "-vs-expected", std::abs(value - target),
                       c.params.number("expected_tol", 1e-3), c.suite.tol_scale));
  }
}

ScalarField submetry_function(Ctx& c) {
  const json& f = c.params.raw("function");
  const std::string kind = f.value("kind", "");
  if (kind == "distance") {
    if (!f.contains("base")) throw ConfigError("distance function needs a \"base\" point");
    return distance_function(c.metric, vec_param(f.at("base")));
  }
  if (kind == "x1-squared") return [](const Vec& x) { return x[0] * x[0]; };
  throw ConfigError("\"function.kind\" must be \"distance\" or \"x1-squared\"");
}

// ─── Operations ──────────────────────────────────────────────────────────────

void op_validate_metric(Ctx& c) {
  const ValidationReport rep = validate_finsler(c.m(), c.params.count("samples", 200), c.cfg.seed);
  c.report.results["validation"] = to_json(rep);
  for (const auto& a : rep.checks) add(c, check_holds(a.axiom, a.passed, a.witness));
}

void op_spray_residuals(Ctx& c) {
  const Vec x = c.params.vec("point", c.dim(), default_point(c));
  const Vec y = c.params.vec("velocity", c.dim());
  const SprayResiduals r = canonical_spray_residuals(SprayField::canonical(c.metric), x, y);
  c.report.results["spray"] = to_std(spray_coefficients(c.m(), x, y));
  c.report.results["rapcsak"] = to_std(r.rapcsak);
  c.report.results["SF"] = r.sf;
  add(c, check_below("rapcsak-residual/F", r.rapcsak.cwiseAbs().maxCoeff() / r.F, 1e-6,
                     c.suite.tol_scale));
  add(c, check_below("SF/F", std::abs(r.sf) / r.F, 1e-6, c.suite.tol_scale));
}

void op_geodesic(Ctx& c) {
  const Vec p = c.params.vec("point", c.dim(), default_point(c));
  const Vec v = c.params.vec("velocity", c.dim());
  GeodesicOptions opts;
  opts.rtol = c.params.number("rtol", opts.rtol);
  opts.atol = c.params.number("atol", opts.atol);
  const TimeSpan span{c.params.number("t_minus", -1.0), c.params.number("t_plus", 1.0)};
  const GeodesicPath path = integrate_geodesic(c.metric, p, v, span, opts);
  auto os = c.artifact("geodesic.csv");
  write_csv(os, path);
  c.report.results["t_minus"] = path.t_minus();
  c.report.results["t_plus"] = path.t_plus();
  c.report.results["exited_patch"] = path.exited_patch();
  c.report.results["steps"] = path.stats().steps;
  c.report.results["rejected"] = path.stats().rejected;
  Check drift = check_below("speed-drift", path.max_speed_drift(c.m()), 1e-6, c.suite.tol_scale);
  if (path.exited_patch()) drift.detail = path.exit_reason();
  add(c, drift);
}

void op_normal_radius(Ctx& c) {
  const Vec p = c.params.vec("point", c.dim(), default_point(c));
  const NormalRadiusEstimate est = normal_radius(c.m(), p, c.params.number("cap", 1.0));
  c.report.results["radius"] = est.radius;
  c.report.results["reached_cap"] = est.reached_cap;
  c.report.results["probes"] = est.probes;
  c.report.results["method"] = est.method;
  add(c, check_above("radius", est.radius, 0.0));
}

void op_distance(Ctx& c) {
  const json& pairs = c.params.raw("pairs");
  if (!pairs.is_array() || pairs.empty()) throw ConfigError("\"pairs\" must be a list of [p, q]");
  json rows = json::array();
  double closed = -1.0;
  for (const auto& pq : pairs) {
    if (!pq.is_array() || pq.size() != 2) throw ConfigError("each pair must be [p, q]");
    const Vec p = vec_param(pq[0]), q = vec_param(pq[1]);
    const ShootingResult s = invert_exp(c.m(), p, q);
    const double rho = c.m().F(p, s.v);
    rows.push_back({{"p", to_std(p)}, {"q", to_std(q)}, {"rho", rho}, {"v", to_std(s.v)}});
    if (const auto exact = closed_form_distance(c.m(), p, q))
      closed = std::max(closed, std::abs(rho - *exact));
  }
  c.report.results["distances"] = rows;
  if (closed >= 0.0)
    add(c, check_below("closed-form-distance", closed, 1e-6, c.suite.tol_scale));
  else
    add(c, check_holds("shooting-converged", true));
}

void op_distance_asymmetry(Ctx& c) {
  const auto pairs = seeded_pairs(c, c.params.count("pairs", 20), c.params.number("radius", 0.3));
  auto os = c.artifact("asymmetry.csv");
  os << coord_header("p", c.dim()) << ',' << coord_header("q", c.dim()) << ",rho_pq,rho_qp\n";
  const auto b = flat_randers_drift(c.m());
  double formula = 0.0, asym = 0.0;
  for (const auto& [p, q] : pairs) {
    const double pq = distance(c.m(), p, q), qp = distance(c.m(), q, p);
    write_row(os, {p, q}, {pq, qp});
    asym = std::max(asym, std::abs(pq - qp));
    if (b) formula = std::max(formula, std::abs((pq - qp) - 2.0 * b->dot(q - p)));
  }
  c.report.results["max_asymmetry"] = asym;
  if (b)
    add(c, check_below("asymmetry-vs-2<b,q-p>", formula, 1e-7, c.suite.tol_scale));
  else if (c.m().declared_reversible())
    add(c, check_below("asymmetry", asym, 1e-8, c.suite.tol_scale));
  else
    add(c, check_holds("asymmetry-measured", true, "no closed form for this metric"));
}

void op_oracle_table(Ctx& c) {
  const auto pairs = seeded_pairs(c, c.params.count("pairs", 20), c.params.number("radius", 0.3));
  const QuasiMetricOracle rho = metric_oracle(c.metric);
  std::ostringstream table;
  table << std::setprecision(17);
  write_oracle_table(table, rho, pairs);
  auto os = c.artifact("oracle.csv");
  os << table.str();
  std::istringstream in(table.str());
  const QuasiMetricOracle back = read_oracle_table(in, c.dim(), rho.symmetric());
  double gap = 0.0;
  for (const auto& [p, q] : pairs) gap = std::max(gap, std::abs(back(p, q) - rho(p, q)));
  add(c, check_below("table-round-trip", gap, 1e-12, c.suite.tol_scale));
}

void op_quasimetric_audit(Ctx& c) {
  const SampleRegion region{default_point(c), c.params.number("radius", 0.2)};
  const ValidationReport rep =
      quasimetric_audit(metric_oracle(c.metric), c.m().patch(), region, c.params.count("pairs", 20),
                        c.params.count("triples", 20), c.cfg.seed);
  c.report.results["audit"] = to_json(rep);
  for (const auto& a : rep.checks) add(c, check_holds(a.axiom, a.passed, a.witness));
}

void op_busemann_mayer(Ctx& c) {
  const Vec p = c.params.vec("point", c.dim(), default_point(c));
  const Vec v = c.params.vec("direction", c.dim());
  const int levels = static_cast<int>(c.params.count("levels", 4));
  const double t0 = c.params.number("t0", 1e-2);
  const double bm = busemann_mayer_F(
      metric_oracle(c.metric), [&](double t) { return Vec(p + t * v); }, levels, t0);
  const double F = c.m().F(p, v);
  c.report.results["busemann_mayer_F"] = bm;
  c.report.results["F"] = F;
  add(c, check_below("relative-error", std::abs(bm - F) / F, 1e-3, c.suite.tol_scale));
}

void op_distance_chart(Ctx& c) {
  const Vec p = c.params.vec("center", c.dim(), default_point(c));
  const double budget =
      c.params.has("budget") ? c.params.number("budget") : normal_radius(c.m(), p, 0.5).radius;
  const DistanceChart chart = build_distance_chart(c.metric, p, budget, c.cfg.seed);
  const ChartCertificate cert = certify(chart);
  auto os = c.artifact("chart.json");
  os << to_json(chart).dump(2) << '\n';
  c.report.results["certified_radius"] = chart.certified_radius;
  c.report.results["condition"] = cert.condition;
  add(c, check_below("off-triangle/|J|", cert.off_triangle, 1e-6, c.suite.tol_scale));
  add(c, check_above("min-diagonal", cert.min_diagonal, 0.0));
  add(c,
      check_below("diagonal-vs-emanating-data", cert.diagonal_mismatch, 1e-4, c.suite.tol_scale));
  Rng rng(c.cfg.seed);
  double trip = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Vec a = rng.in_ball(p, 0.5 * chart.certified_radius);
    trip = std::max(trip, (invert_chart(chart, evaluate_chart(chart, a), 1e-11).x - a).norm());
  }
  add(c, check_below("round-trip", trip, 1e-7, c.suite.tol_scale));
}

void op_isometry_defect(Ctx& c) {
  const MapProbe probe = map_param(c);
  const std::string norm = c.params.text("normalization", "finsler");
  if (norm != "finsler" && norm != "euclidean")
    throw ConfigError("\"normalization\" must be \"finsler\" or \"euclidean\"");
  const MapDefect d =
      isometry_defect(probe, c.params.count("samples", 50), c.cfg.seed,
                      norm == "finsler" ? DirectionNorm::finsler : DirectionNorm::euclidean);
  c.report.results["defect"] = to_json(d);
  expect_map_verdict(c, "isometry-defect", d.value, 1e-6, 1e-3);
}

void op_spray_pushforward_defect(Ctx& c) {
  const MapProbe probe = map_param(c);
  const MapDefect d = spray_pushforward_defect(probe, c.params.count("samples", 50), c.cfg.seed);
  c.report.results["defect"] = to_json(d);
  expect_map_verdict(c, "spray-pushforward-defect", d.value, 1e-5, 1e-2);
}

void op_geodesic_image_defect(Ctx& c) {
  const MapProbe probe = map_param(c);
  const Vec p = c.params.vec("point", c.dim(), default_point(c));
  const Vec v = c.params.vec("velocity", c.dim());
  const TimeSpan span{c.params.number("t_minus", -0.5), c.params.number("t_plus", 0.5)};
  const GeodesicPath path = integrate_geodesic(c.metric, p, v, span, precise_geodesic_options());
  const GeodesicImageDefect d = geodesic_image_defect(probe, path);
  c.report.results["gap"] = d.gap;
  c.report.results["truncated"] = d.truncated;
  c.report.results["compared_span"] = {d.t_minus, d.t_plus};
  expect_map_verdict(c, "geodesic-image-defect", d.gap, 1e-7, 1e-3);
}

void op_propagate(Ctx& c) {
  const Vec p = c.params.vec("point", c.dim(), default_point(c));
  const Vec image = c.params.vec("image", c.dim());
  const Mat L = c.params.mat("linear_map", c.dim());
  Rng rng(c.cfg.seed);
  const double radius = c.params.number("radius", 0.3);
  std::vector<Vec> targets;
  const std::size_t n = c.params.count("targets", 20);
  while (targets.size() < n) {
    const Vec x = rng.in_ball(p, radius);
    if (c.m().patch().contains(x, 1e-3)) targets.push_back(x);
  }
  const std::vector<Vec> out = propagate_from_derivative(c.m(), p, c.m(), image, L, targets);
  auto os = c.artifact("propagation.csv");
  os << coord_header("r", c.dim()) << ',' << coord_header("phi", c.dim()) << '\n';
  for (std::size_t i = 0; i < n; ++i) write_row(os, {targets[i], out[i]}, {});
  if (c.params.has("compare_map")) {
    const MapProbe ref = map_from_json(c.metric, c.params.raw("compare_map"));
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) gap = std::max(gap, (ref(targets[i]) - out[i]).norm());
    add(c, check_below("gap-to-reference-map", gap, 1e-6, c.suite.tol_scale));
  } else {
    add(c, check_holds("propagated", true));
  }
}

void op_myers_steenrod(Ctx& c) {
  MapProbe probe = map_param(c);
  probe.derivative = nullptr;  // point-map access only
  probe.preimage = nullptr;
  const Vec p = c.params.vec("point", c.dim(), default_point(c));
  const std::string expect = c.params.text("expect", "isometry");
  const MyersSteenrodRecord rec =
      myers_steenrod_reconstruct(probe, p, c.params.number("radius", 0.5), c.cfg.seed);
  json audit{{"passed", rec.audit.passed}, {"pairs", rec.audit.pairs}, {"worst", rec.audit.worst}};
  if (rec.audit.witness_a.size())
    audit["witness"] = {to_std(rec.audit.witness_a), to_std(rec.audit.witness_b)};
  c.report.results["audit"] = audit;
  if (expect == "not-distance-preserving") {
    add(c,
        check_holds("audit-rejects-with-witness", !rec.audit.passed && rec.audit.witness_a.size()));
    return;
  }
  if (expect != "isometry")
    throw ConfigError("\"expect\" must be \"isometry\" or \"not-distance-preserving\"");
  add(c, check_holds("distance-audit", rec.audit.passed));
  if (!rec.audit.passed) return;
  auto os = c.artifact("derivative.json");
  os << json{{"point", to_std(p)}, {"derivative", to_std(rec.derivative)}}.dump(2) << '\n';
  c.report.results["derivative"] = to_std(rec.derivative);
  add(c, check_below("F-defect", rec.f_defect, 1e-3, c.suite.tol_scale));
  add(c, check_below("busemann-mayer-vs-direct", rec.route_agreement, 1e-3, c.suite.tol_scale));
  if (c.params.has("expected_derivative")) {
    const Mat D = c.params.mat("expected_derivative", c.dim());
    add(c, check_below("derivative-error", (rec.derivative - D).cwiseAbs().maxCoeff(), 1e-3,
                       c.suite.tol_scale));
  }
}

void op_submetry_ball_image(Ctx& c) {
  const double delta = c.params.number("delta", 0.1);
  const SubmetryProbe sp = make_submetry_probe(c.metric, submetry_function(c), delta, "r");
  const Vec q = c.params.vec("q", c.dim());
  const double eps = c.params.number("eps");
  const BallImage img =
      submetry_ball_image(sp, q, eps, c.params.count("samples", 4000), c.cfg.seed);
  c.report.results["ball_image"] = to_json(img);
  const std::string expect = c.params.text("expect", "submetry");
  if (expect == "submetry") {
    add(c, check_holds("contained", img.contained));
    add(c, check_below("low-gap", img.min - (img.r_center - eps), 0.02, c.suite.tol_scale));
    add(c, check_below("high-gap", (img.r_center + eps) - img.max, 0.02, c.suite.tol_scale));
  } else if (expect == "non-submetry") {
    add(c, check_holds("coverage-fails", !img.covered));
  } else {
    throw ConfigError("\"expect\" must be \"submetry\" or \"non-submetry\"");
  }
}

void op_submetry_differential(Ctx& c) {
  const SubmetryProbe sp =
      make_submetry_probe(c.metric, submetry_function(c), c.params.number("delta", 0.1), "r");
  const Vec q = c.params.vec("q", c.dim());
  const SubmetryDifferential d = submetry_differential(sp, q, c.cfg.seed);
  c.report.results["differential"] = to_json(d);
  add(c, check_below("sandwich-gradient-disagreement", d.residual, 1e-3, c.suite.tol_scale));
  add(c, check_below("sandwich-vs-direct-gradient", d.direct_mismatch, 1e-3, c.suite.tol_scale));
  add(c, check_below("sandwich-ordering", d.sandwich_violation, 1e-9, c.suite.tol_scale));
  if (c.params.has("expected_gradient")) {
    const Vec g = c.params.vec("expected_gradient", c.dim());
    add(c, check_below("gradient-error", (d.gradient - g).norm(), 1e-3, c.suite.tol_scale));
  }
}

using MetricSuite = std::vector<Check> (*)(const MetricPtr&, const SuiteContext&);
using FixedSuite = std::vector<Check> (*)(const SuiteContext&, const std::string&);

Runner per_metric(MetricSuite suite) {
  return [suite](Ctx& c) {
    if (c.metric) {
      add_all(c, suite(c.metric, c.suite));
      return;
    }
    for (const auto& inst : standard_instances())
      add_all(c, suite(inst.metric, c.suite), inst.label);
  };
}

Runner fixed(FixedSuite suite) {
  return [suite](Ctx& c) {
    add_all(c, suite(c.suite, c.metric ? std::string(c.metric->name()) : std::string()));
  };
}

struct Entry {
  OperationInfo info;
  Runner run;
};

const std::vector<Entry>& entries() {
  const json map_doc =
      "built-in map {\"kind\": rotation|translation|scaling|shear|bend}, with angle (pi/2), offset "
      "(required), factor (2) or k (shear 1, bend 0.5)";
  const json expect_iso = "\"isometry\" (default) or \"non-isometry\"";
  static const std::vector<Entry> all{
      {{"validate-metric",
        "operation",
        "Sampled Finsler axioms (positivity, homogeneity, ellipticity, reversibility)",
        {{"samples", "sample count (200)"}}},
       op_validate_metric},
      {{"spray-residuals",
        "operation",
        "Canonical spray and its Rapcsak/SF residuals at one (x, y)",
        {{"point", "base point (reference center)"}, {"velocity", "tangent vector (required)"}}},
       op_spray_residuals},
      {{"geodesic",
        "operation",
        "Integrate a geodesic; writes t,x,v CSV",
        {{"point", "initial point (reference center)"},
         {"velocity", "initial velocity (required)"},
         {"t_minus", "backward time (-1)"},
         {"t_plus", "forward time (1)"},
         {"rtol", "1e-9"},
         {"atol", "1e-9"}}},
       op_geodesic},
      {{"normal-radius",
        "operation",
        "Shooting-fan estimate of a normal radius",
        {{"point", "center (reference center)"}, {"cap", "largest radius probed (1)"}}},
       op_normal_radius},
      {{"distance",
        "operation",
        "Local distances by shooting",
        {{"pairs", "list of [p, q] (required)"}}},
       op_distance},
      {{"distance-asymmetry",
        "operation",
        "CSV of p, q, rho(p,q), rho(q,p) on seeded pairs",
        {{"pairs", "count (20)"}, {"radius", "sampling radius around the reference center (0.3)"}}},
       op_distance_asymmetry},
      {{"oracle-table",
        "operation",
        "Export rho on seeded pairs as a CSV oracle table",
        {{"pairs", "count (20)"}, {"radius", "sampling radius (0.3)"}}},
       op_oracle_table},
      {{"quasimetric-audit",
        "operation",
        "Sampled quasi-metric axioms of rho",
        {{"pairs", "count (20)"}, {"triples", "count (20)"}, {"radius", "sampling radius (0.2)"}}},
       op_quasimetric_audit},
      {{"busemann-mayer",
        "operation",
        "Recover F(v) from rho along t -> p + t v",
        {{"point", "base point (reference center)"},
         {"direction", "v (required)"},
         {"levels", "Richardson levels (4)"},
         {"t0", "largest t (0.01)"}}},
       op_busemann_mayer},
      {{"distance-chart",
        "operation",
        "Distance coordinates at a point; writes the chart as JSON",
        {{"center", "chart center (reference center)"},
         {"budget", "radius budget (normal radius, cap 0.5)"}}},
       op_distance_chart},
      {{"isometry-defect",
        "operation",
        "max |F(phi(p), phi_* v) - F(p, v)|",
        {{"map", map_doc},
         {"samples", "sample points (50)"},
         {"normalization", "\"finsler\" (default) or \"euclidean\" unit directions"},
         {"expect", expect_iso},
         {"expected_value", "optional reference value"},
         {"expected_tol", "1e-3"}}},
       op_isometry_defect},
      {{"spray-pushforward-defect",
        "operation",
        "Compatibility of phi with the two sprays",
        {{"map", map_doc},
         {"samples", "sample points (50)"},
         {"expect", expect_iso},
         {"expected_value", "optional reference value"},
         {"expected_tol", "1e-3"}}},
       op_spray_pushforward_defect},
      {{"geodesic-image-defect",
        "operation",
        "Gap between phi of a geodesic and the target geodesic (necessary, not sufficient)",
        {{"map", map_doc},
         {"point", "(reference center)"},
         {"velocity", "(required)"},
         {"t_minus", "-0.5"},
         {"t_plus", "0.5"},
         {"expect", expect_iso},
         {"expected_value", "optional reference value"},
         {"expected_tol", "1e-3"}}},
       op_geodesic_image_defect},
      {{"propagate-from-derivative",
        "operation",
        "exp_{p'} o L o exp_p^{-1} on seeded targets; writes CSV",
        {{"point", "p (reference center)"},
         {"image", "p' (required)"},
         {"linear_map", "L (required)"},
         {"targets", "count (20)"},
         {"radius", "target radius (0.3)"},
         {"compare_map", "optional reference map"}}},
       op_propagate},
      {{"myers-steenrod",
        "operation",
        "Reconstruct the derivative of a distance-preserving point map",
        {{"map", map_doc},
         {"point", "(reference center)"},
         {"radius", "chart budget (0.5)"},
         {"expect", "\"isometry\" (default) or \"not-distance-preserving\""},
         {"expected_derivative", "optional matrix"}}},
       op_myers_steenrod},
      {{"submetry-ball-image",
        "operation",
        "Image of a metric ball under r: containment and coverage",
        {{"function", "{\"kind\": \"distance\", \"base\": [...]} or {\"kind\": \"x1-squared\"}"},
         {"q", "(required)"},
         {"eps", "(required)"},
         {"samples", "4000"},
         {"delta", "0.1"},
         {"expect", "\"submetry\" (default) or \"non-submetry\""}}},
       op_submetry_ball_image},
      {{"submetry-differential",
        "operation",
        "Differential of a submetry from the sandwich functions",
        {{"function", "as for submetry-ball-image"},
         {"q", "(required)"},
         {"delta", "0.1"},
         {"expected_gradient", "optional vector"}}},
       op_submetry_differential},
      {{"spray-suite", "suite", "canonical spray residuals, corrupted spray detected",
        json::object(), false},
       per_metric(spray_suite)},
      {{"geodesic-suite", "suite", "speed conservation, rescaling, d(exp) at 0", json::object(),
        false},
       per_metric(geodesic_suite)},
      {{"distance-suite", "suite", "radial identity, closed forms, Randers asymmetry, polylines",
        json::object(), false},
       per_metric(distance_suite)},
      {{"busemann-mayer-suite", "suite", "F recovered from rho", json::object(), false},
       per_metric(busemann_mayer_suite)},
      {{"distance-chart-suite", "suite", "charts at 10 centers, triangular Jacobian, round trip",
        json::object(), false},
       per_metric(distance_chart_suite)},
      {{"isometry-suite", "suite", "built-in isometries accepted, non-isometries rejected",
        json::object(), false},
       fixed(isometry_suite)},
      {{"myers-steenrod-suite", "suite", "derivatives of point-map isometries, scaling rejected",
        json::object(), false},
       fixed(myers_steenrod_suite)},
      {{"submetry-suite", "suite", "ball images, sandwich differentials, non-reversible refusal",
        json::object(), false},
       fixed(submetry_suite)},
  };
  return all;
}

const Entry& find_entry(const std::string& name) {
  for (const auto& e : entries())
    if (e.info.name == name) return e;
  throw ConfigError("unknown operation '" + name + "' (see `catalog`)");
}

json family_schema(Family f) {
  switch (f) {
    case Family::euclidean:
      return {{"dim", "2"}};
    case Family::minkowski_norm:
      return {{"dim", "2"}, {"quartic", "0.3"}};
    case Family::riemannian:
      return {{"matrix", "[[2, 0.5], [0.5, 1]]"}, {"log_scale_gradient", "[0.3, -0.2]"}};
    case Family::randers:
      return {{"drift", "[0.5, 0]"},
              {"drift_gradient", "zero matrix"},
              {"patch_radius", "0 (whole plane)"}};
    case Family::hyperbolic_half_plane:
      return {{"dim", "2"}, {"scale", "1"}};
    case Family::round_sphere_patch:
      return {{"dim", "2"}, {"radius", "1"}, {"chart_bound", "10"}};
  }
  return json::object();
}

}  // namespace

// ─── Public API ──────────────────────────────────────────────────────────────

const std::vector<OperationInfo>& operation_registry() {
  static const std::vector<OperationInfo> infos = [] {
    std::vector<OperationInfo> out;
    for (const auto& e : entries()) out.push_back(e.info);
    return out;
  }();
  return infos;
}

json list_catalog(const std::string& filter) {
  auto match = [&](std::string_view name) { return name.find(filter) != std::string_view::npos; };
  json families = json::array(), ops = json::array(), suites = json::array();
  for (Family f : all_families())
    if (match(family_name(f)))
      families.push_back({{"name", family_name(f)}, {"params", family_schema(f)}});
  for (const auto& info : operation_registry()) {
    if (!match(info.name)) continue;
    json j{{"name", info.name},
           {"summary", info.summary},
           {"params", info.params},
           {"needs_metric", info.needs_metric}};
    (info.kind == "suite" ? suites : ops).push_back(j);
  }
  return {{"families", families}, {"operations", ops}, {"suites", suites}};
}

ScenarioConfig parse_scenario(const json& doc, const std::string& default_name) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"schema_version", "name", "metric",     "operation",
                                           "params",         "seed", "tolerances", "outputs"};
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) throw ConfigError("unknown config field '" + key + "'");
  try {
    if (doc.value("schema_version", 0) != kSchemaVersion)
      throw ConfigError("\"schema_version\" must be " + std::to_string(kSchemaVersion));
    ScenarioConfig cfg;
    cfg.name = doc.value("name", default_name);
    if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos)
      throw ConfigError("\"name\" must be a plain file-name stem");
    if (!doc.contains("operation") || !doc["operation"].is_string())
      throw ConfigError("config needs an \"operation\"");
    cfg.operation = doc["operation"].get<std::string>();
    const Entry& entry = find_entry(cfg.operation);
    if (doc.contains("metric")) {
      cfg.metric = doc["metric"];
      metric_from_json(*cfg.metric);  // validate early
    } else if (entry.info.needs_metric) {
      throw ConfigError("operation '" + cfg.operation + "' needs a \"metric\"");
    }
    if (doc.contains("params")) cfg.params = doc["params"];
    if (!doc.contains("seed") || !doc["seed"].is_number_integer() ||
        doc["seed"].get<std::int64_t>() < 0)
      throw ConfigError("config needs a non-negative integer \"seed\"");
    cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("tolerances")) {
      const json& t = doc["tolerances"];
      for (const auto& [key, _] : t.items())
        if (key != "scale") throw ConfigError("unknown tolerance field '" + key + "'");
      cfg.tol_scale = t.value("scale", 1.0);
    }
    if (!(cfg.tol_scale > 0.0)) throw ConfigError("tolerance scale must be positive");
    if (doc.contains("outputs")) {
      const json& o = doc["outputs"];
      for (const auto& [key, _] : o.items())
        if (key != "dir") throw ConfigError("unknown outputs field '" + key + "'");
      cfg.out_dir = o.value("dir", cfg.out_dir);
    }
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_scenario(doc, fs::path(path).stem().string());
}

json to_json(const ScenarioConfig& cfg) {
  json j{{"schema_version", kSchemaVersion},
         {"name", cfg.name},
         {"operation", cfg.operation},
         {"params", cfg.params},
         {"seed", cfg.seed},
         {"tolerances", {{"scale", cfg.tol_scale}}}};
  if (cfg.metric) j["metric"] = *cfg.metric;
  return j;
}

bool RunReport::passed() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

json RunReport::to_json() const {
  json cs = json::array();
  for (const auto& c : checks) cs.push_back(finsler::to_json(c));
  return {{"scenario", scenario},   {"checks", cs},       {"results", results},
          {"artifacts", artifacts}, {"passed", passed()}, {"wall_time_s", wall_time}};
}

RunReport run_scenario(const ScenarioConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.scenario = to_json(cfg);
  const Entry& entry = find_entry(cfg.operation);
  MetricPtr metric = cfg.metric ? metric_from_json(*cfg.metric) : nullptr;
  Params params(cfg.params);
  fs::create_directories(cfg.out_dir);
  Ctx ctx{cfg, metric, params, SuiteContext{cfg.seed, cfg.tol_scale}, report};
  try {
    entry.run(ctx);
    params.finish();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    report.checks.push_back(check_holds("error", false, e.what()));
  }
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string report_path(const ScenarioConfig& cfg) {
  return (fs::path(cfg.out_dir) / (cfg.name + ".report.json")).string();
}

void write_report(const RunReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << report.to_json().dump(2) << '\n';
}

}  // namespace finsler
