#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "finsler/harness.hpp"

namespace py = pybind11;
using namespace finsler;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the Python wrapper does the (de)serialisation.
json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

// pybind11 holders cannot point to const objects.
using Held = std::shared_ptr<FinslerMetric>;
Held held(MetricPtr m) { return std::const_pointer_cast<FinslerMetric>(std::move(m)); }

}  // namespace

PYBIND11_MODULE(_finsler, m) {
  m.doc() = "Numerical Finsler geometry";

  auto base = py::register_exception<Error>(m, "FinslerError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", base.ptr());
  py::register_exception<InversionError>(m, "InversionError", base.ptr());
  py::register_exception<ChartError>(m, "ChartError", base.ptr());
  py::register_exception<MapError>(m, "MapError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<FinslerMetric, Held>(m, "Metric")
      .def_property_readonly("family", [](const FinslerMetric& f) { return std::string(f.name()); })
      .def_property_readonly("dim", &FinslerMetric::dim)
      .def_property_readonly("declared_reversible", &FinslerMetric::declared_reversible)
      .def("F", &FinslerMetric::F, py::arg("x"), py::arg("y"))
      .def("fundamental_tensor", &FinslerMetric::fundamental_tensor, py::arg("x"), py::arg("y"))
      .def("contains", [](const FinslerMetric& f, const Vec& x) { return f.patch().contains(x); })
      .def("descriptor_json", [](const FinslerMetric& f) { return f.descriptor().dump(); });

  m.def("metric_from_json",
        [](const std::string& text) { return held(metric_from_json(parse(text))); });

  m.def("spray", [](const Held& metric, const Vec& x, const Vec& y) {
    return spray_coefficients(*metric, x, y);
  });
  m.def("spray_residuals", [](const Held& metric, const Vec& x, const Vec& y) {
    const SprayResiduals r = canonical_spray_residuals(SprayField::canonical(metric), x, y);
    return py::make_tuple(r.rapcsak, r.sf, r.F);
  });

  m.def(
      "geodesic",
      [](const Held& metric, const Vec& p, const Vec& v, double t_minus, double t_plus) {
        const GeodesicPath path = integrate_geodesic(metric, p, v, {t_minus, t_plus});
        const auto n = static_cast<Eigen::Index>(path.samples().size());
        Vec t(n);
        Mat x(n, p.size()), xdot(n, p.size());
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto& s = path.samples()[static_cast<std::size_t>(i)];
          t[i] = s.t;
          x.row(i) = s.x.transpose();
          xdot.row(i) = s.v.transpose();
        }
        return py::make_tuple(t, x, xdot, path.exited_patch());
      },
      py::arg("metric"), py::arg("p"), py::arg("v"), py::arg("t_minus") = 0.0,
      py::arg("t_plus") = 1.0);
  m.def("exp", [](const Held& metric, const Vec& p, const Vec& v) {
    return exponential(*metric, p, v, precise_geodesic_options());
  });
  m.def("log",
        [](const Held& metric, const Vec& p, const Vec& q) { return invert_exp(*metric, p, q).v; });
  m.def("distance",
        [](const Held& metric, const Vec& p, const Vec& q) { return distance(*metric, p, q); });
  m.def("normal_radius", [](const Held& metric, const Vec& p, double cap) {
    return normal_radius(*metric, p, cap).radius;
  });
  m.def(
      "busemann_mayer",
      [](const Held& metric, const Vec& p, const Vec& v) {
        return busemann_mayer_F(metric_oracle(metric), [&](double t) { return Vec(p + t * v); });
      },
      py::arg("metric"), py::arg("p"), py::arg("v"));

  m.def(
      "distance_chart",
      [](const Held& metric, const Vec& center, double budget, std::uint64_t seed) {
        return to_json(build_distance_chart(metric, center, budget, seed)).dump();
      },
      py::arg("metric"), py::arg("center"), py::arg("budget"), py::arg("seed") = 0);
  m.def("chart_evaluate", [](const std::string& chart, const Vec& a) {
    return evaluate_chart(chart_from_json(parse(chart)), a);
  });
  m.def("chart_invert", [](const std::string& chart, const Vec& theta) {
    return invert_chart(chart_from_json(parse(chart)), theta).x;
  });

  m.def(
      "isometry_defect",
      [](const Held& metric, const std::string& map, std::size_t samples, std::uint64_t seed) {
        return isometry_defect(map_from_json(metric, parse(map)), samples, seed).value;
      },
      py::arg("metric"), py::arg("map_json"), py::arg("samples") = 50, py::arg("seed") = 0);

  m.def(
      "catalog", [](const std::string& filter) { return list_catalog(filter).dump(); },
      py::arg("filter") = "");
  m.def(
      "run_scenario",
      [](const std::string& config, const std::string& out_dir) {
        ScenarioConfig cfg = parse_scenario(parse(config), "scenario");
        cfg.out_dir = out_dir;
        const RunReport report = run_scenario(cfg);
        write_report(report, report_path(cfg));
        return report.to_json().dump();
      },
      py::arg("config_json"), py::arg("out_dir"));
}
