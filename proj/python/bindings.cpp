// Python bindings: metrics and potentials as opaque objects, every operation
// returning plain dicts / numpy arrays. Library errors raise StaticGeoError.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "staticgeo/asymptotics.hpp"
#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/conformal_flow.hpp"
#include "staticgeo/curvature.hpp"
#include "staticgeo/error.hpp"
#include "staticgeo/hypersurface.hpp"
#include "staticgeo/plateau.hpp"
#include "staticgeo/static_potential.hpp"
#include "staticgeo/suite.hpp"

namespace py = pybind11;
using namespace staticgeo;

namespace {

Point to_point(const Vec& x) {
  Point p;
  p.coords = x;
  return p;
}

const ScalarFieldSpec& exact_potential_of(const MetricSpec& spec) {
  if (!spec.exact_potential)
    throw Error(ErrorKind::Precondition, "metric '" + spec.name + "' has no known static potential");
  return *spec.exact_potential;
}

py::dict mass_dict(const MassEstimate& e) {
  py::dict d;
  d["method"] = to_string(e.method);
  d["value"] = e.value;
  d["error_estimate"] = e.error_estimate;
  d["radii"] = e.radii;
  d["per_radius"] = e.per_radius;
  return d;
}

py::dict expansion_dict(const ExpansionFit& f) {
  py::dict d;
  d["case"] = static_cast<int>(f.expansion_case);
  d["a"] = f.a;
  d["a0"] = f.a0;
  d["b"] = f.b;
  d["a0_error"] = f.a0_error;
  d["b_error"] = f.b_error;
  d["growth_ratio"] = f.growth_ratio;
  d["means"] = f.means;
  d["residuals"] = f.residuals;
  return d;
}

py::dict report_dict(const SuiteReport& report) {
  py::list records;
  for (const auto& r : report.records) {
    py::dict d;
    d["suite"] = r.suite;
    d["name"] = r.name;
    d["paper_anchor"] = r.paper_anchor;
    d["value"] = r.value;
    d["target"] = r.target;
    d["error"] = r.error;
    d["tolerance"] = r.tolerance;
    d["pass"] = r.pass;
    d["message"] = r.message;
    records.append(d);
  }
  py::dict out;
  out["pass"] = report.pass;
  out["exit_code"] = report_exit_code(report);
  out["records"] = records;
  out["json"] = report_json(report, false);
  out["csv"] = render_tables(report, "csv");
  out["markdown"] = render_tables(report, "markdown");
  return out;
}

}  // namespace

PYBIND11_MODULE(_staticgeo, m) {
  m.doc() = "Geometry of static vacuum metrics: curvature, potentials, masses, surfaces, flows and Plateau graphs";

  static py::exception<Error> error_type(m, "StaticGeoError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<ScalarFieldSpec>(m, "ScalarField")
      .def_property_readonly("name", &ScalarFieldSpec::name)
      .def_property_readonly("dim", &ScalarFieldSpec::dim)
      .def("__call__", [](const ScalarFieldSpec& v, const Vec& x) { return v.value(x); }, py::arg("x"))
      .def("__repr__", [](const ScalarFieldSpec& v) { return "<ScalarField " + v.name() + ">"; });

  py::class_<MetricSpec>(m, "Metric")
      .def_readonly("name", &MetricSpec::name)
      .def_readonly("dim", &MetricSpec::dim)
      .def_readonly("params", &MetricSpec::params)
      .def_readonly("exact_mass", &MetricSpec::exact_mass)
      .def_property_readonly("exact_potential", [](const MetricSpec& s) { return s.exact_potential; })
      .def("g", [](const MetricSpec& s, const Vec& x) { return s.metric_at(x); }, py::arg("x"))
      .def("__repr__", [](const MetricSpec& s) { return "<Metric " + s.name + ">"; });

  py::class_<SurfacePatch>(m, "SurfacePatch")
      .def_readonly("name", &SurfacePatch::name)
      .def_readonly("positions", &SurfacePatch::positions)
      .def_property_readonly("closed", &SurfacePatch::closed);

  m.def("metric_names", &builtin_metric_names);
  m.def("metric", &builtin_metric, py::arg("name"), py::arg("params") = ParamMap{});
  m.def("constant_field", &constant_field, py::arg("dim"), py::arg("c"));
  m.def("coordinate_field", &coordinate_field, py::arg("dim"), py::arg("axis"));
  m.def("linear_field", &linear_field, py::arg("a"), py::arg("c") = 0.0);

  m.def(
      "curvature",
      [](const MetricSpec& spec, const Vec& x, bool fd) {
        const auto b =
            curvature_bundle(spec, to_point(x), fd ? DerivativeMode::FiniteDifference : DerivativeMode::Analytic);
        py::dict d;
        d["g"] = b.g;
        d["christoffel"] = b.gamma;
        d["ricci"] = b.ric;
        d["scalar"] = b.scalar;
        d["scalar_double_trace"] = b.scalar_double_trace;
        d["bianchi_residual"] = bianchi_residual(b);
        d["symmetry_residual"] = symmetry_residual(b);
        return d;
      },
      py::arg("metric"), py::arg("x"), py::arg("finite_difference") = false);

  m.def(
      "static_residual",
      [](const MetricSpec& spec, const ScalarFieldSpec& v, const Vec& x) {
        const auto r = static_residual(spec, v, to_point(x));
        py::dict d;
        d["tensor"] = r.tensor;
        d["norm"] = r.norm;
        d["trace"] = r.trace;
        d["trace_expected"] = r.trace_expected;
        d["laplacian"] = r.laplacian;
        d["scalar_curvature"] = r.scalar_curvature;
        return d;
      },
      py::arg("metric"), py::arg("potential"), py::arg("x"));

  m.def(
      "scalar_constancy",
      [](const MetricSpec& spec, const std::vector<Vec>& xs) {
        std::vector<Point> pts;
        for (const auto& x : xs) pts.push_back(to_point(x));
        return scalar_constancy_check(spec, pts).max_deviation;
      },
      py::arg("metric"), py::arg("points"));

  m.def(
      "solve_annulus",
      [](const MetricSpec& spec, double inner, double outer, int n_xi, int n_theta, int n_phi) {
        const ScalarFieldSpec& exact = exact_potential_of(spec);
        const auto sol = solve_harmonic_annulus(spec, exact, exact, AnnulusGrid{inner, outer, n_xi, n_theta, n_phi});
        py::dict d;
        d["field"] = sol.field;
        d["iterations"] = sol.iterations;
        d["solver_error"] = sol.solver_error;
        d["discrete_residual"] = sol.discrete_residual;
        d["boundary_mismatch"] = sol.boundary_mismatch;
        d["max_static_residual"] = sol.max_static_residual;
        return d;
      },
      py::arg("metric"), py::arg("inner"), py::arg("outer"), py::arg("n_xi") = 48, py::arg("n_theta") = 12,
      py::arg("n_phi") = 16, "Harmonic V on an annulus with Dirichlet data from the metric's exact potential.");

  m.def(
      "fit_expansion", [](const ScalarFieldSpec& v, const std::vector<double>& radii) {
        return expansion_dict(fit_expansion(v, radii));
      },
      py::arg("potential"), py::arg("radii"));
  m.def(
      "adm_mass_flux", [](const MetricSpec& spec, const std::vector<double>& radii) {
        return mass_dict(adm_mass_flux(spec, radii));
      },
      py::arg("metric"), py::arg("radii"));
  m.def(
      "ricci_flux_mass",
      [](const MetricSpec& spec, const ScalarFieldSpec& v, const std::vector<double>& radii) {
        return mass_dict(ricci_flux_mass(spec, v, radii));
      },
      py::arg("metric"), py::arg("potential"), py::arg("radii"));
  m.def(
      "mass_from_potential", [](const ScalarFieldSpec& v, const std::vector<double>& radii) {
        return mass_dict(mass_from_potential(fit_expansion(v, radii)));
      },
      py::arg("potential"), py::arg("radii"));

  m.def(
      "ode_trials",
      [](int trials, std::uint64_t seed, int jobs, double t_end) {
        py::gil_scoped_release release;
        const auto s = run_ode_trials(trials, seed, jobs, t_end);
        py::gil_scoped_acquire acquire;
        py::dict d;
        d["trials"] = s.trials;
        d["failures"] = s.failures;
        d["worst_upper_margin"] = s.worst_upper_margin;
        d["worst_lower_margin"] = s.worst_lower_margin;
        d["max_c2_observed"] = s.max_c2_observed;
        d["max_c2_bound"] = s.max_c2_bound;
        d["max_halving_relative"] = s.max_halving_relative;
        return d;
      },
      py::arg("trials"), py::arg("seed"), py::arg("jobs") = 1, py::arg("t_end") = 100.0);

  m.def("coordinate_sphere",
        [](double r, int n_theta, int n_phi) { return coordinate_sphere(r, n_theta, n_phi); }, py::arg("radius"),
        py::arg("n_theta") = 16, py::arg("n_phi") = 32);
  m.def(
      "surface_summary",
      [](const MetricSpec& spec, const SurfacePatch& patch) {
        const SurfaceGeometry geo(spec, patch);
        py::dict d;
        d["area"] = geo.area();
        d["sup_abs_h"] = geo.sup_abs_h();
        d["sup_norm_a"] = geo.sup_norm_a();
        d["gauss_residual"] = geo.sup_gauss_residual();
        return d;
      },
      py::arg("metric"), py::arg("patch"));
  m.def(
      "stability_eigenvalue",
      [](const MetricSpec& spec, const SurfacePatch& patch) { return stability_min_eig(spec, patch).min_eigenvalue; },
      py::arg("metric"), py::arg("patch"));
  m.def(
      "jacobi_residual",
      [](const MetricSpec& spec, const SurfacePatch& patch, const ScalarFieldSpec& v) {
        return jacobi_residual(spec, patch, v);
      },
      py::arg("metric"), py::arg("patch"), py::arg("potential"));
  m.def(
      "boundary_identity",
      [](const MetricSpec& spec, const SurfacePatch& patch, const ScalarFieldSpec& v) {
        return boundary_static_identity(spec, patch, v);
      },
      py::arg("metric"), py::arg("patch"), py::arg("potential"));

  m.def(
      "conformal_flow",
      [](const MetricSpec& spec, const ScalarFieldSpec& v, const SurfacePatch& initial, double t_end, int steps) {
        const FlowState f = conformal_normal_flow(spec, v, initial, t_end, steps);
        const auto mono = monotonicity_residual(f);
        py::dict d;
        d["times"] = f.times;
        d["area"] = f.area;
        d["integral_vh"] = f.integral_vh;
        d["monotonicity_residual"] = mono.residual;
        d["monotone"] = mono.monotone;
        d["area_variation"] = area_variation_check(f);
        d["halving_difference"] = f.halving_difference;
        return d;
      },
      py::arg("metric"), py::arg("potential"), py::arg("initial"), py::arg("t_end") = 1.0, py::arg("steps") = 200);

  m.def(
      "plateau_sequence",
      [](const MetricSpec& spec, const ScalarFieldSpec& v, const std::vector<double>& radii, double r0, int jobs) {
        SequenceOptions opt;
        opt.jobs = jobs;
        const auto seq = radius_sequence_experiment(spec, v, radii, r0, opt);
        py::list per_radius;
        for (const auto& r : seq.radii) {
          py::dict d;
          d["radius"] = r.radius;
          d["intersects_inner_ball"] = r.intersects_inner_ball;
          d["min_norm"] = r.min_norm;
          d["area"] = r.area;
          d["drift"] = r.drift;
          d["sup_h"] = r.sup_h;
          d["sup_abs_height"] = r.sup_abs_height;
          per_radius.append(d);
        }
        py::dict out;
        out["axis"] = seq.axis;
        out["radii"] = per_radius;
        out["all_intersect"] = seq.all_intersect;
        out["drift_non_increasing"] = seq.drift_non_increasing;
        out["final_drift"] = seq.final_drift;
        out["prediction_held"] = seq.prediction_held;
        return out;
      },
      py::arg("metric"), py::arg("potential"), py::arg("radii"), py::arg("r0"), py::arg("jobs") = 1);

  m.def(
      "minimal_disk",
      [](const MetricSpec& spec, double radius, const std::function<double(double)>& boundary) {
        const auto sol = solve_minimal_graph(circle_problem(spec, radius, boundary));
        py::dict d;
        d["heights"] = sol.heights;
        d["r"] = [&] {
          std::vector<double> r;
          for (int p = 0; p < sol.grid->size(); ++p) r.push_back(sol.grid->u(p) * radius);
          return r;
        }();
        d["phi"] = [&] {
          std::vector<double> phi;
          for (int p = 0; p < sol.grid->size(); ++p) phi.push_back(sol.grid->v(p));
          return phi;
        }();
        d["sup_h"] = sol.sup_h;
        d["area"] = sol.area;
        d["iterations"] = sol.iterations;
        d["stability_eigenvalue"] = stability_min_eig(spec, sol.patch).min_eigenvalue;
        return d;
      },
      py::arg("metric"), py::arg("radius"), py::arg("boundary"),
      "Minimal graph over the disk x3 = u(x1, x2) with boundary heights given as a function of the angle.");

  m.def(
      "run_suite",
      [](const std::string& config_yaml) {
        const SuiteConfig config = parse_suite_config(config_yaml);
        SuiteReport report;
        {
          py::gil_scoped_release release;
          report = run_suite(config);
        }
        return report_dict(report);
      },
      py::arg("config_yaml"), "Runs the suites of a YAML configuration; returns records and rendered tables.");
  m.def("suite_names", &suite_names);
  m.attr("REPORT_SCHEMA_VERSION") = kReportSchemaVersion;
}
