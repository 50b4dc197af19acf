// Command-line front end: one subcommand per module operation plus `run`
// for configured suites. Results are JSON on stdout; logs go to stderr with
// verbosity from STATICGEO_LOG (trace, debug, info, warn, error, off).
//
// Exit codes: 0 success / all checks pass, 1 a check failed, 2 configuration
// or runtime error.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "staticgeo/asymptotics.hpp"
#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/conformal_flow.hpp"
#include "staticgeo/curvature.hpp"
#include "staticgeo/error.hpp"
#include "staticgeo/hypersurface.hpp"
#include "staticgeo/plateau.hpp"
#include "staticgeo/static_potential.hpp"
#include "staticgeo/suite.hpp"

namespace sg = staticgeo;
using json = nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitError = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("staticgeo");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("STATICGEO_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw sg::Error(sg::ErrorKind::InvalidArgument, "not a number: '" + item + "'");
    out.push_back(x);
  }
  return out;
}

sg::Vec to_vec(const std::vector<double>& xs) {
  sg::Vec v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
  return v;
}

json to_json(const sg::Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const sg::Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

// Metric selection shared by the subcommands.
struct MetricArgs {
  std::string name = "euclidean";
  std::vector<std::string> params;  // key=value

  void add(CLI::App* app) {
    app->add_option("--metric", name, "catalog metric")->capture_default_str();
    app->add_option("--param", params, "metric parameter key=value (repeatable)");
  }

  sg::ParamMap param_map() const {
    sg::ParamMap out;
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw sg::Error(sg::ErrorKind::InvalidArgument, "parameter must be key=value: " + kv);
      const auto vals = parse_list(kv.substr(eq + 1));
      if (vals.size() != 1) throw sg::Error(sg::ErrorKind::InvalidArgument, "parameter needs one value: " + kv);
      out[kv.substr(0, eq)] = vals[0];
    }
    return out;
  }

  sg::MetricSpec spec() const { return sg::builtin_metric(name, param_map()); }
};

// Potentials: exact | constant:c | coordinate:i | linear:a1,...,an,c
sg::ScalarFieldSpec parse_potential(const std::string& text, const sg::MetricSpec& spec) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "exact") {
    if (!spec.exact_potential)
      throw sg::Error(sg::ErrorKind::Precondition, "metric '" + spec.name + "' has no known static potential");
    return *spec.exact_potential;
  }
  const auto vals = parse_list(rest);
  if (kind == "constant" && vals.size() == 1) return sg::constant_field(spec.dim, vals[0]);
  if (kind == "coordinate" && vals.size() == 1) return sg::coordinate_field(spec.dim, static_cast<int>(vals[0]));
  if (kind == "linear" && static_cast<int>(vals.size()) == spec.dim + 1) {
    const std::vector<double> a(vals.begin(), vals.end() - 1);
    return sg::linear_field(to_vec(a), vals.back());
  }
  throw sg::Error(sg::ErrorKind::InvalidArgument,
                  "potential must be exact, constant:c, coordinate:i or linear:a1,...,an,c (got '" + text + "')");
}

sg::Point parse_point(const std::string& text) {
  sg::Point p;
  p.coords = to_vec(parse_list(text));
  return p;
}

void emit(const json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (!path.empty()) {
    std::ofstream out(path);
    if (!out) throw sg::Error(sg::ErrorKind::Io, "cannot write " + path);
    out << text;
    spdlog::info("wrote {}", path);
  }
  std::cout << text;
}

// --- subcommands ------------------------------------------------------------

int cmd_curvature(const MetricArgs& m, const std::string& point, bool fd, const std::string& out) {
  const auto spec = m.spec();
  const auto p = parse_point(point);
  const auto b = sg::curvature_bundle(spec, p, fd ? sg::DerivativeMode::FiniteDifference : sg::DerivativeMode::Analytic);
  json gamma = json::array();
  for (const auto& g : b.gamma) gamma.push_back(to_json(g));
  emit({{"metric", spec.name},
        {"point", to_json(p.coords)},
        {"derivatives", fd ? "finite-difference" : "analytic"},
        {"g", to_json(b.g)},
        {"christoffel", gamma},
        {"ricci", to_json(b.ric)},
        {"scalar", b.scalar},
        {"scalar_double_trace", b.scalar_double_trace},
        {"riemann_sup", sg::riemann_norm(b)},
        {"bianchi_residual", sg::bianchi_residual(b)},
        {"symmetry_residual", sg::symmetry_residual(b)}},
       out);
  return kExitPass;
}

int cmd_static_residual(const MetricArgs& m, const std::string& potential, const std::string& point, double tol,
                        const std::string& out) {
  const auto spec = m.spec();
  const auto v = parse_potential(potential, spec);
  const auto r = sg::static_residual(spec, v, parse_point(point));
  const bool pass = r.norm <= tol;
  emit({{"metric", spec.name},
        {"potential", v.name()},
        {"tensor", to_json(r.tensor)},
        {"norm", r.norm},
        {"trace", r.trace},
        {"trace_expected", r.trace_expected},
        {"laplacian", r.laplacian},
        {"scalar_curvature", r.scalar_curvature},
        {"tolerance", tol},
        {"pass", pass}},
       out);
  return pass ? kExitPass : kExitFail;
}

struct AnnulusArgs {
  double inner = 1.0, outer = 2.0;
  int n_xi = 32, n_theta = 8, n_phi = 8;
  std::string inner_bc = "exact", outer_bc = "exact";
  bool normalize = false;
};

int cmd_solve_annulus(const MetricArgs& m, const AnnulusArgs& a, const std::string& out) {
  const auto spec = m.spec();
  sg::AnnulusOptions opts;
  opts.normalize_outer = a.normalize;
  const auto sol = sg::solve_harmonic_annulus(spec, parse_potential(a.inner_bc, spec), parse_potential(a.outer_bc, spec),
                                              sg::AnnulusGrid{a.inner, a.outer, a.n_xi, a.n_theta, a.n_phi}, opts);
  // Radial profile along the x3 axis for inspection.
  json profile = json::array();
  for (int k = 0; k <= 8; ++k) {
    const double rho = a.inner + (a.outer - a.inner) * k / 8.0;
    sg::Vec x = sg::Vec::Zero(3);
    x[2] = rho;
    profile.push_back({{"rho", rho}, {"value", sol.field.value(x)}});
  }
  emit({{"metric", spec.name},
        {"grid", {{"inner", a.inner}, {"outer", a.outer}, {"n_xi", a.n_xi}, {"n_theta", a.n_theta}, {"n_phi", a.n_phi}}},
        {"iterations", sol.iterations},
        {"solver_error", sol.solver_error},
        {"discrete_residual", sol.discrete_residual},
        {"boundary_mismatch", sol.boundary_mismatch},
        {"outer_sup_norm", sol.outer_sup_norm},
        {"normalization", sol.normalization},
        {"max_static_residual", sol.max_static_residual},
        {"max_scalar_curvature", sol.max_scalar_curvature},
        {"profile_x3", profile}},
       out);
  return kExitPass;
}

struct ZeroSetArgs {
  std::string potential = "coordinate:2";
  std::string lo = "-4,-4", hi = "4,4";
  int samples = 9;
  int axis = -1;
  double search_lo = -10.0, search_hi = 10.0;
};

int cmd_zero_set(const MetricArgs& m, const ZeroSetArgs& z, const std::string& out) {
  const auto spec = m.spec();
  const auto v = parse_potential(z.potential, spec);
  sg::ZeroSetWindow w;
  w.lo = parse_list(z.lo);
  w.hi = parse_list(z.hi);
  w.samples = z.samples;
  w.search_lo = z.search_lo;
  w.search_hi = z.search_hi;
  const auto graphs = sg::zero_set_extract(v, w, z.axis);
  json arr = json::array();
  for (const auto& g : graphs) {
    json pts = json::array();
    for (std::size_t i = 0; i < g.heights.size(); ++i)
      pts.push_back({{"base", to_json(g.base_points[i])}, {"height", g.heights[i]}, {"gradient", to_json(g.gradients[i])}});
    json entry = {{"component", g.component},
                  {"axis", g.axis},
                  {"root_tolerance", g.root_tolerance},
                  {"gradient_bound", g.gradient_bound},
                  {"height_fit", {{"constant", g.height_fit.constant}, {"exponent", g.height_fit.exponent}}},
                  {"gradient_fit", {{"constant", g.gradient_fit.constant}, {"exponent", g.gradient_fit.exponent}}},
                  {"samples", pts}};
    const auto geo = sg::level_set_geometry_check(spec, g);
    entry["level_set"] = {{"sup_norm_a", geo.sup_norm_a}, {"sup_abs_h", geo.sup_abs_h}, {"pass", geo.pass}};
    arr.push_back(entry);
  }
  emit({{"metric", spec.name}, {"potential", v.name()}, {"graphs", arr}}, out);
  return kExitPass;
}

json mass_json(const sg::MassEstimate& e, double value) {
  return {{"method", sg::to_string(e.method)},
          {"value", value},
          {"error_estimate", e.error_estimate},
          {"radii", e.radii},
          {"per_radius", e.per_radius},
          {"decay_exponent", e.decay_exponent}};
}

int cmd_mass(const MetricArgs& m, const std::string& potential, const std::string& radii, int jobs, double tol,
             const std::string& out) {
  const auto spec = m.spec();
  const auto r = parse_list(radii);
  sg::MassOptions opts;
  opts.jobs = jobs;
  const auto flux = sg::adm_mass_flux(spec, r, opts);
  json methods = json::array({mass_json(flux, flux.value)});
  std::vector<double> values = {flux.value};
  if (!potential.empty()) {
    const auto v = parse_potential(potential, spec);
    const auto fit = sg::fit_expansion(v, r);
    const auto ricci = sg::ricci_flux_mass(spec, v, r, opts);
    const auto pot = sg::mass_from_potential(fit);
    methods.push_back(mass_json(ricci, ricci.value / fit.a0));
    methods.push_back(mass_json(pot, pot.value));
    values.push_back(ricci.value / fit.a0);
    values.push_back(pot.value);
  }
  double spread = 0.0;
  for (double a : values)
    for (double b : values) spread = std::max(spread, std::abs(a - b));
  const bool pass = spread <= tol;
  emit({{"metric", spec.name},
        {"exact_mass", spec.exact_mass ? json(*spec.exact_mass) : json(nullptr)},
        {"methods", methods},
        {"max_pairwise_difference", spread},
        {"tolerance", tol},
        {"pass", pass}},
       out);
  return pass ? kExitPass : kExitFail;
}

int cmd_ode(int trials, std::uint64_t seed, double t_end, int jobs, const std::string& out) {
  const auto s = sg::run_ode_trials(trials, seed, jobs, t_end);
  emit({{"trials", s.trials},
        {"seed", s.seed},
        {"t_end", t_end},
        {"failures", s.failures},
        {"worst_upper_margin", s.worst_upper_margin},
        {"worst_lower_margin", s.worst_lower_margin},
        {"max_c2_observed", s.max_c2_observed},
        {"max_c2_bound", s.max_c2_bound},
        {"max_halving_relative", s.max_halving_relative},
        {"pass", s.failures == 0}},
       out);
  return s.failures == 0 ? kExitPass : kExitFail;
}

struct FlowArgs {
  std::string potential = "exact";
  double r0 = 3.0, t_end = 1.0;
  int steps = 200, n_theta = 8, n_phi = 16, jobs = 1;
  std::string ply_dir;
  int ply_every = 20;
};

int cmd_flow(const MetricArgs& m, const FlowArgs& f, const std::string& out) {
  const auto spec = m.spec();
  const auto v = parse_potential(f.potential, spec);
  sg::FlowOptions opts;
  opts.jobs = f.jobs;
  const auto flow = sg::conformal_normal_flow(spec, v, sg::coordinate_sphere(f.r0, f.n_theta, f.n_phi), f.t_end, f.steps, opts);
  const auto mono = sg::monotonicity_residual(flow);
  const double area_check = sg::area_variation_check(flow);
  json series = json::array();
  for (std::size_t s = 0; s < flow.times.size(); ++s) {
    const sg::Vec q = flow.h[s].cwiseQuotient(flow.v[s]);
    series.push_back({{"t", flow.times[s]},
                      {"area", flow.area[s]},
                      {"integral_vh", flow.integral_vh[s]},
                      {"h_over_v_min", q.minCoeff()},
                      {"h_over_v_max", q.maxCoeff()},
                      {"a_norm2_max", flow.a_norm2[s].maxCoeff()},
                      {"mean_radius", flow.surfaces[s].positions.rowwise().norm().mean()}});
  }
  if (!f.ply_dir.empty()) {
    std::filesystem::create_directories(f.ply_dir);
    for (std::size_t s = 0; s < flow.times.size(); s += std::max(1, f.ply_every)) {
      char name[32];
      std::snprintf(name, sizeof name, "flow_%05zu.ply", s);
      sg::write_ply(std::filesystem::path(f.ply_dir) / name, flow.surfaces[s]);
    }
  }
  emit({{"metric", spec.name},
        {"potential", v.name()},
        {"r0", f.r0},
        {"t_end", f.t_end},
        {"steps", f.steps},
        {"initial_speed_error", flow.initial_speed_error},
        {"halving_difference", flow.halving_difference},
        {"monotonicity_residual", mono.residual},
        {"monotone", mono.monotone},
        {"area_variation", area_check},
        {"series", series}},
       out);
  return kExitPass;
}

struct PlateauArgs {
  std::string potential = "coordinate:2";
  std::string radii = "4,8,16";
  double r0 = 2.0;
  int n_cheb = 15, n_phi = 16, jobs = 1;
  double tolerance = 1e-8;
  std::string ply_dir;
};

int cmd_plateau(const MetricArgs& m, const PlateauArgs& p, const std::string& out) {
  const auto spec = m.spec();
  const auto v = parse_potential(p.potential, spec);
  sg::SequenceOptions opts;
  opts.n_cheb = p.n_cheb;
  opts.n_phi = p.n_phi;
  opts.tolerance = p.tolerance;
  opts.jobs = p.jobs;
  const auto rep = sg::radius_sequence_experiment(spec, v, parse_list(p.radii), p.r0, opts);
  json radii = json::array();
  for (std::size_t i = 0; i < rep.radii.size(); ++i) {
    const auto& r = rep.radii[i];
    radii.push_back({{"radius", r.radius},
                     {"intersects_inner_ball", r.intersects_inner_ball},
                     {"min_norm", r.min_norm},
                     {"area", r.area},
                     {"drift", r.drift < 0 ? json(nullptr) : json(r.drift)},
                     {"sup_h", r.sup_h},
                     {"sup_abs_height", r.sup_abs_height},
                     {"iterations", r.iterations},
                     {"boundary_sphere_deviation", r.boundary_sphere_deviation}});
    if (!p.ply_dir.empty()) {
      std::filesystem::create_directories(p.ply_dir);
      char name[48];
      std::snprintf(name, sizeof name, "plateau_r%g.ply", r.radius);
      sg::write_ply(std::filesystem::path(p.ply_dir) / name, rep.solutions[i].patch);
    }
  }
  emit({{"metric", spec.name},
        {"potential", v.name()},
        {"r0", rep.r0},
        {"axis", rep.axis},
        {"radii", radii},
        {"all_intersect", rep.all_intersect},
        {"drift_non_increasing", rep.drift_non_increasing},
        {"final_drift", rep.final_drift},
        {"prediction_held", rep.prediction_held}},
       out);
  return rep.prediction_held ? kExitPass : kExitFail;
}

struct RunArgs {
  std::string config;
  std::string suites;
  int jobs = 0;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format = "json";
};

int cmd_run(const RunArgs& a) {
  sg::SuiteConfig config;
  if (!a.config.empty()) config = sg::load_suite_config(a.config);
  if (!a.suites.empty()) {
    config.suites.clear();
    std::stringstream ss(a.suites);
    std::string s;
    while (std::getline(ss, s, ','))
      if (!s.empty()) config.suites.push_back(s);
  }
  if (a.config.empty() && a.suites.empty()) throw sg::Error(sg::ErrorKind::InvalidArgument, "run needs --config or --suite");
  if (a.jobs > 0) config.jobs = a.jobs;
  if (a.seed) config.seed = *a.seed;
  if (!a.out_dir.empty()) config.out_dir = a.out_dir;
  if (std::find(config.formats.begin(), config.formats.end(), a.format) == config.formats.end())
    config.formats.push_back(a.format);
  sg::validate_suite_config(config);
  const auto report = sg::run_suite(config, [](const std::string& msg) { spdlog::info("{}", msg); });
  for (const auto& r : report.records)
    if (!r.pass) spdlog::warn("FAIL {}.{}: error {} > tolerance {} {}", r.suite, r.name, r.error, r.tolerance, r.message);
  for (const auto& path : sg::write_report_files(report)) spdlog::info("wrote {}", path.string());
  std::cout << sg::render_tables(report, a.format);
  return sg::report_exit_code(report);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"staticgeo: static potentials, ADM mass, minimal surfaces and conformal flows"};
  app.require_subcommand(1);
  std::string out;

  MetricArgs metric;
  std::string point = "3,0,0", potential = "exact";
  bool fd = false;
  double tol = 1e-8;

  auto* curv = app.add_subcommand("curvature", "curvature bundle at a point");
  metric.add(curv);
  curv->add_option("--point", point, "comma-separated coordinates")->capture_default_str();
  curv->add_flag("--fd", fd, "finite-difference jets");
  curv->add_option("--output", out, "also write the JSON to this file");

  auto* sres = app.add_subcommand("static-residual", "static operator residual at a point");
  metric.add(sres);
  sres->add_option("--potential", potential, "exact | constant:c | coordinate:i | linear:a1,..,an,c")->capture_default_str();
  sres->add_option("--point", point, "comma-separated coordinates")->capture_default_str();
  sres->add_option("--tolerance", tol, "pass threshold on the residual norm")->capture_default_str();
  sres->add_option("--output", out, "also write the JSON to this file");

  AnnulusArgs ann;
  auto* solve = app.add_subcommand("solve-annulus", "Dirichlet Laplace solve on a coordinate annulus");
  metric.add(solve);
  solve->add_option("--inner", ann.inner, "inner radius")->capture_default_str();
  solve->add_option("--outer", ann.outer, "outer radius")->capture_default_str();
  solve->add_option("--n-xi", ann.n_xi, "radial intervals")->capture_default_str();
  solve->add_option("--n-theta", ann.n_theta, "colatitudes")->capture_default_str();
  solve->add_option("--n-phi", ann.n_phi, "longitudes")->capture_default_str();
  solve->add_option("--inner-bc", ann.inner_bc, "potential on the inner sphere")->capture_default_str();
  solve->add_option("--outer-bc", ann.outer_bc, "potential on the outer sphere")->capture_default_str();
  solve->add_flag("--normalize", ann.normalize, "rescale to outer sup-norm 1");
  solve->add_option("--output", out, "also write the JSON to this file");

  ZeroSetArgs zs;
  auto* zero = app.add_subcommand("zero-set", "zero set of a potential as graphs");
  metric.add(zero);
  zero->add_option("--potential", zs.potential, "potential")->capture_default_str();
  zero->add_option("--lo", zs.lo, "window lower corner")->capture_default_str();
  zero->add_option("--hi", zs.hi, "window upper corner")->capture_default_str();
  zero->add_option("--samples", zs.samples, "samples per axis")->capture_default_str();
  zero->add_option("--axis", zs.axis, "graph direction (-1: automatic)")->capture_default_str();
  zero->add_option("--search-lo", zs.search_lo, "scan range start")->capture_default_str();
  zero->add_option("--search-hi", zs.search_hi, "scan range end")->capture_default_str();
  zero->add_option("--output", out, "also write the JSON to this file");

  std::string radii = "8,16,32,64", mass_potential;
  int jobs = 1;
  double mass_tol = 1e-2;
  auto* mass = app.add_subcommand("mass", "ADM mass by flux, Ricci flux and potential expansion");
  metric.add(mass);
  mass->add_option("--radii", radii, "extrapolation radii")->capture_default_str();
  mass->add_option("--potential", mass_potential, "potential for the Ricci and expansion routes (e.g. exact)");
  mass->add_option("--jobs", jobs, "threads")->capture_default_str();
  mass->add_option("--tolerance", mass_tol, "pairwise agreement threshold")->capture_default_str();
  mass->add_option("--output", out, "also write the JSON to this file");

  int trials = 1000;
  std::uint64_t seed = 1;
  double t_end = 100.0;
  auto* ode = app.add_subcommand("ode-lemma", "random trials of the ODE growth lemma");
  ode->add_option("--trials", trials, "number of random systems")->capture_default_str();
  ode->add_option("--seed", seed, "seed")->capture_default_str();
  ode->add_option("--t-end", t_end, "final time")->capture_default_str();
  ode->add_option("--jobs", jobs, "threads")->capture_default_str();
  ode->add_option("--output", out, "also write the JSON to this file");

  FlowArgs fl;
  auto* flow = app.add_subcommand("flow", "conformal normal flow of a coordinate sphere");
  metric.add(flow);
  flow->add_option("--potential", fl.potential, "potential")->capture_default_str();
  flow->add_option("--r0", fl.r0, "initial sphere radius")->capture_default_str();
  flow->add_option("--t-end", fl.t_end, "final flow time")->capture_default_str();
  flow->add_option("--steps", fl.steps, "RK4 steps")->capture_default_str();
  flow->add_option("--n-theta", fl.n_theta, "surface resolution")->capture_default_str();
  flow->add_option("--n-phi", fl.n_phi, "surface resolution")->capture_default_str();
  flow->add_option("--jobs", fl.jobs, "threads")->capture_default_str();
  flow->add_option("--ply-dir", fl.ply_dir, "write PLY snapshots here");
  flow->add_option("--ply-every", fl.ply_every, "steps between snapshots")->capture_default_str();
  flow->add_option("--output", out, "also write the JSON to this file");

  PlateauArgs pl;
  auto* plateau = app.add_subcommand("plateau", "radius-sequence Plateau experiment");
  metric.add(plateau);
  plateau->add_option("--potential", pl.potential, "linear-growth potential")->capture_default_str();
  plateau->add_option("--radii", pl.radii, "boundary sphere radii")->capture_default_str();
  plateau->add_option("--r0", pl.r0, "inner ball radius")->capture_default_str();
  plateau->add_option("--n-cheb", pl.n_cheb, "radial Chebyshev points (odd)")->capture_default_str();
  plateau->add_option("--n-phi", pl.n_phi, "angular points")->capture_default_str();
  plateau->add_option("--tolerance", pl.tolerance, "Newton tolerance on sup |H|")->capture_default_str();
  plateau->add_option("--jobs", pl.jobs, "threads")->capture_default_str();
  plateau->add_option("--ply-dir", pl.ply_dir, "write one PLY per radius here");
  plateau->add_option("--output", out, "also write the JSON to this file");

  RunArgs ra;
  std::uint64_t run_seed = 0;
  auto* run = app.add_subcommand("run", "run configured check suites");
  run->add_option("--config", ra.config, "YAML config file");
  run->add_option("--suite", ra.suites, "NAME[,NAME...] (static, mass, ode, surface, flow, plateau)");
  run->add_option("--jobs", ra.jobs, "concurrent suites");
  auto* seed_opt = run->add_option("--seed", run_seed, "seed override");
  run->add_option("--out", ra.out_dir, "directory for report files");
  run->add_option("--format", ra.format, "stdout format")->check(CLI::IsMember({"json", "csv", "markdown"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    if (*curv) return cmd_curvature(metric, point, fd, out);
    if (*sres) return cmd_static_residual(metric, potential, point, tol, out);
    if (*solve) return cmd_solve_annulus(metric, ann, out);
    if (*zero) return cmd_zero_set(metric, zs, out);
    if (*mass) return cmd_mass(metric, mass_potential, radii, jobs, mass_tol, out);
    if (*ode) return cmd_ode(trials, seed, t_end, jobs, out);
    if (*flow) return cmd_flow(metric, fl, out);
    if (*plateau) return cmd_plateau(metric, pl, out);
    if (*run) {
      if (*seed_opt) ra.seed = run_seed;
      return cmd_run(ra);
    }
  } catch (const sg::Error& e) {
    spdlog::error("{} error: {}", sg::to_string(e.kind()), e.what());
    return kExitError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
  return kExitError;
}
