#include "staticgeo/suite.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "staticgeo/asymptotics.hpp"
#include "staticgeo/conformal_flow.hpp"
#include "staticgeo/error.hpp"
#include "staticgeo/hypersurface.hpp"
#include "staticgeo/plateau.hpp"
#include "staticgeo/static_potential.hpp"

namespace staticgeo {

namespace {

using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kJ01Squared = 5.783185962946784;

// How a check's error is measured against its tolerance.
enum class Measure {
  Deviation,  // |value - target|
  Excess,     // max(0, value - target)
};

struct CheckSpec {
  const char* suite;
  const char* name;
  const char* anchor;
  double tolerance;
  Measure measure = Measure::Deviation;
};

// Every check the runner can emit, in report order.
const std::vector<CheckSpec>& check_catalog() {
  static const std::vector<CheckSpec> catalog = {
      {"potential", "solve", "Theorem 3.1 proof, \"Integrating V\xce\x94V = 0\"", 1e-3},
      {"static", "residual", "Appendix B, Eq. (static equation), \"is equivalent to the following equation\"", 1e-8},
      {"static", "trace_identity", "Appendix B, \"L_g*V = \xe2\x88\x92(\xce\x94V)g + \xe2\x88\x87\xc2\xb2V \xe2\x88\x92 V Ric\"",
       1e-10},
      {"static", "scalar_constancy", "Lemma A.1(1), \"scalar curvature of g is constant\"", 1e-8},
      {"static", "level_set", "Lemma A.1(2), \"totally geodesic regular hypersurface\"", 1e-8},
      {"mass", "coordinate-flux", "Appendix A, \"We define the ADM mass\"", 1e-3},
      {"mass", "ricci-flux", "Prop. B.4 proof, \"alternative definition of the ADM mass\"", 1e-2},
      {"mass", "potential-expansion", "Prop. B.4 case (3), \"V = a\xe2\x82\x80 \xe2\x88\x92 a\xe2\x82\x80 m|x|^{2\xe2\x88\x92n}\"",
       1e-2},
      {"ode", "envelope_violations", "Lemma B.3 proof, \"h(1) t^{\xe2\x88\x92" "2a} \xe2\x89\xa4 h(t) \xe2\x89\xa4 h(1) t^{2a}\"", 0.0},
      {"ode", "linear_growth", "Lemma B.3, \"|Z| + t|Z\xe2\x80\xb2| \xe2\x89\xa4 C\xe2\x82\x82 t\"", 0.0, Measure::Excess},
      {"ode", "step_halving", "Lemma B.3, \"Z''(t) = A(t) Z' + B(t) Z(t)\"", 1e-6},
      {"surface", "traced_gauss", "Lemma 2.1 and \xc2\xa7" "3.3 Gauss relation, \"Ric(\xce\xbd, \xce\xbd) = \xc2\xbd(H\xc2\xb2 \xe2\x88\x92 |A|\xc2\xb2 \xe2\x88\x92 2K_\xce\xb3)\"",
       1e-6},
      {"surface", "boundary_identity", "\xc2\xa7" "3.3 Eq. (eq-bdry-static), \"\xce\x94_\xce\xa3 V + H \xe2\x88\x82V/\xe2\x88\x82\xce\xbd\"", 1e-6},
      {"surface", "jacobi", "Eq. (2.1), \"\xce\x94_\xce\xa3 V + Ric(\xce\xbd, \xce\xbd) V\"", 1e-6},
      {"surface", "horizon_stability", "Lemma 2.1 proof, \"first eigenvalue of the operator \xce\x94_\xce\xa3 + Ric(\xce\xbd, \xce\xbd)\"",
       1e-3},
      {"flow", "monotonicity", "Lemma B.6, \"d/dt (H/V) = |A|\xc2\xb2\"", 1e-6},
      {"flow", "area_variation", "Prop. 2.2 proof, \"first variation of area\"", 1e-5},
      {"flow", "step_halving", "Lemma B.6 setup, \"\xe1\xb8\xa1 = V\xe2\x81\xbb\xc2\xb2g\"", 1e-8},
      {"plateau", "intersects_inner_ball", "Theorem 1.2 proof, \"\xce\xa3_r must intersect B_{r\xe2\x82\x80} for all r > r\xe2\x82\x80\"",
       0.0, Measure::Excess},
      {"plateau", "drift", "Theorem 1.2 proof, \"complete, non-compact, area minimizing hypersurface\"", 1e-8},
      {"plateau", "drift_non_increasing", "Lemma 2.3, \"cannot separate B_{r\xe2\x82\x80} from infinity\"", 0.0},
      {"plateau", "mean_curvature", "Theorem 1.2 proof, \"consider the orientable Plateau solution \xce\xa3_r\"", 1e-8},
      {"plateau", "harmonic_oracle", "Lemma B.5, \"x^n = f(x\xc2\xb9, \xe2\x80\xa6, x^{n\xe2\x88\x92" "1})\"", 1e-5},
      {"plateau", "disk_eigenvalue", "Appendix A, \"\xce\xa3 \xe2\x88\xa9 B_r is a Plateau solution\"", 1e-2},
      {"plateau", "local_minimality", "Prop. 2.2, \"locally area minimizing\"", 0.0},
  };
  return catalog;
}

const CheckSpec& check_spec(const std::string& suite, const std::string& name) {
  for (const auto& c : check_catalog())
    if (suite == c.suite && name == c.name) return c;
  throw Error(ErrorKind::UnknownName, "unknown check '" + suite + "." + name + "'");
}

std::string check_key(const CheckSpec& c) { return std::string(c.suite) + "." + c.name; }

double param_or(const ParamMap& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

bool is_schwarzschild(const std::string& metric) {
  return metric == "schwarzschild_isotropic" || metric == "schwarzschild_standard";
}

// Length scale used for default radii: the mass for Schwarzschild, else 1.
double length_scale(const SuiteConfig& c) {
  return is_schwarzschild(c.metric) ? std::max(param_or(c.params, "m", 1.0), 1e-3) : 1.0;
}

Vec v3(double a, double b, double c) {
  Vec x(3);
  x << a, b, c;
  return x;
}

// ---------------------------------------------------------------------------
// Record construction

class Recorder {
 public:
  Recorder(const SuiteConfig& config, std::string suite) : config_(config), suite_(std::move(suite)) {}

  double tolerance(const CheckSpec& c) const {
    const auto it = config_.tolerances.find(check_key(c));
    if (it != config_.tolerances.end()) return it->second;
    const auto all = config_.tolerances.find("*");
    if (all != config_.tolerances.end()) return all->second;
    return c.tolerance;
  }

  // fn returns {value, target}; errors become failed records.
  template <typename Fn>
  void check(const std::string& name, Fn&& fn) {
    const CheckSpec& c = check_spec(suite_, name);
    CheckRecord r;
    r.suite = suite_;
    r.name = name;
    r.paper_anchor = c.anchor;
    r.tolerance = tolerance(c);
    try {
      const auto [value, target] = fn();
      r.value = value + 0.0;  // no negative zeros in reports
      r.target = target + 0.0;
      r.error = c.measure == Measure::Deviation ? std::abs(value - target) : std::max(0.0, value - target);
      r.pass = std::isfinite(r.error) && r.error <= r.tolerance;
      if (!std::isfinite(value)) r.message = "non-finite value";
    } catch (const std::exception& e) {
      r.value = kNaN;
      r.target = kNaN;
      r.error = kNaN;
      r.pass = false;
      r.message = e.what();
    }
    records_.push_back(std::move(r));
  }

  // A failed record for a check that could not run at all.
  void fail(const std::string& name, const std::string& message) {
    check(name, [&]() -> std::pair<double, double> { throw Error(ErrorKind::Precondition, message); });
  }

  std::vector<CheckRecord> take() { return std::move(records_); }

 private:
  const SuiteConfig& config_;
  std::string suite_;
  std::vector<CheckRecord> records_;
};

// ---------------------------------------------------------------------------
// Shared inputs

struct Inputs {
  MetricSpec spec;
  std::optional<ScalarFieldSpec> v;
  std::string potential_error;
  double shell_lo = 0.0;  // radial range where V may be evaluated
  double shell_hi = std::numeric_limits<double>::infinity();
};

double solve_inner(const SuiteConfig& c) {
  if (c.solve.inner_radius > 0.0) return c.solve.inner_radius;
  const double m = length_scale(c);
  // Just inside the horizon rho = m/2, so the solved field contains it.
  if (c.metric == "schwarzschild_isotropic") return 0.4 * m;
  if (c.metric == "schwarzschild_standard") return 3.0 * m;
  return 1.0;
}

double solve_outer(const SuiteConfig& c) {
  if (c.solve.outer_radius > 0.0) return c.solve.outer_radius;
  // Large enough for the mass radii when that suite reads the solved field.
  const bool mass = std::find(c.suites.begin(), c.suites.end(), "mass") != c.suites.end();
  return std::max(8.0 * solve_inner(c), mass ? 1.25 * c.radii.back() : 0.0);
}

Inputs prepare_inputs(const SuiteConfig& config, std::vector<CheckRecord>& records) {
  Inputs in;
  in.spec = builtin_metric(config.metric, config.params);
  if (!in.spec.exact_potential) {
    in.potential_error = "metric '" + config.metric + "' has no known static potential";
  } else if (config.potential == PotentialMode::Exact) {
    in.v = *in.spec.exact_potential;
  }
  if (config.potential == PotentialMode::Solve) {
    Recorder rec(config, "potential");
    rec.check("solve", [&]() -> std::pair<double, double> {
      if (!in.spec.exact_potential) throw Error(ErrorKind::Precondition, in.potential_error);
      const ScalarFieldSpec& exact = *in.spec.exact_potential;
      AnnulusGrid grid{solve_inner(config), solve_outer(config), config.solve.n_xi, config.solve.n_theta,
                       config.solve.n_phi};
      const AnnulusSolution sol = solve_harmonic_annulus(in.spec, exact, exact, grid);
      in.v = sol.field;
      in.shell_lo = grid.rho_inner;
      in.shell_hi = grid.rho_outer;
      // Deviation from the exact potential at seeded interior points.
      std::mt19937_64 rng(config.seed);
      std::uniform_real_distribution<double> unit(-1.0, 1.0), rad(grid.rho_inner, grid.rho_outer);
      double dev = 0.0;
      for (int i = 0; i < 64; ++i) {
        Vec d = v3(unit(rng), unit(rng), unit(rng));
        if (d.norm() < 1e-3) d = v3(0, 0, 1);
        const Vec x = rad(rng) * d.normalized();
        dev = std::max(dev, std::abs(sol.field.value(x) - exact.value(x)));
      }
      return {dev, 0.0};
    });
    if (!in.v && in.potential_error.empty()) in.potential_error = "potential solve failed";
    auto r = rec.take();
    records.insert(records.end(), r.begin(), r.end());
  }
  return in;
}

const ScalarFieldSpec& require_potential(const Inputs& in) {
  if (!in.v) throw Error(ErrorKind::Precondition, in.potential_error);
  return *in.v;
}

// ---------------------------------------------------------------------------
// Suites

std::vector<CheckRecord> run_static(const SuiteConfig& config, const Inputs& in) {
  Recorder rec(config, "static");
  const double m = length_scale(config);
  double lo = config.metric == "schwarzschild_standard" ? 2.5 * m : (is_schwarzschild(config.metric) ? m : 2.0);
  double hi = 50.0 * m;
  lo = std::max(lo, in.shell_lo);
  hi = std::min(hi, in.shell_hi);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> rad(lo, hi), unit(-1.0, 1.0);
  std::vector<Point> samples;
  for (int i = 0; i < config.static_samples; ++i) {
    Vec d = v3(unit(rng), unit(rng), unit(rng));
    if (d.norm() < 1e-3) d = v3(0, 0, 1);
    Point p;
    p.coords = rad(rng) * d.normalized();
    samples.push_back(p);
  }
  std::vector<StaticResidual> residuals;
  std::string residual_error;
  try {
    const ScalarFieldSpec& v = require_potential(in);
    for (const Point& p : samples) residuals.push_back(static_residual(in.spec, v, p));
  } catch (const std::exception& e) {
    residual_error = e.what();
  }
  rec.check("residual", [&]() -> std::pair<double, double> {
    if (!residual_error.empty()) throw Error(ErrorKind::Precondition, residual_error);
    double worst = 0.0;
    for (const auto& r : residuals) worst = std::max(worst, r.norm);
    return {worst, 0.0};
  });
  rec.check("trace_identity", [&]() -> std::pair<double, double> {
    if (!residual_error.empty()) throw Error(ErrorKind::Precondition, residual_error);
    double worst = 0.0;
    for (const auto& r : residuals) worst = std::max(worst, std::abs(r.trace - r.trace_expected));
    return {worst, 0.0};
  });
  rec.check("scalar_constancy", [&]() -> std::pair<double, double> {
    return {scalar_constancy_check(in.spec, samples).max_deviation, 0.0};
  });
  if (config.metric == "schwarzschild_isotropic") {
    // The horizon rho = m/2 is the zero set of the potential.
    rec.check("level_set", [&]() -> std::pair<double, double> {
      const ScalarFieldSpec& v = require_potential(in);
      const auto quad = sphere_quadrature(1.0, 8);
      std::vector<Point> pts = radial_zero_set(v, quad.nodes, std::max(0.25 * m, in.shell_lo),
                                                 std::min(0.75 * m, in.shell_hi));
      return {level_set_geometry_check(in.spec, v, pts).sup_norm_a, 0.0};
    });
  }
  return rec.take();
}

std::vector<CheckRecord> run_mass(const SuiteConfig& config, const Inputs& in) {
  Recorder rec(config, "mass");
  MassOptions opts;
  opts.jobs = 1;
  // The Ricci-flux identity needs a static V; accept the staticness level the
  // configuration declares for static.residual (a solved V is static only to
  // discretization accuracy), never stricter than the module default.
  opts.static_tolerance =
      std::max(opts.static_tolerance, Recorder(config, "static").tolerance(check_spec("static", "residual")));
  std::optional<double> exact = in.spec.exact_mass;
  std::optional<double> flux_value;
  rec.check("coordinate-flux", [&]() -> std::pair<double, double> {
    const MassEstimate est = adm_mass_flux(in.spec, config.radii, opts);
    flux_value = est.value;
    return {est.value, exact.value_or(est.value)};
  });
  std::optional<ExpansionFit> fit;
  std::string fit_error;
  try {
    fit = fit_expansion(require_potential(in), config.radii);
  } catch (const std::exception& e) {
    fit_error = e.what();
  }
  const double reference = exact ? *exact : flux_value.value_or(kNaN);
  rec.check("ricci-flux", [&]() -> std::pair<double, double> {
    const MassEstimate est = ricci_flux_mass(in.spec, require_potential(in), config.radii, opts);
    if (!fit) throw Error(ErrorKind::Precondition, "no a0 for the Ricci route: " + fit_error);
    return {est.value / fit->a0, reference};
  });
  rec.check("potential-expansion", [&]() -> std::pair<double, double> {
    if (!fit) throw Error(ErrorKind::Precondition, fit_error);
    return {mass_from_potential(*fit).value, reference};
  });
  return rec.take();
}

std::vector<CheckRecord> run_ode(const SuiteConfig& config) {
  Recorder rec(config, "ode");
  std::optional<OdeTrialSummary> summary;
  std::string err;
  try {
    summary = run_ode_trials(config.ode_trials, config.seed, config.jobs, config.ode_t_end);
  } catch (const std::exception& e) {
    err = e.what();
  }
  auto need = [&]() -> const OdeTrialSummary& {
    if (!summary) throw Error(ErrorKind::NonConvergence, err);
    return *summary;
  };
  rec.check("envelope_violations", [&]() -> std::pair<double, double> {
    return {static_cast<double>(need().failures), 0.0};
  });
  rec.check("linear_growth", [&]() -> std::pair<double, double> {
    return {need().max_c2_observed, need().max_c2_bound};
  });
  rec.check("step_halving", [&]() -> std::pair<double, double> { return {need().max_halving_relative, 0.0}; });
  return rec.take();
}

std::vector<double> surface_radii(const SuiteConfig& config) {
  if (!config.surface_radii.empty()) return config.surface_radii;
  const double m = length_scale(config);
  return {3.0 * m, 5.0 * m, 10.0 * m};
}

std::vector<CheckRecord> run_surface(const SuiteConfig& config, const Inputs& in) {
  Recorder rec(config, "surface");
  const double m = length_scale(config);
  const auto radii = surface_radii(config);
  double a = 1.0, b = 3.0;
  if (config.metric == "schwarzschild_standard") {
    a = 2.5 * m;
    b = 6.0 * m;
  } else if (config.metric == "schwarzschild_isotropic") {
    a = m;
    b = 4.0 * m;
  }
  const SurfacePatch annulus = annulus_patch(
      "equator", [](double r, double ph) { return v3(r * std::cos(ph), r * std::sin(ph), 0.0); }, a, b, 24, 24);

  rec.check("traced_gauss", [&]() -> std::pair<double, double> {
    double worst = 0.0;
    for (double r : radii) worst = std::max(worst, SurfaceGeometry(in.spec, coordinate_sphere(r)).sup_gauss_residual());
    worst = std::max(worst, SurfaceGeometry(in.spec, annulus).sup_gauss_residual());
    return {worst, 0.0};
  });
  rec.check("boundary_identity", [&]() -> std::pair<double, double> {
    const ScalarFieldSpec& v = require_potential(in);
    double worst = 0.0;
    for (double r : radii) worst = std::max(worst, boundary_static_identity(in.spec, coordinate_sphere(r), v));
    return {worst, 0.0};
  });
  rec.check("jacobi", [&]() -> std::pair<double, double> {
    return {jacobi_residual(in.spec, annulus, require_potential(in)), 0.0};
  });
  if (config.metric == "schwarzschild_isotropic") {
    rec.check("horizon_stability", [&]() -> std::pair<double, double> {
      const StabilityReport s = stability_min_eig(in.spec, coordinate_sphere(0.5 * m));
      return {s.min_eigenvalue, 1.0 / (4.0 * m * m)};
    });
  }
  return rec.take();
}

std::vector<CheckRecord> run_flow(const SuiteConfig& config, const Inputs& in) {
  Recorder rec(config, "flow");
  std::optional<FlowState> flow;
  std::string err;
  try {
    const double r0 = config.flow_r0 > 0.0 ? config.flow_r0 : (is_schwarzschild(config.metric) ? 3.0 * length_scale(config) : 1.0);
    flow = conformal_normal_flow(in.spec, require_potential(in), coordinate_sphere(r0, 8, 16), config.flow_t_end,
                                 config.flow_steps);
  } catch (const std::exception& e) {
    err = e.what();
  }
  auto need = [&]() -> const FlowState& {
    if (!flow) throw Error(ErrorKind::Precondition, err);
    return *flow;
  };
  rec.check("monotonicity", [&]() -> std::pair<double, double> { return {monotonicity_residual(need()).residual, 0.0}; });
  rec.check("area_variation", [&]() -> std::pair<double, double> { return {area_variation_check(need()), 0.0}; });
  rec.check("step_halving", [&]() -> std::pair<double, double> { return {need().halving_difference, 0.0}; });
  return rec.take();
}

std::vector<CheckRecord> run_plateau(const SuiteConfig& config) {
  Recorder rec(config, "plateau");
  std::optional<SequenceReport> seq;
  std::string err;
  std::optional<MetricSpec> spec;
  try {
    spec = builtin_metric(config.plateau_metric, config.plateau_params);
    const auto& p = config.plateau_potential;
    const ScalarFieldSpec v = linear_field(v3(p[0], p[1], p[2]), p[3]);
    SequenceOptions opt;
    opt.jobs = config.jobs;
    seq = radius_sequence_experiment(*spec, v, config.plateau_radii, config.plateau_r0, opt);
  } catch (const std::exception& e) {
    err = e.what();
  }
  auto need = [&]() -> const SequenceReport& {
    if (!seq) throw Error(ErrorKind::Precondition, err);
    return *seq;
  };
  rec.check("intersects_inner_ball", [&]() -> std::pair<double, double> {
    double worst = 0.0;
    for (const auto& r : need().radii) worst = std::max(worst, r.min_norm);
    return {worst, config.plateau_r0};
  });
  rec.check("drift", [&]() -> std::pair<double, double> { return {need().final_drift, 0.0}; });
  rec.check("drift_non_increasing", [&]() -> std::pair<double, double> {
    return {need().drift_non_increasing ? 1.0 : 0.0, 1.0};
  });
  rec.check("mean_curvature", [&]() -> std::pair<double, double> {
    double worst = 0.0;
    for (const auto& r : need().radii) worst = std::max(worst, r.sup_h);
    return {worst, 0.0};
  });
  rec.check("local_minimality", [&]() -> std::pair<double, double> {
    if (!spec) throw Error(ErrorKind::Precondition, err);
    const auto probe = local_minimality_probe(*spec, need().solutions.front(), 20, config.seed);
    return {static_cast<double>(probe.non_positive_gaps), 0.0};
  });
  // Solver oracles in flat space.
  const MetricSpec flat = builtin_metric("euclidean");
  rec.check("harmonic_oracle", [&]() -> std::pair<double, double> {
    const double eps = 0.01;
    auto prob = circle_problem(flat, 1.0, [eps](double phi) { return eps * std::sin(2 * phi); });
    prob.tolerance = 1e-11;
    const auto sol = solve_minimal_graph(prob);
    double err2 = 0.0;
    for (int p = 0; p < sol.grid->size(); ++p) {
      const double r = sol.grid->u(p);
      err2 = std::max(err2, std::abs(sol.heights[p] - eps * r * r * std::sin(2 * sol.grid->v(p))));
    }
    return {err2, 0.0};
  });
  rec.check("disk_eigenvalue", [&]() -> std::pair<double, double> {
    const auto sol = solve_minimal_graph(circle_problem(flat, 1.0, [](double) { return 0.0; }));
    return {stability_min_eig(flat, sol.patch).min_eigenvalue, kJ01Squared};
  });
  return rec.take();
}

// ---------------------------------------------------------------------------
// Config parsing

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::InvalidArgument, "config: " + what); }

template <typename T>
T as(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    config_error("field '" + key + "' has the wrong type");
  }
}

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) config_error("'" + where + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

std::vector<double> as_doubles(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) config_error("'" + key + "' must be a list");
  std::vector<double> out;
  for (const auto& x : node) out.push_back(as<double>(x, key));
  return out;
}

std::vector<std::string> as_strings(const YAML::Node& node, const std::string& key) {
  std::vector<std::string> out;
  if (node.IsScalar()) {
    std::stringstream ss(node.as<std::string>());
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(item);
    return out;
  }
  if (!node.IsSequence()) config_error("'" + key + "' must be a list");
  for (const auto& x : node) out.push_back(as<std::string>(x, key));
  return out;
}

void parse_metric(const YAML::Node& node, std::string& name, ParamMap& params, const std::string& where) {
  if (node.IsScalar()) {
    name = node.as<std::string>();
    return;
  }
  check_keys(node, where, {"name", "params"});
  if (node["name"]) name = as<std::string>(node["name"], where + ".name");
  if (node["params"]) {
    if (!node["params"].IsMap()) config_error("'" + where + ".params' must be a mapping");
    for (const auto& kv : node["params"]) params[kv.first.as<std::string>()] = as<double>(kv.second, where + ".params");
  }
}

json params_json(const ParamMap& params) {
  json j = json::object();
  for (const auto& [k, v] : params) j[k] = v;
  return j;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string full_precision(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"static", "mass", "ode", "surface", "flow", "plateau"};
  return names;
}

double default_tolerance(const std::string& check) {
  const auto dot = check.find('.');
  if (dot == std::string::npos) throw Error(ErrorKind::UnknownName, "check names have the form suite.name");
  return check_spec(check.substr(0, dot), check.substr(dot + 1)).tolerance;
}

SuiteConfig parse_suite_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    config_error(std::string("parse error: ") + e.what());
  }
  SuiteConfig c;
  if (root.IsNull()) return c;
  check_keys(root, "config",
             {"metric", "potential", "suites", "tolerance", "tolerances", "radii", "seed", "jobs", "static", "ode",
              "surface", "flow", "plateau", "output"});
  if (root["metric"]) parse_metric(root["metric"], c.metric, c.params, "metric");
  if (const auto p = root["potential"]) {
    std::string mode;
    if (p.IsScalar()) {
      mode = p.as<std::string>();
    } else {
      check_keys(p, "potential", {"mode", "inner_radius", "outer_radius", "n_xi", "n_theta", "n_phi"});
      mode = p["mode"] ? as<std::string>(p["mode"], "potential.mode") : "exact";
      if (p["inner_radius"]) c.solve.inner_radius = as<double>(p["inner_radius"], "potential.inner_radius");
      if (p["outer_radius"]) c.solve.outer_radius = as<double>(p["outer_radius"], "potential.outer_radius");
      if (p["n_xi"]) c.solve.n_xi = as<int>(p["n_xi"], "potential.n_xi");
      if (p["n_theta"]) c.solve.n_theta = as<int>(p["n_theta"], "potential.n_theta");
      if (p["n_phi"]) c.solve.n_phi = as<int>(p["n_phi"], "potential.n_phi");
    }
    if (mode == "exact")
      c.potential = PotentialMode::Exact;
    else if (mode == "solve")
      c.potential = PotentialMode::Solve;
    else
      config_error("potential mode must be 'exact' or 'solve', got '" + mode + "'");
  }
  if (root["suites"]) c.suites = as_strings(root["suites"], "suites");
  if (root["tolerance"]) c.tolerances["*"] = as<double>(root["tolerance"], "tolerance");
  if (const auto t = root["tolerances"]) {
    if (!t.IsMap()) config_error("'tolerances' must be a mapping");
    for (const auto& kv : t) c.tolerances[kv.first.as<std::string>()] = as<double>(kv.second, "tolerances");
  }
  if (root["radii"]) c.radii = as_doubles(root["radii"], "radii");
  if (root["seed"]) c.seed = as<std::uint64_t>(root["seed"], "seed");
  if (root["jobs"]) c.jobs = as<int>(root["jobs"], "jobs");
  if (const auto s = root["static"]) {
    check_keys(s, "static", {"samples"});
    if (s["samples"]) c.static_samples = as<int>(s["samples"], "static.samples");
  }
  if (const auto s = root["ode"]) {
    check_keys(s, "ode", {"trials", "t_end"});
    if (s["trials"]) c.ode_trials = as<int>(s["trials"], "ode.trials");
    if (s["t_end"]) c.ode_t_end = as<double>(s["t_end"], "ode.t_end");
  }
  if (const auto s = root["surface"]) {
    check_keys(s, "surface", {"radii"});
    if (s["radii"]) c.surface_radii = as_doubles(s["radii"], "surface.radii");
  }
  if (const auto s = root["flow"]) {
    check_keys(s, "flow", {"r0", "t_end", "steps"});
    if (s["r0"]) c.flow_r0 = as<double>(s["r0"], "flow.r0");
    if (s["t_end"]) c.flow_t_end = as<double>(s["t_end"], "flow.t_end");
    if (s["steps"]) c.flow_steps = as<int>(s["steps"], "flow.steps");
  }
  if (const auto s = root["plateau"]) {
    check_keys(s, "plateau", {"metric", "potential", "radii", "r0"});
    if (s["metric"]) {
      c.plateau_params.clear();
      parse_metric(s["metric"], c.plateau_metric, c.plateau_params, "plateau.metric");
    }
    if (s["potential"]) c.plateau_potential = as_doubles(s["potential"], "plateau.potential");
    if (s["radii"]) c.plateau_radii = as_doubles(s["radii"], "plateau.radii");
    if (s["r0"]) c.plateau_r0 = as<double>(s["r0"], "plateau.r0");
  }
  if (const auto s = root["output"]) {
    check_keys(s, "output", {"dir", "formats"});
    if (s["dir"]) c.out_dir = as<std::string>(s["dir"], "output.dir");
    if (s["formats"]) c.formats = as_strings(s["formats"], "output.formats");
  }
  validate_suite_config(c);
  return c;
}

SuiteConfig load_suite_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_suite_config(ss.str());
}

void validate_suite_config(const SuiteConfig& c) {
  const auto names = builtin_metric_names();
  if (std::find(names.begin(), names.end(), c.metric) == names.end())
    throw Error(ErrorKind::UnknownName, "config: unknown metric '" + c.metric + "'");
  if (std::find(names.begin(), names.end(), c.plateau_metric) == names.end())
    throw Error(ErrorKind::UnknownName, "config: unknown plateau metric '" + c.plateau_metric + "'");
  std::set<std::string> seen;
  for (const auto& s : c.suites) {
    if (std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end())
      throw Error(ErrorKind::UnknownName, "config: unknown suite '" + s + "'");
    if (!seen.insert(s).second) config_error("suite '" + s + "' listed twice");
  }
  for (const auto& [key, tol] : c.tolerances) {
    if (key != "*") default_tolerance(key);  // throws for unknown checks
    if (!(tol > 0.0)) config_error("tolerance for '" + key + "' must be positive");
  }
  if (c.radii.size() < 4) config_error("at least four mass radii are required");
  for (std::size_t i = 0; i < c.radii.size(); ++i)
    if (!(c.radii[i] > 0.0) || (i > 0 && !(c.radii[i] > c.radii[i - 1]))) config_error("radii must be positive and increasing");
  if (c.jobs < 1) config_error("jobs must be at least 1");
  if (c.static_samples < 2) config_error("static.samples must be at least 2");
  if (c.ode_trials < 1) config_error("ode.trials must be positive");
  if (!(c.ode_t_end > 1.0)) config_error("ode.t_end must exceed 1");
  for (double r : c.surface_radii)
    if (!(r > 0.0)) config_error("surface radii must be positive");
  if (c.flow_r0 < 0.0 || !(c.flow_t_end > 0.0) || c.flow_steps < kMinFlowSamples - 1)
    config_error("flow needs r0 >= 0, t_end > 0 and at least " + std::to_string(kMinFlowSamples - 1) + " steps");
  if (c.plateau_potential.size() != 4) config_error("plateau.potential must be [a1, a2, a3, c]");
  if (c.plateau_radii.empty() || !(c.plateau_r0 > 0.0)) config_error("plateau needs radii and r0 > 0");
  if (c.potential == PotentialMode::Solve && (c.solve.n_xi < 4 || c.solve.n_theta < 2 || c.solve.n_phi < 4))
    config_error("potential grid too small");
  for (const auto& f : c.formats)
    if (f != "json" && f != "csv" && f != "markdown") config_error("unknown output format '" + f + "'");
}

std::string suite_config_json(const SuiteConfig& c) {
  json j;
  j["metric"] = {{"name", c.metric}, {"params", params_json(c.params)}};
  if (c.potential == PotentialMode::Exact) {
    j["potential"] = {{"mode", "exact"}};
  } else {
    j["potential"] = {{"mode", "solve"},
                      {"inner_radius", c.solve.inner_radius},
                      {"outer_radius", c.solve.outer_radius},
                      {"n_xi", c.solve.n_xi},
                      {"n_theta", c.solve.n_theta},
                      {"n_phi", c.solve.n_phi}};
  }
  j["suites"] = c.suites;
  json tol = json::object();
  for (const auto& [k, v] : c.tolerances)
    if (k != "*") tol[k] = v;
  j["tolerances"] = tol;
  if (c.tolerances.count("*")) j["tolerance"] = c.tolerances.at("*");
  j["radii"] = c.radii;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["static"] = {{"samples", c.static_samples}};
  j["ode"] = {{"trials", c.ode_trials}, {"t_end", c.ode_t_end}};
  j["surface"] = {{"radii", c.surface_radii}};
  j["flow"] = {{"r0", c.flow_r0}, {"t_end", c.flow_t_end}, {"steps", c.flow_steps}};
  j["plateau"] = {{"metric", {{"name", c.plateau_metric}, {"params", params_json(c.plateau_params)}}},
                  {"potential", c.plateau_potential},
                  {"radii", c.plateau_radii},
                  {"r0", c.plateau_r0}};
  j["output"] = {{"dir", c.out_dir}, {"formats", c.formats}};
  return j.dump();
}

SuiteReport run_suite(const SuiteConfig& config, const ProgressFn& progress) {
  validate_suite_config(config);
  const auto t0 = std::chrono::steady_clock::now();
  SuiteReport report;
  report.config = config;
  report.seed = config.seed;
  report.started = utc_now();
  report.environment = {
      {"library", "staticgeo"},
      {"compiler", __VERSION__},
      {"cxx_standard", std::to_string(__cplusplus)},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
#ifdef NDEBUG
      {"build", "release"},
#else
      {"build", "debug"},
#endif
  };

  auto note = [&](const std::string& s) {
    if (progress) progress(s);
  };

  std::vector<CheckRecord> head;
  std::optional<Inputs> inputs;
  std::string metric_error;
  bool needs_metric = false;
  for (const auto& s : config.suites) needs_metric |= s != "ode" && s != "plateau";
  if (needs_metric) {
    try {
      inputs = prepare_inputs(config, head);
    } catch (const std::exception& e) {
      metric_error = e.what();
    }
  }

  auto run_one = [&](const std::string& suite) -> std::vector<CheckRecord> {
    note("running suite " + suite);
    if (suite == "ode") return run_ode(config);
    if (suite == "plateau") return run_plateau(config);
    if (!inputs) {
      Recorder rec(config, suite);
      for (const auto& c : check_catalog())
        if (suite == c.suite) rec.fail(c.name, metric_error);
      return rec.take();
    }
    if (suite == "static") return run_static(config, *inputs);
    if (suite == "mass") return run_mass(config, *inputs);
    if (suite == "surface") return run_surface(config, *inputs);
    return run_flow(config, *inputs);
  };

  // Suites in canonical order so that reports do not depend on listing order.
  std::vector<std::string> order;
  for (const auto& s : suite_names())
    if (std::find(config.suites.begin(), config.suites.end(), s) != config.suites.end()) order.push_back(s);
  std::vector<std::vector<CheckRecord>> results(order.size());
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(order.size())));
  for (std::size_t lo = 0; lo < order.size(); lo += jobs) {
    std::vector<std::future<std::vector<CheckRecord>>> fs;
    for (std::size_t i = lo; i < std::min(order.size(), lo + jobs); ++i)
      fs.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_one, order[i]));
    for (std::size_t i = 0; i < fs.size(); ++i) results[lo + i] = fs[i].get();
  }

  report.records = std::move(head);
  for (auto& r : results) report.records.insert(report.records.end(), r.begin(), r.end());
  report.pass = std::all_of(report.records.begin(), report.records.end(), [](const CheckRecord& r) { return r.pass; });
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  note(std::string("suite finished: ") + (report.pass ? "pass" : "FAIL"));
  return report;
}

int report_exit_code(const SuiteReport& report) { return report.pass ? 0 : 1; }

std::string report_json(const SuiteReport& report, bool include_timestamp) {
  json j;
  j["schema"] = "staticgeo-report";
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = json::parse(suite_config_json(report.config));
  j["seed"] = report.seed;
  j["pass"] = report.pass;
  int failed = 0;
  json records = json::array();
  for (const auto& r : report.records) {
    failed += r.pass ? 0 : 1;
    json jr = {{"suite", r.suite},
               {"name", r.name},
               {"paper_anchor", r.paper_anchor},
               {"value", finite_or_null(r.value)},
               {"target", finite_or_null(r.target)},
               {"error", finite_or_null(r.error)},
               {"tolerance", r.tolerance},
               {"pass", r.pass}};
    if (!r.message.empty()) jr["message"] = r.message;
    records.push_back(jr);
  }
  j["summary"] = {{"records", report.records.size()}, {"failed", failed}};
  j["records"] = records;
  j["environment"] = report.environment;
  if (include_timestamp) j["timestamp"] = {{"started", report.started}, {"wall_time_s", report.wall_time}};
  return j.dump(2) + "\n";
}

std::string render_tables(const SuiteReport& report, const std::string& format) {
  std::ostringstream os;
  if (format == "json") return report_json(report);
  if (format == "csv") {
    os << "suite,name,value,error,tolerance,pass,paper_anchor\n";
    for (const auto& r : report.records)
      os << csv_field(r.suite) << ',' << csv_field(r.name) << ',' << full_precision(r.value) << ','
         << full_precision(r.error) << ',' << full_precision(r.tolerance) << ',' << (r.pass ? "true" : "false") << ','
         << csv_field(r.paper_anchor) << '\n';
    return os.str();
  }
  if (format == "markdown") {
    os << "| suite | name | value | error | tolerance | pass | paper_anchor |\n";
    os << "|---|---|---|---|---|---|---|\n";
    for (const auto& r : report.records)
      os << "| " << md_cell(r.suite) << " | " << md_cell(r.name) << " | " << full_precision(r.value) << " | "
         << full_precision(r.error) << " | " << full_precision(r.tolerance) << " | " << (r.pass ? "PASS" : "FAIL")
         << " | " << md_cell(r.paper_anchor) << " |\n";
    return os.str();
  }
  throw Error(ErrorKind::InvalidArgument, "unknown table format '" + format + "' (expected json, csv or markdown)");
}

std::vector<std::filesystem::path> write_report_files(const SuiteReport& report) {
  std::vector<std::filesystem::path> written;
  if (report.config.out_dir.empty()) return written;
  const std::filesystem::path dir(report.config.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& f : report.config.formats) {
    const auto path = dir / ("report." + std::string(f == "markdown" ? "md" : f));
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << render_tables(report, f);
    written.push_back(path);
  }
  return written;
}

}  // namespace staticgeo
