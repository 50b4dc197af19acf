// Acceptance run: one PASS/FAIL line per criterion, each with its measured
// values and wall time. Exit status is 0 only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "staticgeo/asymptotics.hpp"
#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/conformal_flow.hpp"
#include "staticgeo/hypersurface.hpp"
#include "staticgeo/plateau.hpp"
#include "staticgeo/static_potential.hpp"
#include "staticgeo/suite.hpp"

using namespace staticgeo;

namespace {

constexpr double kJ01Squared = 5.783185962946784;  // first zero of J_0, squared

Vec v3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records "label=value" and folds the comparison into the verdict.
  void expect(const std::string& label, double value, bool ok) {
    detail << ' ' << label << '=' << value << (ok ? "" : "(!)");
    pass = pass && ok;
  }
  void note(const std::string& text) { detail << ' ' << text; }
};

// Random points with |x| uniform in (lo, hi) and isotropic directions.
std::vector<Point> shell_samples(std::uint64_t seed, int count, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> rad(lo, hi);
  std::vector<Point> out;
  while (static_cast<int>(out.size()) < count) {
    const Vec d = v3(gauss(rng), gauss(rng), gauss(rng));
    if (d.norm() < 1e-6) continue;
    Point p;
    p.coords = rad(rng) * d.normalized();
    out.push_back(p);
  }
  return out;
}

void criterion_1(Outcome& o) {
  const double m = 1.0;
  const MetricSpec spec = builtin_metric("schwarzschild_standard", {{"m", m}});
  const auto samples = shell_samples(101, 100, 2.5, 50.0);
  const ScalarFieldSpec one = constant_field(3, 1.0);
  double worst = 0.0, worst_const = 0.0;
  for (const Point& p : samples) {
    worst = std::max(worst, static_residual(spec, *spec.exact_potential, p).norm);
    const double r = p.coords.norm();
    worst_const = std::max(worst_const, std::abs(static_residual(spec, one, p).norm - std::sqrt(6.0) * m / (r * r * r)));
  }
  o.expect("max_residual", worst, worst <= 1e-8);
  o.expect("max_dev_V1_from_sqrt6m/r3", worst_const, worst_const <= 1e-6);
}

void criterion_2(Outcome& o) {
  const MetricSpec standard = builtin_metric("schwarzschild_standard", {{"m", 1.0}});
  const auto samples = shell_samples(202, 100, 2.5, 50.0);
  const double dev = scalar_constancy_check(standard, samples).max_deviation;
  o.expect("scalar_constancy", dev, dev <= 1e-8);
  for (double m : {1.0, 2.0}) {
    const MetricSpec iso = builtin_metric("schwarzschild_isotropic", {{"m", m}});
    const ScalarFieldSpec& v = *iso.exact_potential;
    const auto quad = sphere_quadrature(1.0, 8);
    const auto pts = radial_zero_set(v, quad.nodes, 0.25 * m, 0.75 * m);
    double rho_err = 0.0;
    for (const Point& p : pts) rho_err = std::max(rho_err, std::abs(p.coords.norm() - 0.5 * m));
    const double a = level_set_geometry_check(iso, v, pts).sup_norm_a;
    std::ostringstream label;
    label << "horizon_sup|A|(m=" << m << ")";
    o.expect(label.str(), a, a <= 1e-8 && rho_err <= 1e-10);
  }
}

void criterion_3(Outcome& o) {
  const OdeTrialSummary s = run_ode_trials(1000, 20240611, 4, 100.0);
  o.expect("trials", s.trials, s.trials == 1000);
  o.expect("violations", s.failures, s.failures == 0);
  o.expect("max_C2_bound", s.max_c2_bound, std::isfinite(s.max_c2_bound) && s.max_c2_observed <= s.max_c2_bound);
  o.expect("worst_upper_margin", s.worst_upper_margin, s.worst_upper_margin >= 0.0);
  o.expect("worst_lower_margin", s.worst_lower_margin, s.worst_lower_margin >= 0.0);
}

void criterion_4(Outcome& o) {
  const std::vector<double> radii = {8, 16, 32, 64};
  for (double m : {0.5, 1.0, 2.0}) {
    const MetricSpec spec = builtin_metric("schwarzschild_isotropic", {{"m", m}});
    const ScalarFieldSpec& v = *spec.exact_potential;
    const double flux = adm_mass_flux(spec, radii).value;
    const ExpansionFit fit = fit_expansion(v, radii);
    const double ricci = ricci_flux_mass(spec, v, radii).value / fit.a0;
    const double pot = mass_from_potential(fit).value;
    const double spread = std::max({std::abs(flux - ricci), std::abs(flux - pot), std::abs(ricci - pot)});
    std::ostringstream tag;
    tag << "(m=" << m << ")";
    o.expect("flux" + tag.str(), flux, std::abs(flux - m) <= 1e-3);
    o.expect("ricci" + tag.str(), ricci, true);
    o.expect("potential" + tag.str(), pot, true);
    o.expect("max_pairwise" + tag.str(), spread, spread <= 1e-2);
  }
}

void criterion_5(Outcome& o) {
  const std::vector<double> radii = {8, 16, 32, 64};
  const ExpansionFit lin = fit_expansion(coordinate_field(3, 2), radii);
  const double a_err = (lin.a - v3(0, 0, 1)).cwiseAbs().maxCoeff();
  o.expect("x3_case", static_cast<int>(lin.expansion_case), lin.expansion_case == ExpansionCase::Linear);
  o.expect("x3_|a-e3|", a_err, a_err <= 1e-8);
  const double m = 1.0;
  const MetricSpec spec = builtin_metric("schwarzschild_isotropic", {{"m", m}});
  const ExpansionFit sch = fit_expansion(*spec.exact_potential, radii);
  o.expect("schwarzschild_case", static_cast<int>(sch.expansion_case), sch.expansion_case == ExpansionCase::Constant);
  o.expect("|a0-1|", std::abs(sch.a0 - 1.0), std::abs(sch.a0 - 1.0) <= 1e-3);
  o.expect("|b+m|", std::abs(sch.b + m), std::abs(sch.b + m) <= 1e-2);
}

SurfacePatch equatorial_annulus(double a, double b) {
  return annulus_patch(
      "equator", [](double r, double ph) { return v3(r * std::cos(ph), r * std::sin(ph), 0.0); }, a, b, 24, 24);
}

void criterion_6(Outcome& o) {
  const MetricSpec standard = builtin_metric("schwarzschild_standard", {{"m", 1.0}});
  const double jac = jacobi_residual(standard, equatorial_annulus(2.5, 6.0), *standard.exact_potential);
  o.expect("jacobi_standard", jac, jac <= 1e-6);
  const MetricSpec iso1 = builtin_metric("schwarzschild_isotropic", {{"m", 1.0}});
  const double jac_iso = jacobi_residual(iso1, equatorial_annulus(1.0, 4.0), *iso1.exact_potential);
  o.expect("jacobi_isotropic", jac_iso, jac_iso <= 1e-6);
  for (double m : {1.0, 2.0}) {
    const MetricSpec iso = builtin_metric("schwarzschild_isotropic", {{"m", m}});
    const double lam = stability_min_eig(iso, coordinate_sphere(0.5 * m)).min_eigenvalue;
    std::ostringstream label;
    label << "horizon_lambda1(m=" << m << ",target=" << 1.0 / (4 * m * m) << ")";
    o.expect(label.str(), lam, std::abs(lam - 1.0 / (4 * m * m)) <= 1e-3);
  }
}

void criterion_7(Outcome& o) {
  double worst_bdry = 0.0, worst_gauss = 0.0;
  for (const char* name : {"schwarzschild_standard", "schwarzschild_isotropic"}) {
    const MetricSpec spec = builtin_metric(name, {{"m", 1.0}});
    for (double r : {3.0, 5.0, 10.0}) {
      const SurfacePatch s = coordinate_sphere(r);
      worst_bdry = std::max(worst_bdry, boundary_static_identity(spec, s, *spec.exact_potential));
      worst_gauss = std::max(worst_gauss, SurfaceGeometry(spec, s).sup_gauss_residual());
    }
    const bool standard = std::string(name) == "schwarzschild_standard";
    const SurfacePatch ann = standard ? equatorial_annulus(2.5, 6.0) : equatorial_annulus(1.0, 4.0);
    worst_gauss = std::max(worst_gauss, SurfaceGeometry(spec, ann).sup_gauss_residual());
  }
  o.expect("boundary_identity", worst_bdry, worst_bdry <= 1e-6);
  o.expect("traced_gauss", worst_gauss, worst_gauss <= 1e-6);
}

void criterion_8(Outcome& o) {
  const MetricSpec sch = builtin_metric("schwarzschild_standard", {{"m", 1.0}});
  const FlowState f1 = conformal_normal_flow(sch, *sch.exact_potential, coordinate_sphere(3.0, 8, 16), 1.0, 200);
  const double mono1 = monotonicity_residual(f1).residual, area1 = area_variation_check(f1);
  o.expect("schwarzschild_monotonicity", mono1, mono1 <= 1e-6);
  o.expect("schwarzschild_area_variation", area1, area1 <= 1e-5);
  const MetricSpec flat = builtin_metric("euclidean");
  const FlowState f2 = conformal_normal_flow(flat, constant_field(3, 1.0), coordinate_sphere(1.0, 8, 16), 1.0, 200);
  const double mono2 = monotonicity_residual(f2).residual, area2 = area_variation_check(f2);
  o.expect("euclidean_monotonicity", mono2, mono2 <= 1e-10);
  o.expect("euclidean_area_variation", area2, area2 <= 1e-5);
}

void criterion_9(Outcome& o) {
  const MetricSpec flat = builtin_metric("euclidean");
  const SequenceReport seq = radius_sequence_experiment(flat, coordinate_field(3, 2), {4, 8, 16}, 2.0);
  double sup_u = 0.0, drift = 0.0;
  bool intersect = true;
  for (const auto& r : seq.radii) {
    sup_u = std::max(sup_u, r.sup_abs_height);
    drift = std::max(drift, r.drift);
    intersect = intersect && r.intersects_inner_ball;
  }
  o.expect("sup|u|", sup_u, sup_u <= 1e-8);
  o.expect("all_intersect_B2", intersect ? 1 : 0, intersect && seq.all_intersect);
  o.expect("max_drift", drift, drift <= 1e-8);

  const double eps = 0.01;
  auto prob = circle_problem(flat, 1.0, [eps](double phi) { return eps * std::sin(2 * phi); });
  prob.tolerance = 1e-11;
  const auto sol = solve_minimal_graph(prob);
  double harm = 0.0;
  for (int p = 0; p < sol.grid->size(); ++p) {
    const double r = sol.grid->u(p);
    harm = std::max(harm, std::abs(sol.heights[p] - eps * r * r * std::sin(2 * sol.grid->v(p))));
  }
  o.expect("harmonic_extension_dev", harm, harm <= 1e-5);

  const auto disk = solve_minimal_graph(circle_problem(flat, 1.0, [](double) { return 0.0; }));
  const double lam = stability_min_eig(flat, disk.patch).min_eigenvalue;
  o.expect("disk_lambda1", lam, std::abs(lam - kJ01Squared) <= 1e-2);
}

void criterion_10(Outcome& o) {
  SuiteConfig c = load_suite_config(STATICGEO_SOURCE_DIR "/configs/full.yaml");
  c.out_dir.clear();
  const SuiteReport a = run_suite(c);
  const SuiteReport b = run_suite(c);
  const std::string ja = report_json(a, false), jb = report_json(b, false);
  // The full reports differ at most in the timestamp object.
  auto strip = [](const SuiteReport& r) {
    auto j = nlohmann::json::parse(report_json(r));
    j.erase("timestamp");
    return j.dump();
  };
  const bool same = ja == jb && strip(a) == strip(b) && render_tables(a, "csv") == render_tables(b, "csv") &&
                    render_tables(a, "markdown") == render_tables(b, "markdown");
  o.expect("records", static_cast<double>(a.records.size()), !a.records.empty());
  o.expect("report_bytes", static_cast<double>(ja.size()), true);
  o.expect("byte_identical", same ? 1 : 0, same);
  o.note(a.pass ? "(suite passed)" : "(suite had failing records)");
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "static residual on Schwarzschild", 5, criterion_1},
      {2, "scalar constancy and totally geodesic horizon", 10, criterion_2},
      {3, "ODE growth envelope over 1000 systems", 60, criterion_3},
      {4, "three ADM mass routes agree", 30, criterion_4},
      {5, "potential expansion classification", 10, criterion_5},
      {6, "Jacobi identity and horizon stability", 30, criterion_6},
      {7, "boundary identity and traced Gauss", 10, criterion_7},
      {8, "conformal flow monotonicity and area variation", 60, criterion_8},
      {9, "Plateau sequence and solver oracles", 120, criterion_9},
      {10, "same-seed reports are byte-identical", 120, criterion_10},
  };
  std::cout.precision(6);
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    o.detail.precision(6);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    char timing[64];
    std::snprintf(timing, sizeof timing, " time=%.2fs/%gs%s", secs, c.budget_s, in_time ? "" : "(!)");
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " |" << o.detail.str()
              << timing << std::endl;
  }
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
