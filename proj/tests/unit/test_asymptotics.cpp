#include <doctest.h>

#include <cmath>
#include <random>

#include "staticgeo/asymptotics.hpp"
#include "staticgeo/error.hpp"

using namespace staticgeo;

namespace {

OdeSystem free_motion() {
  return make_ode_system("free", 1, [](double) { return Mat::Zero(1, 1).eval(); },
                         [](double) { return Mat::Zero(1, 1).eval(); }, 0.0, 1.0);
}

OdeSystem scalar_b() {
  return make_ode_system("b=2t^-3", 1, [](double) { return Mat::Zero(1, 1).eval(); },
                         [](double t) { return Mat::Constant(1, 1, 2.0 * std::pow(t, -3.0)); }, 2.0, 1.0);
}

Vec v1(double x) { return Vec::Constant(1, x); }

}  // namespace

TEST_CASE("ode systems: declared bounds are verified") {
  CHECK_NOTHROW(scalar_b());
  CHECK_THROWS_AS(make_ode_system("bad", 1, [](double) { return Mat::Constant(1, 1, 1.0); },
                                  [](double) { return Mat::Zero(1, 1).eval(); }, 1.0, 1.0),
                  Error);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) CHECK_NOTHROW(validate_ode_system(random_ode_system(rng)));
}

TEST_CASE("ode_integrate: free motion is exact") {
  const Trajectory traj = ode_integrate(free_motion(), v1(0.0), v1(1.0), 50.0);
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const double t = traj.t[i];
    CHECK(std::abs(traj.z[i][0] - (t - 1.0)) < 1e-12 * t);
    CHECK(std::abs(traj.h[i] - (t * t + (t - 1) * (t - 1))) < 1e-10 * t * t);
  }
  CHECK(traj.t.back() == 50.0);
  const Trajectory still = ode_integrate(free_motion(), v1(1.0), v1(0.0), 10.0);
  for (std::size_t i = 0; i < still.t.size(); ++i) CHECK(std::abs(still.z[i][0] - 1.0) < 1e-14);
  const EnvelopeReport rep = growth_envelope_check(still, 0.0);
  CHECK(rep.pass);
  CHECK(std::abs(rep.c2_observed - 1.0) < 1e-14);
  CHECK(rep.c2_bound >= 1.0);
  CHECK_THROWS_AS(ode_integrate(free_motion(), v1(1.0), v1(0.0), 1.0), Error);
  const Trajectory zero = ode_integrate(free_motion(), v1(0.0), v1(0.0), 10.0);
  CHECK(zero.trivial);
}

TEST_CASE("ode_integrate: step-halving agreement for B = 2 t^-3") {
  const Trajectory traj = ode_integrate(scalar_b(), v1(1.0), v1(0.0), 100.0);
  CHECK(traj.t.back() == 100.0);
  CHECK(traj.halving_relative <= 1e-8);
  CHECK(traj.halving_difference <= 1e-8 * std::abs(traj.z.back()[0]));
  for (std::size_t i = 1; i < traj.t.size(); ++i) CHECK(traj.t[i] > traj.t[i - 1]);
  for (double h : traj.h) CHECK(h > 0.0);
}

TEST_CASE("growth_envelope_check: examples") {
  const Trajectory free = ode_integrate(free_motion(), v1(0.0), v1(1.0), 100.0);
  const EnvelopeReport f = growth_envelope_check(free, 0.0);
  CHECK(f.a == 1.5);
  CHECK(f.pass);
  CHECK(f.upper_margin > 0.0);

  const Trajectory traj = ode_integrate(scalar_b(), v1(1.0), v1(0.0), 100.0);
  const EnvelopeReport r = growth_envelope_check(traj, 2.0);
  CHECK(r.pass);
  CHECK(r.c2_observed <= r.c2_bound);
  CHECK(std::isfinite(r.c2_bound));
  CHECK_THROWS_AS(growth_envelope_check(traj, 1.0), Error);

  // Artificially zeroed tail: h(t) = t^-10 breaks the lower envelope.
  Trajectory fake = free;
  fake.h.clear();
  for (std::size_t i = 0; i < fake.t.size(); ++i) {
    const double t = fake.t[i];
    fake.h.push_back(std::pow(t, -10.0));
    fake.z[i] = v1(std::pow(t, -5.0));
    fake.dz[i] = v1(0.0);
  }
  const EnvelopeReport bad = growth_envelope_check(fake, 0.0);
  CHECK_FALSE(bad.lower_ok);
  CHECK(bad.lower_violations > 0);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("growth_constant_bound: free motion is tight") {
  // Z = t - 1: (|Z| + t|Z'|)/t -> 2 and the bootstrap gives |Z1| + 2|Z1'| = 2.
  CHECK(std::abs(growth_constant_bound(0.0, 1.0, 0.0, 1.0) - 2.0) < 1e-14);
  CHECK(growth_constant_bound(2.0, 0.3, 1.0, 1.0) > 2.0);
}

TEST_CASE("run_ode_trials: random systems are deterministic and pass") {
  const OdeTrialSummary a = run_ode_trials(40, 123, 4, 100.0);
  const OdeTrialSummary b = run_ode_trials(40, 123, 1, 100.0);
  CHECK(a.failures == 0);
  CHECK(a.worst_upper_margin == b.worst_upper_margin);
  CHECK(a.max_c2_observed == b.max_c2_observed);
  CHECK(a.max_c2_observed <= a.max_c2_bound);
}

TEST_CASE("fit_expansion: linear, constant and zero cases") {
  const std::vector<double> radii = {8, 16, 32, 64};
  const ExpansionFit lin = fit_expansion(coordinate_field(3, 2), radii);
  CHECK(lin.expansion_case == ExpansionCase::Linear);
  CHECK((lin.a - Vec(Eigen::Vector3d(0, 0, 1))).norm() < 1e-13);
  for (double r : lin.residuals) CHECK(r < 1e-12);

  const MetricSpec iso = builtin_metric("schwarzschild_isotropic", {{"m", 1}});
  const ExpansionFit sch = fit_expansion(*iso.exact_potential, radii);
  CHECK(sch.expansion_case == ExpansionCase::Constant);
  CHECK(std::abs(sch.a0 - 1.0) <= 1e-3);
  CHECK(std::abs(sch.b + 1.0) <= 1e-2);
  // Residuals decay with radius.
  for (std::size_t i = 1; i < sch.residuals.size(); ++i) CHECK(sch.residuals[i] <= sch.residuals[i - 1] + 1e-15);

  const ExpansionFit zero = fit_expansion(constant_field(3, 0.0), radii);
  CHECK(zero.expansion_case == ExpansionCase::Zero);

  // Scale equivariance.
  const ExpansionFit scaled = fit_expansion(iso.exact_potential->scaled(-3.0), radii);
  CHECK(scaled.expansion_case == ExpansionCase::Constant);
  CHECK(std::abs(scaled.a0 + 3.0 * sch.a0) < 1e-12);
  CHECK(std::abs(scaled.b + 3.0 * sch.b) < 1e-10);
  const ExpansionFit lin2 = fit_expansion(coordinate_field(3, 2).scaled(2.0), radii);
  CHECK((lin2.a - 2.0 * lin.a).norm() < 1e-12);

  CHECK_THROWS_AS(fit_expansion(coordinate_field(3, 2), {8, 16, 32}), Error);
  // Mixed growth: x3 r^-1/2 grows by 2^(1/2) per doubling, between the thresholds.
  const ScalarFieldSpec mixed = ScalarFieldSpec::closed_form("mixed", 3, [](std::span<const Jet> x) {
    return x[2] * pow(x[0] * x[0] + x[1] * x[1] + x[2] * x[2], -0.25);
  });
  CHECK_THROWS_AS(fit_expansion(mixed, radii), Error);
}

TEST_CASE("mass_from_potential") {
  ExpansionFit fit;
  fit.expansion_case = ExpansionCase::Constant;
  fit.a0 = 1.0;
  fit.b = -1.0;
  CHECK(mass_from_potential(fit).value == 1.0);
  fit.a0 = 2.0;
  fit.b = -3.0;
  CHECK(mass_from_potential(fit).value == 1.5);
  fit.expansion_case = ExpansionCase::Linear;
  try {
    mass_from_potential(fit);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "unbounded potential; no mass readout");
  }
}

TEST_CASE("extrapolate_in_radius: exact on polynomial sequences") {
  const std::vector<double> radii = {8, 16, 32, 64};
  std::vector<double> values;
  for (double r : radii) values.push_back(2.0 + 3.0 / r - 1.0 / (r * r) + 0.5 / (r * r * r));
  const MassEstimate est = extrapolate_in_radius(radii, values, 1.0);
  CHECK(std::abs(est.value - 2.0) < 1e-12);
  CHECK(est.error_estimate >= 0.0);
}

TEST_CASE("adm_mass_flux: catalog values") {
  const std::vector<double> radii = {8, 16, 32, 64};
  CHECK(adm_mass_flux(builtin_metric("euclidean"), radii).value == 0.0);
  const MassEstimate iso = adm_mass_flux(builtin_metric("schwarzschild_isotropic", {{"m", 1}}), radii);
  CHECK(std::abs(iso.value - 1.0) <= 1e-3);
  CHECK(iso.error_estimate >= 0.0);
  const MassEstimate cf = adm_mass_flux(builtin_metric("conformally_flat", {{"c", 0.35}}), radii);
  CHECK(std::abs(cf.value - 0.70) <= 1e-3);
  // Linearity in m.
  std::vector<double> masses;
  for (double m : {0.5, 1.0, 2.0}) masses.push_back(adm_mass_flux(builtin_metric("schwarzschild_isotropic", {{"m", m}}), radii).value);
  CHECK(std::abs(masses[0] - 0.5) < 1e-3);
  CHECK(std::abs(masses[2] - 2.0) < 1e-3);
  CHECK(std::abs(masses[2] - 2 * masses[1]) < 1e-3);
  // The standard chart gives the same mass.
  CHECK(std::abs(adm_mass_flux(builtin_metric("schwarzschild_standard", {{"m", 1}}), radii).value - 1.0) <= 1e-3);
  // Parallel evaluation is identical.
  MassOptions opts;
  opts.jobs = 4;
  CHECK(adm_mass_flux(builtin_metric("schwarzschild_isotropic", {{"m", 1}}), radii, opts).value == iso.value);
}

TEST_CASE("ricci_flux_mass and the three-route agreement") {
  const std::vector<double> radii = {8, 16, 32, 64};
  CHECK(std::abs(ricci_flux_mass(builtin_metric("euclidean"), constant_field(3, 1.0), radii).value) == 0.0);
  const MetricSpec iso = builtin_metric("schwarzschild_isotropic", {{"m", 1}});
  const MassEstimate ricci = ricci_flux_mass(iso, *iso.exact_potential, radii);
  CHECK(std::abs(ricci.value - 1.0) <= 1e-2);
  const ExpansionFit fit = fit_expansion(*iso.exact_potential, radii);
  const MassEstimate pot = mass_from_potential(fit);
  const MassEstimate flux = adm_mass_flux(iso, radii);
  CHECK(std::abs(ricci.value / fit.a0 - pot.value) <= 1e-2);
  CHECK(std::abs(flux.value - pot.value) <= 1e-2);
  // A non-static potential is rejected.
  CHECK_THROWS_AS(ricci_flux_mass(iso, coordinate_field(3, 0), radii), Error);
  // Non-scalar-flat metric is rejected.
  CHECK_THROWS_AS(ricci_flux_mass(builtin_metric("conformally_flat", {{"exp_amp", 1.0}}), constant_field(3, 1.0), {1.5, 2.0}), Error);
}
