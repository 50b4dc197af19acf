#pragma once

// The linear ODE growth lemma Z'' = A(t) Z' + B(t) Z with its envelopes,
// expansions of potentials at infinity, and ADM mass by three routes.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/field.hpp"

namespace staticgeo {

struct OdeSystem {
  std::string name;
  int k = 1;
  std::function<Mat(double)> a;  // k x k, continuous on [1, inf)
  std::function<Mat(double)> b;
  double c1 = 0.0;  // |A(t)| + t |B(t)| <= c1 t^(-1-q)
  double q = 1.0;
};

// Checks the declared bound at log-spaced samples on [1, t_max] (operator 2-norms).
// Throws InvalidArgument on a violation.
void validate_ode_system(const OdeSystem& sys, double t_max = 1e3, int samples = 400);

// Builds and validates a system.
OdeSystem make_ode_system(std::string name, int k, std::function<Mat(double)> a,
                          std::function<Mat(double)> b, double c1, double q);

// A random system respecting its bound: dimension 1..max_k, c1 in [0.1, 2], q in [0.2, 2],
// oscillating matrix coefficients scaled under the envelope.
OdeSystem random_ode_system(std::mt19937_64& rng, int max_k = 4);

struct OdeOptions {
  double atol = 1e-10;
  double rtol = 1e-10;
  double initial_step = 1e-3;
  int max_steps = 2000000;
  bool verify_halving = true;
};

struct Trajectory {
  int k = 1;
  double c1 = 0.0;
  double q = 1.0;
  std::vector<double> t;
  std::vector<Vec> z;
  std::vector<Vec> dz;
  std::vector<double> h;  // t^2 |Z'|^2 + |Z|^2
  int order = 5;
  int accepted_steps = 0;
  int rejected_steps = 0;
  double max_error_estimate = 0.0;  // largest accepted local error (scaled norm)
  double halving_difference = 0.0;  // max |state(t_end) - state with every step halved|
  double halving_relative = 0.0;    // same, componentwise relative to max(1, |state|)
  bool trivial = false;             // zero initial data: Z == 0
};

// Dormand-Prince 5(4) with adaptive steps; records every accepted step.
Trajectory ode_integrate(const OdeSystem& sys, const Vec& z1, const Vec& dz1, double t_end,
                         const OdeOptions& options = {});

struct EnvelopeReport {
  double a = 0.0;               // 2a = 3 (1 + c1)
  bool upper_ok = true;
  bool lower_ok = true;
  int upper_violations = 0;
  int lower_violations = 0;
  double upper_margin = 0.0;    // min over t of log(h(1) t^(2a) / h(t))
  double lower_margin = 0.0;    // min over t of log(h(t) / (h(1) t^(-2a)))
  double c2_observed = 0.0;     // max over t of (|Z| + t|Z'|) / t
  double c2_bound = 0.0;        // from the bootstrap, depends on c1, q, Z(1), Z'(1)
  bool linear_growth_ok = true;
  bool pass = true;
};

// The C2 constant produced by bootstrapping the envelope through the ODE.
double growth_constant_bound(double c1, double q, double z1_norm, double dz1_norm);

EnvelopeReport growth_envelope_check(const Trajectory& traj, double c1);

struct OdeTrialSummary {
  int trials = 0;
  int failures = 0;
  std::uint64_t seed = 0;
  double worst_upper_margin = 0.0;
  double worst_lower_margin = 0.0;
  double max_c2_observed = 0.0;
  double max_c2_bound = 0.0;
  double max_halving_relative = 0.0;
};

// Independent random trials (trial i uses seed + i), evaluated with up to `jobs` threads.
OdeTrialSummary run_ode_trials(int trials, std::uint64_t seed, int jobs = 1, double t_end = 100.0);

enum class ExpansionCase { Zero = 1, Linear = 2, Constant = 3 };

struct ExpansionFit {
  ExpansionCase expansion_case = ExpansionCase::Zero;
  int dim = 3;
  std::vector<double> radii;
  std::vector<double> means;          // sphere averages of V
  std::vector<Vec> linear_modes;      // L2 projections on x^i
  std::vector<double> residuals;      // RMS deviation of V from the leading-order model on each sphere
  Vec a;                              // case 2 linear coefficients
  double a0 = 0.0;                    // constant term (case 3)
  double b = 0.0;                     // coefficient of |x|^(2-n) (case 3)
  double a0_error = 0.0;
  double b_error = 0.0;
  double growth_ratio = 0.0;          // linear-mode growth between the two largest radii
};

ExpansionFit fit_expansion(const ScalarFieldSpec& v, const std::vector<double>& radii, int resolution = 12);

enum class MassMethod { CoordinateFlux, RicciFlux, PotentialExpansion };
const char* to_string(MassMethod method);

struct MassEstimate {
  MassMethod method = MassMethod::CoordinateFlux;
  double value = 0.0;
  double error_estimate = 0.0;
  std::vector<double> radii;
  std::vector<double> per_radius;
  std::vector<double> extrapolants;  // diagonal extrapolants E_0, E_1, ...
  double decay_exponent = 0.0;
};

struct MassOptions {
  int resolution = 12;
  bool require_decay = true;   // run decay_report first
  double static_tolerance = 1e-6;
  double scalar_flat_tolerance = 1e-6;
  int jobs = 1;
};

// Richardson extrapolation of values at radii with error model sum_j c_j r^-(q + j).
MassEstimate extrapolate_in_radius(const std::vector<double>& radii, const std::vector<double>& values, double q);

MassEstimate adm_mass_flux(const MetricSpec& spec, const std::vector<double>& radii, const MassOptions& options = {});
// Returns an estimate of a0 * m.
MassEstimate ricci_flux_mass(const MetricSpec& spec, const ScalarFieldSpec& v, const std::vector<double>& radii,
                             const MassOptions& options = {});
MassEstimate mass_from_potential(const ExpansionFit& fit);

}  // namespace staticgeo
