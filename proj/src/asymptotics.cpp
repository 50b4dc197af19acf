#include "staticgeo/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "staticgeo/curvature.hpp"
#include "staticgeo/static_potential.hpp"
#include "staticgeo/error.hpp"

namespace staticgeo {

namespace {

double operator_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()[0];
}

}  // namespace

void validate_ode_system(const OdeSystem& sys, double t_max, int samples) {
  if (sys.k < 1) throw Error(ErrorKind::InvalidArgument, "ODE dimension must be at least 1");
  if (!(sys.c1 >= 0.0) || !(sys.q > 0.0))
    throw Error(ErrorKind::InvalidArgument, "ODE decay constants need c1 >= 0 and q > 0");
  if (!sys.a || !sys.b) throw Error(ErrorKind::InvalidArgument, "ODE coefficients missing");
  for (int i = 0; i < samples; ++i) {
    const double t = std::pow(t_max, static_cast<double>(i) / (samples - 1));
    const Mat a = sys.a(t), b = sys.b(t);
    if (a.rows() != sys.k || a.cols() != sys.k || b.rows() != sys.k || b.cols() != sys.k)
      throw Error(ErrorKind::InvalidArgument, "ODE coefficient has the wrong shape");
    const double lhs = operator_norm(a) + t * operator_norm(b);
    const double rhs = sys.c1 * std::pow(t, -1.0 - sys.q);
    if (lhs > rhs * (1.0 + 1e-12) + 1e-300) {
      std::ostringstream os;
      os << "declared bound violated at t = " << t << ": |A| + t|B| = " << lhs << " > " << rhs;
      throw Error(ErrorKind::InvalidArgument, os.str());
    }
  }
}

OdeSystem make_ode_system(std::string name, int k, std::function<Mat(double)> a, std::function<Mat(double)> b,
                          double c1, double q) {
  OdeSystem sys{std::move(name), k, std::move(a), std::move(b), c1, q};
  validate_ode_system(sys);
  return sys;
}

OdeSystem random_ode_system(std::mt19937_64& rng, int max_k) {
  std::uniform_int_distribution<int> dim(1, max_k);
  std::uniform_real_distribution<double> c1_dist(0.1, 2.0), q_dist(0.2, 2.0), freq(0.1, 3.0);
  std::normal_distribution<double> gauss;
  const int k = dim(rng);
  const double c1 = c1_dist(rng), q = q_dist(rng);
  auto random_matrix = [&] {
    Mat m(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) m(i, j) = gauss(rng);
    return m;
  };
  const Mat ma = random_matrix(), na = random_matrix(), mb = random_matrix(), nb = random_matrix();
  const double wa = freq(rng), wb = freq(rng);
  const double sa = 1.0 / (operator_norm(ma) + operator_norm(na));
  const double sb = 1.0 / (operator_norm(mb) + operator_norm(nb));
  OdeSystem sys;
  sys.name = "random";
  sys.k = k;
  sys.c1 = c1;
  sys.q = q;
  // Each coefficient uses half of the budget: |A| <= c1/2 t^(-1-q), t|B| <= c1/2 t^(-1-q).
  sys.a = [=](double t) {
    return Mat(0.5 * c1 * std::pow(t, -1.0 - q) * sa * (ma * std::cos(wa * t) + na * std::sin(wa * t)));
  };
  sys.b = [=](double t) {
    return Mat(0.5 * c1 * std::pow(t, -2.0 - q) * sb * (mb * std::cos(wb * t) + nb * std::sin(wb * t)));
  };
  return sys;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {0, 0, 0, 0, 0, 0},
    {1.0 / 5, 0, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
    {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kB5[7] = {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0};
constexpr double kB4[7] = {5179.0 / 57600, 0, 7571.0 / 16695, 393.0 / 640, -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

Vec rhs(const OdeSystem& sys, double t, const Vec& y) {
  const int k = sys.k;
  Vec out(2 * k);
  out.head(k) = y.tail(k);
  out.tail(k) = sys.a(t) * y.tail(k) + sys.b(t) * y.head(k);
  return out;
}

// One DP step; returns the fifth-order solution and the embedded error vector.
Vec dp_step(const OdeSystem& sys, double t, const Vec& y, double h, Vec* error) {
  Vec k[7];
  for (int s = 0; s < 7; ++s) {
    Vec ys = y;
    for (int j = 0; j < s; ++j)
      if (kA[s][j] != 0.0) ys += h * kA[s][j] * k[j];
    k[s] = rhs(sys, t + kC[s] * h, ys);
  }
  Vec y5 = y;
  for (int s = 0; s < 7; ++s)
    if (kB5[s] != 0.0) y5 += h * kB5[s] * k[s];
  if (error) {
    *error = Vec::Zero(y.size());
    for (int s = 0; s < 7; ++s) *error += h * (kB5[s] - kB4[s]) * k[s];
  }
  return y5;
}

double h_of(double t, const Vec& z, const Vec& dz) { return t * t * dz.squaredNorm() + z.squaredNorm(); }

}  // namespace

Trajectory ode_integrate(const OdeSystem& sys, const Vec& z1, const Vec& dz1, double t_end, const OdeOptions& options) {
  if (!(t_end > 1.0)) throw Error(ErrorKind::InvalidArgument, "t_end must exceed 1");
  if (z1.size() != sys.k || dz1.size() != sys.k)
    throw Error(ErrorKind::InvalidArgument, "initial data has the wrong dimension");
  const int k = sys.k;
  Trajectory traj;
  traj.k = k;
  traj.c1 = sys.c1;
  traj.q = sys.q;
  auto record = [&](double t, const Vec& y) {
    traj.t.push_back(t);
    traj.z.push_back(y.head(k));
    traj.dz.push_back(y.tail(k));
    traj.h.push_back(h_of(t, y.head(k), y.tail(k)));
  };
  Vec y(2 * k);
  y << z1, dz1;
  if (y.norm() == 0.0) {
    // Uniqueness: zero data gives the zero solution.
    traj.trivial = true;
    record(1.0, y);
    record(t_end, y);
    return traj;
  }

  double t = 1.0;
  double h = options.initial_step;
  std::vector<double> steps;
  record(t, y);
  while (t < t_end) {
    if (traj.accepted_steps + traj.rejected_steps > options.max_steps)
      throw Error(ErrorKind::NonConvergence, "ODE integration exceeded the step budget");
    h = std::min(h, t_end - t);
    if (h < 1e-14 * t) throw Error(ErrorKind::NonConvergence, "stiffness failure: step size underflow");
    Vec err;
    const Vec y_new = dp_step(sys, t, y, h, &err);
    double norm = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double scale = options.atol + options.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      norm += std::pow(err[i] / scale, 2);
    }
    norm = std::sqrt(norm / y.size());
    if (!std::isfinite(norm)) throw Error(ErrorKind::NonConvergence, "ODE integration produced non-finite values");
    if (norm <= 1.0) {
      t = (t_end - t - h <= 1e-15 * t_end) ? t_end : t + h;
      y = y_new;
      steps.push_back(h);
      ++traj.accepted_steps;
      traj.max_error_estimate = std::max(traj.max_error_estimate, norm);
      record(t, y);
    } else {
      ++traj.rejected_steps;
    }
    const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
    h *= factor;
  }

  if (options.verify_halving) {
    // Replay the accepted step sequence with every step split in two.
    Vec yh(2 * k);
    yh << z1, dz1;
    double th = 1.0;
    for (double s : steps) {
      yh = dp_step(sys, th, yh, 0.5 * s, nullptr);
      yh = dp_step(sys, th + 0.5 * s, yh, 0.5 * s, nullptr);
      th += s;
    }
    traj.halving_difference = (yh - y).cwiseAbs().maxCoeff();
    for (int i = 0; i < y.size(); ++i)
      traj.halving_relative =
          std::max(traj.halving_relative, std::abs(yh[i] - y[i]) / std::max(1.0, std::abs(y[i])));
  }
  return traj;
}

double growth_constant_bound(double c1, double q, double z1_norm, double dz1_norm) {
  // Start from h <= K t^(2b) with K = h(1), b = a. Since
  // |A||Z'| + |B||Z| <= (|A| + t|B|) max(|Z'|, |Z|/t) <= c1 t^(-2-q) sqrt(h),
  // integrating Z'' twice lowers the exponent by q at each pass until b = 1.
  double k = dz1_norm * dz1_norm + z1_norm * z1_norm;
  double b = 1.5 * (1.0 + c1);
  double best = std::sqrt(2.0 * k) * 1e300;
  for (int pass = 0; pass < 10000; ++pass) {
    if (b <= 1.0) return std::min(best, std::sqrt(2.0 * k));
    const double c = c1 * std::sqrt(k);
    double p = b - 2.0 - q;
    if (std::abs(p + 1.0) < 1e-3) p = -1.0 + 1e-3;
    double alpha = dz1_norm, beta = 0.0, s = 0.0;
    if (p > -1.0) {
      beta = c / (p + 1.0);
      s = p + 1.0;
    } else {
      alpha += c / (-1.0 - p);
    }
    // |Z'| <= alpha + beta t^s <= (alpha + beta) t^s and
    // |Z| <= |Z1| + alpha t + beta t^(s+1)/(s+1) <= (|Z1| + alpha + beta/(s+1)) t^(s+1).
    const double zc = z1_norm + alpha + beta / (s + 1.0);
    k = std::pow(alpha + beta, 2) + zc * zc;
    if (p < -1.0) {
      // Bounded derivative: |Z| + t|Z'| <= |Z1| + 2 alpha t directly.
      best = z1_norm + 2.0 * alpha;
      b = 1.0;
    } else {
      b = std::max(1.0, s + 1.0);
    }
  }
  throw Error(ErrorKind::NonConvergence, "growth bootstrap did not terminate");
}

EnvelopeReport growth_envelope_check(const Trajectory& traj, double c1) {
  if (std::abs(c1 - traj.c1) > 1e-12 * std::max(1.0, std::abs(c1)))
    throw Error(ErrorKind::InvalidArgument, "trajectory/system mismatch: c1 differs from the integrated system");
  if (traj.t.empty() || traj.t.front() != 1.0)
    throw Error(ErrorKind::InvalidArgument, "trajectory must start at t = 1");
  EnvelopeReport rep;
  rep.a = 1.5 * (1.0 + c1);
  const double h1 = traj.h.front();
  rep.upper_margin = std::numeric_limits<double>::infinity();
  rep.lower_margin = std::numeric_limits<double>::infinity();
  constexpr double slack = 1e-9;
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const double t = traj.t[i], h = traj.h[i];
    const double upper = h1 * std::pow(t, 2 * rep.a), lower = h1 * std::pow(t, -2 * rep.a);
    if (h > upper * (1 + slack)) {
      ++rep.upper_violations;
      rep.upper_ok = false;
    }
    if (h < lower * (1 - slack)) {
      ++rep.lower_violations;
      rep.lower_ok = false;
    }
    if (h1 > 0.0 && i > 0) {
      rep.upper_margin = std::min(rep.upper_margin, h > 0 ? std::log(upper / h) : rep.upper_margin);
      rep.lower_margin = std::min(rep.lower_margin,
                                  h > 0 ? std::log(h / lower) : -std::numeric_limits<double>::infinity());
    }
    rep.c2_observed = std::max(rep.c2_observed, (traj.z[i].norm() + t * traj.dz[i].norm()) / t);
  }
  if (h1 == 0.0 || traj.t.size() < 2) rep.upper_margin = rep.lower_margin = 0.0;
  rep.c2_bound = growth_constant_bound(c1, traj.q, traj.z.front().norm(), traj.dz.front().norm());
  rep.linear_growth_ok = std::isfinite(rep.c2_bound) && rep.c2_observed <= rep.c2_bound * (1 + slack) + 1e-300;
  rep.pass = rep.upper_ok && rep.lower_ok && rep.linear_growth_ok;
  return rep;
}

OdeTrialSummary run_ode_trials(int trials, std::uint64_t seed, int jobs, double t_end) {
  struct Outcome {
    EnvelopeReport report;
    double halving = 0.0;
  };
  auto run_one = [t_end, seed](int i) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(i));
    const OdeSystem sys = random_ode_system(rng);
    std::normal_distribution<double> gauss;
    Vec z1(sys.k), dz1(sys.k);
    for (int j = 0; j < sys.k; ++j) z1[j] = gauss(rng);
    for (int j = 0; j < sys.k; ++j) dz1[j] = gauss(rng);
    const Trajectory traj = ode_integrate(sys, z1, dz1, t_end);
    return Outcome{growth_envelope_check(traj, sys.c1), traj.halving_relative};
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(std::max(trials, 0)));
  jobs = std::max(jobs, 1);
  for (int start = 0; start < trials; start += jobs) {
    std::vector<std::future<Outcome>> futures;
    for (int i = start; i < std::min(trials, start + jobs); ++i)
      futures.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_one, i));
    for (int i = start; i < std::min(trials, start + jobs); ++i) outcomes[i] = futures[i - start].get();
  }
  OdeTrialSummary summary;
  summary.trials = trials;
  summary.seed = seed;
  summary.worst_upper_margin = std::numeric_limits<double>::infinity();
  summary.worst_lower_margin = std::numeric_limits<double>::infinity();
  for (const Outcome& o : outcomes) {
    if (!o.report.pass) ++summary.failures;
    summary.worst_upper_margin = std::min(summary.worst_upper_margin, o.report.upper_margin);
    summary.worst_lower_margin = std::min(summary.worst_lower_margin, o.report.lower_margin);
    summary.max_c2_observed = std::max(summary.max_c2_observed, o.report.c2_observed);
    summary.max_c2_bound = std::max(summary.max_c2_bound, o.report.c2_bound);
    summary.max_halving_relative = std::max(summary.max_halving_relative, o.halving);
  }
  return summary;
}

namespace {

void check_radii(const std::vector<double>& radii, std::size_t minimum) {
  if (radii.size() < minimum)
    throw Error(ErrorKind::InvalidArgument, "need at least " + std::to_string(minimum) + " radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw Error(ErrorKind::InvalidArgument, "radii must be increasing");
  }
}

// Least squares for the sphere means on {1, r^(2-n), r^(1-n), r^(-n)} (the first `terms` of them).
Vec fit_means(const std::vector<double>& radii, const std::vector<double>& means, int n, int terms) {
  Mat design(static_cast<Eigen::Index>(radii.size()), terms);
  Vec rhs(static_cast<Eigen::Index>(radii.size()));
  for (std::size_t i = 0; i < radii.size(); ++i) {
    for (int j = 0; j < terms; ++j) design(i, j) = j == 0 ? 1.0 : std::pow(radii[i], 3 - n - j);
    rhs[i] = means[i];
  }
  return design.colPivHouseholderQr().solve(rhs);
}

}  // namespace

ExpansionFit fit_expansion(const ScalarFieldSpec& v, const std::vector<double>& radii, int resolution) {
  check_radii(radii, 4);
  const int n = v.dim();
  ExpansionFit fit;
  fit.dim = n;
  fit.radii = radii;
  fit.a = Vec::Zero(n);
  std::vector<SphereQuadrature> quads;
  double scale = 0.0;
  for (double r : radii) {
    quads.push_back(sphere_quadrature(r, resolution, n));
    const SphereQuadrature& q = quads.back();
    double area = 0.0, mean = 0.0;
    Vec lin = Vec::Zero(n);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const double val = v.value(q.nodes[i]);
      area += q.weights[i];
      mean += q.weights[i] * val;
      lin += q.weights[i] * val * q.nodes[i];
      scale = std::max(scale, std::abs(val));
    }
    fit.means.push_back(mean / area);
    fit.linear_modes.push_back(lin / (area * r * r / n));  // int (x^i)^2 = area r^2 / n
  }
  const std::size_t last = radii.size() - 1;
  const double floor = 1e-12 * std::max(1.0, scale);
  const double lin_last = fit.linear_modes[last].norm() * radii[last];
  const double lin_prev = fit.linear_modes[last - 1].norm() * radii[last - 1];
  fit.growth_ratio = lin_last > floor ? lin_last / std::max(lin_prev, 1e-300) : 0.0;

  auto residual_on = [&](std::size_t r, const std::function<double(const Vec&)>& model) {
    const SphereQuadrature& q = quads[r];
    double s = 0.0, area = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      s += q.weights[i] * std::pow(v.value(q.nodes[i]) - model(q.nodes[i]), 2);
      area += q.weights[i];
    }
    return std::sqrt(s / area);
  };

  if (fit.growth_ratio > 1.5) {
    fit.expansion_case = ExpansionCase::Linear;
    fit.a = fit.linear_modes[last];
    fit.a0 = fit.means[last];
    for (std::size_t r = 0; r < radii.size(); ++r)
      fit.residuals.push_back(residual_on(r, [&](const Vec& x) { return fit.a0 + fit.a.dot(x); }));
    return fit;
  }
  if (fit.growth_ratio >= 1.2) {
    std::ostringstream os;
    os << "ambiguous expansion: linear-mode growth ratio " << fit.growth_ratio << " between 1.2 and 1.5";
    throw Error(ErrorKind::Degenerate, os.str());
  }
  double mean_scale = 0.0;
  for (double m : fit.means) mean_scale = std::max(mean_scale, std::abs(m));
  if (mean_scale <= floor) {
    fit.expansion_case = ExpansionCase::Zero;
    for (std::size_t r = 0; r < radii.size(); ++r) fit.residuals.push_back(residual_on(r, [](const Vec&) { return 0.0; }));
    return fit;
  }
  fit.expansion_case = ExpansionCase::Constant;
  // Four terms {1, r^(2-n), r^(1-n), r^(-n)}: with the third one alone the
  // omitted r^(-n) term biases b by O(m^3 / r_1^2). The truncation error is
  // estimated from the fit with one term fewer.
  const Vec fine = fit_means(radii, fit.means, n, 4);
  const Vec coarse = fit_means(radii, fit.means, n, 3);
  fit.a0 = fine[0];
  fit.b = fine[1];
  fit.a0_error = std::abs(fine[0] - coarse[0]);
  fit.b_error = std::abs(fine[1] - coarse[1]);
  for (std::size_t r = 0; r < radii.size(); ++r)
    fit.residuals.push_back(
        residual_on(r, [&](const Vec& x) { return fit.a0 + fit.b * std::pow(x.norm(), 2 - n); }));
  return fit;
}

const char* to_string(MassMethod method) {
  switch (method) {
    case MassMethod::CoordinateFlux: return "coordinate-flux";
    case MassMethod::RicciFlux: return "ricci-flux";
    case MassMethod::PotentialExpansion: return "potential-expansion";
  }
  return "unknown";
}

MassEstimate extrapolate_in_radius(const std::vector<double>& radii, const std::vector<double>& values, double q) {
  if (radii.size() != values.size() || radii.empty())
    throw Error(ErrorKind::InvalidArgument, "extrapolation needs one value per radius");
  MassEstimate est;
  est.radii = radii;
  est.per_radius = values;
  est.decay_exponent = q;
  const std::size_t count = radii.size();
  // E_j interpolates the last j + 1 values with j correction terms r^-(q + i).
  for (std::size_t j = 0; j < count; ++j) {
    Mat design(static_cast<Eigen::Index>(j + 1), static_cast<Eigen::Index>(j + 1));
    Vec rhs(static_cast<Eigen::Index>(j + 1));
    for (std::size_t row = 0; row <= j; ++row) {
      const double r = radii[count - 1 - j + row];
      design(row, 0) = 1.0;
      for (std::size_t c = 1; c <= j; ++c) design(row, c) = std::pow(r / radii.back(), -(q + c - 1));
      rhs[row] = values[count - 1 - j + row];
    }
    est.extrapolants.push_back(design.colPivHouseholderQr().solve(rhs)[0]);
  }
  est.value = est.extrapolants.back();
  est.error_estimate = count >= 2 ? std::abs(est.extrapolants[count - 1] - est.extrapolants[count - 2]) : 0.0;
  return est;
}

namespace {

void require_convergent(const MassEstimate& est) {
  if (est.error_estimate > std::max(std::abs(est.value), 1e-12)) {
    std::ostringstream os;
    os << "non-convergent mass sequence: error estimate " << est.error_estimate << " exceeds value " << est.value;
    throw Error(ErrorKind::NonConvergence, os.str());
  }
}

template <class F>
std::vector<double> per_radius(const std::vector<double>& radii, int jobs, F&& f) {
  std::vector<double> out(radii.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < radii.size(); ++i) out[i] = f(radii[i]);
    return out;
  }
  std::vector<std::future<double>> futures;
  for (double r : radii) futures.push_back(std::async(std::launch::async, f, r));
  for (std::size_t i = 0; i < radii.size(); ++i) out[i] = futures[i].get();
  return out;
}

}  // namespace

MassEstimate adm_mass_flux(const MetricSpec& spec, const std::vector<double>& radii, const MassOptions& options) {
  check_radii(radii, 2);
  const int n = spec.dim;
  if (options.require_decay) {
    const DecayReport decay = decay_report(spec, radii.size() >= 3 ? radii : std::vector<double>{radii[0], radii[1], 2 * radii[1]});
    if (!decay.pass) throw Error(ErrorKind::Precondition, "decay check failed: " + decay.summary);
  }
  const double omega = unit_sphere_area(n);
  auto flux = [&](double r) {
    const SphereQuadrature quad = sphere_quadrature(r, options.resolution, n);
    double total = 0.0;
    for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
      const Vec& x = quad.nodes[q];
      const MetricJet jet = metric_jet(spec, Point{x});
      const Vec nu = x / r;
      double integrand = 0.0;
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += jet.dg[i](i, j) - jet.dg[j](i, i);
        integrand += s * nu[j];
      }
      total += quad.weights[q] * integrand;
    }
    return total / (2.0 * (n - 1) * omega);
  };
  MassEstimate est = extrapolate_in_radius(radii, per_radius(radii, options.jobs, flux), spec.decay_q);
  est.method = MassMethod::CoordinateFlux;
  require_convergent(est);
  return est;
}

MassEstimate ricci_flux_mass(const MetricSpec& spec, const ScalarFieldSpec& v, const std::vector<double>& radii,
                             const MassOptions& options) {
  check_radii(radii, 2);
  if (!v.has_second_derivatives()) throw Error(ErrorKind::Precondition, "potential lacks second derivatives");
  const int n = spec.dim;
  const double omega = unit_sphere_area(n);
  auto flux = [&](double r) {
    const SphereQuadrature quad = sphere_quadrature(r, options.resolution, n);
    double total = 0.0;
    for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
      const Vec& x = quad.nodes[q];
      const CurvatureBundle b = curvature_bundle(spec, Point{x});
      if (std::abs(b.scalar) > options.scalar_flat_tolerance)
        throw Error(ErrorKind::Precondition, "Ricci-flux mass needs a scalar-flat metric");
      const HessianData h = hessian_from(b, v.evaluate(x));
      // The identity trades Hess V for V Ric, so V must be static where it is used.
      const double norm = static_residual_from(b, h).norm;
      if (norm > options.static_tolerance)
        throw Error(ErrorKind::Precondition, "static residual too large for the Ricci-flux identity (" +
                                                 std::to_string(norm) + ")");
      total += quad.weights[q] * h.value * x.dot(b.ric * x) / r;
    }
    return total / ((n - 1) * (2.0 - n) * omega);
  };
  MassEstimate est = extrapolate_in_radius(radii, per_radius(radii, options.jobs, flux), spec.decay_q);
  est.method = MassMethod::RicciFlux;
  require_convergent(est);
  return est;
}

MassEstimate mass_from_potential(const ExpansionFit& fit) {
  if (fit.expansion_case == ExpansionCase::Linear)
    throw Error(ErrorKind::Precondition, "unbounded potential; no mass readout");
  if (fit.expansion_case == ExpansionCase::Zero)
    throw Error(ErrorKind::Precondition, "zero potential; no mass readout");
  if (fit.a0 == 0.0) throw Error(ErrorKind::Degenerate, "constant term vanishes; no mass readout");
  MassEstimate est;
  est.method = MassMethod::PotentialExpansion;
  est.radii = fit.radii;
  est.value = -fit.b / fit.a0;
  est.error_estimate = fit.b_error / std::abs(fit.a0) + std::abs(fit.b) * fit.a0_error / (fit.a0 * fit.a0);
  est.extrapolants = {est.value};
  return est;
}

}  // namespace staticgeo
