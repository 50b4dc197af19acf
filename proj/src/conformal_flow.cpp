#include "staticgeo/conformal_flow.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <memory>
#include <sstream>

#include "staticgeo/curvature.hpp"
#include "staticgeo/error.hpp"

namespace staticgeo {

namespace {

// Eighth-order centred first-derivative weights for offsets 1..4.
constexpr double kCentral8[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
constexpr int kHalfWidth = 4;

double central_derivative(const std::vector<double>& f, int i, double h) {
  double s = 0.0;
  for (int k = 1; k <= kHalfWidth; ++k) s += kCentral8[k - 1] * (f[i + k] - f[i - k]);
  return s / h;
}

std::string describe(const Vec& x) {
  std::ostringstream os;
  os << "(" << x[0] << ", " << x[1] << ", " << x[2] << ")";
  return os.str();
}

// Acceleration of a geodesic of V^{-2} g, from Gamma(g) and phi = -log V.
Vec conformal_acceleration(const MetricSpec& spec, const ScalarFieldSpec& v, const Vec& x, const Vec& vel) {
  Point p;
  p.coords = x;
  const MetricJet jet = metric_jet(spec, p);
  const auto gamma = christoffel_symbols(jet);
  const FieldJet fv = v.evaluate(x);
  if (!(fv.value > 0.0))
    throw Error(ErrorKind::Precondition, "potential vanishes along the flow at x = " + describe(x));
  const Vec dphi = -fv.grad / fv.value;
  const Vec grad_phi = jet.g_inv * dphi;
  const double speed2 = vel.dot(jet.g * vel);
  const double vdphi = vel.dot(dphi);
  Vec acc(3);
  for (int k = 0; k < 3; ++k) acc[k] = -vel.dot(gamma[k] * vel) - 2.0 * vdphi * vel[k] + speed2 * grad_phi[k];
  return acc;
}

// RK4 trajectories of all nodes; returns positions at every step (steps + 1).
std::vector<Mat> integrate_nodes(const MetricSpec& spec, const ScalarFieldSpec& v, const Mat& x0, const Mat& v0,
                                 double t_end, int steps, int jobs) {
  const int n = static_cast<int>(x0.rows());
  std::vector<Mat> out(steps + 1, Mat(n, 3));
  out[0] = x0;
  const double dt = t_end / steps;
  auto run = [&](int lo, int hi) {
    for (int p = lo; p < hi; ++p) {
      Vec x = x0.row(p).transpose(), u = v0.row(p).transpose();
      for (int s = 1; s <= steps; ++s) {
        const Vec k1x = u, k1v = conformal_acceleration(spec, v, x, u);
        const Vec k2x = u + 0.5 * dt * k1v, k2v = conformal_acceleration(spec, v, x + 0.5 * dt * k1x, k2x);
        const Vec k3x = u + 0.5 * dt * k2v, k3v = conformal_acceleration(spec, v, x + 0.5 * dt * k2x, k3x);
        const Vec k4x = u + dt * k3v, k4v = conformal_acceleration(spec, v, x + dt * k3x, k4x);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        u += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if (!x.allFinite() || !u.allFinite())
          throw Error(ErrorKind::NonConvergence, "geodesic integration produced non-finite values");
        out[s].row(p) = x.transpose();
      }
    }
  };
  jobs = std::clamp(jobs, 1, std::max(1, n));
  if (jobs == 1) {
    run(0, n);
  } else {
    std::vector<std::future<void>> futures;
    const int chunk = (n + jobs - 1) / jobs;
    for (int lo = 0; lo < n; lo += chunk) futures.push_back(std::async(std::launch::async, run, lo, std::min(n, lo + chunk)));
    for (auto& f : futures) f.get();
  }
  return out;
}

}  // namespace

FlowState conformal_normal_flow(const MetricSpec& spec, const ScalarFieldSpec& v, const SurfacePatch& initial,
                                double t_end, int steps, const FlowOptions& options) {
  if (spec.dim != 3 || v.dim() != 3) throw Error(ErrorKind::InvalidArgument, "the flow requires a 3-dimensional chart");
  if (!(t_end > 0.0)) throw Error(ErrorKind::InvalidArgument, "t_end must be positive");
  if (steps < 1) throw Error(ErrorKind::InvalidArgument, "steps must be positive");

  FlowState flow;
  flow.steps = steps;
  const SurfaceGeometry geo0(spec, initial);
  const int n = geo0.size();
  flow.velocity0.resize(n, 3);
  for (int p = 0; p < n; ++p) {
    const double vp = v.value(geo0.at(p).x);
    if (!(vp > 0.0))
      throw Error(ErrorKind::Precondition, "potential must be positive on the initial surface (x = " +
                                               describe(geo0.at(p).x) + ")");
    const Vec vel = vp * geo0.at(p).nu;
    flow.velocity0.row(p) = vel.transpose();
    Point pt;
    pt.coords = geo0.at(p).x;
    const Mat g = metric_jet(spec, pt).g;
    flow.initial_speed_error = std::max(flow.initial_speed_error, std::abs(std::sqrt(vel.dot(g * vel)) - vp));
  }

  const auto positions = integrate_nodes(spec, v, initial.positions, flow.velocity0, t_end, steps, options.jobs);
  if (options.verify_halving) {
    const auto fine = integrate_nodes(spec, v, initial.positions, flow.velocity0, t_end, 2 * steps, options.jobs);
    double diff = 0.0;
    for (int s = 0; s <= steps; ++s)
      diff = std::max(diff, (fine[2 * s] - positions[s]).rowwise().norm().maxCoeff());
    flow.halving_difference = diff;
  }

  const double dt = t_end / steps;
  for (int s = 0; s <= steps; ++s) {
    SurfacePatch patch = initial;
    patch.positions = positions[s];
    std::unique_ptr<SurfaceGeometry> geo;
    try {
      geo = std::make_unique<SurfaceGeometry>(spec, patch);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Degenerate)
        throw Error(ErrorKind::Degenerate,
                    "flow surface degenerated at t = " + std::to_string(s * dt) + " (focal point): " + e.what());
      throw;
    }
    // The initial velocity is V nu and stays normal (Gauss lemma), so H with
    // respect to the normal opposite to the velocity is -H of the patch.
    Vec h(n), a2(n), vv(n), vh(n);
    for (int p = 0; p < n; ++p) {
      const auto& f = geo->at(p);
      h[p] = -f.h;  // the patch normal points along the velocity
      a2[p] = f.a_norm2;
      vv[p] = v.value(f.x);
      if (!(vv[p] > 0.0))
        throw Error(ErrorKind::Precondition, "potential vanishes along the flow at x = " + describe(f.x));
      vh[p] = vv[p] * h[p];
    }
    const double ivh = geo->integrate(vh);
    flow.times.push_back(s * dt);
    flow.surfaces.push_back(std::move(patch));
    flow.h.push_back(h);
    flow.a_norm2.push_back(a2);
    flow.v.push_back(vv);
    flow.vh.push_back(vh);
    flow.area.push_back(geo->area());
    flow.integral_vh.push_back(ivh);
  }
  return flow;
}

namespace {

void require_samples(const FlowState& flow) {
  if (static_cast<int>(flow.times.size()) < kMinFlowSamples)
    throw Error(ErrorKind::Precondition, "too few time samples for differentiation (need at least " +
                                             std::to_string(kMinFlowSamples) + ")");
}

}  // namespace

MonotonicityReport monotonicity_residual(const FlowState& flow, double monotone_tolerance) {
  require_samples(flow);
  const int nt = static_cast<int>(flow.times.size());
  const int n = static_cast<int>(flow.h[0].size());
  const double dt = flow.times[1] - flow.times[0];
  MonotonicityReport rep;
  rep.min_increment = 1e300;
  rep.min_h_after_start = 1e300;
  std::vector<double> q(nt);
  for (int p = 0; p < n; ++p) {
    for (int s = 0; s < nt; ++s) q[s] = flow.h[s][p] / flow.v[s][p];
    for (int s = kHalfWidth; s < nt - kHalfWidth; ++s)
      rep.residual = std::max(rep.residual, std::abs(central_derivative(q, s, dt) - flow.a_norm2[s][p]));
    for (int s = 1; s < nt; ++s) {
      rep.min_increment = std::min(rep.min_increment, q[s] - q[s - 1]);
      rep.min_h_after_start = std::min(rep.min_h_after_start, flow.h[s][p]);
    }
  }
  rep.monotone = rep.min_increment >= -monotone_tolerance;
  return rep;
}

double area_variation_check(const FlowState& flow) {
  require_samples(flow);
  const int nt = static_cast<int>(flow.times.size());
  const double dt = flow.times[1] - flow.times[0];
  double worst = 0.0;
  for (int s = kHalfWidth; s < nt - kHalfWidth; ++s)
    worst = std::max(worst, std::abs(central_derivative(flow.area, s, dt) + flow.integral_vh[s]));
  return worst;
}

}  // namespace staticgeo
