#include <doctest.h>

#include <cmath>

#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/conformal_flow.hpp"
#include "staticgeo/curvature.hpp"
#include "staticgeo/error.hpp"
#include "staticgeo/field.hpp"

using namespace staticgeo;

namespace {

ScalarFieldSpec schwarzschild_potential(double m) {
  return ScalarFieldSpec::closed_form("sqrt(1-2m/r)", 3, [m](std::span<const Jet> x) {
    return sqrt(1.0 - 2.0 * m / sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
  });
}

// Radial conformal geodesic in the standard chart: dr/dt = 1 - 2m/r, i.e.
// t = r - r0 + 2m log((r - 2m)/(r0 - 2m)); solved for r by Newton.
double schwarzschild_radius(double r0, double t, double m) {
  double r = r0 + t;
  for (int i = 0; i < 100; ++i) {
    const double f = r - r0 + 2 * m * std::log((r - 2 * m) / (r0 - 2 * m)) - t;
    const double df = 1.0 + 2 * m / (r - 2 * m);
    r -= f / df;
    if (std::abs(f) < 1e-15) break;
  }
  return r;
}

// Independent geodesic integration of g itself (RK4, fine step).
Vec plain_geodesic(const MetricSpec& spec, Vec x, Vec u, double t_end, int steps) {
  auto acc = [&](const Vec& y, const Vec& w) {
    Point p;
    p.coords = y;
    const auto b = curvature_bundle(spec, p);
    Vec a(3);
    for (int k = 0; k < 3; ++k) a[k] = -w.dot(b.gamma[k] * w);
    return a;
  };
  const double h = t_end / steps;
  for (int s = 0; s < steps; ++s) {
    const Vec k1x = u, k1v = acc(x, u);
    const Vec k2x = u + 0.5 * h * k1v, k2v = acc(x + 0.5 * h * k1x, k2x);
    const Vec k3x = u + 0.5 * h * k2v, k3v = acc(x + 0.5 * h * k2x, k3x);
    const Vec k4x = u + h * k3v, k4v = acc(x + h * k3x, k4x);
    x += h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
    u += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return x;
}

}  // namespace

TEST_SUITE("conformal-flow") {

TEST_CASE("flat space, V = 1: spheres of radius 1 + t") {
  const auto spec = builtin_metric("euclidean");
  const auto flow = conformal_normal_flow(spec, constant_field(3, 1.0), coordinate_sphere(1.0, 8, 16), 0.5, 50);
  CHECK(flow.times.size() == 51);
  CHECK(flow.initial_speed_error < 1e-14);
  CHECK(flow.halving_difference < 1e-12);
  for (std::size_t s = 0; s < flow.times.size(); ++s) {
    const double t = flow.times[s];
    const auto& x = flow.surfaces[s].positions;
    CHECK(x.rowwise().norm().maxCoeff() == doctest::Approx(1.0 + t).epsilon(1e-12));
    CHECK(x.rowwise().norm().minCoeff() == doctest::Approx(1.0 + t).epsilon(1e-12));
    CHECK(flow.h[s].maxCoeff() == doctest::Approx(-2.0 / (1.0 + t)).epsilon(1e-9));
    CHECK(flow.area[s] == doctest::Approx(4.0 * M_PI * (1 + t) * (1 + t)).epsilon(1e-10));
  }
  const auto mono = monotonicity_residual(flow);
  CHECK(mono.residual <= 1e-10);
  CHECK(mono.monotone);
  CHECK(area_variation_check(flow) <= 1e-8);
}

TEST_CASE("flat space, V = x3: planes x3 = e^t") {
  const auto spec = builtin_metric("euclidean");
  const auto plane = planar_disk(2, 1.0, 1.0, 7, 8);
  const auto flow = conformal_normal_flow(spec, coordinate_field(3, 2), plane, 1.0, 100);
  for (std::size_t s = 0; s < flow.times.size(); s += 10) {
    const auto& x = flow.surfaces[s].positions;
    CHECK(x.col(2).maxCoeff() == doctest::Approx(std::exp(flow.times[s])).epsilon(1e-9));
    CHECK(x.col(2).minCoeff() == doctest::Approx(std::exp(flow.times[s])).epsilon(1e-9));
    CHECK((x.leftCols(2) - plane.positions.leftCols(2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(flow.area[s] == doctest::Approx(M_PI).epsilon(1e-12));
    CHECK(flow.h[s].cwiseAbs().maxCoeff() < 1e-10);
  }
  const auto mono = monotonicity_residual(flow);
  CHECK(mono.residual < 1e-10);
  CHECK(mono.monotone);
  // Minimal start: H stays non-negative (here identically zero).
  CHECK(mono.min_h_after_start >= -1e-10);
  CHECK(area_variation_check(flow) < 1e-10);
}

TEST_CASE("Schwarzschild sphere flow from r0 = 3") {
  const auto spec = builtin_metric("schwarzschild_standard", {{"m", 1.0}});
  const auto v = schwarzschild_potential(1.0);
  const auto flow = conformal_normal_flow(spec, v, coordinate_sphere(3.0, 8, 16), 1.0, 100);
  CHECK(flow.halving_difference <= 1e-8);
  for (std::size_t s = 0; s < flow.times.size(); s += 20) {
    const double r = schwarzschild_radius(3.0, flow.times[s], 1.0);
    const auto norms = flow.surfaces[s].positions.rowwise().norm();
    CHECK(std::abs(norms.maxCoeff() - r) < 1e-8);
    CHECK(std::abs(norms.minCoeff() - r) < 1e-8);
    // H with respect to the inward normal: -2 sqrt(f)/r
    CHECK(flow.h[s].mean() == doctest::Approx(-2.0 * std::sqrt(1 - 2 / r) / r).epsilon(1e-7));
  }
  const auto mono = monotonicity_residual(flow);
  CHECK(mono.residual <= 1e-6);
  CHECK(mono.monotone);
  CHECK(area_variation_check(flow) <= 1e-5);
}

TEST_CASE("scaling V by c reparametrizes the flow time") {
  const auto spec = builtin_metric("schwarzschild_standard", {{"m", 1.0}});
  const auto v = schwarzschild_potential(1.0);
  const auto sphere = coordinate_sphere(3.0, 6, 12, [] {
    Vec c(3);
    c << 0.2, 0.0, -0.1;
    return c;
  }());
  FlowOptions opt;
  opt.verify_halving = false;
  const auto a = conformal_normal_flow(spec, v, sphere, 0.6, 60, opt);
  const auto b = conformal_normal_flow(spec, v.scaled(2.0), sphere, 0.3, 60, opt);
  double d = 0.0;
  for (std::size_t s = 0; s < a.times.size(); ++s)
    d = std::max(d, (a.surfaces[s].positions - b.surfaces[s].positions).cwiseAbs().maxCoeff());
  CHECK(d <= 1e-8);
}

TEST_CASE("V = 1 reduces to the normal geodesic flow of g") {
  const auto spec = builtin_metric("perturbed_flat", {{"eps", 0.3}});
  const auto sphere = coordinate_sphere(1.5, 4, 8);
  FlowOptions opt;
  opt.jobs = 3;
  const auto flow = conformal_normal_flow(spec, constant_field(3, 1.0), sphere, 0.5, 40, opt);
  double d = 0.0;
  for (int p = 0; p < sphere.grid->size(); p += 3) {
    const Vec x = plain_geodesic(spec, sphere.positions.row(p).transpose(), flow.velocity0.row(p).transpose(), 0.5, 400);
    d = std::max(d, (x - flow.surfaces.back().positions.row(p).transpose()).norm());
  }
  CHECK(d <= 1e-8);
  // Parallel and serial runs agree exactly.
  const auto serial = conformal_normal_flow(spec, constant_field(3, 1.0), sphere, 0.5, 40);
  CHECK((serial.surfaces.back().positions - flow.surfaces.back().positions).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flow errors") {
  const auto flat = builtin_metric("euclidean");
  SUBCASE("potential not positive on the initial surface") {
    try {
      conformal_normal_flow(flat, coordinate_field(3, 2), planar_disk(2, -1.0, 1.0, 5, 8), 0.5, 10);
      FAIL("expected a precondition failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Precondition);
    }
  }
  SUBCASE("potential reaching zero at finite conformal distance") {
    // sqrt(2 - x3) is not static; its zero set is at conformal distance 2.
    const auto v = ScalarFieldSpec::closed_form("sqrt(2-x3)", 3, [](std::span<const Jet> x) { return sqrt(2.0 - x[2]); });
    try {
      conformal_normal_flow(flat, v, planar_disk(2, 1.0, 1.0, 5, 8), 3.0, 4);
      FAIL("expected the flow to abort");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Precondition);
      CHECK(std::string(e.what()).find("vanishes") != std::string::npos);
    }
  }
  SUBCASE("focal point") {
    try {
      conformal_normal_flow(flat, constant_field(3, 1.0), coordinate_sphere(1.0, 4, 8).flipped(), 1.5, 15);
      FAIL("expected a degenerate surface");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Degenerate);
    }
  }
  SUBCASE("too few samples") {
    const auto flow = conformal_normal_flow(flat, constant_field(3, 1.0), coordinate_sphere(1.0, 4, 8), 0.1, 4);
    CHECK_THROWS_AS(monotonicity_residual(flow), Error);
    CHECK_THROWS_AS(area_variation_check(flow), Error);
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(conformal_normal_flow(flat, constant_field(3, 1.0), coordinate_sphere(1.0, 4, 8), -1.0, 4), Error);
    CHECK_THROWS_AS(conformal_normal_flow(flat, constant_field(3, 1.0), coordinate_sphere(1.0, 4, 8), 1.0, 0), Error);
  }
}

}  // TEST_SUITE
