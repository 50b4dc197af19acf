#include <doctest.h>

#include <cmath>
#include <random>

#include "staticgeo/error.hpp"
#include "staticgeo/static_potential.hpp"

using namespace staticgeo;

namespace {

Vec random_point(std::mt19937_64& rng, double rmin, double rmax) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> radius(rmin, rmax);
  Vec x(3);
  for (int i = 0; i < 3; ++i) x[i] = gauss(rng);
  return x.normalized() * radius(rng);
}

ScalarFieldSpec field(const char* name, std::function<Jet(std::span<const Jet>)> fn) {
  return ScalarFieldSpec::closed_form(name, 3, std::move(fn));
}

}  // namespace

TEST_CASE("static_residual: flat space examples") {
  const MetricSpec flat = builtin_metric("euclidean");
  CHECK(static_residual(flat, constant_field(3, 1.0), make_point({1, 2, 3})).norm == 0.0);
  CHECK(static_residual(flat, coordinate_field(3, 2), make_point({1, 2, 3})).norm == 0.0);
}

TEST_CASE("static_residual: Schwarzschild potential and the constant potential") {
  const double m = 1.0;
  const MetricSpec spec = builtin_metric("schwarzschild_standard", {{"m", m}});
  const Point p = make_point({1.0, 2.0, 2.0});
  CHECK(static_residual(spec, *spec.exact_potential, p).norm <= 1e-8);
  const double r = 3.0;
  // V = 1: L*V = -Ric, whose norm is sqrt(4 + 1 + 1) m / r^3.
  const double expected = std::sqrt(6.0) * m / (r * r * r);
  CHECK(std::abs(static_residual(spec, constant_field(3, 1.0), p).norm - expected) < 1e-10);
  CHECK(std::abs(expected - 0.0907) < 1e-4);
}

TEST_CASE("static_residual: trace identity and linearity for arbitrary pairs") {
  std::mt19937_64 rng(21);
  const std::vector<MetricSpec> metrics = {builtin_metric("perturbed_flat", {{"eps", 0.3}}),
                                           builtin_metric("conformally_flat", {{"c", 0.4}, {"exp_amp", 0.7}}),
                                           builtin_metric("schwarzschild_isotropic", {{"m", 1}})};
  const ScalarFieldSpec v = field("test", [](std::span<const Jet> x) {
    return sin(x[0] * 0.3) * x[2] + exp(x[1] * 0.1) + x[0] * x[1] * 0.05;
  });
  for (const MetricSpec& spec : metrics) {
    double worst_trace = 0.0, worst_linear = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Point p{random_point(rng, 2.0, 8.0)};
      const StaticResidual r = static_residual(spec, v, p);
      worst_trace = std::max(worst_trace, std::abs(r.trace - r.trace_expected));
      const StaticResidual r3 = static_residual(spec, v.scaled(-2.5), p);
      worst_linear = std::max(worst_linear, (r3.tensor + 2.5 * r.tensor).cwiseAbs().maxCoeff());
    }
    CHECK(worst_trace <= 1e-10);
    CHECK(worst_linear <= 1e-12);
  }
}

TEST_CASE("static_residual: harmonicity from the trace when R = 0") {
  // Harmonic but non-static V on a scalar-flat metric: |Delta V| <= n/(n-1) eps |g^-1|.
  const MetricSpec spec = builtin_metric("schwarzschild_isotropic", {{"m", 1}});
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const Point p{random_point(rng, 1.0, 6.0)};
    const StaticResidual r = static_residual(spec, coordinate_field(3, 0), p);
    const CurvatureBundle b = curvature_bundle(spec, p);
    const double ginv_norm = b.g_inv.cwiseAbs().maxCoeff();
    CHECK(std::abs(r.laplacian) <= 1.5 * r.norm * 3.0 * ginv_norm + 1e-12);
  }
}

TEST_CASE("scalar_constancy_check") {
  std::mt19937_64 rng(8);
  std::vector<Point> samples;
  for (int i = 0; i < 20; ++i) samples.push_back(Point{random_point(rng, 1.5, 10.0)});
  CHECK(scalar_constancy_check(builtin_metric("euclidean"), samples).max_deviation == 0.0);
  const auto iso = scalar_constancy_check(builtin_metric("schwarzschild_isotropic", {{"m", 1}}), samples);
  CHECK(iso.max_deviation <= 1e-8);
  CHECK_FALSE(iso.flagged);
  const auto bumpy = scalar_constancy_check(builtin_metric("conformally_flat", {{"exp_amp", 1.0}}),
                                            {make_point({1, 0, 0}), make_point({0, 0, 3})});
  CHECK(bumpy.max_deviation > 1e-3);
  CHECK(bumpy.flagged);
  CHECK_THROWS_AS(scalar_constancy_check(builtin_metric("euclidean"), {make_point({1, 1, 1})}), Error);
}

TEST_CASE("solve_harmonic_annulus: constants and the radial harmonic function") {
  const MetricSpec flat = builtin_metric("euclidean");
  AnnulusGrid grid{1.0, 2.0, 16, 8, 8};
  const AnnulusSolution one = solve_harmonic_annulus(flat, constant_field(3, 1), constant_field(3, 1), grid);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) CHECK(std::abs(one.field.value(random_point(rng, 1.0, 2.0)) - 1.0) < 1e-9);

  // V = 1 - 1/rho with V(1) = 0, V(2) = 1/2: second-order convergence in the grid.
  auto max_error = [&](int nxi) {
    const AnnulusSolution sol = solve_harmonic_annulus(flat, constant_field(3, 0), constant_field(3, 0.5),
                                                       AnnulusGrid{1.0, 2.0, nxi, 8, 8});
    double err = 0.0;
    std::mt19937_64 r2(3);
    for (int i = 0; i < 50; ++i) {
      const Vec x = random_point(r2, 1.0, 2.0);
      err = std::max(err, std::abs(sol.field.value(x) - (1.0 - 1.0 / x.norm())));
    }
    CHECK(sol.boundary_mismatch < 1e-12);
    return err;
  };
  const double e1 = max_error(16), e2 = max_error(32);
  CHECK(e1 < 1e-3);
  CHECK(e2 < e1 / 3.0);
}

TEST_CASE("solve_harmonic_annulus: Schwarzschild exact potential") {
  const MetricSpec spec = builtin_metric("schwarzschild_isotropic", {{"m", 1}});
  const ScalarFieldSpec& exact = *spec.exact_potential;
  auto run = [&](int nxi) { return solve_harmonic_annulus(spec, exact, exact, AnnulusGrid{1.0, 8.0, nxi, 8, 8}); };
  auto error = [&](const AnnulusSolution& sol) {
    double err = 0.0;
    std::mt19937_64 rng(6);
    for (int i = 0; i < 60; ++i) {
      const Vec x = random_point(rng, 1.0, 8.0);
      err = std::max(err, std::abs(sol.field.value(x) - exact.value(x)));
    }
    return err;
  };
  const AnnulusSolution coarse = run(48), fine = run(96);
  const double ec = error(coarse), ef = error(fine);
  INFO("errors " << ec << " " << ef << " static " << fine.max_static_residual);
  CHECK(ef < ec / 3.0);  // O(h^2)
  CHECK(ef < 1e-4);
  CHECK(fine.max_static_residual <= 1e-4);
  CHECK(fine.solver_error <= 1e-10);
}

TEST_CASE("solve_harmonic_annulus: preconditions and normalization") {
  const MetricSpec bumpy = builtin_metric("conformally_flat", {{"exp_amp", 1.0}});
  try {
    solve_harmonic_annulus(bumpy, constant_field(3, 1), constant_field(3, 1), AnnulusGrid{1.0, 2.0, 8, 4, 4});
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
  CHECK_THROWS_AS(solve_harmonic_annulus(builtin_metric("euclidean"), constant_field(3, 1), constant_field(3, 1),
                                         AnnulusGrid{2.0, 1.0, 8, 4, 4}),
                  Error);
  AnnulusOptions opts;
  opts.normalize_outer = true;
  const AnnulusSolution sol = solve_harmonic_annulus(builtin_metric("euclidean"), constant_field(3, 0),
                                                     coordinate_field(3, 2), AnnulusGrid{1.0, 3.0, 16, 8, 8}, opts);
  CHECK(sol.outer_sup_norm > 2.5);
  CHECK(std::abs(sol.normalization * sol.outer_sup_norm - 1.0) < 1e-14);
}

TEST_CASE("zero_set_extract: planes") {
  ZeroSetWindow window{{-3, -3}, {3, 3}, 7, -5, 5, 64};
  const auto flat = zero_set_extract(coordinate_field(3, 2), window);
  REQUIRE(flat.size() == 1);
  for (double f : flat[0].heights) CHECK(std::abs(f) < 1e-14);
  CHECK(flat[0].height_fit.constant == 0.0);

  const ScalarFieldSpec tilted = field("tilted", [](std::span<const Jet> x) { return x[2] - 0.2 * x[0]; });
  const auto g = zero_set_extract(tilted, window);
  REQUIRE(g.size() == 1);
  for (std::size_t i = 0; i < g[0].heights.size(); ++i) {
    CHECK(std::abs(g[0].heights[i] - 0.2 * g[0].base_points[i][0]) < 1e-10);
    CHECK(std::abs(g[0].gradients[i][0] - 0.2) < 1e-14);
    CHECK(std::abs(tilted.value(g[0].point(i))) <= g[0].root_tolerance + 1e-300);
  }
  CHECK(g[0].root_tolerance < 1e-10);
  CHECK(std::abs(g[0].gradient_fit.exponent - 1.0) < 1e-9);  // constant gradient: gamma = 1
}

TEST_CASE("zero_set_extract: error cases and multiple components") {
  ZeroSetWindow window{{-1, -1}, {1, 1}, 3, -5, 5, 100};
  CHECK_THROWS_AS(zero_set_extract(constant_field(3, 1.0), window), Error);
  // x3^2 - 1 has two sheets, labelled in scan order.
  const ScalarFieldSpec two = field("two", [](std::span<const Jet> x) { return x[2] * x[2] - 1.0; });
  const auto sheets = zero_set_extract(two, window);
  REQUIRE(sheets.size() == 2);
  CHECK(std::abs(sheets[0].heights[0] + 1.0) < 1e-12);
  CHECK(std::abs(sheets[1].heights[0] - 1.0) < 1e-12);
  // A double root with zero vertical derivative: V = x3^3 - 1e-30 crosses at x3 ~ 1e-10.
  const ScalarFieldSpec tangent = field("tangent", [](std::span<const Jet> x) { return x[2] * x[2] * x[2]; });
  CHECK_THROWS_AS(zero_set_extract(tangent, ZeroSetWindow{{-1, -1}, {1, 1}, 2, -1, 2, 3}), Error);
}

TEST_CASE("zero_set_extract: solved potential on an off-centre scalar-flat metric") {
  // u = 1 + 0.3/|x - p| is harmonic, so the metric is scalar flat; V ~ x3 at infinity.
  const MetricSpec spec = builtin_metric("conformally_flat", {{"c", 0.3}, {"pole_x", 0.4}, {"pole_z", 0.3}});
  const AnnulusSolution sol = solve_harmonic_annulus(spec, coordinate_field(3, 2), coordinate_field(3, 2),
                                                     AnnulusGrid{2.0, 12.0, 48, 16, 16});
  // The window stays outside the inner sphere so every scan line lies in the annulus.
  ZeroSetWindow window{{2.5, 2.5}, {8, 8}, 8, -1.5, 1.5, 30};
  const auto graphs = zero_set_extract(sol.field, window);
  REQUIRE(graphs.size() >= 1);
  const ZeroSetGraph& g = graphs[0];
  CHECK(g.root_tolerance < 1e-8);
  CHECK(g.height_fit.exponent < 1.0);
  CHECK(g.gradient_bound < 0.2);
}

TEST_CASE("level_set_geometry_check") {
  const MetricSpec flat = builtin_metric("euclidean");
  ZeroSetWindow window{{-3, -3}, {3, 3}, 5, -5, 5, 64};
  const auto plane = zero_set_extract(coordinate_field(3, 2), window);
  CHECK(level_set_geometry_check(flat, plane[0]).sup_norm_a == 0.0);
  const ScalarFieldSpec tilted = field("tilted", [](std::span<const Jet> x) { return x[2] - 0.2 * x[0]; });
  const auto g = zero_set_extract(tilted, window);
  CHECK(level_set_geometry_check(flat, g[0]).sup_norm_a < 1e-14);

  // Horizon sphere rho = 1/2 of isotropic Schwarzschild.
  const MetricSpec iso = builtin_metric("schwarzschild_isotropic", {{"m", 1}});
  const auto points = radial_zero_set(*iso.exact_potential, sphere_quadrature(1.0, 6).nodes, 0.3, 0.9);
  for (const Point& p : points) CHECK(std::abs(p.coords.norm() - 0.5) < 1e-12);
  const LevelSetGeometry horizon = level_set_geometry_check(iso, *iso.exact_potential, points);
  CHECK(horizon.sup_norm_a <= 1e-8);
  CHECK(horizon.sup_abs_h <= 1e-8);
  CHECK(horizon.pass);
  // A non-minimal level set: the coordinate sphere of radius 2 in flat space has |A| = sqrt(2)/2.
  const ScalarFieldSpec r2 = field("r2", [](std::span<const Jet> x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - 4.0; });
  const LevelSetGeometry sphere = level_set_geometry_check(flat, r2, {make_point({0, 2, 0})});
  CHECK(std::abs(sphere.sup_norm_a - std::sqrt(2.0) / 2.0) < 1e-12);
  CHECK(std::abs(sphere.sup_abs_h - 1.0) < 1e-12);
  CHECK_FALSE(sphere.pass);
}
