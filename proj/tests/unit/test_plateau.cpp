#include <doctest.h>

#include <cmath>

#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/error.hpp"
#include "staticgeo/field.hpp"
#include "staticgeo/plateau.hpp"

using namespace staticgeo;

namespace {

constexpr double kJ01Squared = 5.783185962946784;

Vec vec3(double a, double b, double c) {
  Vec x(3);
  x << a, b, c;
  return x;
}

}  // namespace

TEST_SUITE("plateau") {

TEST_CASE("flat disk spanning a planar circle") {
  const auto spec = builtin_metric("euclidean");
  const auto sol = solve_minimal_graph(circle_problem(spec, 1.0, [](double) { return 0.0; }));
  CHECK(sol.converged);
  CHECK(sol.heights.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.area == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK(sol.sup_h <= 1e-12);
}

TEST_CASE("small sinusoidal boundary matches the harmonic extension") {
  // u = eps r^2 sin 2phi is harmonic; the minimal surface equation differs at
  // O(eps^3), far below the tolerance for eps = 0.01.
  const auto spec = builtin_metric("euclidean");
  const double eps = 0.01;
  auto prob = circle_problem(spec, 1.0, [eps](double phi) { return eps * std::sin(2 * phi); });
  prob.tolerance = 1e-11;
  const auto sol = solve_minimal_graph(prob);
  double err = 0.0;
  for (int p = 0; p < sol.grid->size(); ++p) {
    const double r = sol.grid->u(p), phi = sol.grid->v(p);
    err = std::max(err, std::abs(sol.heights[p] - eps * r * r * std::sin(2 * phi)));
  }
  CHECK(err <= 1e-5);
  CHECK(err > 0.0);  // genuinely nonlinear
  CHECK(sol.area <= sol.initial_area + 1e-14);
}

TEST_CASE("large-amplitude boundary needs Newton iterations and converges") {
  const auto spec = builtin_metric("euclidean");
  auto prob = circle_problem(spec, 1.0, [](double phi) { return 0.4 * std::cos(phi) + 0.3 * std::sin(3 * phi); });
  const auto sol = solve_minimal_graph(prob);
  CHECK(sol.iterations >= 2);
  CHECK(sol.sup_h <= 1e-8);
  CHECK(sol.area < sol.initial_area);
  // Newton converges quadratically at the end.
  const auto& hist = sol.residual_history;
  REQUIRE(hist.size() >= 3);
  CHECK(hist.back() < 1e-3 * hist[hist.size() - 2] + 1e-12);
}

TEST_CASE("divergence-form H agrees with the hypersurface module") {
  const auto spec = builtin_metric("perturbed_flat", {{"eps", 0.2}});
  auto prob = circle_problem(spec, 0.8, [](double phi) { return 0.1 * std::cos(phi) + 0.05 * std::sin(2 * phi); });
  // The extrinsic H of the discrete solution vanishes at every resolution
  // (no spurious angular Nyquist mode near the centre).
  auto extrinsic_sup = [&](int n_cheb, int n_phi) {
    prob.n_cheb = n_cheb;
    prob.n_phi = n_phi;
    const auto sol = solve_minimal_graph(prob);
    const SurfaceGeometry geo(spec, sol.patch);
    double sup = 0.0;
    for (int p = 0; p < geo.size(); ++p)
      if (!sol.grid->on_boundary(p)) sup = std::max(sup, std::abs(geo.at(p).h));
    return sup;
  };
  const double coarse = extrinsic_sup(15, 16), fine = extrinsic_sup(25, 32);
  CHECK(coarse <= 1e-7);
  CHECK(fine <= 1e-7);
  const auto sol = solve_minimal_graph(prob);
  // And on a non-minimal graph the two formulas agree node by node.
  Vec u(sol.grid->size());
  for (int p = 0; p < u.size(); ++p) u[p] = 0.2 * sol.grid->u(p) * sol.grid->u(p);
  const Vec h = graph_mean_curvature(spec, prob.domain, *sol.grid, u);
  const SurfaceGeometry g2(spec, graph_patch(prob.domain, sol.grid, u));
  double diff = 0.0;
  for (int p = 0; p < u.size(); ++p) diff = std::max(diff, std::abs(h[p] - g2.at(p).h));
  CHECK(diff <= 1e-8);
}

TEST_CASE("mirror-symmetric metric: the symmetry plane is the solution") {
  const auto spec =
      builtin_metric("conformally_flat", {{"c", 0.2}, {"pole_x", 0.5}, {"pole_z", 0.8}, {"mirror", 1.0}});
  const auto sol = solve_minimal_graph(circle_problem(spec, 4.0, [](double) { return 0.0; }));
  CHECK(sol.heights.cwiseAbs().maxCoeff() <= 1e-12);
  // A perturbed start is pulled back onto the plane.
  auto prob = circle_problem(spec, 4.0, [](double) { return 0.0; });
  Vec guess(sol.grid->size());
  for (int p = 0; p < guess.size(); ++p) guess[p] = 0.3 * (1 - std::pow(sol.grid->u(p), 2));
  prob.initial_guess = guess;
  const auto sol2 = solve_minimal_graph(prob);
  CHECK(sol2.heights.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("minimality probe: flat disk and spherical-cap graph") {
  const auto spec = builtin_metric("euclidean");
  const auto disk = solve_minimal_graph(circle_problem(spec, 1.0, [](double) { return 0.0; }));
  const auto probe = local_minimality_probe(spec, disk, 40, 7);
  CHECK(probe.non_positive_gaps == 0);
  CHECK(probe.min_gap > 0.0);
  CHECK(probe.locally_minimizing);
  CHECK(probe.second_variation_min_eig == doctest::Approx(kJ01Squared).epsilon(1e-4));

  // A minimal graph with tilted boundary is also strictly minimizing.
  const auto tilted = solve_minimal_graph(circle_problem(spec, 1.0, [](double phi) { return 0.3 * std::cos(phi); }));
  const auto p2 = local_minimality_probe(spec, tilted, 30, 11);
  CHECK(p2.locally_minimizing);
  // Determinism.
  const auto again = local_minimality_probe(spec, tilted, 30, 11);
  CHECK(again.min_gap == p2.min_gap);
}

TEST_CASE("solution beats random competitors and the initial guess") {
  const auto spec = builtin_metric("perturbed_flat", {{"eps", 0.3}});
  const auto sol = solve_minimal_graph(circle_problem(spec, 1.0, [](double phi) { return 0.2 * std::sin(phi); }));
  const auto probe = local_minimality_probe(spec, sol, 50, 2024);
  CHECK(probe.non_positive_gaps == 0);
  CHECK(sol.area <= sol.initial_area);
}

TEST_CASE("rotation equivariance and resolution convergence") {
  const auto spec = builtin_metric("euclidean");
  auto f = [](double phi) { return 0.3 * std::cos(2 * phi); };
  auto prob = circle_problem(spec, 1.0, f);
  const auto a = solve_minimal_graph(prob);
  // Rotating the boundary data by one grid angle permutes the nodes.
  const int m = prob.n_phi;
  const double shift = 2 * M_PI / m;
  const auto b = solve_minimal_graph(circle_problem(spec, 1.0, [&](double phi) { return f(phi - shift); }));
  double d = 0.0;
  for (int p = 0; p < a.grid->size(); ++p) {
    const int i = p / m, j = p % m;
    d = std::max(d, std::abs(b.heights[i * m + (j + 1) % m] - a.heights[p]));
  }
  CHECK(d <= 1e-8);
  // Higher resolution changes the interpolated solution very little.
  prob.n_cheb = 21;
  prob.n_phi = 24;
  const auto c = solve_minimal_graph(prob);
  double e = 0.0;
  for (int p = 0; p < a.grid->size(); ++p)
    e = std::max(e, std::abs(c.grid->interpolate(c.heights, a.grid->u(p), a.grid->v(p)) - a.heights[p]));
  CHECK(e <= 1e-6);
  CHECK(c.area == doctest::Approx(a.area).epsilon(1e-7));
}

TEST_CASE("zero-set boundaries: planes give exact ellipse fits") {
  const auto spec = builtin_metric("euclidean");
  const auto v = linear_field(vec3(0.1, -0.2, 1.0));
  const auto prob = zero_set_problem(spec, v, 6.0);
  CHECK(prob.ellipse_fit_residual <= 1e-10);
  CHECK(prob.boundary_sphere_deviation <= 1e-10);
  const auto sol = solve_minimal_graph(prob);
  // The solution is the plane itself.
  double worst = 0.0;
  for (int p = 0; p < sol.grid->size(); ++p) worst = std::max(worst, std::abs(v.value(sol.patch.positions.row(p).transpose())));
  CHECK(worst <= 1e-8);
}

TEST_CASE("radius-sequence experiment: V = x3 in flat space") {
  const auto spec = builtin_metric("euclidean");
  const auto rep = radius_sequence_experiment(spec, coordinate_field(3, 2), {4.0, 8.0, 16.0}, 2.0);
  CHECK(rep.axis == 2);
  CHECK(rep.all_intersect);
  CHECK(rep.drift_non_increasing);
  CHECK(rep.prediction_held);
  CHECK(rep.final_drift <= 1e-8);
  for (const auto& r : rep.radii) {
    CHECK(r.sup_abs_height <= 1e-8);
    CHECK(r.intersects_inner_ball);
    CHECK(r.area == doctest::Approx(M_PI * r.radius * r.radius).epsilon(1e-10));
  }
  CHECK(rep.radii[0].drift == -1.0);
}

TEST_CASE("radius-sequence experiment: tilted linear potential") {
  const auto spec = builtin_metric("euclidean");
  SequenceOptions opt;
  opt.jobs = 2;
  const auto rep = radius_sequence_experiment(spec, linear_field(vec3(-0.2, 0.0, 1.0), 0.3), {4.0, 8.0, 16.0}, 2.0, opt);
  CHECK(rep.axis == 2);
  CHECK(rep.prediction_held);
  CHECK(rep.final_drift <= 1e-8);
  // Serial run gives identical numbers.
  const auto serial = radius_sequence_experiment(spec, linear_field(vec3(-0.2, 0.0, 1.0), 0.3), {4.0, 8.0, 16.0}, 2.0);
  for (std::size_t i = 0; i < rep.radii.size(); ++i) CHECK(serial.radii[i].area == rep.radii[i].area);
}

TEST_CASE("radius-sequence experiment: curved metric with symmetric V") {
  // Conformally flat metric symmetric under x3 -> -x3 with V = x3 (not static,
  // the experiment only needs the zero-set geometry).
  const auto spec =
      builtin_metric("conformally_flat", {{"c", 0.3}, {"pole_x", 1.0}, {"pole_z", 0.5}, {"mirror", 1.0}});
  SequenceOptions opt;
  opt.check_expansion = false;
  const auto rep = radius_sequence_experiment(spec, coordinate_field(3, 2), {4.0, 8.0}, 2.0, opt);
  CHECK(rep.prediction_held);
  CHECK(rep.final_drift <= 1e-8);
}

TEST_CASE("plateau errors") {
  const auto spec = builtin_metric("euclidean");
  SUBCASE("potential without linear growth") {
    const auto v = ScalarFieldSpec::closed_form("1-1/r", 3, [](std::span<const Jet> x) {
      return 1.0 - 1.0 / sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    });
    try {
      radius_sequence_experiment(spec, v, {4.0, 8.0}, 2.0);
      FAIL("expected a precondition failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Precondition);
    }
  }
  SUBCASE("zero set not a graph") {
    const auto v = ScalarFieldSpec::closed_form("x3^2-1", 3, [](std::span<const Jet> x) { return x[2] * x[2] - 1.0; });
    try {
      zero_set_problem(spec, v, 4.0);
      FAIL("expected a precondition failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Precondition);
    }
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(circle_problem(spec, -1.0, [](double) { return 0.0; }), Error);
    CHECK_THROWS_AS(radius_sequence_experiment(spec, coordinate_field(3, 2), {}, 2.0), Error);
    CHECK_THROWS_AS(radius_sequence_experiment(spec, coordinate_field(3, 2), {4.0, 3.0}, 2.0), Error);
    CHECK_THROWS_AS(radius_sequence_experiment(spec, coordinate_field(3, 2), {1.0}, 2.0), Error);
  }
  SUBCASE("graph leaving the chart domain") {
    const auto s = builtin_metric("schwarzschild_standard", {{"m", 1.0}});
    try {
      solve_minimal_graph(circle_problem(s, 3.0, [](double) { return 0.0; }));
      FAIL("expected an outside-domain failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OutsideDomain);
    }
  }
}

}  // TEST_SUITE
