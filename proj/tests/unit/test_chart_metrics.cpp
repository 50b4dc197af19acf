#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/error.hpp"

using namespace staticgeo;

namespace {

Vec random_point(std::mt19937_64& rng, double rmin, double rmax, int n = 3) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> radius(rmin, rmax);
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = gauss(rng);
  return x.normalized() * radius(rng);
}

double max_partial_difference(const MetricJet& a, const MetricJet& b) {
  double worst = 0.0;
  for (int k = 0; k < a.dim; ++k) {
    worst = std::max(worst, (a.dg[k] - b.dg[k]).cwiseAbs().maxCoeff());
    for (int l = 0; l < a.dim; ++l)
      worst = std::max(worst, (a.d2(k, l) - b.d2(k, l)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("builtin_metric: euclidean carries flat oracles") {
  const MetricSpec spec = builtin_metric("euclidean", {{"n", 3}});
  REQUIRE(spec.exact_mass.has_value());
  CHECK(*spec.exact_mass == 0.0);
  REQUIRE(spec.exact_potential.has_value());
  CHECK(spec.exact_potential->value(make_point({1, 2, 2}).coords) == 1.0);
  const MetricJet jet = metric_jet(spec, make_point({1, 2, 2}));
  CHECK((jet.g - Mat::Identity(3, 3)).norm() == 0.0);
  for (int k = 0; k < 3; ++k) {
    CHECK(jet.dg[k].norm() == 0.0);
    for (int l = 0; l < 3; ++l) CHECK(jet.d2(k, l).norm() == 0.0);
  }
}

TEST_CASE("builtin_metric: isotropic Schwarzschild at rho = 2") {
  const MetricSpec spec = builtin_metric("schwarzschild_isotropic", {{"m", 1}});
  const MetricJet jet = metric_jet(spec, make_point({0, 0, 2}));
  CHECK((jet.g - 2.44140625 * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  // Same value from an off-axis point on the same sphere.
  const Vec x = Vec::Constant(3, 2.0 / std::sqrt(3.0));
  CHECK(std::abs(spec.metric_at(x)(1, 1) - 2.44140625) < 1e-13);
  CHECK(*spec.exact_mass == 1.0);
  // Horizon at rho = m/2: exact potential vanishes there and the coordinate sphere is minimal.
  CHECK(std::abs(spec.exact_potential->value(make_point({0.5, 0, 0}).coords)) < 1e-15);
  CHECK(std::abs(spec.coordinate_sphere_mean_curvature(0.5)) < 1e-14);
}

TEST_CASE("builtin_metric: parameter validation") {
  CHECK_THROWS_AS(builtin_metric("nope"), Error);
  try {
    builtin_metric("nope");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownName);
  }
  try {
    builtin_metric("perturbed_flat", {{"n", 3}, {"q", 0.4}});
    FAIL("expected decay error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
    CHECK(std::string(e.what()).find("(n-2)/2") != std::string::npos);
  }
  CHECK_THROWS_AS(builtin_metric("schwarzschild_isotropic", {{"m", 0}}), Error);
  CHECK_THROWS_AS(builtin_metric("schwarzschild_standard", {{"m", -1}}), Error);
  CHECK_NOTHROW(builtin_metric("perturbed_flat", {{"q", 0.6}}));
}

TEST_CASE("metric_jet: chart domain and positivity errors") {
  const MetricSpec standard = builtin_metric("schwarzschild_standard", {{"m", 1}});
  CHECK_THROWS_AS(metric_jet(standard, make_point({1.5, 0, 0})), Error);
  const MetricSpec iso = builtin_metric("schwarzschild_isotropic", {{"m", 1}});
  CHECK_THROWS_AS(metric_jet(iso, make_point({0, 0, 0})), Error);
  const MetricSpec bad = closed_form_metric("indefinite", 3, [](std::span<const Jet> x, std::span<Jet> out) {
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) out[sym_index(3, i, j)] = Jet(i == j ? (i == 0 ? -1.0 : 1.0) : 0.0) + 0.0 * x[0];
  });
  try {
    metric_jet(bad, make_point({1, 1, 1}));
    FAIL("expected degenerate error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
  }
}

TEST_CASE("metric_jet: inverse consistency at random points") {
  std::mt19937_64 rng(7);
  const std::vector<std::pair<std::string, ParamMap>> catalog = {
      {"euclidean", {}},
      {"schwarzschild_isotropic", {{"m", 1}}},
      {"schwarzschild_standard", {{"m", 1}}},
      {"conformally_flat", {{"c", 0.35}, {"pole_z", 0.3}, {"mirror", 1}}},
      {"perturbed_flat", {{"q", 1}, {"eps", 0.2}}}};
  for (const auto& [name, params] : catalog) {
    const MetricSpec spec = builtin_metric(name, params);
    double worst_a = 0.0, worst_fd = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Point p{random_point(rng, 2.5, 20.0)};
      const MetricJet a = metric_jet(spec, p);
      const MetricJet f = metric_jet(spec, p, DerivativeMode::FiniteDifference);
      worst_a = std::max(worst_a, (a.g * a.g_inv - Mat::Identity(3, 3)).cwiseAbs().maxCoeff());
      worst_fd = std::max(worst_fd, (f.g * f.g_inv - Mat::Identity(3, 3)).cwiseAbs().maxCoeff());
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) CHECK((a.d2(k, l) - a.d2(l, k)).norm() == 0.0);
    }
    INFO(name);
    CHECK(worst_a <= 1e-12);
    CHECK(worst_fd <= 1e-8);
  }
}

TEST_CASE("metric_jet: finite differences converge at least at order 2") {
  std::mt19937_64 rng(11);
  const std::vector<std::pair<std::string, ParamMap>> catalog = {
      {"schwarzschild_isotropic", {{"m", 1}}},
      {"schwarzschild_standard", {{"m", 1}}},
      {"conformally_flat", {{"c", 0.35}, {"exp_amp", 0.5}}},
      {"perturbed_flat", {{"q", 1}, {"eps", 0.2}}}};
  for (const auto& [name, params] : catalog) {
    const MetricSpec spec = builtin_metric(name, params);
    const Point p{random_point(rng, 3.0, 4.0)};
    const MetricJet exact = metric_jet(spec, p);
    const double e1 = max_partial_difference(exact, metric_jet_fd(spec, p, 0.1));
    const double e2 = max_partial_difference(exact, metric_jet_fd(spec, p, 0.05));
    INFO(name << " errors " << e1 << " " << e2);
    CHECK(e2 <= e1 / 4.0 * 1.05);  // Richardson: halving h shrinks the error by >= 4
    CHECK(e2 < 1e-4);
  }
  CHECK(default_fd_step(Vec::Constant(3, 0.0)) == 1e-5);
  CHECK(default_fd_step(Vec::Constant(3, 1e6)) == 1e-1);
}

TEST_CASE("sphere_quadrature: areas and moments") {
  const double pi = std::numbers::pi;
  for (double r : {1.0, 3.0, 17.5}) {
    const SphereQuadrature q = sphere_quadrature(r, 8);
    double total = 0.0;
    for (double w : q.weights) {
      CHECK(w > 0.0);
      total += w;
    }
    CHECK(std::abs(total - 4 * pi * r * r) <= 1e-10 * 4 * pi * r * r);
    for (const Vec& x : q.nodes) CHECK(std::abs(x.norm() - r) < 1e-12 * r);
  }
  const SphereQuadrature unit = sphere_quadrature(1.0, 6);
  double m33 = 0.0, m12 = 0.0;
  for (std::size_t i = 0; i < unit.nodes.size(); ++i) {
    m33 += unit.weights[i] * unit.nodes[i][2] * unit.nodes[i][2];
    m12 += unit.weights[i] * unit.nodes[i][0] * unit.nodes[i][1];
  }
  CHECK(std::abs(m33 - 4 * pi / 3) < 1e-10);
  CHECK(std::abs(m12) < 1e-12);
  CHECK_THROWS_AS(sphere_quadrature(1.0, kMinSphereResolution - 1), Error);
}

TEST_CASE("sphere_quadrature: higher dimensions and refinement") {
  for (int n : {4, 5}) {
    const SphereQuadrature q = sphere_quadrature(2.0, 6, n);
    double total = 0.0, moment = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      total += q.weights[i];
      moment += q.weights[i] * std::pow(q.nodes[i][0], 2);
    }
    const double area = unit_sphere_area(n) * std::pow(2.0, n - 1);
    CHECK(std::abs(total - area) < 1e-10 * area);
    CHECK(std::abs(moment - area * 4.0 / n) < 1e-10 * area);  // <x1^2> = r^2 / n
  }
  CHECK(std::abs(unit_sphere_area(3) - 4 * std::numbers::pi) < 1e-14);
  // Smooth non-polynomial integrand: self-convergence and monotone refinement.
  auto integral = [](int res) {
    const SphereQuadrature q = sphere_quadrature(1.0, res);
    double s = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i)
      s += q.weights[i] * std::exp(q.nodes[i][0] + 0.5 * q.nodes[i][2]);
    return s;
  };
  CHECK(std::abs(integral(16) - integral(32)) <= 1e-8);
  // Polynomial basis x^a: errors never increase with resolution.
  for (int degree = 2; degree <= 12; degree += 2) {
    double previous = 1e300;
    for (int res = 2; res <= 10; ++res) {
      const SphereQuadrature q = sphere_quadrature(1.0, res);
      double s = 0.0;
      for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * std::pow(q.nodes[i][2], degree);
      const double err = std::abs(s - 4 * std::numbers::pi / (degree + 1));
      CHECK(err <= previous + 1e-13);
      previous = err;
    }
  }
}

TEST_CASE("decay_report: flat, Schwarzschild and a slow-decay counterexample") {
  const DecayReport flat = decay_report(builtin_metric("euclidean"), {2, 4, 8});
  CHECK(flat.exactly_flat);
  CHECK(flat.pass);
  CHECK(flat.summary == "exactly flat");

  const DecayReport iso = decay_report(builtin_metric("schwarzschild_isotropic", {{"m", 1}}),
                                       {8, 16, 32, 64, 128});
  CHECK(std::abs(iso.fitted_q - 1.0) <= 0.05);
  CHECK(iso.pass);

  // Tabulated g = (1 + 0.1 (1 + |x|^2)^{-0.15}) delta decays like |x|^{-0.3}.
  GridData grid;
  grid.dim = 3;
  grid.lo = {-40, -40, -40};
  grid.hi = {40, 40, 40};
  grid.shape = {41, 41, 41};
  grid.components = 6;
  grid.values.resize(grid.node_count() * 6);
  std::size_t at = 0;
  for (int i = 0; i < 41; ++i)
    for (int j = 0; j < 41; ++j)
      for (int k = 0; k < 41; ++k) {
        const double x = -40 + 2 * i, y = -40 + 2 * j, z = -40 + 2 * k;
        const double phi = 1.0 + 0.1 * std::pow(1.0 + x * x + y * y + z * z, -0.15);
        for (int c = 0; c < 6; ++c) grid.values[at++] = (c == 0 || c == 3 || c == 5) ? phi : 0.0;
      }
  const MetricSpec noisy = tabulated_metric("slow_decay", grid, 1.0);
  const DecayReport slow = decay_report(noisy, {4, 8, 16, 32});
  CHECK_FALSE(slow.pass);
  CHECK(slow.fitted_q < 0.5);

  CHECK_THROWS_AS(decay_report(builtin_metric("euclidean"), {2, 4}), Error);
  CHECK_THROWS_AS(decay_report(builtin_metric("euclidean"), {4, 2, 8}), Error);
}

TEST_CASE("grid files round-trip and drive tabulated metrics") {
  GridData grid;
  grid.dim = 3;
  grid.lo = {-2, -2, -2};
  grid.hi = {2, 2, 2};
  grid.shape = {9, 9, 9};
  grid.components = 6;
  for (std::size_t node = 0; node < grid.node_count(); ++node)
    for (int c = 0; c < 6; ++c) grid.values.push_back((c == 0 || c == 3 || c == 5) ? 1.0 : 0.0);
  const auto path = std::filesystem::temp_directory_path() / "staticgeo_grid_roundtrip.grid";
  write_grid_file(path, grid);
  const GridData back = read_grid_file(path);
  std::filesystem::remove(path);
  CHECK(back.dim == 3);
  CHECK(back.components == 6);
  CHECK(back.shape == grid.shape);
  CHECK(back.lo == grid.lo);
  CHECK(back.values == grid.values);
  const MetricSpec spec = tabulated_metric("flat_table", back, 1.0);
  const MetricJet jet = metric_jet(spec, make_point({0.3, -0.7, 1.1}));
  CHECK((jet.g - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(metric_jet(spec, make_point({0, 0, 3})), Error);
}
