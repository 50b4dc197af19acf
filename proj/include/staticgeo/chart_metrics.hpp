#pragma once

// Coordinate charts, the metric catalog, metric jets (analytic or finite
// difference), decay verification and round-sphere quadrature.
//
// All computations happen in a single end chart or in a bounded coordinate
// region of it; nothing here models the compact core of the manifold.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "staticgeo/field.hpp"
#include "staticgeo/grid.hpp"
#include "staticgeo/jet.hpp"
#include "staticgeo/types.hpp"

namespace staticgeo {

enum class MetricKind { ClosedForm, ConformallyFlat, Tabulated };
enum class DerivativeMode { Analytic, FiniteDifference };

using ParamMap = std::map<std::string, double>;

// Index of the independent component (i <= j) in upper-triangle row order.
inline int sym_index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

class MetricSpec {
 public:
  // Writes the n(n+1)/2 independent components g_ij (upper triangle) as jets.
  using ComponentFn = std::function<void(std::span<const Jet>, std::span<Jet>)>;
  // Returns an explanation when x is outside the chart domain.
  using DomainFn = std::function<std::optional<std::string>(const Vec&)>;

  std::string name;
  int dim = 3;
  MetricKind kind = MetricKind::ClosedForm;
  ParamMap params;
  double decay_q = 1.0;  // declared decay exponent

  ComponentFn components;                        // closed-form and conformally flat
  std::shared_ptr<const CubicSplineGrid> table;  // tabulated
  DomainFn domain;

  // Conformally flat metrics g = u^{4/(n-2)} delta keep their factor.
  std::optional<ScalarFieldSpec> conformal_factor;

  // Exact oracles, when known.
  std::optional<ScalarFieldSpec> exact_potential;
  std::optional<double> exact_mass;
  // Mean curvature of the coordinate sphere of radius r (outward normal).
  std::function<double(double)> coordinate_sphere_mean_curvature;

  // Metric components at x as jets (exact partials for closed-form kinds,
  // spline partials for tabulated ones).
  void evaluate_components(const Vec& x, std::span<Jet> out) const;
  // Metric values only (no derivatives).
  Mat metric_at(const Vec& x) const;
  void check_domain(const Vec& x) const;
};

struct MetricJet {
  int dim = 3;
  Mat g;
  Mat g_inv;
  double sqrt_det = 1.0;
  std::vector<Mat> dg;   // dg[k](i, j) = d_k g_ij
  std::vector<Mat> ddg;  // ddg[k * n + l](i, j) = d_k d_l g_ij
  DerivativeMode source = DerivativeMode::Analytic;
  double fd_step = 0.0;

  const Mat& d2(int k, int l) const { return ddg[static_cast<std::size_t>(k * dim + l)]; }
};

struct SphereQuadrature {
  int dim = 3;
  double radius = 1.0;
  int resolution = 0;
  std::vector<Vec> nodes;       // points on the sphere of the given radius
  std::vector<double> weights;  // Euclidean (n-1)-area weights
};

struct DecayReport {
  std::vector<double> radii;
  std::vector<double> deviations;  // sup of |g - delta| + |x||dg| + |x|^2|ddg| on each sphere
  std::vector<double> constants;   // deviation * r^q_declared
  double fitted_q = 0.0;
  double declared_q = 0.0;
  bool exactly_flat = false;
  bool pass = false;
  std::string summary;
};

// Catalog: euclidean, schwarzschild_isotropic, schwarzschild_standard,
// conformally_flat, perturbed_flat. Recognized params: n (dimension, default
// 3), m (mass), q (decay exponent), c, pole_x/pole_y/pole_z, mirror, exp_amp
// (conformal factor), eps (perturbation amplitude).
MetricSpec builtin_metric(const std::string& name, const ParamMap& params = {});
std::vector<std::string> builtin_metric_names();

// A metric given by arbitrary closed-form components (used for re-charted
// flat space in tests and for user metrics).
MetricSpec closed_form_metric(std::string name, int dim, MetricSpec::ComponentFn fn,
                              MetricSpec::DomainFn domain = {}, double decay_q = 1.0);

// Tabulated metric from a grid (components must be n(n+1)/2).
MetricSpec tabulated_metric(std::string name, const GridData& grid, double decay_q = 1.0);

MetricJet metric_jet(const MetricSpec& spec, const Point& p,
                     DerivativeMode mode = DerivativeMode::Analytic);
// Default finite-difference step: 1e-3 |x| clamped to [1e-5, 1e-1].
double default_fd_step(const Vec& x);
MetricJet metric_jet_fd(const MetricSpec& spec, const Point& p, double step);

DecayReport decay_report(const MetricSpec& spec, const std::vector<double>& radii,
                         int resolution = 8);

// Minimum resolution accepted by sphere_quadrature.
inline constexpr int kMinSphereResolution = 2;

// Product rule on the sphere of radius r in R^n: Gauss-Gegenbauer nodes in the
// polar angle cosine (Gauss-Legendre for n = 3) times a uniform rule in
// longitude, recursively for n > 3. Exact for polynomials of degree
// < 2 * resolution on the sphere.
SphereQuadrature sphere_quadrature(double r, int resolution, int dim = 3);

// Area of the unit sphere S^{n-1} in R^n.
double unit_sphere_area(int dim);

}  // namespace staticgeo
