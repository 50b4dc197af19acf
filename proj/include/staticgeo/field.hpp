#pragma once

// Scalar fields on a chart: candidate static potentials and boundary data.

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>

#include "staticgeo/grid.hpp"
#include "staticgeo/jet.hpp"
#include "staticgeo/types.hpp"

namespace staticgeo {

struct FieldJet {
  double value = 0.0;
  Vec grad;  // partials with respect to chart coordinates
  Mat hess;  // second partials
};

enum class FieldKind { ClosedForm, Tabulated, TabulatedSpherical, ValueOnly };

// A C^2 scalar field. Closed-form fields are templates evaluated on jets;
// tabulated fields interpolate a uniform grid with cubic splines, either in
// Cartesian chart coordinates or in (log rho, theta, phi) about the origin
// (the layout produced by the annulus solver).
class ScalarFieldSpec {
 public:
  using JetFn = std::function<Jet(std::span<const Jet>)>;

  static ScalarFieldSpec closed_form(std::string name, int dim, JetFn fn);
  static ScalarFieldSpec tabulated(std::string name, std::shared_ptr<const CubicSplineGrid> grid);
  // Spline over (xi = log rho, theta on the doubled circle, phi); see annulus solver.
  static ScalarFieldSpec tabulated_spherical(std::string name,
                                             std::shared_ptr<const CubicSplineGrid> grid,
                                             double rho_min, double rho_max);
  // Value-only fields cannot supply the derivatives the curvature engine needs.
  static ScalarFieldSpec value_only(std::string name, int dim,
                                    std::function<double(const Vec&)> fn);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  FieldKind kind() const { return kind_; }
  bool has_second_derivatives() const { return kind_ != FieldKind::ValueOnly; }
  // Name of the metric this field was built for (empty when generic).
  const std::string& metric_name() const { return metric_name_; }
  ScalarFieldSpec with_metric_name(std::string name) const;

  double value(const Vec& x) const;
  FieldJet evaluate(const Vec& x) const;
  // Derivatives as a jet in the chart coordinates.
  Jet jet(const Vec& x) const;

  // c * V, sharing the underlying representation.
  ScalarFieldSpec scaled(double c) const;

  // Radial extent of spherical tabulations (0, inf for other kinds).
  double rho_min() const { return rho_min_; }
  double rho_max() const { return rho_max_; }

 private:
  std::string name_;
  std::string metric_name_;
  int dim_ = 3;
  FieldKind kind_ = FieldKind::ClosedForm;
  double scale_ = 1.0;
  JetFn fn_;
  std::function<double(const Vec&)> value_fn_;
  std::shared_ptr<const CubicSplineGrid> grid_;
  double rho_min_ = 0.0;
  double rho_max_ = std::numeric_limits<double>::infinity();
};

// Common fields.
ScalarFieldSpec constant_field(int dim, double c);
ScalarFieldSpec coordinate_field(int dim, int axis);  // V = x^axis (0-based)
ScalarFieldSpec linear_field(const Vec& a, double c = 0.0);  // V = a . x + c

// Jets of the chart coordinates at x (one independent variable per axis).
std::vector<Jet> coordinate_jets(const Vec& x);

}  // namespace staticgeo
