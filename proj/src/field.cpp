#include "staticgeo/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "staticgeo/error.hpp"

namespace staticgeo {

std::vector<Jet> coordinate_jets(const Vec& x) {
  const int n = static_cast<int>(x.size());
  std::vector<Jet> xs;
  xs.reserve(n);
  for (int i = 0; i < n; ++i) xs.push_back(Jet::variable(x[i], i, n));
  return xs;
}

ScalarFieldSpec ScalarFieldSpec::closed_form(std::string name, int dim, JetFn fn) {
  ScalarFieldSpec f;
  f.name_ = std::move(name);
  f.dim_ = dim;
  f.kind_ = FieldKind::ClosedForm;
  f.fn_ = std::move(fn);
  return f;
}

ScalarFieldSpec ScalarFieldSpec::tabulated(std::string name,
                                           std::shared_ptr<const CubicSplineGrid> grid) {
  if (grid->components() != 1)
    throw Error(ErrorKind::InvalidArgument, "scalar field grid must have one component");
  ScalarFieldSpec f;
  f.name_ = std::move(name);
  f.dim_ = grid->dim();
  f.kind_ = FieldKind::Tabulated;
  f.grid_ = std::move(grid);
  return f;
}

ScalarFieldSpec ScalarFieldSpec::tabulated_spherical(std::string name,
                                                     std::shared_ptr<const CubicSplineGrid> grid,
                                                     double rho_min, double rho_max) {
  if (grid->dim() != 3 || grid->components() != 1)
    throw Error(ErrorKind::InvalidArgument, "spherical tabulation must be a 3-d scalar grid");
  ScalarFieldSpec f;
  f.name_ = std::move(name);
  f.dim_ = 3;
  f.kind_ = FieldKind::TabulatedSpherical;
  f.grid_ = std::move(grid);
  f.rho_min_ = rho_min;
  f.rho_max_ = rho_max;
  return f;
}

ScalarFieldSpec ScalarFieldSpec::value_only(std::string name, int dim,
                                            std::function<double(const Vec&)> fn) {
  ScalarFieldSpec f;
  f.name_ = std::move(name);
  f.dim_ = dim;
  f.kind_ = FieldKind::ValueOnly;
  f.value_fn_ = std::move(fn);
  return f;
}

ScalarFieldSpec ScalarFieldSpec::with_metric_name(std::string name) const {
  ScalarFieldSpec f = *this;
  f.metric_name_ = std::move(name);
  return f;
}

ScalarFieldSpec ScalarFieldSpec::scaled(double c) const {
  ScalarFieldSpec f = *this;
  f.scale_ *= c;
  return f;
}

Jet ScalarFieldSpec::jet(const Vec& x) const {
  if (x.size() != dim_) throw Error(ErrorKind::InvalidArgument, "field dimension mismatch");
  switch (kind_) {
    case FieldKind::ClosedForm: {
      const auto xs = coordinate_jets(x);
      return fn_(xs) * scale_;
    }
    case FieldKind::Tabulated: {
      std::array<Jet, 1> out;
      grid_->evaluate(std::span<const double>(x.data(), x.size()), out);
      return out[0] * scale_;
    }
    case FieldKind::TabulatedSpherical: {
      const auto xs = coordinate_jets(x);
      const Jet rho2 = xs[0] * xs[0] + xs[1] * xs[1] + xs[2] * xs[2];
      const Jet cyl = sqrt(xs[0] * xs[0] + xs[1] * xs[1]);
      const std::array<Jet, 3> s = {0.5 * log(rho2), atan2(cyl, xs[2]), atan2(xs[1], xs[0])};
      const double rho = std::sqrt(rho2.value());
      if (rho < rho_min_ * (1.0 - 1e-12) || rho > rho_max_ * (1.0 + 1e-12))
        throw Error(ErrorKind::OutsideDomain, "point outside the tabulated annulus");
      const std::array<double, 3> sv = {
          std::clamp(s[0].value(), std::log(rho_min_), std::log(rho_max_)), s[1].value(),
          s[2].value()};
      std::array<Jet, 1> out;
      grid_->evaluate(sv, out);
      return compose(out[0], s) * scale_;
    }
    case FieldKind::ValueOnly:
      break;
  }
  throw Error(ErrorKind::Precondition, "field '" + name_ + "' has no derivative information");
}

double ScalarFieldSpec::value(const Vec& x) const {
  if (kind_ == FieldKind::ValueOnly) return scale_ * value_fn_(x);
  if (kind_ == FieldKind::ClosedForm) {
    std::vector<Jet> xs(x.data(), x.data() + x.size());
    return scale_ * fn_(xs).value();
  }
  return jet(x).value();
}

FieldJet ScalarFieldSpec::evaluate(const Vec& x) const {
  const Jet j = jet(x);
  FieldJet out;
  out.value = j.value();
  out.grad.resize(dim_);
  out.hess.resize(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    out.grad[i] = j.d(i);
    for (int k = 0; k < dim_; ++k) out.hess(i, k) = j.dd(i, k);
  }
  return out;
}

ScalarFieldSpec constant_field(int dim, double c) {
  return ScalarFieldSpec::closed_form("constant", dim,
                                      [c](std::span<const Jet> x) { return Jet(c) + 0.0 * x[0]; });
}

ScalarFieldSpec coordinate_field(int dim, int axis) {
  if (axis < 0 || axis >= dim) throw Error(ErrorKind::InvalidArgument, "axis out of range");
  return ScalarFieldSpec::closed_form("x" + std::to_string(axis + 1), dim,
                                      [axis](std::span<const Jet> x) { return x[axis]; });
}

ScalarFieldSpec linear_field(const Vec& a, double c) {
  return ScalarFieldSpec::closed_form("linear", static_cast<int>(a.size()),
                                      [a, c](std::span<const Jet> x) {
                                        Jet v = Jet(c) + 0.0 * x[0];
                                        for (int i = 0; i < a.size(); ++i) v += a[i] * x[i];
                                        return v;
                                      });
}

}  // namespace staticgeo
