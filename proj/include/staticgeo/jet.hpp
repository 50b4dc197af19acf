#pragma once

// Second-order forward-mode jets: a value together with its gradient and
// Hessian with respect to a small number of independent variables. Closed-form
// metrics, potentials and embeddings are written once as templates over the
// scalar type and evaluated on jets to obtain exact first and second partials.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace staticgeo {

inline constexpr int kMaxJetVars = 8;

class Jet {
 public:
  Jet() = default;
  Jet(double value) : value_(value) {}  // NOLINT(google-explicit-constructor)

  static Jet variable(double value, int index, int nvars) {
    Jet j(value);
    j.nvars_ = nvars;
    j.grad_[index] = 1.0;
    return j;
  }
  static Jet constant(double value, int nvars) {
    Jet j(value);
    j.nvars_ = nvars;
    return j;
  }

  using Gradient = std::array<double, kMaxJetVars>;
  using Hessian = std::array<std::array<double, kMaxJetVars>, kMaxJetVars>;

  static Jet from_parts(double value, int nvars, const Gradient& g, const Hessian& h) {
    Jet j(value);
    j.nvars_ = nvars;
    j.grad_ = g;
    j.hess_ = h;
    return j;
  }

  double value() const { return value_; }
  double d(int i) const { return grad_[i]; }
  double dd(int i, int j) const { return hess_[i][j]; }
  int nvars() const { return nvars_; }

  // Chain rule for a scalar function with f(a), f'(a), f''(a) given.
  static Jet apply(const Jet& a, double f0, double f1, double f2) {
    Jet r(f0);
    r.nvars_ = a.nvars_;
    const int n = a.nvars_;
    for (int i = 0; i < n; ++i) r.grad_[i] = f1 * a.grad_[i];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        r.hess_[i][j] = f1 * a.hess_[i][j] + f2 * a.grad_[i] * a.grad_[j];
    return r;
  }

  Jet& operator+=(const Jet& b) {
    widen(b);
    value_ += b.value_;
    for (int i = 0; i < nvars_; ++i) {
      grad_[i] += b.grad_[i];
      for (int j = 0; j < nvars_; ++j) hess_[i][j] += b.hess_[i][j];
    }
    return *this;
  }
  Jet& operator-=(const Jet& b) {
    widen(b);
    value_ -= b.value_;
    for (int i = 0; i < nvars_; ++i) {
      grad_[i] -= b.grad_[i];
      for (int j = 0; j < nvars_; ++j) hess_[i][j] -= b.hess_[i][j];
    }
    return *this;
  }
  Jet& operator*=(const Jet& b) {
    widen(b);
    const int n = nvars_;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        hess_[i][j] = hess_[i][j] * b.value_ + b.hess_[i][j] * value_ +
                      grad_[i] * b.grad_[j] + b.grad_[i] * grad_[j];
    for (int i = 0; i < n; ++i) grad_[i] = grad_[i] * b.value_ + b.grad_[i] * value_;
    value_ *= b.value_;
    return *this;
  }
  Jet& operator/=(const Jet& b) {
    const double inv = 1.0 / b.value_;
    return *this *= apply(b, inv, -inv * inv, 2.0 * inv * inv * inv);
  }
  Jet& operator*=(double s) {
    value_ *= s;
    for (int i = 0; i < nvars_; ++i) {
      grad_[i] *= s;
      for (int j = 0; j < nvars_; ++j) hess_[i][j] *= s;
    }
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, const Jet& b) { return a *= b; }
  friend Jet operator/(Jet a, const Jet& b) { return a /= b; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator-(Jet a) { return a *= -1.0; }

 private:
  void widen(const Jet& b) {
    if (b.nvars_ > nvars_) nvars_ = b.nvars_;
  }

  double value_ = 0.0;
  int nvars_ = 0;
  Gradient grad_{};
  Hessian hess_{};
};

inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.value());
  return Jet::apply(a, s, 0.5 / s, -0.25 / (s * a.value()));
}
inline Jet exp(const Jet& a) {
  const double e = std::exp(a.value());
  return Jet::apply(a, e, e, e);
}
inline Jet log(const Jet& a) {
  const double v = a.value();
  return Jet::apply(a, std::log(v), 1.0 / v, -1.0 / (v * v));
}
inline Jet pow(const Jet& a, double p) {
  const double v = a.value();
  const double f0 = std::pow(v, p);
  return Jet::apply(a, f0, p * f0 / v, p * (p - 1.0) * f0 / (v * v));
}
inline Jet sin(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  return Jet::apply(a, s, c, -s);
}
inline Jet cos(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  return Jet::apply(a, c, -s, -c);
}
inline Jet atan2(const Jet& y, const Jet& x) {
  const int n = std::max(x.nvars(), y.nvars());
  const double xv = x.value(), yv = y.value();
  const double r2 = xv * xv + yv * yv;
  Jet::Gradient g{};
  Jet::Hessian h{};
  for (int i = 0; i < n; ++i) g[i] = (xv * y.d(i) - yv * x.d(i)) / r2;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dnum =
          x.d(j) * y.d(i) + xv * y.dd(i, j) - y.d(j) * x.d(i) - yv * x.dd(i, j);
      const double dr2 = 2.0 * (xv * x.d(j) + yv * y.d(j));
      h[i][j] = dnum / r2 - g[i] * dr2 / r2;
    }
  return Jet::from_parts(std::atan2(yv, xv), n, g, h);
}

}  // namespace staticgeo

namespace staticgeo {

// Composition F(s(x)): `outer` carries derivatives with respect to s, `inner[a]`
// carries s_a with derivatives with respect to x.
template <class InnerRange>
Jet compose(const Jet& outer, const InnerRange& inner) {
  const int ns = static_cast<int>(std::size(inner));
  const int nx = inner[0].nvars();
  Jet::Gradient g{};
  Jet::Hessian h{};
  for (int i = 0; i < nx; ++i)
    for (int a = 0; a < ns; ++a) g[i] += outer.d(a) * inner[a].d(i);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nx; ++j) {
      double acc = 0.0;
      for (int a = 0; a < ns; ++a) {
        acc += outer.d(a) * inner[a].dd(i, j);
        for (int b = 0; b < ns; ++b) acc += outer.dd(a, b) * inner[a].d(i) * inner[b].d(j);
      }
      h[i][j] = acc;
    }
  return Jet::from_parts(outer.value(), nx, g, h);
}

}  // namespace staticgeo
