#include "staticgeo/chart_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "staticgeo/error.hpp"

namespace staticgeo {

namespace {

double param(const ParamMap& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

int dimension_param(const ParamMap& params) {
  const double n = param(params, "n", 3.0);
  if (n < 3 || n > kMaxJetVars || n != std::floor(n))
    throw Error(ErrorKind::InvalidArgument, "dimension n must be an integer in [3, 8]");
  return static_cast<int>(n);
}

void check_decay(int n, double q) {
  const double threshold = 0.5 * (n - 2);
  if (!(q > threshold)) {
    std::ostringstream os;
    os << "decay exponent q = " << q << " must exceed (n-2)/2 = " << threshold;
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
}

Jet radius_squared(std::span<const Jet> x) {
  Jet r2 = x[0] * x[0];
  for (std::size_t i = 1; i < x.size(); ++i) r2 += x[i] * x[i];
  return r2;
}

double norm_of(const Vec& x) { return x.norm(); }

// Shared constructor for g = u^{4/(n-2)} delta.
MetricSpec conformally_flat_from(std::string name, int n, ScalarFieldSpec u,
                                 MetricSpec::DomainFn domain) {
  MetricSpec spec;
  spec.name = std::move(name);
  spec.dim = n;
  spec.kind = MetricKind::ConformallyFlat;
  spec.conformal_factor = u;
  const double p = 4.0 / (n - 2);
  spec.components = [u, n, p](std::span<const Jet> x, std::span<Jet> out) {
    // Closed-form factors are jets in x already; evaluate through the field.
    Vec xv(n);
    for (int i = 0; i < n; ++i) xv[i] = x[i].value();
    Jet uj;
    if (x[0].nvars() == 0) {
      uj = Jet(u.value(xv));
    } else {
      uj = u.jet(xv);
    }
    const Jet phi = pow(uj, p);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) out[sym_index(n, i, j)] = (i == j) ? phi : Jet(0.0);
  };
  spec.domain = [u, domain, n](const Vec& x) -> std::optional<std::string> {
    if (domain) {
      if (auto why = domain(x)) return why;
    }
    if (!(u.value(x) > 0.0)) return std::string("conformal factor is not positive");
    (void)n;
    return std::nullopt;
  };
  return spec;
}

}  // namespace

void MetricSpec::check_domain(const Vec& x) const {
  if (x.size() != dim) throw Error(ErrorKind::OutsideDomain, "point has the wrong dimension");
  for (int i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw Error(ErrorKind::OutsideDomain, "point is not finite");
  if (domain) {
    if (auto why = domain(x)) throw Error(ErrorKind::OutsideDomain, "point outside chart: " + *why);
  }
  if (table && !table->contains(std::span<const double>(x.data(), x.size())))
    throw Error(ErrorKind::OutsideDomain, "point outside tabulated grid");
}

void MetricSpec::evaluate_components(const Vec& x, std::span<Jet> out) const {
  if (kind == MetricKind::Tabulated) {
    table->evaluate(std::span<const double>(x.data(), x.size()), out);
    return;
  }
  const auto xs = coordinate_jets(x);
  components(xs, out);
}

Mat MetricSpec::metric_at(const Vec& x) const {
  const int n = dim;
  std::vector<Jet> comps(static_cast<std::size_t>(n * (n + 1) / 2));
  if (kind == MetricKind::Tabulated) {
    table->evaluate(std::span<const double>(x.data(), x.size()), comps);
  } else {
    std::vector<Jet> xs(x.data(), x.data() + x.size());
    components(xs, comps);
  }
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = comps[sym_index(n, i, j)].value();
  return g;
}

MetricSpec closed_form_metric(std::string name, int dim, MetricSpec::ComponentFn fn,
                              MetricSpec::DomainFn domain, double decay_q) {
  MetricSpec spec;
  spec.name = std::move(name);
  spec.dim = dim;
  spec.kind = MetricKind::ClosedForm;
  spec.components = std::move(fn);
  spec.domain = std::move(domain);
  spec.decay_q = decay_q;
  return spec;
}

MetricSpec tabulated_metric(std::string name, const GridData& grid, double decay_q) {
  const int n = grid.dim;
  if (grid.components != n * (n + 1) / 2)
    throw Error(ErrorKind::InvalidArgument, "metric grid needs n(n+1)/2 components");
  check_decay(n, decay_q);
  MetricSpec spec;
  spec.name = std::move(name);
  spec.dim = n;
  spec.kind = MetricKind::Tabulated;
  spec.table = std::make_shared<const CubicSplineGrid>(grid);
  spec.decay_q = decay_q;
  return spec;
}

std::vector<std::string> builtin_metric_names() {
  return {"euclidean", "schwarzschild_isotropic", "schwarzschild_standard", "conformally_flat",
          "perturbed_flat"};
}

MetricSpec builtin_metric(const std::string& name, const ParamMap& params) {
  const int n = dimension_param(params);

  if (name == "euclidean") {
    MetricSpec spec = closed_form_metric(
        "euclidean", n,
        [n](std::span<const Jet> x, std::span<Jet> out) {
          const int nv = x[0].nvars();
          for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
              out[sym_index(n, i, j)] = Jet::constant(i == j ? 1.0 : 0.0, nv);
        },
        {}, param(params, "q", static_cast<double>(n - 2)));
    spec.params = params;
    spec.exact_potential = constant_field(n, 1.0).with_metric_name("euclidean");
    spec.exact_mass = 0.0;
    spec.coordinate_sphere_mean_curvature = [n](double r) { return (n - 1) / r; };
    return spec;
  }

  if (name == "schwarzschild_isotropic") {
    const double m = param(params, "m", 1.0);
    if (!(m > 0.0)) throw Error(ErrorKind::InvalidArgument, "mass m must be positive");
    const double q = param(params, "q", n - 2.0);
    check_decay(n, q);
    const int k = n - 2;
    auto u = ScalarFieldSpec::closed_form("isotropic_factor", n, [m, k](std::span<const Jet> x) {
      return Jet(1.0) + (0.5 * m) * pow(radius_squared(x), -0.5 * k);
    });
    MetricSpec spec = conformally_flat_from(
        "schwarzschild_isotropic", n, u, [](const Vec& x) -> std::optional<std::string> {
          if (norm_of(x) <= 0.0) return std::string("origin is not in the chart");
          return std::nullopt;
        });
    spec.params = params;
    spec.decay_q = q;
    spec.exact_mass = m;
    spec.exact_potential =
        ScalarFieldSpec::closed_form("schwarzschild_isotropic_potential", n,
                                     [m, k](std::span<const Jet> x) {
                                       const Jet w = (0.5 * m) * pow(radius_squared(x), -0.5 * k);
                                       return (Jet(1.0) - w) / (Jet(1.0) + w);
                                     })
            .with_metric_name("schwarzschild_isotropic");
    spec.coordinate_sphere_mean_curvature = [m, n, k](double rho) {
      const double uu = 1.0 + 0.5 * m * std::pow(rho, -k);
      const double du = -0.5 * m * k * std::pow(rho, -k - 1);
      return std::pow(uu, -2.0 / k) * (n - 1) * (1.0 / rho + (2.0 / k) * du / uu);
    };
    return spec;
  }

  if (name == "schwarzschild_standard") {
    const double m = param(params, "m", 1.0);
    if (!(m > 0.0)) throw Error(ErrorKind::InvalidArgument, "mass m must be positive");
    const double q = param(params, "q", n - 2.0);
    check_decay(n, q);
    const int k = n - 2;
    const double horizon = std::pow(2.0 * m, 1.0 / k);
    MetricSpec spec = closed_form_metric(
        "schwarzschild_standard", n,
        [n, m, k](std::span<const Jet> x, std::span<Jet> out) {
          const Jet r2 = radius_squared(x);
          const Jet f = Jet(1.0) - (2.0 * m) * pow(r2, -0.5 * k);
          const Jet c = (Jet(1.0) / f - Jet(1.0)) / r2;
          for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
              Jet gij = c * x[i] * x[j];
              if (i == j) gij += Jet(1.0);
              out[sym_index(n, i, j)] = gij;
            }
        },
        [horizon](const Vec& x) -> std::optional<std::string> {
          if (norm_of(x) <= horizon) return std::string("standard chart requires r > (2m)^{1/(n-2)}");
          return std::nullopt;
        },
        q);
    spec.params = params;
    spec.exact_mass = m;
    spec.exact_potential =
        ScalarFieldSpec::closed_form("schwarzschild_standard_potential", n,
                                     [m, k](std::span<const Jet> x) {
                                       return sqrt(Jet(1.0) - (2.0 * m) * pow(radius_squared(x), -0.5 * k));
                                     })
            .with_metric_name("schwarzschild_standard");
    spec.coordinate_sphere_mean_curvature = [m, n, k](double r) {
      return (n - 1) * std::sqrt(1.0 - 2.0 * m * std::pow(r, -k)) / r;
    };
    return spec;
  }

  if (name == "conformally_flat") {
    const double c = param(params, "c", 0.0);
    const double exp_amp = param(params, "exp_amp", 0.0);
    const bool mirror = param(params, "mirror", 0.0) != 0.0;
    Vec pole = Vec::Zero(n);
    pole[0] = param(params, "pole_x", 0.0);
    pole[1] = param(params, "pole_y", 0.0);
    pole[n - 1] = param(params, "pole_z", 0.0);
    std::vector<Vec> poles = {pole};
    if (mirror) {
      Vec reflected = pole;
      reflected[n - 1] = -reflected[n - 1];
      poles.push_back(reflected);
    }
    const double q = param(params, "q", n - 2.0);
    check_decay(n, q);
    const int k = n - 2;
    auto u = ScalarFieldSpec::closed_form(
        "conformal_factor", n, [c, exp_amp, poles, k, n](std::span<const Jet> x) {
          Jet uj = Jet(1.0) + 0.0 * x[0];
          if (c != 0.0) {
            for (const Vec& p : poles) {
              Jet d2 = (x[0] - Jet(p[0])) * (x[0] - Jet(p[0]));
              for (int i = 1; i < n; ++i) d2 += (x[i] - Jet(p[i])) * (x[i] - Jet(p[i]));
              uj += c * pow(d2, -0.5 * k);
            }
          }
          if (exp_amp != 0.0) uj += exp_amp * exp(-1.0 * sqrt(radius_squared(x)));
          return uj;
        });
    MetricSpec spec = conformally_flat_from(
        "conformally_flat", n, u,
        [poles, c](const Vec& x) -> std::optional<std::string> {
          if (c != 0.0)
            for (const Vec& p : poles)
              if ((x - p).norm() < 1e-9) return std::string("point coincides with a pole");
          return std::nullopt;
        });
    spec.params = params;
    spec.decay_q = q;
    spec.exact_mass = exp_amp == 0.0 ? std::optional<double>(2.0 * c * static_cast<double>(poles.size()))
                                     : std::nullopt;
    if (c == 0.0 && exp_amp == 0.0) spec.exact_potential = constant_field(n, 1.0);
    return spec;
  }

  if (name == "perturbed_flat") {
    const double q = param(params, "q", 1.0);
    check_decay(n, q);
    const double eps = param(params, "eps", 0.1);
    if (!(std::abs(eps) < 1.0)) throw Error(ErrorKind::InvalidArgument, "|eps| must be below 1");
    MetricSpec spec = closed_form_metric(
        "perturbed_flat", n,
        [n, q, eps](std::span<const Jet> x, std::span<Jet> out) {
          const Jet s = Jet(1.0) + radius_squared(x);
          const Jet w = eps * pow(s, -0.5 * q);
          for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
              Jet gij = w * x[i] * x[j] / s;
              if (i == j) gij += Jet(1.0) + (i % 2 == 0 ? 1.0 : -0.5) * w;
              out[sym_index(n, i, j)] = gij;
            }
        },
        {}, q);
    spec.params = params;
    return spec;
  }

  throw Error(ErrorKind::UnknownName, "unknown metric '" + name + "'");
}

namespace {

MetricJet finish_jet(MetricJet jet) {
  Eigen::LLT<Mat> llt(jet.g);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::Degenerate, "metric is not positive definite at the point");
  jet.g_inv = llt.solve(Mat::Identity(jet.dim, jet.dim));
  jet.g_inv = 0.5 * (jet.g_inv + jet.g_inv.transpose()).eval();
  const Mat& l = llt.matrixL();
  double det_sqrt = 1.0;
  for (int i = 0; i < jet.dim; ++i) det_sqrt *= l(i, i);
  jet.sqrt_det = det_sqrt;
  return jet;
}

}  // namespace

double default_fd_step(const Vec& x) { return std::clamp(1e-3 * x.norm(), 1e-5, 1e-1); }

MetricJet metric_jet(const MetricSpec& spec, const Point& p, DerivativeMode mode) {
  if (mode == DerivativeMode::FiniteDifference)
    return metric_jet_fd(spec, p, default_fd_step(p.coords));
  spec.check_domain(p.coords);
  const int n = spec.dim;
  std::vector<Jet> comps(static_cast<std::size_t>(n * (n + 1) / 2));
  spec.evaluate_components(p.coords, comps);
  MetricJet jet;
  jet.dim = n;
  jet.source = DerivativeMode::Analytic;
  jet.g.resize(n, n);
  jet.dg.assign(n, Mat(n, n));
  jet.ddg.assign(static_cast<std::size_t>(n * n), Mat(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Jet& c = comps[sym_index(n, i, j)];
      jet.g(i, j) = c.value();
      for (int k = 0; k < n; ++k) {
        jet.dg[k](i, j) = c.d(k);
        for (int l = 0; l < n; ++l) jet.ddg[k * n + l](i, j) = 0.5 * (c.dd(k, l) + c.dd(l, k));
      }
    }
  return finish_jet(std::move(jet));
}

MetricJet metric_jet_fd(const MetricSpec& spec, const Point& p, double h) {
  spec.check_domain(p.coords);
  const int n = spec.dim;
  const Vec& x = p.coords;
  static constexpr int kOffsets[4] = {2, 1, -1, -2};
  static constexpr double kFirst[4] = {-1.0, 8.0, -8.0, 1.0};  // / 12h
  MetricJet jet;
  jet.dim = n;
  jet.source = DerivativeMode::FiniteDifference;
  jet.fd_step = h;
  jet.g = spec.metric_at(x);
  jet.dg.assign(n, Mat::Zero(n, n));
  jet.ddg.assign(static_cast<std::size_t>(n * n), Mat::Zero(n, n));
  for (int k = 0; k < n; ++k) {
    Mat samples[4];
    for (int a = 0; a < 4; ++a) {
      Vec y = x;
      y[k] += kOffsets[a] * h;
      samples[a] = spec.metric_at(y);
    }
    jet.dg[k] = (kFirst[0] * samples[0] + kFirst[1] * samples[1] + kFirst[2] * samples[2] +
                 kFirst[3] * samples[3]) /
                (12.0 * h);
    jet.ddg[k * n + k] = (-samples[0] + 16.0 * samples[1] - 30.0 * jet.g + 16.0 * samples[2] -
                          samples[3]) /
                         (12.0 * h * h);
    for (int l = k + 1; l < n; ++l) {
      Mat acc = Mat::Zero(n, n);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          Vec y = x;
          y[k] += kOffsets[a] * h;
          y[l] += kOffsets[b] * h;
          acc += kFirst[a] * kFirst[b] * spec.metric_at(y);
        }
      acc /= 144.0 * h * h;
      jet.ddg[k * n + l] = acc;
      jet.ddg[l * n + k] = acc;
    }
  }
  return finish_jet(std::move(jet));
}

double unit_sphere_area(int dim) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

namespace {

// Gauss rule for the weight (1 - t^2)^{lambda - 1/2} on [-1, 1] (Golub-Welsch).
void gegenbauer_rule(double lambda, int count, std::vector<double>& nodes,
                     std::vector<double>& weights) {
  Mat jacobi = Mat::Zero(count, count);
  for (int k = 1; k < count; ++k) {
    const double beta = k * (k + 2.0 * lambda - 1.0) / (4.0 * (k + lambda) * (k + lambda - 1.0));
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(beta);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
  const double mu0 =
      std::sqrt(std::numbers::pi) * std::tgamma(lambda + 0.5) / std::tgamma(lambda + 1.0);
  nodes.resize(count);
  weights.resize(count);
  for (int i = 0; i < count; ++i) {
    nodes[i] = eig.eigenvalues()[i];
    const double v0 = eig.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

// Nodes/weights on the unit sphere S^{dim-1} in R^dim.
void unit_sphere_rule(int dim, int resolution, std::vector<Vec>& nodes,
                      std::vector<double>& weights) {
  if (dim == 2) {
    const int count = 2 * resolution;
    for (int j = 0; j < count; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / count;
      Vec v(2);
      v << std::cos(phi), std::sin(phi);
      nodes.push_back(v);
      weights.push_back(2.0 * std::numbers::pi / count);
    }
    return;
  }
  std::vector<Vec> sub_nodes;
  std::vector<double> sub_weights;
  unit_sphere_rule(dim - 1, resolution, sub_nodes, sub_weights);
  std::vector<double> t, w;
  gegenbauer_rule(0.5 * (dim - 2), resolution, t, w);
  for (int i = 0; i < resolution; ++i) {
    const double s = std::sqrt(std::max(0.0, 1.0 - t[i] * t[i]));
    for (std::size_t j = 0; j < sub_nodes.size(); ++j) {
      Vec v(dim);
      v.head(dim - 1) = s * sub_nodes[j];
      v[dim - 1] = t[i];
      nodes.push_back(v);
      weights.push_back(w[i] * sub_weights[j]);
    }
  }
}

}  // namespace

SphereQuadrature sphere_quadrature(double r, int resolution, int dim) {
  if (resolution < kMinSphereResolution)
    throw Error(ErrorKind::InvalidArgument, "sphere quadrature resolution below minimum (2)");
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "sphere radius must be positive");
  if (dim < 2) throw Error(ErrorKind::InvalidArgument, "sphere dimension must be at least 2");
  SphereQuadrature quad;
  quad.dim = dim;
  quad.radius = r;
  quad.resolution = resolution;
  std::vector<Vec> nodes;
  std::vector<double> weights;
  unit_sphere_rule(dim, resolution, nodes, weights);
  const double scale = std::pow(r, dim - 1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    quad.nodes.push_back(r * nodes[i]);
    quad.weights.push_back(scale * weights[i]);
  }
  return quad;
}

DecayReport decay_report(const MetricSpec& spec, const std::vector<double>& radii,
                         int resolution) {
  if (radii.size() < 3) throw Error(ErrorKind::InvalidArgument, "decay report needs at least 3 radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 1.0)) throw Error(ErrorKind::InvalidArgument, "radii must exceed 1");
    if (i > 0 && !(radii[i] > radii[i - 1]))
      throw Error(ErrorKind::InvalidArgument, "radii must be increasing");
  }
  const int n = spec.dim;
  DecayReport report;
  report.radii = radii;
  report.declared_q = spec.decay_q;
  for (double r : radii) {
    const SphereQuadrature quad = sphere_quadrature(r, resolution, n);
    double worst = 0.0;
    for (const Vec& x : quad.nodes) {
      const MetricJet jet = metric_jet(spec, Point{x});
      const double dev0 = (jet.g - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
      double dev1 = 0.0, dev2 = 0.0;
      for (int k = 0; k < n; ++k) {
        dev1 = std::max(dev1, jet.dg[k].cwiseAbs().maxCoeff());
        for (int l = 0; l < n; ++l) dev2 = std::max(dev2, jet.d2(k, l).cwiseAbs().maxCoeff());
      }
      worst = std::max(worst, dev0 + r * dev1 + r * r * dev2);
    }
    report.deviations.push_back(worst);
    report.constants.push_back(worst * std::pow(r, spec.decay_q));
  }
  const double max_dev = *std::max_element(report.deviations.begin(), report.deviations.end());
  if (max_dev <= 1e-14) {
    report.exactly_flat = true;
    report.fitted_q = std::numeric_limits<double>::infinity();
    report.pass = true;
    report.summary = "exactly flat";
    return report;
  }
  // Least-squares fit of log(deviation) = a - q log r (+ c / r when at least
  // four radii are given, absorbing the next order of the asymptotic expansion).
  const std::size_t m = radii.size();
  const int cols = m >= 4 ? 3 : 2;
  Mat design(static_cast<Eigen::Index>(m), cols);
  Vec rhs(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log(radii[i]);
    if (cols == 3) design(i, 2) = radii[0] / radii[i];
    rhs[i] = std::log(std::max(report.deviations[i], 1e-300));
  }
  const Vec coef = design.colPivHouseholderQr().solve(rhs);
  const double slope = coef[1];
  report.fitted_q = -slope;
  report.pass = report.fitted_q >= spec.decay_q - 0.05;
  std::ostringstream os;
  os << "fitted q = " << report.fitted_q << " against declared q = " << spec.decay_q
     << (report.pass ? " (pass)" : " (fail)");
  report.summary = os.str();
  return report;
}

}  // namespace staticgeo
