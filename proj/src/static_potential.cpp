#include "staticgeo/static_potential.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "staticgeo/error.hpp"

namespace staticgeo {

StaticResidual static_residual_from(const CurvatureBundle& b, const HessianData& h) {
  const int n = b.dim;
  StaticResidual r;
  r.laplacian = h.laplacian;
  r.scalar_curvature = b.scalar;
  r.value = h.value;
  r.tensor = -h.laplacian * b.g + h.hessian - h.value * b.ric;
  const Mat mixed = b.g_inv * r.tensor;
  r.norm = std::sqrt(std::max(0.0, (b.g_inv * r.tensor * b.g_inv).cwiseProduct(r.tensor).sum()));
  r.trace = mixed.trace();
  r.trace_expected = -(n - 1) * h.laplacian - b.scalar * h.value;
  return r;
}

StaticResidual static_residual(const MetricSpec& spec, const ScalarFieldSpec& v, const Point& p) {
  if (!v.has_second_derivatives())
    throw Error(ErrorKind::Precondition, "potential '" + v.name() + "' lacks second derivatives");
  if (v.dim() != spec.dim) throw Error(ErrorKind::InvalidArgument, "field and metric dimensions differ");
  const CurvatureBundle b = curvature_bundle(spec, p);
  return static_residual_from(b, hessian_from(b, v.evaluate(p.coords)));
}

ScalarConstancyReport scalar_constancy_check(const MetricSpec& spec, const std::vector<Point>& samples,
                                             double tolerance) {
  if (samples.size() < 2) throw Error(ErrorKind::InvalidArgument, "scalar constancy needs at least 2 samples");
  ScalarConstancyReport report;
  report.tolerance = tolerance;
  for (const Point& p : samples) report.values.push_back(curvature_bundle(spec, p).scalar);
  for (double r : report.values)
    report.max_deviation = std::max(report.max_deviation, std::abs(r - report.values.front()));
  report.flagged = report.max_deviation > tolerance;
  return report;
}

namespace {

// Interior sample points of an annulus, away from the polar axis.
std::vector<Point> annulus_samples(double rho_inner, double rho_outer, int radii) {
  std::vector<Point> points;
  const SphereQuadrature dirs = sphere_quadrature(1.0, 3);
  for (int i = 1; i <= radii; ++i) {
    const double xi = std::log(rho_inner) + (std::log(rho_outer) - std::log(rho_inner)) * i / (radii + 1);
    for (const Vec& d : dirs.nodes) points.push_back(Point{std::exp(xi) * d});
  }
  return points;
}

Vec spherical_point(double rho, double theta, double phi) {
  Vec x(3);
  x << rho * std::sin(theta) * std::cos(phi), rho * std::sin(theta) * std::sin(phi), rho * std::cos(theta);
  return x;
}

}  // namespace

AnnulusSolution solve_harmonic_annulus(const MetricSpec& spec, const ScalarFieldSpec& inner_bc,
                                       const ScalarFieldSpec& outer_bc, const AnnulusGrid& grid,
                                       const AnnulusOptions& options) {
  if (spec.dim != 3) throw Error(ErrorKind::InvalidArgument, "annulus solver supports n = 3");
  if (!(grid.rho_inner > 0.0) || !(grid.rho_outer > grid.rho_inner))
    throw Error(ErrorKind::InvalidArgument, "annulus radii must satisfy 0 < inner < outer");
  if (grid.n_xi < 3 || grid.n_theta < 2 || grid.n_phi < 4 || grid.n_phi % 2 != 0)
    throw Error(ErrorKind::InvalidArgument, "annulus grid too coarse (n_xi >= 3, n_theta >= 2, even n_phi >= 4)");

  AnnulusSolution sol;
  sol.grid = grid;

  // The trace of the static equation reduces to Delta V = 0 only when R = 0.
  for (const Point& p : annulus_samples(grid.rho_inner, grid.rho_outer, 3))
    sol.max_scalar_curvature = std::max(sol.max_scalar_curvature, std::abs(curvature_bundle(spec, p).scalar));
  if (sol.max_scalar_curvature > options.scalar_flat_tolerance)
    throw Error(ErrorKind::Precondition, "metric is not scalar flat on the annulus (|R| = " +
                                             std::to_string(sol.max_scalar_curvature) + ")");

  const int nx = grid.n_xi, nt = grid.n_theta, np = grid.n_phi;
  const double xi0 = std::log(grid.rho_inner), xi1 = std::log(grid.rho_outer);
  const double hx = (xi1 - xi0) / nx, ht = std::numbers::pi / nt, hp = 2.0 * std::numbers::pi / np;
  auto theta_of = [&](int j) { return (j + 0.5) * ht; };
  auto phi_of = [&](int k) { return k * hp; };

  // Boundary data on both spheres.
  std::vector<double> inner(static_cast<std::size_t>(nt * np)), outer(inner.size());
  for (int j = 0; j < nt; ++j)
    for (int k = 0; k < np; ++k) {
      inner[j * np + k] = inner_bc.value(spherical_point(grid.rho_inner, theta_of(j), phi_of(k)));
      outer[j * np + k] = outer_bc.value(spherical_point(grid.rho_outer, theta_of(j), phi_of(k)));
    }

  const int unknowns = (nx - 1) * nt * np;
  auto index = [&](int i, int j, int k) { return ((i - 1) * nt + j) * np + k; };
  // Map a possibly out-of-range (j, k) through the poles: f(-theta, phi) = f(theta, phi + pi).
  auto wrap = [&](int j, int k, int& jj, int& kk) {
    kk = k;
    jj = j;
    if (jj < 0) {
      jj = -1 - jj;
      kk += np / 2;
    } else if (jj >= nt) {
      jj = 2 * nt - 1 - jj;
      kk += np / 2;
    }
    kk = ((kk % np) + np) % np;
  };

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(unknowns) * 19);
  Vec rhs = Vec::Zero(unknowns);

  for (int i = 1; i < nx; ++i)
    for (int j = 0; j < nt; ++j)
      for (int k = 0; k < np; ++k) {
        const int row = index(i, j, k);
        const Vec x = spherical_point(std::exp(xi0 + i * hx), theta_of(j), phi_of(k));
        const MetricJet jet = metric_jet(spec, Point{x});
        const std::vector<Mat> gamma = christoffel_symbols(jet);
        const auto xs = coordinate_jets(x);
        const Jet cyl = sqrt(xs[0] * xs[0] + xs[1] * xs[1]);
        const std::array<Jet, 3> s = {0.5 * log(xs[0] * xs[0] + xs[1] * xs[1] + xs[2] * xs[2]),
                                      atan2(cyl, xs[2]), atan2(xs[1], xs[0])};
        Mat S(3, 3);  // S(i, a) = d s_a / d x^i
        for (int a = 0; a < 3; ++a)
          for (int m = 0; m < 3; ++m) S(m, a) = s[a].d(m);
        Vec contracted = Vec::Zero(3);  // g^ij Gamma^k_ij
        for (int m = 0; m < 3; ++m) contracted[m] = jet.g_inv.cwiseProduct(gamma[m]).sum();
        const Mat C = S.transpose() * jet.g_inv * S;
        Vec D(3);
        for (int a = 0; a < 3; ++a) {
          double second = 0.0;
          for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) second += jet.g_inv(p, q) * s[a].dd(p, q);
          D[a] = second - contracted.dot(S.col(a));
        }

        auto add = [&](int di, int dj, int dk, double w) {
          int jj, kk;
          wrap(j + dj, k + dk, jj, kk);
          const int ii = i + di;
          if (ii == 0) {
            rhs[row] -= w * inner[jj * np + kk];
          } else if (ii == nx) {
            rhs[row] -= w * outer[jj * np + kk];
          } else {
            triplets.emplace_back(row, index(ii, jj, kk), w);
          }
        };
        const double h[3] = {hx, ht, hp};
        // Second derivatives along each axis and first derivatives.
        for (int a = 0; a < 3; ++a) {
          int e[3] = {0, 0, 0};
          e[a] = 1;
          const double w2 = C(a, a) / (h[a] * h[a]);
          const double w1 = D[a] / (2.0 * h[a]);
          add(e[0], e[1], e[2], w2 + w1);
          add(-e[0], -e[1], -e[2], w2 - w1);
          add(0, 0, 0, -2.0 * w2);
        }
        // Mixed derivatives (factor 2 C^ab for a < b).
        for (int a = 0; a < 3; ++a)
          for (int b = a + 1; b < 3; ++b) {
            const double w = 2.0 * C(a, b) / (4.0 * h[a] * h[b]);
            for (int sa : {-1, 1})
              for (int sb : {-1, 1}) {
                int e[3] = {0, 0, 0};
                e[a] = sa;
                e[b] = sb;
                add(e[0], e[1], e[2], sa * sb * w);
              }
          }
      }

  Eigen::SparseMatrix<double, Eigen::RowMajor> A(unknowns, unknowns);
  A.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::IncompleteLUT<double>> solver;
  solver.preconditioner().setDroptol(1e-5);
  solver.preconditioner().setFillfactor(20);
  solver.setTolerance(options.solver_tolerance);
  solver.setMaxIterations(options.max_iterations);
  solver.compute(A);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::NonConvergence, "annulus preconditioner factorization failed");
  // Start from the linear interpolation in xi between the boundary data.
  Vec guess(unknowns);
  for (int i = 1; i < nx; ++i)
    for (int j = 0; j < nt; ++j)
      for (int k = 0; k < np; ++k) {
        const double t = static_cast<double>(i) / nx;
        guess[index(i, j, k)] = (1 - t) * inner[j * np + k] + t * outer[j * np + k];
      }
  const Vec v = solver.solveWithGuess(rhs, guess);
  sol.iterations = static_cast<int>(solver.iterations());
  sol.solver_error = solver.error();
  if (solver.info() != Eigen::Success || !(sol.solver_error <= std::max(options.solver_tolerance, 1e-8)))
    throw Error(ErrorKind::NonConvergence, "annulus linear solve did not converge");
  sol.discrete_residual = (A * v - rhs).cwiseAbs().maxCoeff();

  // Outer normalization (recorded; applied only on request).
  for (double o : outer) sol.outer_sup_norm = std::max(sol.outer_sup_norm, std::abs(o));
  if (options.normalize_outer && sol.outer_sup_norm > 0.0) sol.normalization = 1.0 / sol.outer_sup_norm;

  // Tabulate on (xi, theta on the doubled circle, phi).
  GridData data;
  data.dim = 3;
  data.shape = {nx + 1, 2 * nt, np};
  data.lo = {xi0, theta_of(0), 0.0};
  data.hi = {xi1, theta_of(0) + (2 * nt - 1) * ht, (np - 1) * hp};
  data.components = 1;
  data.values.resize(data.node_count());
  auto node_value = [&](int i, int j, int k) {
    if (i == 0) return inner[j * np + k];
    if (i == nx) return outer[j * np + k];
    return v[index(i, j, k)];
  };
  std::size_t at = 0;
  for (int i = 0; i <= nx; ++i)
    for (int jj = 0; jj < 2 * nt; ++jj)
      for (int k = 0; k < np; ++k) {
        int j = jj, kk = k;
        if (jj >= nt) wrap(jj, k, j, kk);
        data.values[at++] = sol.normalization * node_value(i, j, kk);
      }
  auto spline = std::make_shared<const CubicSplineGrid>(data, std::vector<bool>{false, true, true});
  sol.field = ScalarFieldSpec::tabulated_spherical("annulus_solution", spline, grid.rho_inner, grid.rho_outer)
                  .with_metric_name(spec.name);

  for (int j = 0; j < nt; ++j)
    for (int k = 0; k < np; ++k) {
      sol.boundary_mismatch = std::max(
          sol.boundary_mismatch,
          std::abs(sol.field.value(spherical_point(grid.rho_inner, theta_of(j), phi_of(k))) -
                   sol.normalization * inner[j * np + k]));
      sol.boundary_mismatch = std::max(
          sol.boundary_mismatch,
          std::abs(sol.field.value(spherical_point(grid.rho_outer, theta_of(j), phi_of(k))) -
                   sol.normalization * outer[j * np + k]));
    }
  for (const Point& p : annulus_samples(grid.rho_inner, grid.rho_outer, 3))
    sol.max_static_residual = std::max(sol.max_static_residual, static_residual(spec, sol.field, p).norm);
  return sol;
}

Vec ZeroSetGraph::point(std::size_t i) const {
  const Vec& base = base_points[i];
  const int n = static_cast<int>(base.size()) + 1;
  Vec x(n);
  for (int a = 0, b = 0; a < n; ++a) x[a] = (a == axis) ? heights[i] : base[b++];
  return x;
}

namespace {

struct RootResult {
  double t;
  double value;
};

Vec gradient_of(const ScalarFieldSpec& v, const Vec& x) {
  if (v.has_second_derivatives()) return v.evaluate(x).grad;
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (v.value(a) - v.value(b)) / (2 * h);
  }
  return g;
}

// Bisection to machine resolution followed by one safeguarded Newton step.
template <class F, class DF>
RootResult refine_root(const F& f, const DF& df, double a, double b, double fa) {
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    if (fm == 0.0) return {mid, 0.0};
    if ((fm < 0) == (fa < 0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  double t = 0.5 * (a + b);
  double ft = f(t);
  const double slope = df(t);
  if (slope != 0.0) {
    const double tn = t - ft / slope;
    const double fn = f(tn);
    if (std::abs(fn) < std::abs(ft)) {
      t = tn;
      ft = fn;
    }
  }
  return {t, ft};
}

PowerBound fit_power(const std::vector<double>& r, const std::vector<double>& y) {
  PowerBound fit;
  double ymax = 0.0;
  for (double v : y) ymax = std::max(ymax, v);
  if (ymax <= 1e-14) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] <= 0.0 || y[i] <= 1e-14 * ymax) continue;
    const double lx = std::log(r[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  const double denom = m * sxx - sx * sx;
  fit.exponent = (m >= 2 && denom > 1e-12 * std::max(1.0, m * sxx)) ? (m * sxy - sx * sy) / denom : 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] > 0.0) fit.constant = std::max(fit.constant, y[i] / std::pow(r[i], fit.exponent));
  return fit;
}

}  // namespace

std::vector<ZeroSetGraph> zero_set_extract(const ScalarFieldSpec& v, const ZeroSetWindow& window, int axis) {
  const int n = v.dim();
  if (axis < 0) axis = n - 1;
  if (axis >= n) throw Error(ErrorKind::InvalidArgument, "graph direction out of range");
  if (static_cast<int>(window.lo.size()) != n - 1 || static_cast<int>(window.hi.size()) != n - 1)
    throw Error(ErrorKind::InvalidArgument, "window must have n - 1 transverse bounds");
  if (window.samples < 1 || window.scan_samples < 2 || !(window.search_hi > window.search_lo))
    throw Error(ErrorKind::InvalidArgument, "invalid zero-set window");

  std::vector<ZeroSetGraph> graphs;
  const int lines = static_cast<int>(std::pow(window.samples, n - 1));
  for (int line = 0; line < lines; ++line) {
    Vec base(n - 1);
    int rem = line;
    for (int a = n - 2; a >= 0; --a) {
      const int idx = rem % window.samples;
      rem /= window.samples;
      base[a] = window.samples == 1
                    ? 0.5 * (window.lo[a] + window.hi[a])
                    : window.lo[a] + (window.hi[a] - window.lo[a]) * idx / (window.samples - 1);
    }
    auto embed = [&](double t) {
      Vec x(n);
      for (int a = 0, b = 0; a < n; ++a) x[a] = (a == axis) ? t : base[b++];
      return x;
    };
    auto f = [&](double t) { return v.value(embed(t)); };
    auto df = [&](double t) { return gradient_of(v, embed(t))[axis]; };

    std::vector<RootResult> roots;
    const double dt = (window.search_hi - window.search_lo) / window.scan_samples;
    double t_prev = window.search_lo, f_prev = f(t_prev);
    for (int c = 1; c <= window.scan_samples; ++c) {
      const double t = window.search_lo + c * dt;
      const double ft = f(t);
      if (f_prev == 0.0) {
        roots.push_back({t_prev, 0.0});
      } else if ((ft < 0) != (f_prev < 0) && ft != 0.0) {
        roots.push_back(refine_root(f, df, t_prev, t, f_prev));
      } else if (ft == 0.0 && c == window.scan_samples) {
        roots.push_back({t, 0.0});
      }
      t_prev = t;
      f_prev = ft;
    }
    if (roots.empty())
      throw Error(ErrorKind::Precondition, "potential is sign-definite on a scan line (no root)");

    for (std::size_t c = 0; c < roots.size(); ++c) {
      const Vec x = embed(roots[c].t);
      const Vec grad = gradient_of(v, x);
      const double vertical = grad[axis];
      if (std::abs(vertical) <= 1e-10 * std::max(1.0, grad.norm()))
        throw Error(ErrorKind::Degenerate, "transversality failure: vanishing derivative along the graph direction");
      if (graphs.size() <= c) {
        graphs.emplace_back();
        graphs.back().component = static_cast<int>(c);
        graphs.back().axis = axis;
        graphs.back().field = v;
      }
      ZeroSetGraph& g = graphs[c];
      Vec gf(n - 1);
      for (int a = 0, b = 0; a < n; ++a)
        if (a != axis) gf[b++] = -grad[a] / vertical;
      g.base_points.push_back(base);
      g.heights.push_back(roots[c].t);
      g.gradients.push_back(gf);
      g.root_tolerance = std::max(g.root_tolerance, std::abs(roots[c].value));
      g.gradient_bound = std::max(g.gradient_bound, gf.norm());
    }
  }

  for (ZeroSetGraph& g : graphs) {
    std::vector<double> r, fabs, gabs;
    for (std::size_t i = 0; i < g.base_points.size(); ++i) {
      r.push_back(g.base_points[i].norm());
      fabs.push_back(std::abs(g.heights[i]));
      gabs.push_back(g.gradients[i].norm());
    }
    g.height_fit = fit_power(r, fabs);
    g.gradient_fit = fit_power(r, gabs);
    g.gradient_fit.exponent += 1.0;  // stored as gamma in |grad f| <= C |x'|^(gamma - 1)
  }
  return graphs;
}

std::vector<Point> radial_zero_set(const ScalarFieldSpec& v, const std::vector<Vec>& directions,
                                   double rho_lo, double rho_hi) {
  if (!(rho_hi > rho_lo) || !(rho_lo > 0.0)) throw Error(ErrorKind::InvalidArgument, "invalid radial range");
  std::vector<Point> points;
  for (const Vec& d0 : directions) {
    const Vec d = d0.normalized();
    auto f = [&](double t) { return v.value(t * d); };
    auto df = [&](double t) { return gradient_of(v, t * d).dot(d); };
    const int cells = 200;
    const double dt = (rho_hi - rho_lo) / cells;
    double t_prev = rho_lo, f_prev = f(t_prev);
    bool found = false;
    for (int c = 1; c <= cells && !found; ++c) {
      const double t = rho_lo + c * dt;
      const double ft = f(t);
      if (f_prev == 0.0) {
        points.push_back(Point{t_prev * d});
        found = true;
      } else if ((ft < 0) != (f_prev < 0) || ft == 0.0) {
        const RootResult root = ft == 0.0 ? RootResult{t, 0.0} : refine_root(f, df, t_prev, t, f_prev);
        points.push_back(Point{root.t * d});
        found = true;
      }
      t_prev = t;
      f_prev = ft;
    }
    if (!found) throw Error(ErrorKind::Precondition, "potential is sign-definite along a ray (no root)");
  }
  return points;
}

LevelSetGeometry level_set_geometry_check(const MetricSpec& spec, const ScalarFieldSpec& v,
                                          const std::vector<Point>& points, double tolerance) {
  LevelSetGeometry out;
  out.tolerance = tolerance;
  out.samples = points.size();
  const int n = spec.dim;
  for (const Point& p : points) {
    const CurvatureBundle b = curvature_bundle(spec, p);
    const HessianData h = hessian_from(b, v.evaluate(p.coords));
    const double grad_norm = std::sqrt(std::max(0.0, h.partials.dot(h.gradient)));
    if (!(grad_norm > 1e-12)) throw Error(ErrorKind::Degenerate, "level set is singular (grad V = 0)");
    const Vec nu_up = h.gradient / grad_norm;  // unit normal, index up
    const Vec nu_down = b.g * nu_up;
    const Mat proj = Mat::Identity(n, n) - nu_down * nu_up.transpose();  // P_i^a
    const Mat a = proj * h.hessian * proj.transpose() / grad_norm;
    const double norm2 = (b.g_inv * a * b.g_inv).cwiseProduct(a).sum();
    out.sup_norm_a = std::max(out.sup_norm_a, std::sqrt(std::max(0.0, norm2)));
    out.sup_abs_h = std::max(out.sup_abs_h, std::abs(b.g_inv.cwiseProduct(a).sum()));
    out.max_abs_value = std::max(out.max_abs_value, std::abs(h.value));
  }
  out.pass = out.sup_norm_a <= tolerance;
  return out;
}

LevelSetGeometry level_set_geometry_check(const MetricSpec& spec, const ZeroSetGraph& graph, double tolerance) {
  if (!graph.field) throw Error(ErrorKind::Precondition, "zero-set graph carries no potential");
  std::vector<Point> points;
  for (std::size_t i = 0; i < graph.heights.size(); ++i) points.push_back(Point{graph.point(i)});
  return level_set_geometry_check(spec, *graph.field, points, tolerance);
}

}  // namespace staticgeo
