#include "staticgeo/plateau.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>

#include "staticgeo/asymptotics.hpp"
#include "staticgeo/error.hpp"

namespace staticgeo {

namespace {

constexpr double kPi = std::numbers::pi;

int planar_axis(int axis, int k) { return (axis + 1 + k) % 3; }

void check_domain_shape(const PlateauDomain& d) {
  if (d.axis < 0 || d.axis > 2) throw Error(ErrorKind::InvalidArgument, "graph axis out of range");
  if (d.center.size() != 2 || d.shape.rows() != 2 || d.shape.cols() != 2)
    throw Error(ErrorKind::InvalidArgument, "planar domain needs a 2-vector centre and a 2x2 shape");
  if (!(std::abs(d.shape.determinant()) > 1e-12)) throw Error(ErrorKind::InvalidArgument, "degenerate planar domain");
}

// Cartesian derivative operators on the disk grid: gradient and Hessian in
// the planar coordinates x' = c + L s.
struct GraphOperators {
  Mat g1, g2, h11, h12, h22;
};

GraphOperators graph_operators(const PlateauDomain& domain, const ParamGrid& grid) {
  // Polar second derivatives are taken directly from the grid (not as
  // products of first-derivative matrices) so that the angular Nyquist mode
  // is not left in the kernel of the Hessian.
  using D = ParamGrid::Deriv;
  const int n = grid.size();
  const Mat dr = grid.derivative_matrix(D::U), dphi = grid.derivative_matrix(D::V);
  const Mat drr = grid.derivative_matrix(D::UU), drp = grid.derivative_matrix(D::UV);
  const Mat dpp = grid.derivative_matrix(D::VV);
  Mat s1(n, n), s2(n, n), s11(n, n), s12(n, n), s22(n, n);
  for (int p = 0; p < n; ++p) {
    const double r = grid.u(p), c = std::cos(grid.v(p)), s = std::sin(grid.v(p));
    s1.row(p) = c * dr.row(p) - s / r * dphi.row(p);
    s2.row(p) = s * dr.row(p) + c / r * dphi.row(p);
    const auto radial = drr.row(p);
    const auto tangential = dr.row(p) / r + dpp.row(p) / (r * r);
    const auto mixed = drp.row(p) / r - dphi.row(p) / (r * r);
    s11.row(p) = c * c * radial + s * s * tangential - 2.0 * c * s * mixed;
    s22.row(p) = s * s * radial + c * c * tangential + 2.0 * c * s * mixed;
    s12.row(p) = c * s * (radial - tangential) + (c * c - s * s) * mixed;
  }
  const Mat li = domain.shape.inverse();  // s = L^{-1}(x' - c): ds_a/dx_b = li(a, b)
  GraphOperators ops;
  ops.g1 = li(0, 0) * s1 + li(1, 0) * s2;
  ops.g2 = li(0, 1) * s1 + li(1, 1) * s2;
  auto hess = [&](int a, int b) {
    return Mat(li(0, a) * li(0, b) * s11 + (li(0, a) * li(1, b) + li(1, a) * li(0, b)) * s12 +
               li(1, a) * li(1, b) * s22);
  };
  ops.h11 = hess(0, 0);
  ops.h12 = hess(0, 1);
  ops.h22 = hess(1, 1);
  return ops;
}

// Per-node derivative data of the height function.
struct HeightDerivatives {
  Vec u, g1, g2, h11, h12, h22;
};

HeightDerivatives height_derivatives(const GraphOperators& ops, const Vec& u) {
  return {u, ops.g1 * u, ops.g2 * u, ops.h11 * u, ops.h12 * u, ops.h22 * u};
}

Vec node_position(const PlateauDomain& domain, const ParamGrid& grid, int p, double height) {
  return graph_embedding(domain, domain_point(domain, grid.u(p), grid.v(p)), height);
}

// div_g of the unit normal field of {x^axis = u(x')} at one node.
double divergence_h(const MetricJet& jet, int axis, double du1, double du2, double d11, double d12, double d22) {
  Vec f = Vec::Zero(3);
  f[axis] = 1.0;
  const int a0 = planar_axis(axis, 0), a1 = planar_axis(axis, 1);
  f[a0] = -du1;
  f[a1] = -du2;
  Mat df = Mat::Zero(3, 3);  // df(i, j) = d_i F_j
  df(a0, a0) = -d11;
  df(a0, a1) = df(a1, a0) = -d12;
  df(a1, a1) = -d22;
  const Mat& gi = jet.g_inv;
  const Vec up = gi * f;
  const double nn = std::sqrt(f.dot(up));
  double div = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Mat dgi = -gi * jet.dg[i] * gi;  // d_i g^{kl}
    const double dn = (f.dot(dgi * f) + 2.0 * up.dot(df.row(i).transpose())) / (2.0 * nn);
    const double d_up_i = dgi.row(i).dot(f) + gi.row(i).dot(df.row(i));  // d_i (g^{ij} F_j)
    const double dlog = 0.5 * (gi.cwiseProduct(jet.dg[i])).sum();
    div += d_up_i / nn - up[i] * dn / (nn * nn) + up[i] / nn * dlog;
  }
  return div;
}

MetricJet jet_at(const MetricSpec& spec, const Vec& x) {
  Point p;
  p.coords = x;
  return metric_jet(spec, p);
}

std::vector<MetricJet> jets_for(const MetricSpec& spec, const PlateauDomain& domain, const ParamGrid& grid,
                                const Vec& u) {
  std::vector<MetricJet> jets;
  jets.reserve(grid.size());
  for (int p = 0; p < grid.size(); ++p) jets.push_back(jet_at(spec, node_position(domain, grid, p, u[p])));
  return jets;
}

Vec mean_curvature_from(const std::vector<MetricJet>& jets, int axis, const HeightDerivatives& d) {
  Vec h(d.u.size());
  for (int p = 0; p < h.size(); ++p)
    h[p] = divergence_h(jets[p], axis, d.g1[p], d.g2[p], d.h11[p], d.h12[p], d.h22[p]);
  return h;
}

double sup_interior(const Vec& h, const std::vector<int>& interior) {
  double s = 0.0;
  for (int p : interior) s = std::max(s, std::abs(h[p]));
  return s;
}

double half_sum_squares(const Vec& h, const std::vector<int>& interior) {
  double s = 0.0;
  for (int p : interior) s += h[p] * h[p];
  return 0.5 * s;
}

// Roots of a scalar function on [lo, hi]: sign-change scan then bisection.
std::vector<double> scan_roots(const std::function<double(double)>& f, double lo, double hi, int samples) {
  std::vector<double> roots;
  double xa = lo, fa = f(lo);
  for (int i = 1; i <= samples; ++i) {
    const double xb = lo + (hi - lo) * i / samples;
    const double fb = f(xb);
    if (fa == 0.0) {
      roots.push_back(xa);
    } else if (fa * fb < 0.0) {
      double a = xa, b = xb, va = fa;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double vm = f(m);
        if (vm == 0.0) {
          a = b = m;
          break;
        }
        if ((va < 0.0) == (vm < 0.0)) {
          a = m;
          va = vm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    xa = xb;
    fa = fb;
  }
  return roots;
}

}  // namespace

Vec domain_point(const PlateauDomain& domain, double r, double phi) {
  Vec s(2);
  s << r * std::cos(phi), r * std::sin(phi);
  return domain.center + domain.shape * s;
}

Vec graph_embedding(const PlateauDomain& domain, const Vec& planar, double height) {
  Vec x(3);
  x[domain.axis] = height;
  x[planar_axis(domain.axis, 0)] = planar[0];
  x[planar_axis(domain.axis, 1)] = planar[1];
  return x;
}

PlateauProblem circle_problem(const MetricSpec& spec, double radius, std::function<double(double)> height,
                              int axis) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "boundary radius must be positive");
  PlateauProblem prob;
  prob.spec = spec;
  prob.domain.axis = axis;
  prob.domain.shape = radius * Mat::Identity(2, 2);
  prob.boundary_height = std::move(height);
  return prob;
}

PlateauProblem zero_set_problem(const MetricSpec& spec, const ScalarFieldSpec& v, double radius, int axis,
                                int n_cheb, int n_phi, int curve_samples) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "boundary radius must be positive");
  if (curve_samples < 8) throw Error(ErrorKind::InvalidArgument, "need at least 8 boundary curve samples");
  PlateauDomain probe;
  probe.axis = axis;
  // Points of S_R with V = 0, one per planar direction psi, found in the
  // polar angle alpha measured from the height axis.
  Mat pts(curve_samples, 2);
  for (int k = 0; k < curve_samples; ++k) {
    const double psi = 2.0 * kPi * k / curve_samples;
    auto f = [&](double alpha) {
      Vec planar(2);
      planar << radius * std::sin(alpha) * std::cos(psi), radius * std::sin(alpha) * std::sin(psi);
      return v.value(graph_embedding(probe, planar, radius * std::cos(alpha)));
    };
    const auto roots = scan_roots(f, 1e-6, kPi - 1e-6, 400);
    if (roots.size() != 1)
      throw Error(ErrorKind::Precondition, "zero set of '" + v.name() + "' is not a graph over the plane at radius " +
                                               std::to_string(radius) + " (" + std::to_string(roots.size()) +
                                               " crossings)");
    pts(k, 0) = radius * std::sin(roots[0]) * std::cos(psi);
    pts(k, 1) = radius * std::sin(roots[0]) * std::sin(psi);
  }
  // Conic A x^2 + B xy + C y^2 + D x + E y = 1 by least squares.
  Mat a(curve_samples, 5);
  for (int k = 0; k < curve_samples; ++k) {
    const double x = pts(k, 0), y = pts(k, 1);
    a.row(k) << x * x, x * y, y * y, x, y;
  }
  const Vec coef = a.colPivHouseholderQr().solve(Vec::Ones(curve_samples));
  Mat m(2, 2);
  m << coef[0], 0.5 * coef[1], 0.5 * coef[1], coef[2];
  Vec lin(2);
  lin << coef[3], coef[4];
  const Vec center = -0.5 * m.ldlt().solve(lin);
  const double scale = 1.0 + center.dot(m * center);
  Eigen::SelfAdjointEigenSolver<Mat> es(m / scale);
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw Error(ErrorKind::Degenerate, "boundary curve projection is not an ellipse");
  const Mat shape = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose();

  PlateauProblem prob;
  prob.spec = spec;
  prob.domain.axis = axis;
  prob.domain.center = center;
  prob.domain.shape = shape;
  prob.n_cheb = n_cheb;
  prob.n_phi = n_phi;
  for (int k = 0; k < curve_samples; ++k) {
    const Vec d = pts.row(k).transpose() - center;
    prob.ellipse_fit_residual = std::max(prob.ellipse_fit_residual, std::abs(d.dot(m / scale * d) - 1.0));
  }
  const PlateauDomain dom = prob.domain;
  auto height_at = [v, dom, radius](double phi) {
    const Vec planar = domain_point(dom, 1.0, phi);
    const auto roots = scan_roots([&](double z) { return v.value(graph_embedding(dom, planar, z)); }, -radius,
                                  radius, 400);
    if (roots.size() != 1)
      throw Error(ErrorKind::Precondition, "zero set is not a graph over the boundary point");
    return roots[0];
  };
  prob.boundary_height = height_at;
  const auto grid = ParamGrid::disk(n_cheb, n_phi);
  for (int p = 0; p < grid->size(); ++p) {
    if (!grid->on_boundary(p)) continue;
    const Vec x = graph_embedding(dom, domain_point(dom, 1.0, grid->v(p)), height_at(grid->v(p)));
    prob.boundary_sphere_deviation = std::max(prob.boundary_sphere_deviation, std::abs(x.norm() - radius));
  }
  return prob;
}

Vec harmonic_extension(const ParamGrid& grid, const std::function<double(double)>& boundary_height) {
  if (grid.kind() != GridKind::Disk) throw Error(ErrorKind::InvalidArgument, "harmonic extension needs a disk grid");
  using D = ParamGrid::Deriv;
  const int n = grid.size();
  const Mat dr = grid.derivative_matrix(D::U), drr = grid.derivative_matrix(D::UU);
  const Mat dpp = grid.derivative_matrix(D::VV);
  Mat a(n, n);
  Vec b = Vec::Zero(n);
  for (int p = 0; p < n; ++p) {
    if (grid.on_boundary(p)) {
      a.row(p).setZero();
      a(p, p) = 1.0;
      b[p] = boundary_height(grid.v(p));
    } else {
      const double r = grid.u(p);
      a.row(p) = drr.row(p) + dr.row(p) / r + dpp.row(p) / (r * r);
    }
  }
  return a.partialPivLu().solve(b);
}

Vec graph_mean_curvature(const MetricSpec& spec, const PlateauDomain& domain, const ParamGrid& grid,
                         const Vec& heights) {
  check_domain_shape(domain);
  if (spec.dim != 3) throw Error(ErrorKind::InvalidArgument, "graphs are supported in 3-dimensional charts");
  if (heights.size() != grid.size()) throw Error(ErrorKind::InvalidArgument, "one height per grid node required");
  const auto ops = graph_operators(domain, grid);
  return mean_curvature_from(jets_for(spec, domain, grid, heights), domain.axis, height_derivatives(ops, heights));
}

SurfacePatch graph_patch(const PlateauDomain& domain, std::shared_ptr<const ParamGrid> grid, const Vec& heights) {
  Mat x(grid->size(), 3);
  for (int p = 0; p < grid->size(); ++p) x.row(p) = node_position(domain, *grid, p, heights[p]).transpose();
  // The parametrization normal X_r x X_phi points along +axis when det L > 0.
  return patch_from_positions("minimal_graph", std::move(grid), std::move(x), domain.shape.determinant() > 0 ? 1 : -1);
}

DiscreteGraphSurface solve_minimal_graph(const PlateauProblem& prob) {
  check_domain_shape(prob.domain);
  if (prob.spec.dim != 3) throw Error(ErrorKind::InvalidArgument, "graphs are supported in 3-dimensional charts");
  if (!prob.boundary_height) throw Error(ErrorKind::InvalidArgument, "boundary heights are required");
  if (!(prob.tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  const auto grid = ParamGrid::disk(prob.n_cheb, prob.n_phi);
  const int n = grid->size();
  const auto ops = graph_operators(prob.domain, *grid);
  const int axis = prob.domain.axis;

  std::vector<int> interior;
  for (int p = 0; p < n; ++p)
    if (!grid->on_boundary(p)) interior.push_back(p);
  const int m = static_cast<int>(interior.size());

  Vec u;
  if (prob.initial_guess) {
    if (prob.initial_guess->size() != n) throw Error(ErrorKind::InvalidArgument, "initial guess size mismatch");
    u = *prob.initial_guess;
  } else {
    u = harmonic_extension(*grid, prob.boundary_height);
  }
  for (int p = 0; p < n; ++p) {
    if (!grid->on_boundary(p)) continue;
    const double h = prob.boundary_height(grid->v(p));
    if (!std::isfinite(h)) throw Error(ErrorKind::InvalidArgument, "boundary data must be finite");
    u[p] = h;
  }

  DiscreteGraphSurface out;
  out.domain = prob.domain;
  out.grid = grid;

  auto evaluate = [&](const Vec& heights, std::vector<MetricJet>& jets, HeightDerivatives& d) {
    jets = jets_for(prob.spec, prob.domain, *grid, heights);
    d = height_derivatives(ops, heights);
    return mean_curvature_from(jets, axis, d);
  };

  std::vector<MetricJet> jets;
  HeightDerivatives d;
  Vec h;
  try {
    h = evaluate(u, jets, d);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::OutsideDomain)
      throw Error(ErrorKind::OutsideDomain, std::string("graph leaves the chart domain: ") + e.what());
    throw;
  }
  {
    auto patch = graph_patch(prob.domain, grid, u);
    out.initial_area = SurfaceGeometry(prob.spec, patch).area();
  }

  for (int it = 0; it < prob.max_iterations; ++it) {
    const double sup = sup_interior(h, interior);
    out.residual_history.push_back(sup);
    if (sup <= prob.tolerance) {
      out.converged = true;
      break;
    }
    // Finite-difference Jacobian: only the perturbed node's metric changes;
    // the derivative data are linear in the heights.
    Mat jac(m, m);
    for (int c = 0; c < m; ++c) {
      const int q = interior[c];
      const double step = 1e-7 * std::max(1.0, std::abs(u[q]));
      HeightDerivatives dp = d;
      dp.u[q] += step;
      dp.g1 += step * ops.g1.col(q);
      dp.g2 += step * ops.g2.col(q);
      dp.h11 += step * ops.h11.col(q);
      dp.h12 += step * ops.h12.col(q);
      dp.h22 += step * ops.h22.col(q);
      const MetricJet saved = jets[q];
      jets[q] = jet_at(prob.spec, node_position(prob.domain, *grid, q, dp.u[q]));
      for (int r = 0; r < m; ++r) {
        const int p = interior[r];
        const double hp = divergence_h(jets[p], axis, dp.g1[p], dp.g2[p], dp.h11[p], dp.h12[p], dp.h22[p]);
        jac(r, c) = (hp - h[p]) / step;
      }
      jets[q] = saved;
    }
    Vec rhs(m);
    for (int r = 0; r < m; ++r) rhs[r] = -h[interior[r]];
    const Vec delta = jac.colPivHouseholderQr().solve(rhs);

    const double phi0 = half_sum_squares(h, interior);
    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k <= prob.max_halvings; ++k, lambda *= 0.5) {
      Vec trial = u;
      for (int r = 0; r < m; ++r) trial[interior[r]] += lambda * delta[r];
      std::vector<MetricJet> tj;
      HeightDerivatives td;
      Vec th;
      try {
        th = evaluate(trial, tj, td);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::OutsideDomain || e.kind() == ErrorKind::Degenerate) continue;
        throw;
      }
      if (half_sum_squares(th, interior) <= (1.0 - 2e-4 * lambda) * phi0) {
        u = trial;
        jets = std::move(tj);
        d = td;
        h = th;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw Error(ErrorKind::NonConvergence, "Newton iteration diverged after maximum damping");
    out.damping.push_back(lambda);
    out.iterations = it + 1;
  }
  out.sup_h = sup_interior(h, interior);
  if (!out.converged) {
    if (out.sup_h > prob.tolerance)
      throw Error(ErrorKind::NonConvergence, "minimal graph solver did not reach the tolerance (sup |H| = " +
                                                 std::to_string(out.sup_h) + ")");
    out.converged = true;
  }
  out.heights = u;
  out.patch = graph_patch(prob.domain, grid, u);
  out.area = SurfaceGeometry(prob.spec, out.patch).area();
  return out;
}

double graph_area(const MetricSpec& spec, const DiscreteGraphSurface& surface, const Vec& heights) {
  return SurfaceGeometry(spec, graph_patch(surface.domain, surface.grid, heights)).area();
}

MinimalityProbe local_minimality_probe(const MetricSpec& spec, const DiscreteGraphSurface& surface, int trials,
                                       std::uint64_t seed) {
  if (trials < 0) throw Error(ErrorKind::InvalidArgument, "trials must be non-negative");
  MinimalityProbe probe;
  probe.trials = trials;
  const ParamGrid& grid = *surface.grid;
  const double scale = std::sqrt(std::abs(surface.domain.shape.determinant()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> log_amp(std::log(1e-3), std::log(1e-1));
  probe.min_gap = trials > 0 ? 1e300 : 0.0;
  for (int t = 0; t < trials; ++t) {
    double c[6];
    for (double& ci : c) ci = normal(rng);
    const double norm = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3] + c[4] * c[4] + c[5] * c[5]);
    const double amp = std::exp(log_amp(rng)) * scale / norm * (normal(rng) < 0.0 ? -1.0 : 1.0);
    Vec delta(grid.size());
    for (int p = 0; p < grid.size(); ++p) {
      const double r = grid.u(p), ph = grid.v(p);
      const double basis = c[0] + c[1] * r * std::cos(ph) + c[2] * r * std::sin(ph) + c[3] * r * r * std::cos(2 * ph) +
                           c[4] * r * r * std::sin(2 * ph) + c[5] * r * r;
      delta[p] = amp * (1.0 - r * r) * basis;
    }
    const double gap = graph_area(spec, surface, surface.heights + delta) - surface.area;
    probe.min_gap = std::min(probe.min_gap, gap);
    if (!(gap > 0.0)) ++probe.non_positive_gaps;
  }
  probe.second_variation_min_eig = stability_min_eig(spec, surface.patch).min_eigenvalue;
  probe.locally_minimizing = probe.non_positive_gaps == 0 && probe.second_variation_min_eig > 0.0;
  return probe;
}

SequenceReport radius_sequence_experiment(const MetricSpec& spec, const ScalarFieldSpec& v,
                                          const std::vector<double>& radii, double r0,
                                          const SequenceOptions& options) {
  if (radii.empty()) throw Error(ErrorKind::InvalidArgument, "radius list is empty");
  if (!(r0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "inner radius r0 must be positive");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > r0)) throw Error(ErrorKind::InvalidArgument, "radii must exceed r0");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw Error(ErrorKind::InvalidArgument, "radii must be increasing");
  }
  SequenceReport rep;
  rep.r0 = r0;
  rep.axis = 2;
  if (options.check_expansion) {
    std::vector<double> fit = options.fit_radii;
    if (fit.empty()) {
      // Doubling radii: the growth-ratio classification assumes factor-2 steps.
      for (int k = 0; k < 4; ++k) fit.push_back(radii.front() * std::pow(2.0, k));
    }
    const ExpansionFit ef = fit_expansion(v, fit);
    if (ef.expansion_case != ExpansionCase::Linear)
      throw Error(ErrorKind::Precondition, "potential is not of linear growth (expansion case " +
                                               std::to_string(static_cast<int>(ef.expansion_case)) + ")");
    // Zero sets are graphs over the plane orthogonal to the linear coefficient.
    Eigen::Index axis = 0;
    ef.a.cwiseAbs().maxCoeff(&axis);
    rep.axis = static_cast<int>(axis);
  }

  const int count = static_cast<int>(radii.size());
  rep.solutions.resize(count);
  rep.radii.resize(count);
  auto solve_one = [&](int i) {
    PlateauProblem prob = zero_set_problem(spec, v, radii[i], rep.axis, options.n_cheb, options.n_phi);
    prob.tolerance = options.tolerance;
    rep.solutions[i] = solve_minimal_graph(prob);
    RadiusReport& rr = rep.radii[i];
    rr.radius = radii[i];
    rr.boundary_sphere_deviation = prob.boundary_sphere_deviation;
    const auto& sol = rep.solutions[i];
    rr.min_norm = sol.patch.positions.rowwise().norm().minCoeff();
    rr.intersects_inner_ball = rr.min_norm <= r0;
    rr.area = sol.area;
    rr.sup_h = sol.sup_h;
    rr.sup_abs_height = sol.heights.cwiseAbs().maxCoeff();
    rr.iterations = sol.iterations;
  };
  const int jobs = std::clamp(options.jobs, 1, count);
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) solve_one(i);
  } else {
    for (int lo = 0; lo < count; lo += jobs) {
      std::vector<std::future<void>> fs;
      for (int i = lo; i < std::min(count, lo + jobs); ++i) fs.push_back(std::async(std::launch::async, solve_one, i));
      for (auto& f : fs) f.get();
    }
  }

  // Windowed drift: sup vertical distance between consecutive graphs over
  // planar points with |x'| <= 2 r0 inside both domains.
  auto height_at = [](const DiscreteGraphSurface& s, const Vec& planar, double& out) {
    const Vec loc = s.domain.shape.inverse() * (planar - s.domain.center);
    const double r = loc.norm();
    if (r > 1.0) return false;
    const double phi = std::atan2(loc[1], loc[0]);
    out = s.grid->interpolate(s.heights, r, phi);
    return true;
  };
  for (int i = 1; i < count; ++i) {
    double drift = 0.0;
    for (int a = 0; a <= options.window_rings; ++a) {
      const double rho = 2.0 * r0 * a / options.window_rings;
      for (int b = 0; b < (a == 0 ? 1 : options.window_angles); ++b) {
        const double psi = 2.0 * kPi * b / options.window_angles;
        Vec planar(2);
        planar << rho * std::cos(psi), rho * std::sin(psi);
        double h0 = 0.0, h1 = 0.0;
        if (height_at(rep.solutions[i - 1], planar, h0) && height_at(rep.solutions[i], planar, h1))
          drift = std::max(drift, std::abs(h1 - h0));
      }
    }
    rep.radii[i].drift = drift;
  }
  rep.all_intersect = std::all_of(rep.radii.begin(), rep.radii.end(),
                                  [](const RadiusReport& r) { return r.intersects_inner_ball; });
  rep.drift_non_increasing = true;
  for (int i = 2; i < count; ++i)
    if (rep.radii[i].drift > rep.radii[i - 1].drift + 1e-12) rep.drift_non_increasing = false;
  rep.final_drift = count > 1 ? rep.radii.back().drift : 0.0;
  rep.prediction_held = rep.all_intersect && rep.drift_non_increasing;
  return rep;
}

}  // namespace staticgeo
