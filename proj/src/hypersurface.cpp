#include "staticgeo/hypersurface.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "staticgeo/error.hpp"
#include "staticgeo/static_potential.hpp"

namespace staticgeo {

namespace {

constexpr double kPi = std::numbers::pi;

// Fourier differentiation matrices on n equispaced points of a 2 pi period.
void fourier_matrices(int n, Mat& d1, Mat& d2) {
  const double h = 2.0 * kPi / n;
  d1 = Mat::Zero(n, n);
  d2 = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) {
        d2(j, k) = -kPi * kPi / (3.0 * h * h) - 1.0 / 6.0;
        continue;
      }
      const int diff = j - k;
      const double sign = (diff % 2 == 0) ? 1.0 : -1.0;
      const double x = diff * h / 2.0;
      d1(j, k) = 0.5 * sign / std::tan(x);
      d2(j, k) = -0.5 * sign / (std::sin(x) * std::sin(x));
    }
  }
}

// Chebyshev-Lobatto points x_j = cos(j pi / n) and differentiation matrix.
void chebyshev_matrix(int n, std::vector<double>& x, Mat& d) {
  x.resize(n + 1);
  for (int j = 0; j <= n; ++j) x[j] = std::cos(j * kPi / n);
  d = Mat::Zero(n + 1, n + 1);
  auto c = [n](int j) { return ((j == 0 || j == n) ? 2.0 : 1.0) * ((j % 2 == 0) ? 1.0 : -1.0); };
  for (int i = 0; i <= n; ++i) {
    double row = 0.0;
    for (int j = 0; j <= n; ++j) {
      if (i == j) continue;
      d(i, j) = c(i) / c(j) / (x[i] - x[j]);
      row += d(i, j);
    }
    d(i, i) = -row;
  }
}

// Clenshaw-Curtis weights on [-1, 1] for the Lobatto points above.
std::vector<double> clenshaw_curtis(int n) {
  std::vector<double> w(n + 1);
  for (int j = 0; j <= n; ++j) {
    double s = 1.0;
    for (int k = 1; k <= n / 2; ++k) {
      const double b = (2 * k == n) ? 1.0 : 2.0;
      s -= b / (4.0 * k * k - 1.0) * std::cos(2.0 * k * j * kPi / n);
    }
    w[j] = ((j == 0 || j == n) ? 1.0 : 2.0) * s / n;
  }
  return w;
}

// Fejer (first kind) weights on [-1, 1] at x_j = cos((j + 1/2) pi / n).
std::vector<double> fejer1(int n) {
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) {
    const double th = (j + 0.5) * kPi / n;
    double s = 1.0;
    for (int k = 1; k <= n / 2; ++k) s -= 2.0 * std::cos(2.0 * k * th) / (4.0 * k * k - 1.0);
    w[j] = 2.0 * s / n;
  }
  return w;
}

// Interpolatory weights for int_0^1 f(s) ds at the given nodes (Legendre
// moment equations).
std::vector<double> interpolatory_unit_weights(const std::vector<double>& s) {
  const int m = static_cast<int>(s.size());
  Mat v(m, m);
  for (int j = 0; j < m; ++j) {
    const double t = 2.0 * s[j] - 1.0;
    double p0 = 1.0, p1 = t;
    for (int k = 0; k < m; ++k) {
      if (k == 0) {
        v(k, j) = 1.0;
      } else if (k == 1) {
        v(k, j) = t;
      } else {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
        v(k, j) = p2;
      }
    }
  }
  Vec rhs = Vec::Zero(m);
  rhs[0] = 1.0;
  const Vec w = v.fullPivLu().solve(rhs);
  return std::vector<double>(w.data(), w.data() + m);
}

double trig_cardinal(int n, double x) {
  x = std::remainder(x, 2.0 * kPi);
  if (std::abs(x) < 1e-14) return 1.0;
  return std::sin(n * x / 2.0) / (n * std::tan(x / 2.0));
}

Vec row3(const Mat& m, int p) { return m.row(p).transpose(); }

Vec cross3(const Vec& a, const Vec& b) {
  Vec c(3);
  c << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0];
  return c;
}

// Largest |eigenvalue| of gamma^{-1} T for symmetric T (operator norm in gamma).
double gamma_operator_norm(const Mat& t, const Mat& gamma) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(t, gamma, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void require_dim3(const MetricSpec& spec) {
  if (spec.dim != 3) throw Error(ErrorKind::InvalidArgument, "surface geometry requires a 3-dimensional chart");
}

}  // namespace

const char* to_string(GridKind kind) {
  switch (kind) {
    case GridKind::Sphere: return "sphere";
    case GridKind::Torus: return "torus";
    case GridKind::Disk: return "disk";
    case GridKind::Annulus: return "annulus";
  }
  return "unknown";
}

std::shared_ptr<const ParamGrid> ParamGrid::sphere(int n_theta, int n_phi) {
  if (n_theta < 2 || n_phi < 4 || n_phi % 2 != 0)
    throw Error(ErrorKind::InvalidArgument, "sphere grid needs n_theta >= 2 and even n_phi >= 4");
  auto g = std::shared_ptr<ParamGrid>(new ParamGrid());
  g->kind_ = GridKind::Sphere;
  g->res1_ = n_theta;
  g->res2_ = n_phi;
  g->n1_ = 2 * n_theta;
  g->n2_ = n_phi;
  g->periodic1_ = true;
  fourier_matrices(g->n1_, g->d1a_, g->d2a_);
  fourier_matrices(g->n2_, g->d1b_, g->d2b_);
  for (int i = 0; i < g->n1_; ++i) g->axis1_.push_back((i + 0.5) * kPi / n_theta);
  for (int j = 0; j < n_phi; ++j) g->axis2_.push_back(2.0 * kPi * j / n_phi);
  const auto fw = fejer1(n_theta);
  for (int i = 0; i < g->n1_; ++i) {
    for (int j = 0; j < n_phi; ++j) {
      if (i < n_theta) {
        g->ext_source_.push_back(i * n_phi + j);
        g->ext_sign_flip_.push_back(0);
        g->u_.push_back(g->axis1_[i]);
        g->v_.push_back(g->axis2_[j]);
        g->weights_.push_back(fw[i] / std::sin(g->axis1_[i]) * 2.0 * kPi / n_phi);
        g->boundary_.push_back(false);
      } else {
        g->ext_source_.push_back((g->n1_ - 1 - i) * n_phi + (j + n_phi / 2) % n_phi);
        g->ext_sign_flip_.push_back(1);
      }
    }
  }
  return g;
}

std::shared_ptr<const ParamGrid> ParamGrid::torus(int n_u, int n_v) {
  if (n_u < 4 || n_v < 4 || n_u % 2 != 0 || n_v % 2 != 0)
    throw Error(ErrorKind::InvalidArgument, "torus grid needs even resolutions >= 4");
  auto g = std::shared_ptr<ParamGrid>(new ParamGrid());
  g->kind_ = GridKind::Torus;
  g->res1_ = n_u;
  g->res2_ = n_v;
  g->n1_ = n_u;
  g->n2_ = n_v;
  g->periodic1_ = true;
  fourier_matrices(n_u, g->d1a_, g->d2a_);
  fourier_matrices(n_v, g->d1b_, g->d2b_);
  for (int i = 0; i < n_u; ++i) g->axis1_.push_back(2.0 * kPi * i / n_u);
  for (int j = 0; j < n_v; ++j) g->axis2_.push_back(2.0 * kPi * j / n_v);
  for (int i = 0; i < n_u; ++i) {
    for (int j = 0; j < n_v; ++j) {
      g->ext_source_.push_back(i * n_v + j);
      g->ext_sign_flip_.push_back(0);
      g->u_.push_back(g->axis1_[i]);
      g->v_.push_back(g->axis2_[j]);
      g->weights_.push_back(4.0 * kPi * kPi / (n_u * n_v));
      g->boundary_.push_back(false);
    }
  }
  return g;
}

std::shared_ptr<const ParamGrid> ParamGrid::disk(int n_cheb, int n_phi) {
  if (n_cheb < 3 || n_cheb % 2 == 0 || n_phi < 4 || n_phi % 2 != 0)
    throw Error(ErrorKind::InvalidArgument, "disk grid needs odd n_cheb >= 3 and even n_phi >= 4");
  auto g = std::shared_ptr<ParamGrid>(new ParamGrid());
  g->kind_ = GridKind::Disk;
  g->res1_ = n_cheb;
  g->res2_ = n_phi;
  g->n1_ = n_cheb + 1;
  g->n2_ = n_phi;
  g->periodic1_ = false;
  chebyshev_matrix(n_cheb, g->axis1_, g->d1a_);
  g->d2a_ = g->d1a_ * g->d1a_;
  fourier_matrices(n_phi, g->d1b_, g->d2b_);
  for (int j = 0; j < n_phi; ++j) g->axis2_.push_back(2.0 * kPi * j / n_phi);
  const int rows = (n_cheb + 1) / 2;
  std::vector<double> s(rows);
  for (int i = 0; i < rows; ++i) s[i] = g->axis1_[i] * g->axis1_[i];
  const auto ws = interpolatory_unit_weights(s);
  for (int i = 0; i < g->n1_; ++i) {
    for (int j = 0; j < n_phi; ++j) {
      if (i < rows) {
        g->ext_source_.push_back(i * n_phi + j);
        g->ext_sign_flip_.push_back(0);
        g->u_.push_back(g->axis1_[i]);
        g->v_.push_back(g->axis2_[j]);
        g->weights_.push_back(ws[i] / (2.0 * g->axis1_[i]) * 2.0 * kPi / n_phi);
        g->boundary_.push_back(i == 0);
      } else {
        g->ext_source_.push_back((n_cheb - i) * n_phi + (j + n_phi / 2) % n_phi);
        g->ext_sign_flip_.push_back(1);
      }
    }
  }
  return g;
}

std::shared_ptr<const ParamGrid> ParamGrid::annulus(double a, double b, int n_cheb, int n_phi) {
  if (!(a > 0.0) || !(b > a)) throw Error(ErrorKind::InvalidArgument, "annulus grid needs 0 < a < b");
  if (n_cheb < 2 || n_phi < 4 || n_phi % 2 != 0)
    throw Error(ErrorKind::InvalidArgument, "annulus grid needs n_cheb >= 2 and even n_phi >= 4");
  auto g = std::shared_ptr<ParamGrid>(new ParamGrid());
  g->kind_ = GridKind::Annulus;
  g->res1_ = n_cheb;
  g->res2_ = n_phi;
  g->cheb_lo_ = a;
  g->cheb_hi_ = b;
  g->n1_ = n_cheb + 1;
  g->n2_ = n_phi;
  g->periodic1_ = false;
  std::vector<double> x;
  chebyshev_matrix(n_cheb, x, g->d1a_);
  g->d1a_ *= 2.0 / (b - a);
  g->d2a_ = g->d1a_ * g->d1a_;
  fourier_matrices(n_phi, g->d1b_, g->d2b_);
  for (double xi : x) g->axis1_.push_back(0.5 * (a + b) + 0.5 * (b - a) * xi);
  for (int j = 0; j < n_phi; ++j) g->axis2_.push_back(2.0 * kPi * j / n_phi);
  const auto cc = clenshaw_curtis(n_cheb);
  for (int i = 0; i < g->n1_; ++i) {
    for (int j = 0; j < n_phi; ++j) {
      g->ext_source_.push_back(i * n_phi + j);
      g->ext_sign_flip_.push_back(0);
      g->u_.push_back(g->axis1_[i]);
      g->v_.push_back(g->axis2_[j]);
      g->weights_.push_back(cc[i] * 0.5 * (b - a) * 2.0 * kPi / n_phi);
      g->boundary_.push_back(i == 0 || i == n_cheb);
    }
  }
  return g;
}

Mat ParamGrid::extend(const Vec& values, int parity) const {
  if (values.size() != size()) throw Error(ErrorKind::InvalidArgument, "grid function needs one value per node");
  Mat e(n1_, n2_);
  for (int ext = 0; ext < n1_ * n2_; ++ext) {
    const double sign = (parity == 1 && ext_sign_flip_[ext] == 1) ? -1.0 : 1.0;
    e(ext / n2_, ext % n2_) = sign * values[ext_source_[ext]];
  }
  return e;
}

Vec ParamGrid::derivative(Deriv d, const Vec& values, int parity) const {
  const Mat e = extend(values, parity);
  const int rows = this->rows();
  Mat out;
  switch (d) {
    case Deriv::U: out = d1a_.topRows(rows) * e; break;
    case Deriv::UU: out = d2a_.topRows(rows) * e; break;
    case Deriv::V: out = e.topRows(rows) * d1b_.transpose(); break;
    case Deriv::VV: out = e.topRows(rows) * d2b_.transpose(); break;
    case Deriv::UV: out = (d1a_.topRows(rows) * e) * d1b_.transpose(); break;
  }
  Vec flat(size());
  for (int p = 0; p < size(); ++p) flat[p] = out(p / n2_, p % n2_);
  return flat;
}

Mat ParamGrid::derivative(Deriv d, const Mat& columns, int parity) const {
  Mat out(columns.rows(), columns.cols());
  for (int c = 0; c < columns.cols(); ++c) out.col(c) = derivative(d, Vec(columns.col(c)), parity);
  return out;
}

Mat ParamGrid::derivative_matrix(Deriv d, int parity) const {
  Mat m(size(), size());
  Vec unit = Vec::Zero(size());
  for (int p = 0; p < size(); ++p) {
    unit[p] = 1.0;
    m.col(p) = derivative(d, unit, parity);
    unit[p] = 0.0;
  }
  return m;
}

double ParamGrid::interpolate(const Vec& values, double a, double b) const {
  if (values.size() != size()) throw Error(ErrorKind::InvalidArgument, "interpolation needs one value per node");
  std::vector<double> w2(n2_);
  for (int j = 0; j < n2_; ++j) w2[j] = trig_cardinal(n2_, b - axis2_[j]);
  std::vector<double> w1(n1_);
  if (periodic1_) {
    for (int i = 0; i < n1_; ++i) w1[i] = trig_cardinal(n1_, a - axis1_[i]);
  } else {
    // Barycentric Lagrange interpolation at Chebyshev-Lobatto points.
    int hit = -1;
    double total = 0.0;
    for (int i = 0; i < n1_; ++i) {
      const double diff = a - axis1_[i];
      if (std::abs(diff) < 1e-14 * std::max(1.0, std::abs(a))) {
        hit = i;
        break;
      }
      const double bw = ((i % 2 == 0) ? 1.0 : -1.0) * ((i == 0 || i == n1_ - 1) ? 0.5 : 1.0);
      w1[i] = bw / diff;
      total += w1[i];
    }
    if (hit >= 0) {
      std::fill(w1.begin(), w1.end(), 0.0);
      w1[hit] = 1.0;
    } else {
      for (double& w : w1) w /= total;
    }
  }
  double out = 0.0;
  for (int i = 0; i < n1_; ++i) {
    if (w1[i] == 0.0) continue;
    for (int j = 0; j < n2_; ++j) out += w1[i] * w2[j] * values[ext_source_[i * n2_ + j]];
  }
  return out;
}

SurfacePatch SurfacePatch::flipped() const {
  SurfacePatch p = *this;
  p.orientation = -orientation;
  return p;
}

namespace {

SurfacePatch sample_patch(const std::string& name, std::shared_ptr<const ParamGrid> grid, const Embedding& x) {
  SurfacePatch patch;
  patch.name = name;
  patch.positions.resize(grid->size(), 3);
  for (int p = 0; p < grid->size(); ++p) {
    const Vec xp = x(grid->u(p), grid->v(p));
    if (xp.size() != 3) throw Error(ErrorKind::InvalidArgument, "embeddings must map into a 3-dimensional chart");
    patch.positions.row(p) = xp.transpose();
  }
  patch.grid = std::move(grid);
  patch.period_u = Vec::Zero(3);
  patch.period_v = Vec::Zero(3);
  return patch;
}

}  // namespace

SurfacePatch sphere_patch(const std::string& name, const Embedding& x, int n_theta, int n_phi) {
  return sample_patch(name, ParamGrid::sphere(n_theta, n_phi), x);
}

SurfacePatch coordinate_sphere(double radius, int n_theta, int n_phi, const Vec& center) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "sphere radius must be positive");
  const Vec c = center;
  return sphere_patch("coordinate_sphere", [radius, c](double th, double ph) {
    Vec x(3);
    x << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
    return Vec(c + radius * x);
  }, n_theta, n_phi);
}

SurfacePatch torus_patch(const std::string& name, const Embedding& x, int n_u, int n_v, const Vec& period_u,
                         const Vec& period_v) {
  auto patch = sample_patch(name, ParamGrid::torus(n_u, n_v), x);
  patch.period_u = period_u;
  patch.period_v = period_v;
  return patch;
}

SurfacePatch disk_patch(const std::string& name, const Embedding& x, int n_cheb, int n_phi) {
  return sample_patch(name, ParamGrid::disk(n_cheb, n_phi), x);
}

SurfacePatch annulus_patch(const std::string& name, const Embedding& x, double a, double b, int n_cheb,
                           int n_phi) {
  return sample_patch(name, ParamGrid::annulus(a, b, n_cheb, n_phi), x);
}

SurfacePatch planar_disk(int axis, double level, double radius, int n_cheb, int n_phi) {
  if (axis < 0 || axis > 2) throw Error(ErrorKind::InvalidArgument, "axis out of range");
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "disk radius must be positive");
  return disk_patch("planar_disk", [=](double r, double ph) {
    Vec x(3);
    x[axis] = level;
    x[(axis + 1) % 3] = radius * r * std::cos(ph);
    x[(axis + 2) % 3] = radius * r * std::sin(ph);
    return x;
  }, n_cheb, n_phi);
}

SurfacePatch patch_from_positions(const std::string& name, std::shared_ptr<const ParamGrid> grid, Mat positions,
                                  int orientation) {
  if (positions.rows() != grid->size() || positions.cols() != 3)
    throw Error(ErrorKind::InvalidArgument, "positions must have one row of 3 coordinates per grid node");
  SurfacePatch patch;
  patch.name = name;
  patch.grid = std::move(grid);
  patch.positions = std::move(positions);
  patch.period_u = Vec::Zero(3);
  patch.period_v = Vec::Zero(3);
  patch.orientation = orientation >= 0 ? 1 : -1;
  return patch;
}

SurfaceGeometry::SurfaceGeometry(const MetricSpec& spec, const SurfacePatch& patch) : patch_(patch) {
  require_dim3(spec);
  const ParamGrid& grid = *patch.grid;
  const int n = grid.size();
  if (patch.positions.rows() != n || patch.positions.cols() != 3)
    throw Error(ErrorKind::InvalidArgument, "patch positions do not match its grid");

  // Positions minus the linear ramp of a flat torus are periodic.
  Mat y = patch.positions;
  const bool shifted = patch.period_u.size() == 3 && patch.period_v.size() == 3 &&
                       (patch.period_u.norm() > 0.0 || patch.period_v.norm() > 0.0);
  if (shifted) {
    for (int p = 0; p < n; ++p)
      y.row(p) -= (grid.u(p) * patch.period_u + grid.v(p) * patch.period_v).transpose() / (2.0 * kPi);
  }
  using D = ParamGrid::Deriv;
  Mat xu = grid.derivative(D::U, y), xv = grid.derivative(D::V, y);
  if (shifted) {
    xu.rowwise() += patch.period_u.transpose() / (2.0 * kPi);
    xv.rowwise() += patch.period_v.transpose() / (2.0 * kPi);
  }
  const Mat xuu = grid.derivative(D::UU, y), xuv = grid.derivative(D::UV, y), xvv = grid.derivative(D::VV, y);

  nodes_.resize(n);
  gamma_inv_.resize(n);
  christoffel_.resize(n);
  tangential_ricci_.resize(n);
  x_u_.resize(n);
  Vec guu(n), guv(n), gvv(n);
  for (int p = 0; p < n; ++p) {
    Point pt;
    pt.coords = row3(patch.positions, p);
    const MetricJet jet = metric_jet(spec, pt);
    const CurvatureBundle cb = curvature_from_jet(jet);
    const Vec tu = row3(xu, p), tv = row3(xv, p);
    Mat tangents(3, 2);
    tangents << tu, tv;
    const Mat gamma = tangents.transpose() * jet.g * tangents;
    const double det = gamma.determinant();
    if (!(det > 1e-14 * std::max(1.0, gamma.trace() * gamma.trace())))
      throw Error(ErrorKind::Degenerate, "degenerate induced metric at node " + std::to_string(p));

    const Vec ncov = cross3(tu, tv);
    Vec nu = jet.g_inv * ncov;
    nu *= patch.orientation / std::sqrt(ncov.dot(nu));

    auto second = [&](const Vec& xab, const Vec& ta, const Vec& tb) {
      Vec acc = xab;
      for (int k = 0; k < 3; ++k) acc[k] += ta.dot(cb.gamma[k] * tb);
      return -nu.dot(jet.g * acc);
    };
    Mat a(2, 2);
    a(0, 0) = second(row3(xuu, p), tu, tu);
    a(0, 1) = a(1, 0) = second(row3(xuv, p), tu, tv);
    a(1, 1) = second(row3(xvv, p), tv, tv);
    const Mat ginv = gamma.inverse();

    FundamentalForms& f = nodes_[p];
    f.x = pt.coords;
    f.nu = nu;
    f.gamma = gamma;
    f.a = a;
    f.h = (ginv * a).trace();
    f.a_norm2 = (ginv * a * ginv * a).trace();
    const Mat trace_free = a - 0.5 * f.h * gamma;
    f.umbilic = std::sqrt(std::max(0.0, (ginv * trace_free * ginv * trace_free).trace()));
    f.ric_nu_nu = nu.dot(cb.ric * nu);
    f.ambient_scalar = cb.scalar;
    f.area_density = std::sqrt(det);
    gamma_inv_[p] = ginv;
    tangential_ricci_[p] = tangents.transpose() * cb.ric * tangents;
    x_u_[p] = tangents;
    guu[p] = gamma(0, 0);
    guv[p] = gamma(0, 1);
    gvv[p] = gamma(1, 1);
  }

  // Intrinsic curvature from spectral derivatives of gamma; the off-diagonal
  // component is odd under the reflection that extends the grid.
  const Vec comps[3] = {guu, guv, gvv};
  const int parity[3] = {0, 1, 0};
  Vec d1[3][2], d2[3][3];
  for (int c = 0; c < 3; ++c) {
    d1[c][0] = grid.derivative(D::U, comps[c], parity[c]);
    d1[c][1] = grid.derivative(D::V, comps[c], parity[c]);
    d2[c][0] = grid.derivative(D::UU, comps[c], parity[c]);
    d2[c][1] = grid.derivative(D::UV, comps[c], parity[c]);
    d2[c][2] = grid.derivative(D::VV, comps[c], parity[c]);
  }
  auto pack = [](double uu, double uv, double vv) {
    Mat m(2, 2);
    m << uu, uv, uv, vv;
    return m;
  };
  for (int p = 0; p < n; ++p) {
    MetricJet j2;
    j2.dim = 2;
    j2.g = nodes_[p].gamma;
    j2.g_inv = gamma_inv_[p];
    j2.sqrt_det = nodes_[p].area_density;
    j2.dg = {pack(d1[0][0][p], d1[1][0][p], d1[2][0][p]), pack(d1[0][1][p], d1[1][1][p], d1[2][1][p])};
    const Mat duv = pack(d2[0][1][p], d2[1][1][p], d2[2][1][p]);
    j2.ddg = {pack(d2[0][0][p], d2[1][0][p], d2[2][0][p]), duv, duv, pack(d2[0][2][p], d2[1][2][p], d2[2][2][p])};
    const CurvatureBundle sb = curvature_from_jet(j2);
    Mat chr(2, 4);
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) chr(c, 2 * a + b) = sb.gamma[c](a, b);
    christoffel_[p] = chr;
    FundamentalForms& f = nodes_[p];
    f.sigma_scalar = sb.scalar;
    f.gauss_curvature = 0.5 * sb.scalar;
    f.gauss_residual = 2.0 * f.ric_nu_nu - (f.ambient_scalar - f.sigma_scalar + f.h * f.h - f.a_norm2);
  }
}

double SurfaceGeometry::area() const { return integrate(Vec::Ones(size())); }

double SurfaceGeometry::integrate(const Vec& f) const {
  if (f.size() != size()) throw Error(ErrorKind::InvalidArgument, "integrand needs one value per node");
  double s = 0.0;
  for (int p = 0; p < size(); ++p) s += patch_.grid->weight(p) * nodes_[p].area_density * f[p];
  return s;
}

std::vector<Mat> SurfaceGeometry::hessian(const Vec& f) const {
  const ParamGrid& g = *patch_.grid;
  using D = ParamGrid::Deriv;
  const Vec fu = g.derivative(D::U, f), fv = g.derivative(D::V, f);
  const Vec fuu = g.derivative(D::UU, f), fuv = g.derivative(D::UV, f), fvv = g.derivative(D::VV, f);
  std::vector<Mat> out(size());
  for (int p = 0; p < size(); ++p) {
    const Mat& c = christoffel_[p];
    Mat h(2, 2);
    h(0, 0) = fuu[p] - c(0, 0) * fu[p] - c(1, 0) * fv[p];
    h(0, 1) = h(1, 0) = fuv[p] - c(0, 1) * fu[p] - c(1, 1) * fv[p];
    h(1, 1) = fvv[p] - c(0, 3) * fu[p] - c(1, 3) * fv[p];
    out[p] = h;
  }
  return out;
}

Vec SurfaceGeometry::laplacian(const Vec& f) const {
  const auto hs = hessian(f);
  Vec out(size());
  for (int p = 0; p < size(); ++p) out[p] = (gamma_inv_[p] * hs[p]).trace();
  return out;
}

Mat SurfaceGeometry::laplacian_matrix() const {
  const ParamGrid& g = *patch_.grid;
  const int n = size();
  using D = ParamGrid::Deriv;
  const Mat du = g.derivative_matrix(D::U), dv = g.derivative_matrix(D::V);
  const Mat duu = g.derivative_matrix(D::UU), duv = g.derivative_matrix(D::UV), dvv = g.derivative_matrix(D::VV);
  Mat l(n, n);
  for (int p = 0; p < n; ++p) {
    const Mat& gi = gamma_inv_[p];
    const Mat& c = christoffel_[p];
    const double cu = gi(0, 0) * c(0, 0) + 2.0 * gi(0, 1) * c(0, 1) + gi(1, 1) * c(0, 3);
    const double cv = gi(0, 0) * c(1, 0) + 2.0 * gi(0, 1) * c(1, 1) + gi(1, 1) * c(1, 3);
    l.row(p) = gi(0, 0) * duu.row(p) + 2.0 * gi(0, 1) * duv.row(p) + gi(1, 1) * dvv.row(p) - cu * du.row(p) -
               cv * dv.row(p);
  }
  return l;
}

Vec SurfaceGeometry::gradient_norm2(const Vec& f) const {
  const ParamGrid& g = *patch_.grid;
  const Vec fu = g.derivative(ParamGrid::Deriv::U, f), fv = g.derivative(ParamGrid::Deriv::V, f);
  Vec out(size());
  for (int p = 0; p < size(); ++p) {
    Vec d(2);
    d << fu[p], fv[p];
    out[p] = d.dot(gamma_inv_[p] * d);
  }
  return out;
}

double SurfaceGeometry::sup_abs_h() const {
  double s = 0.0;
  for (const auto& f : nodes_) s = std::max(s, std::abs(f.h));
  return s;
}

double SurfaceGeometry::sup_norm_a() const {
  double s = 0.0;
  for (const auto& f : nodes_) s = std::max(s, std::sqrt(f.a_norm2));
  return s;
}

double SurfaceGeometry::sup_gauss_residual() const {
  double s = 0.0;
  for (const auto& f : nodes_) s = std::max(s, std::abs(f.gauss_residual));
  return s;
}

FundamentalForms surface_geometry(const MetricSpec& spec, const SurfacePatch& patch, int node) {
  if (node < 0 || node >= patch.grid->size()) throw Error(ErrorKind::InvalidArgument, "node is not on the grid");
  return SurfaceGeometry(spec, patch).at(node);
}

double surface_area(const MetricSpec& spec, const SurfacePatch& patch) { return SurfaceGeometry(spec, patch).area(); }

StabilityReport stability_min_eig(const MetricSpec& spec, const SurfacePatch& patch) {
  const SurfaceGeometry geo(spec, patch);
  const int n = geo.size();
  Mat op = -geo.laplacian_matrix();
  for (int p = 0; p < n; ++p) op(p, p) -= geo.at(p).a_norm2 + geo.at(p).ric_nu_nu;

  std::vector<int> keep;
  for (int p = 0; p < n; ++p)
    if (!patch.grid->on_boundary(p)) keep.push_back(p);
  const int m = static_cast<int>(keep.size());
  Mat sub(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) sub(a, b) = op(keep[a], keep[b]);

  Eigen::EigenSolver<Mat> es(sub);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "eigen-solver failure");
  const auto ev = es.eigenvalues();
  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return ev[a].real() < ev[b].real(); });

  StabilityReport rep;
  rep.dirichlet = m < n;
  rep.min_eigenvalue = ev[order[0]].real();
  rep.next_eigenvalue = m > 1 ? ev[order[1]].real() : rep.min_eigenvalue;
  const Vec vec = es.eigenvectors().col(order[0]).real();
  const double big = vec.cwiseAbs().maxCoeff();
  bool pos = false, neg = false;
  for (int i = 0; i < m; ++i) {
    if (vec[i] > 1e-6 * big) pos = true;
    if (vec[i] < -1e-6 * big) neg = true;
  }
  rep.eigenfunction_sign_definite = !(pos && neg);
  return rep;
}

namespace {

Vec restrict_field(const SurfaceGeometry& geo, const ScalarFieldSpec& v) {
  Vec out(geo.size());
  for (int p = 0; p < geo.size(); ++p) out[p] = v.value(geo.at(p).x);
  return out;
}

void require_static(const MetricSpec& spec, const SurfaceGeometry& geo, const ScalarFieldSpec& v, double tol) {
  for (int p = 0; p < geo.size(); ++p) {
    Point pt;
    pt.coords = geo.at(p).x;
    const double r = static_residual(spec, v, pt).norm;
    if (!(r <= tol))
      throw Error(ErrorKind::Precondition, "potential '" + v.name() + "' is not static on the patch (residual " +
                                               std::to_string(r) + ")");
  }
}

void require_scalar_flat(const SurfaceGeometry& geo, double tol) {
  for (const auto& f : geo.nodes())
    if (!(std::abs(f.ambient_scalar) <= tol))
      throw Error(ErrorKind::Precondition, "ambient scalar curvature does not vanish on the patch");
}

}  // namespace

double jacobi_residual(const MetricSpec& spec, const SurfacePatch& patch, const ScalarFieldSpec& v,
                       const IdentityTolerances& tol) {
  const SurfaceGeometry geo(spec, patch);
  if (!(geo.sup_abs_h() <= tol.minimal))
    throw Error(ErrorKind::Precondition, "patch is not minimal (sup |H| = " + std::to_string(geo.sup_abs_h()) + ")");
  require_static(spec, geo, v, tol.static_residual);
  const Vec vals = restrict_field(geo, v);
  const Vec lap = geo.laplacian(vals);
  double s = 0.0;
  for (int p = 0; p < geo.size(); ++p) s = std::max(s, std::abs(lap[p] + geo.at(p).ric_nu_nu * vals[p]));
  return s;
}

SplittingReport splitting_identity_report(const MetricSpec& spec, const SurfacePatch& patch, const ScalarFieldSpec& v,
                                          const IdentityTolerances& tol, double report_tolerance) {
  const SurfaceGeometry geo(spec, patch);
  if (!(geo.sup_norm_a() <= tol.geodesic))
    throw Error(ErrorKind::Precondition,
                "patch is not totally geodesic (sup |A| = " + std::to_string(geo.sup_norm_a()) + ")");
  require_scalar_flat(geo, tol.scalar_flat);
  const Vec vals = restrict_field(geo, v);
  const auto hess = geo.hessian(vals);
  const Vec grad2 = geo.gradient_norm2(vals);
  SplittingReport rep;
  rep.tolerance = report_tolerance;
  double cmin = 1e300, cmax = -1e300;
  for (int p = 0; p < geo.size(); ++p) {
    const auto& f = geo.at(p);
    const Mat ric_sigma = f.gauss_curvature * f.gamma;
    rep.ricci_split = std::max(rep.ricci_split, gamma_operator_norm(geo.tangential_ricci()[p] - 0.5 * ric_sigma, f.gamma));
    rep.hessian_split = std::max(rep.hessian_split, gamma_operator_norm(hess[p] - 0.5 * vals[p] * ric_sigma, f.gamma));
    const double lap = (f.gamma.inverse() * hess[p]).trace();
    rep.laplacian_split = std::max(rep.laplacian_split, std::abs(lap - 0.5 * vals[p] * f.sigma_scalar));
    const double c = f.sigma_scalar * vals[p] * vals[p] + 2.0 * grad2[p];
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
  }
  rep.conserved_variation = cmax - cmin;
  rep.identities_hold = rep.ricci_split <= report_tolerance && rep.hessian_split <= report_tolerance &&
                        rep.laplacian_split <= report_tolerance && rep.conserved_variation <= report_tolerance;
  return rep;
}

double boundary_static_identity(const MetricSpec& spec, const SurfacePatch& patch, const ScalarFieldSpec& v,
                                const IdentityTolerances& tol) {
  const SurfaceGeometry geo(spec, patch);
  require_static(spec, geo, v, tol.static_residual);
  require_scalar_flat(geo, tol.scalar_flat);
  const Vec vals = restrict_field(geo, v);
  const Vec lap = geo.laplacian(vals);
  double s = 0.0;
  for (int p = 0; p < geo.size(); ++p) {
    const auto& f = geo.at(p);
    const double dnu = v.evaluate(f.x).grad.dot(f.nu);
    const double r = lap[p] + f.h * dnu + 0.5 * (f.h * f.h - f.a_norm2 - 2.0 * f.gauss_curvature) * vals[p];
    s = std::max(s, std::abs(r));
  }
  return s;
}

std::string mesh_json(const SurfacePatch& patch) {
  const ParamGrid& g = *patch.grid;
  nlohmann::json j;
  j["format"] = "staticgeo-mesh";
  j["version"] = 1;
  j["name"] = patch.name;
  j["kind"] = to_string(g.kind());
  j["grid"] = {{"resolution", {g.resolution1(), g.resolution2()}}, {"lower", g.lower()}, {"upper", g.upper()},
               {"nodes", g.size()}};
  j["orientation"] = patch.orientation;
  j["period_u"] = std::vector<double>(patch.period_u.data(), patch.period_u.data() + patch.period_u.size());
  j["period_v"] = std::vector<double>(patch.period_v.data(), patch.period_v.data() + patch.period_v.size());
  auto params = nlohmann::json::array();
  auto pos = nlohmann::json::array();
  for (int p = 0; p < g.size(); ++p) {
    params.push_back({g.u(p), g.v(p)});
    pos.push_back({patch.positions(p, 0), patch.positions(p, 1), patch.positions(p, 2)});
  }
  j["parameters"] = params;
  j["positions"] = pos;
  return j.dump(1);
}

void write_mesh_json(const std::filesystem::path& path, const SurfacePatch& patch) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << mesh_json(patch) << "\n";
}

SurfacePatch parse_mesh_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed mesh JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "staticgeo-mesh") throw Error(ErrorKind::Io, "not a staticgeo mesh file");
    const std::string kind = j.at("kind");
    const auto res = j.at("grid").at("resolution");
    const int r1 = res.at(0), r2 = res.at(1);
    std::shared_ptr<const ParamGrid> grid;
    if (kind == "sphere") grid = ParamGrid::sphere(r1, r2);
    else if (kind == "torus") grid = ParamGrid::torus(r1, r2);
    else if (kind == "disk") grid = ParamGrid::disk(r1, r2);
    else if (kind == "annulus") grid = ParamGrid::annulus(j.at("grid").at("lower"), j.at("grid").at("upper"), r1, r2);
    else throw Error(ErrorKind::Io, "unknown mesh kind '" + kind + "'");
    const auto& pos = j.at("positions");
    if (static_cast<int>(pos.size()) != grid->size()) throw Error(ErrorKind::Io, "mesh node count mismatch");
    Mat x(grid->size(), 3);
    for (int p = 0; p < grid->size(); ++p)
      for (int k = 0; k < 3; ++k) x(p, k) = pos.at(p).at(k);
    SurfacePatch patch = patch_from_positions(j.value("name", "mesh"), grid, x, j.value("orientation", 1));
    const auto pu = j.value("period_u", std::vector<double>(3, 0.0));
    const auto pv = j.value("period_v", std::vector<double>(3, 0.0));
    if (pu.size() != 3 || pv.size() != 3) throw Error(ErrorKind::Io, "period vectors need 3 components");
    patch.period_u = Eigen::Map<const Vec>(pu.data(), 3);
    patch.period_v = Eigen::Map<const Vec>(pv.data(), 3);
    return patch;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed mesh JSON: ") + e.what());
  }
}

SurfacePatch read_mesh_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mesh_json(ss.str());
}

void write_ply(const std::filesystem::path& path, const SurfacePatch& patch) {
  const ParamGrid& g = *patch.grid;
  const int rows = g.rows(), cols = g.n2();
  const bool wrap_rows = g.kind() == GridKind::Torus;
  std::vector<std::array<int, 4>> faces;
  for (int i = 0; i < (wrap_rows ? rows : rows - 1); ++i)
    for (int j = 0; j < cols; ++j) {
      const int i2 = (i + 1) % rows, j2 = (j + 1) % cols;
      faces.push_back({i * cols + j, i2 * cols + j, i2 * cols + j2, i * cols + j2});
    }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "ply\nformat ascii 1.0\ncomment " << patch.name << "\nelement vertex " << g.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nelement face " << faces.size()
      << "\nproperty list uchar int vertex_indices\nend_header\n";
  out.precision(17);
  for (int p = 0; p < g.size(); ++p)
    out << patch.positions(p, 0) << " " << patch.positions(p, 1) << " " << patch.positions(p, 2) << "\n";
  for (const auto& f : faces) out << "4 " << f[0] << " " << f[1] << " " << f[2] << " " << f[3] << "\n";
}

}  // namespace staticgeo
