#include "staticgeo/grid.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "staticgeo/error.hpp"

namespace staticgeo {

std::size_t GridData::node_count() const {
  std::size_t count = 1;
  for (int s : shape) count *= static_cast<std::size_t>(s);
  return count;
}

double GridData::spacing(int axis) const {
  return (hi[axis] - lo[axis]) / (shape[axis] - 1);
}

namespace {

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

// Uniform cubic B-spline basis on one cell, t in [0, 1].
void basis(double t, double w[4], double dw[4], double ddw[4]) {
  const double s = 1.0 - t;
  w[0] = s * s * s / 6.0;
  w[1] = (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0;
  w[2] = (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0;
  w[3] = t * t * t / 6.0;
  dw[0] = -0.5 * s * s;
  dw[1] = 1.5 * t * t - 2.0 * t;
  dw[2] = -1.5 * t * t + t + 0.5;
  dw[3] = 0.5 * t * t;
  ddw[0] = s;
  ddw[1] = 3.0 * t - 2.0;
  ddw[2] = -3.0 * t + 1.0;
  ddw[3] = t;
}

// Clamped-curvature coefficients: returns N + 2 coefficients (ghosts at both ends).
std::vector<double> line_coefficients(const std::vector<double>& f) {
  const int n = static_cast<int>(f.size());
  const double fpp0 = 2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3];  // times h^2
  const double fppn = 2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4];
  std::vector<double> c(n + 2, 0.0);
  const double c0 = f[0] - fpp0 / 6.0;
  const double cn = f[n - 1] - fppn / 6.0;
  // Interior unknowns c_1..c_{n-2}: c_{i-1} + 4 c_i + c_{i+1} = 6 f_i (Thomas).
  const int m = n - 2;
  std::vector<double> diag(m, 4.0), rhs(m);
  for (int i = 0; i < m; ++i) rhs[i] = 6.0 * f[i + 1];
  rhs[0] -= c0;
  rhs[m - 1] -= cn;
  for (int i = 1; i < m; ++i) {
    const double w = 1.0 / diag[i - 1];
    diag[i] -= w;
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> inner(m);
  inner[m - 1] = rhs[m - 1] / diag[m - 1];
  for (int i = m - 2; i >= 0; --i) inner[i] = (rhs[i] - inner[i + 1]) / diag[i];
  c[1] = c0;
  for (int i = 0; i < m; ++i) c[i + 2] = inner[i];
  c[n] = cn;
  const double c1 = n > 2 ? c[2] : cn;
  c[0] = 2.0 * c0 - c1 + fpp0;
  c[n + 1] = 2.0 * cn - c[n - 1] + fppn;
  return c;
}

}  // namespace

GridData read_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open grid file " + path.string());
  std::string header;
  std::getline(in, header);
  GridData data;
  std::stringstream hs(header);
  std::string token;
  while (hs >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Io, "malformed grid header token " + token);
    const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
    if (key == "n") {
      data.dim = std::stoi(value);
    } else if (key == "lo") {
      data.lo = parse_doubles(value);
    } else if (key == "hi") {
      data.hi = parse_doubles(value);
    } else if (key == "shape") {
      for (double s : parse_doubles(value)) data.shape.push_back(static_cast<int>(s));
    } else {
      throw Error(ErrorKind::Io, "unknown grid header key " + key);
    }
  }
  const auto d = static_cast<std::size_t>(data.dim);
  if (data.dim < 1 || data.lo.size() != d || data.hi.size() != d || data.shape.size() != d)
    throw Error(ErrorKind::Io, "grid header dimensions are inconsistent");
  std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t count = payload.size() / sizeof(double);
  const std::size_t nodes = data.node_count();
  if (payload.size() % sizeof(double) != 0 || nodes == 0 || count % nodes != 0)
    throw Error(ErrorKind::Io, "grid payload size does not match shape");
  data.components = static_cast<int>(count / nodes);
  data.values.resize(count);
  std::memcpy(data.values.data(), payload.data(), count * sizeof(double));
  return data;
}

void write_grid_file(const std::filesystem::path& path, const GridData& data) {
  if (data.values.size() != data.node_count() * static_cast<std::size_t>(data.components))
    throw Error(ErrorKind::InvalidArgument, "grid payload size does not match shape");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write grid file " + path.string());
  out << "n=" << data.dim << " lo=" << join(data.lo) << " hi=" << join(data.hi)
      << " shape=" << join(data.shape) << '\n';
  out.write(reinterpret_cast<const char*>(data.values.data()),
            static_cast<std::streamsize>(data.values.size() * sizeof(double)));
}

CubicSplineGrid::CubicSplineGrid(const GridData& data, std::vector<bool> periodic)
    : dim_(data.dim), components_(data.components), periodic_(std::move(periodic)) {
  if (periodic_.empty()) periodic_.assign(dim_, false);
  if (static_cast<int>(periodic_.size()) != dim_)
    throw Error(ErrorKind::InvalidArgument, "periodic flags do not match grid dimension");
  if (dim_ > kMaxJetVars) throw Error(ErrorKind::InvalidArgument, "grid dimension too large");
  for (int k = 0; k < dim_; ++k) {
    const int n = data.shape[k];
    if (n < (periodic_[k] ? 3 : 4))
      throw Error(ErrorKind::InvalidArgument, "spline axis needs at least 4 nodes (3 periodic)");
    nodes_.push_back(n);
    lo_.push_back(data.lo[k]);
    // Periodic axes: hi is the last node; the period is n * h.
    h_.push_back((data.hi[k] - data.lo[k]) / (n - 1));
    coef_shape_.push_back(periodic_[k] ? n : n + 2);
  }

  std::vector<double> cur = data.values;
  std::vector<int> shape = nodes_;
  for (int axis = 0; axis < dim_; ++axis) {
    std::vector<int> next_shape = shape;
    next_shape[axis] = coef_shape_[axis];
    std::size_t outer = 1, inner = 1;
    for (int k = 0; k < axis; ++k) outer *= shape[k];
    for (int k = axis + 1; k < dim_; ++k) inner *= shape[k];
    inner *= components_;
    const int n = shape[axis], m = next_shape[axis];
    std::vector<double> next(outer * m * inner);

    Eigen::PartialPivLU<Eigen::MatrixXd> cyclic;
    if (periodic_[axis]) {
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        a(i, i) = 4.0;
        a(i, (i + 1) % n) += 1.0;
        a(i, (i + n - 1) % n) += 1.0;
      }
      cyclic.compute(a);
    }
    std::vector<double> line(n);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t in = 0; in < inner; ++in) {
        for (int i = 0; i < n; ++i) line[i] = cur[(o * n + i) * inner + in];
        std::vector<double> c;
        if (periodic_[axis]) {
          Eigen::VectorXd rhs = 6.0 * Eigen::Map<Eigen::VectorXd>(line.data(), n);
          Eigen::VectorXd sol = cyclic.solve(rhs);
          c.assign(sol.data(), sol.data() + n);
        } else {
          c = line_coefficients(line);
        }
        for (int i = 0; i < m; ++i) next[(o * m + i) * inner + in] = c[i];
      }
    cur = std::move(next);
    shape = next_shape;
  }
  coef_ = std::move(cur);
}

bool CubicSplineGrid::contains(std::span<const double> x) const {
  for (int k = 0; k < dim_; ++k) {
    if (periodic_[k]) continue;
    const double hi = lo_[k] + h_[k] * (nodes_[k] - 1);
    const double slack = 1e-12 * (std::abs(lo_[k]) + std::abs(hi) + 1.0);
    if (x[k] < lo_[k] - slack || x[k] > hi + slack) return false;
  }
  return true;
}

void CubicSplineGrid::evaluate(std::span<const double> x, std::span<Jet> out) const {
  if (!contains(x)) throw Error(ErrorKind::OutsideDomain, "point outside tabulated grid");
  double w[kMaxJetVars][4], dw[kMaxJetVars][4], ddw[kMaxJetVars][4];
  int idx[kMaxJetVars][4];
  for (int k = 0; k < dim_; ++k) {
    const double u = (x[k] - lo_[k]) / h_[k];
    int cell = static_cast<int>(std::floor(u));
    if (!periodic_[k]) cell = std::clamp(cell, 0, nodes_[k] - 2);
    const double t = u - cell;
    basis(t, w[k], dw[k], ddw[k]);
    for (int j = 0; j < 4; ++j) {
      dw[k][j] /= h_[k];
      ddw[k][j] /= h_[k] * h_[k];
      if (periodic_[k]) {
        const int n = nodes_[k];
        idx[k][j] = (((cell - 1 + j) % n) + n) % n;
      } else {
        idx[k][j] = cell + j;  // coefficient array is shifted by one ghost
      }
    }
  }

  const int nc = components_;
  std::vector<double> val(nc, 0.0);
  std::vector<double> grad(static_cast<std::size_t>(nc) * dim_, 0.0);
  std::vector<double> hess(static_cast<std::size_t>(nc) * dim_ * dim_, 0.0);

  int combo[kMaxJetVars] = {};
  const int total = 1 << (2 * dim_);
  for (int c = 0; c < total; ++c) {
    int rem = c;
    std::size_t flat = 0;
    for (int k = 0; k < dim_; ++k) {
      combo[k] = rem & 3;
      rem >>= 2;
      flat = flat * coef_shape_[k] + idx[k][combo[k]];
    }
    const double* coef = &coef_[flat * nc];
    // Products of basis factors with zero, one or two differentiated axes.
    double base = 1.0;
    for (int k = 0; k < dim_; ++k) base *= w[k][combo[k]];
    double g[kMaxJetVars];
    double hh[kMaxJetVars][kMaxJetVars];
    for (int a = 0; a < dim_; ++a) {
      double p = dw[a][combo[a]];
      for (int k = 0; k < dim_; ++k)
        if (k != a) p *= w[k][combo[k]];
      g[a] = p;
      for (int b = a; b < dim_; ++b) {
        double q;
        if (a == b) {
          q = ddw[a][combo[a]];
          for (int k = 0; k < dim_; ++k)
            if (k != a) q *= w[k][combo[k]];
        } else {
          q = dw[a][combo[a]] * dw[b][combo[b]];
          for (int k = 0; k < dim_; ++k)
            if (k != a && k != b) q *= w[k][combo[k]];
        }
        hh[a][b] = q;
      }
    }
    for (int comp = 0; comp < nc; ++comp) {
      const double cv = coef[comp];
      val[comp] += cv * base;
      for (int a = 0; a < dim_; ++a) {
        grad[comp * dim_ + a] += cv * g[a];
        for (int b = a; b < dim_; ++b) hess[(comp * dim_ + a) * dim_ + b] += cv * hh[a][b];
      }
    }
  }
  for (int comp = 0; comp < nc; ++comp) {
    Jet::Gradient g{};
    Jet::Hessian h{};
    for (int a = 0; a < dim_; ++a) {
      g[a] = grad[comp * dim_ + a];
      for (int b = a; b < dim_; ++b) {
        h[a][b] = hess[(comp * dim_ + a) * dim_ + b];
        h[b][a] = h[a][b];
      }
    }
    out[comp] = Jet::from_parts(val[comp], dim_, g, h);
  }
}

}  // namespace staticgeo
