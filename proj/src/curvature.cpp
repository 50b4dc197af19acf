#include "staticgeo/curvature.hpp"

#include <algorithm>
#include <cmath>

#include "staticgeo/error.hpp"

namespace staticgeo {

std::vector<Mat> christoffel_symbols(const MetricJet& jet) {
  const int n = jet.dim;
  std::vector<Mat> gamma(n, Mat::Zero(n, n));
  for (int l = 0; l < n; ++l) {
    Mat first(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        first(i, j) = 0.5 * (jet.dg[i](j, l) + jet.dg[j](i, l) - jet.dg[l](i, j));
    for (int k = 0; k < n; ++k) gamma[k] += jet.g_inv(k, l) * first;
  }
  return gamma;
}

CurvatureBundle curvature_from_jet(const MetricJet& jet) {
  const int n = jet.dim;
  CurvatureBundle b;
  b.dim = n;
  b.g = jet.g;
  b.g_inv = jet.g_inv;

  // Christoffel symbols of the first kind: c[k](i, j) = 1/2 (d_i g_jk + d_j g_ik - d_k g_ij).
  std::vector<Mat> first(n, Mat(n, n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        first[k](i, j) = 0.5 * (jet.dg[i](j, k) + jet.dg[j](i, k) - jet.dg[k](i, j));
  b.gamma.assign(n, Mat::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) b.gamma[k] += jet.g_inv(k, l) * first[l];

  // d_m Gamma^k_ij = d_m g^kl c_lij + g^kl d_m c_lij, with d_m g^kl = -g^ka d_m g_ab g^bl.
  std::vector<std::vector<Mat>> dgamma(n, std::vector<Mat>(n, Mat::Zero(n, n)));  // [m][k]
  for (int m = 0; m < n; ++m) {
    const Mat dginv = -jet.g_inv * jet.dg[m] * jet.g_inv;
    for (int l = 0; l < n; ++l) {
      Mat dfirst(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          dfirst(i, j) = 0.5 * (jet.d2(m, i)(j, l) + jet.d2(m, j)(i, l) - jet.d2(m, l)(i, j));
      for (int k = 0; k < n; ++k)
        dgamma[m][k] += dginv(k, l) * first[l] + jet.g_inv(k, l) * dfirst;
    }
  }

  // R_ijk^m = d_i Gamma^m_jk - d_j Gamma^m_ik + Gamma^p_jk Gamma^m_ip - Gamma^p_ik Gamma^m_jp.
  const std::size_t n4 = static_cast<std::size_t>(n) * n * n * n;
  b.rm.assign(n4, 0.0);
  std::vector<double> up(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        for (int m = 0; m < n; ++m) {
          double v = dgamma[i][m](j, k) - dgamma[j][m](i, k);
          for (int p = 0; p < n; ++p)
            v += b.gamma[p](j, k) * b.gamma[m](i, p) - b.gamma[p](i, k) * b.gamma[m](j, p);
          up[m] = v;
        }
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int m = 0; m < n; ++m) v += jet.g(l, m) * up[m];
          b.rm[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)] = v;
        }
      }

  b.ric = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) b.ric(j, k) += jet.g_inv(i, l) * b.riemann(i, j, k, l);
  b.ric = 0.5 * (b.ric + b.ric.transpose()).eval();
  b.scalar = (jet.g_inv.cwiseProduct(b.ric)).sum();
  double dt = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) dt += jet.g_inv(i, l) * jet.g_inv(j, k) * b.riemann(i, j, k, l);
  b.scalar_double_trace = dt;
  return b;
}

double bianchi_residual(const CurvatureBundle& b) {
  const int n = b.dim;
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          worst = std::max(worst, std::abs(b.riemann(i, j, k, l) + b.riemann(j, k, i, l) +
                                           b.riemann(k, i, j, l)));
  return worst;
}

double symmetry_residual(const CurvatureBundle& b) {
  const int n = b.dim;
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double v = b.riemann(i, j, k, l);
          worst = std::max({worst, std::abs(v + b.riemann(j, i, k, l)),
                            std::abs(v + b.riemann(i, j, l, k)), std::abs(v - b.riemann(k, l, i, j))});
        }
  return worst;
}

double riemann_norm(const CurvatureBundle& b) {
  double worst = 0.0;
  for (double v : b.rm) worst = std::max(worst, std::abs(v));
  return worst;
}

CurvatureBundle curvature_bundle(const MetricSpec& spec, const Point& p, DerivativeMode mode) {
  const MetricJet jet = metric_jet(spec, p, mode);
  CurvatureBundle b = curvature_from_jet(jet);
  if (mode == DerivativeMode::FiniteDifference) {
    const double budget = kFdCurvatureNoise * std::max(1.0, riemann_norm(b));
    if (symmetry_residual(b) > budget)
      throw Error(ErrorKind::Degenerate, "finite-difference jet too noisy for curvature");
  }
  return b;
}

HessianData hessian_from(const CurvatureBundle& b, const FieldJet& v) {
  const int n = b.dim;
  HessianData h;
  h.dim = n;
  h.value = v.value;
  h.partials = v.grad;
  h.gradient = b.g_inv * v.grad;
  h.hessian = v.hess;
  for (int k = 0; k < n; ++k) h.hessian -= v.grad[k] * b.gamma[k];
  h.hessian = 0.5 * (h.hessian + h.hessian.transpose()).eval();
  h.laplacian = b.g_inv.cwiseProduct(h.hessian).sum();
  return h;
}

HessianData covariant_hessian(const MetricSpec& spec, const ScalarFieldSpec& v, const Point& p) {
  if (!v.has_second_derivatives())
    throw Error(ErrorKind::Precondition, "potential '" + v.name() + "' lacks second derivatives");
  if (v.dim() != spec.dim) throw Error(ErrorKind::InvalidArgument, "field and metric dimensions differ");
  const CurvatureBundle b = curvature_bundle(spec, p);
  return hessian_from(b, v.evaluate(p.coords));
}

}  // namespace staticgeo
