#pragma once

// Christoffel symbols, Riemann/Ricci/scalar curvature and covariant Hessians.
//
// Conventions: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
// Rm_ijkl = <R(d_i, d_j) d_k, d_l>, Ric_jk = g^il Rm_ijkl (trace on the first
// and fourth slots). With these choices the round sphere has positive
// sectional curvature Rm_ijji > 0.

#include <vector>

#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/field.hpp"

namespace staticgeo {

struct CurvatureBundle {
  int dim = 3;
  Mat g;
  Mat g_inv;
  std::vector<Mat> gamma;     // gamma[k](i, j) = Gamma^k_ij
  std::vector<double> rm;     // fully covariant, index ((i n + j) n + k) n + l
  Mat ric;
  double scalar = 0.0;          // g^ij Ric_ij
  double scalar_double_trace = 0.0;  // g^il g^jk Rm_ijkl

  double riemann(int i, int j, int k, int l) const {
    return rm[static_cast<std::size_t>(((i * dim + j) * dim + k) * dim + l)];
  }
  double christoffel(int k, int i, int j) const { return gamma[k](i, j); }
};

struct HessianData {
  int dim = 3;
  double value = 0.0;
  Vec partials;   // d_i V
  Vec gradient;   // g^ij d_j V (index raised)
  Mat hessian;    // (nabla^2 V)_ij = d_i d_j V - Gamma^k_ij d_k V
  double laplacian = 0.0;
};

// Christoffel symbols only: result[k](i, j) = Gamma^k_ij.
std::vector<Mat> christoffel_symbols(const MetricJet& jet);

// Curvature of an arbitrary metric jet (any dimension >= 2).
CurvatureBundle curvature_from_jet(const MetricJet& jet);

// Curvature of a catalog/tabulated metric at p. Finite-difference jets are
// rejected when the curvature symmetries fail by more than the noise budget.
CurvatureBundle curvature_bundle(const MetricSpec& spec, const Point& p,
                                 DerivativeMode mode = DerivativeMode::Analytic);

HessianData hessian_from(const CurvatureBundle& bundle, const FieldJet& v);
HessianData covariant_hessian(const MetricSpec& spec, const ScalarFieldSpec& v, const Point& p);

// Residual diagnostics (sup norms).
double bianchi_residual(const CurvatureBundle& b);   // first Bianchi identity
double symmetry_residual(const CurvatureBundle& b);  // pair antisymmetries and pair swap
double riemann_norm(const CurvatureBundle& b);       // sup |Rm_ijkl|

// Tolerance on symmetry residuals of finite-difference curvature.
inline constexpr double kFdCurvatureNoise = 1e-5;

}  // namespace staticgeo
