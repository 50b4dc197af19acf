#pragma once

// The static operator L*V = -(Delta V) g + Hess V - V Ric, structural checks on
// static metrics, a Dirichlet Laplace solver on coordinate annuli and
// extraction of zero sets of potentials as graphs.

#include <optional>
#include <vector>

#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/curvature.hpp"
#include "staticgeo/field.hpp"

namespace staticgeo {

struct StaticResidual {
  Mat tensor;                   // (L*V)_ij
  double norm = 0.0;            // g-norm sqrt(g^ik g^jl L_ij L_kl)
  double trace = 0.0;           // g^ij (L*V)_ij
  double trace_expected = 0.0;  // -(n-1) Delta V - R V
  double laplacian = 0.0;
  double scalar_curvature = 0.0;
  double value = 0.0;
};

StaticResidual static_residual(const MetricSpec& spec, const ScalarFieldSpec& v, const Point& p);
StaticResidual static_residual_from(const CurvatureBundle& b, const HessianData& h);

struct ScalarConstancyReport {
  std::vector<double> values;  // R at each sample
  double max_deviation = 0.0;  // max |R(p) - R(p0)|
  double tolerance = 0.0;
  bool flagged = false;  // true when the deviation exceeds the tolerance
};

ScalarConstancyReport scalar_constancy_check(const MetricSpec& spec, const std::vector<Point>& samples,
                                             double tolerance = 1e-8);

// Annulus rho_inner < |x| < rho_outer (n = 3), discretized in (xi = log rho,
// cell-centred theta reflected through the poles, periodic phi).
struct AnnulusGrid {
  double rho_inner = 1.0;
  double rho_outer = 2.0;
  int n_xi = 64;     // intervals in xi (n_xi + 1 nodes including both boundaries)
  int n_theta = 16;  // cell-centred colatitudes
  int n_phi = 16;    // longitudes (even)
};

struct AnnulusOptions {
  double solver_tolerance = 1e-12;
  int max_iterations = 5000;
  bool normalize_outer = false;  // rescale so that sup |V| on the outer sphere is 1
  double scalar_flat_tolerance = 1e-6;
  int diagnostic_samples = 64;
};

struct AnnulusSolution {
  ScalarFieldSpec field;
  AnnulusGrid grid;
  int iterations = 0;
  double solver_error = 0.0;            // relative residual of the linear solve
  double discrete_residual = 0.0;       // max |L_h V - 0| at interior nodes
  double boundary_mismatch = 0.0;       // max |V - data| at boundary nodes
  double outer_sup_norm = 0.0;          // sup |V| on the outer sphere before normalization
  double normalization = 1.0;           // factor applied to the solution
  double max_static_residual = 0.0;     // diagnostic at interior sample points
  double max_scalar_curvature = 0.0;    // observed |R| on the annulus
};

AnnulusSolution solve_harmonic_annulus(const MetricSpec& spec, const ScalarFieldSpec& inner_bc,
                                       const ScalarFieldSpec& outer_bc, const AnnulusGrid& grid,
                                       const AnnulusOptions& options = {});

struct ZeroSetWindow {
  std::vector<double> lo;     // bounds of the window in the transverse coordinates
  std::vector<double> hi;
  int samples = 9;            // lattice points per transverse axis
  double search_lo = -10.0;   // scan range along the graph direction
  double search_hi = 10.0;
  int scan_samples = 200;     // sign-change detection cells per scan line
};

struct PowerBound {
  double constant = 0.0;  // C
  double exponent = 0.0;  // gamma in C |x'|^gamma (or gamma - 1 for gradients)
};

struct ZeroSetGraph {
  int component = 0;
  int axis = 2;                   // the graph direction x^axis = f(x')
  std::vector<Vec> base_points;   // x' samples (n - 1 coordinates)
  std::vector<double> heights;    // f(x')
  std::vector<Vec> gradients;     // grad f(x') from the implicit function theorem
  double root_tolerance = 0.0;    // max |V| at the returned points
  double gradient_bound = 0.0;    // max |grad f|
  PowerBound height_fit;          // |f| <= C |x'|^gamma
  PowerBound gradient_fit;        // |grad f| <= C |x'|^(gamma - 1); exponent stores gamma
  std::optional<ScalarFieldSpec> field;

  Vec point(std::size_t i) const;  // the ambient point (x', f(x'))
};

std::vector<ZeroSetGraph> zero_set_extract(const ScalarFieldSpec& v, const ZeroSetWindow& window,
                                           int axis = -1);

// Zero set points along rays from the origin (one root per ray in [rho_lo, rho_hi]).
std::vector<Point> radial_zero_set(const ScalarFieldSpec& v, const std::vector<Vec>& directions,
                                   double rho_lo, double rho_hi);

struct LevelSetGeometry {
  double sup_norm_a = 0.0;     // sup |A|_g
  double sup_abs_h = 0.0;      // sup |H|
  double max_abs_value = 0.0;  // sup |V| at the samples
  double tolerance = 0.0;
  bool pass = false;
  std::size_t samples = 0;
};

// Second fundamental form of the level set through each sample:
// A = Hess V restricted to the tangent space, divided by |grad V|_g.
LevelSetGeometry level_set_geometry_check(const MetricSpec& spec, const ScalarFieldSpec& v,
                                          const std::vector<Point>& points, double tolerance = 1e-8);
LevelSetGeometry level_set_geometry_check(const MetricSpec& spec, const ZeroSetGraph& graph,
                                          double tolerance = 1e-8);

}  // namespace staticgeo
