#pragma once

// Graphical Plateau solver and the radius-sequence experiment: minimal graphs
// x^axis = u(x') over planar domains whose boundary lies on the zero set of a
// potential intersected with a coordinate sphere, the check that they meet an
// inner ball, windowed convergence diagnostics and local minimality probes.
//
// Domains are affine images x' = c + L s of the unit disk |s| <= 1 (a circle
// or an ellipse), discretized with the polar Chebyshev x Fourier grid.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/field.hpp"
#include "staticgeo/hypersurface.hpp"

namespace staticgeo {

struct PlateauDomain {
  int axis = 2;                        // height direction; x' are the other two, in cyclic order
  Vec center = Vec::Zero(2);           // c
  Mat shape = Mat::Identity(2, 2);     // L
};

// Map from the unit-disk parameter (r, phi) to the planar point x'.
Vec domain_point(const PlateauDomain& domain, double r, double phi);
// Embedding of a graph point into the chart.
Vec graph_embedding(const PlateauDomain& domain, const Vec& planar, double height);

struct PlateauProblem {
  MetricSpec spec;
  PlateauDomain domain;
  std::function<double(double)> boundary_height;  // height at x'(1, phi)
  int n_cheb = 15;                                // odd
  int n_phi = 16;
  std::optional<Vec> initial_guess;               // heights at the grid nodes
  double tolerance = 1e-8;                        // sup |H|
  int max_iterations = 40;
  int max_halvings = 30;
  double boundary_sphere_deviation = 0.0;         // filled by zero_set_problem
  double ellipse_fit_residual = 0.0;
};

// Circle of the given radius centred on the axis, heights h(phi).
PlateauProblem circle_problem(const MetricSpec& spec, double radius, std::function<double(double)> height,
                              int axis = 2);

// Boundary spanning V^{-1}(0) intersected with the coordinate sphere S_R: the
// projected curve is fitted by an ellipse (exact for planes) and the boundary
// heights solve V(x', z) = 0. Requires the zero set to be a graph over the
// plane orthogonal to `axis` near S_R.
PlateauProblem zero_set_problem(const MetricSpec& spec, const ScalarFieldSpec& v, double radius, int axis = 2,
                                int n_cheb = 15, int n_phi = 16, int curve_samples = 64);

struct DiscreteGraphSurface {
  PlateauDomain domain;
  std::shared_ptr<const ParamGrid> grid;
  Vec heights;
  SurfacePatch patch;
  double sup_h = 0.0;         // interior sup |H| (divergence form)
  double area = 0.0;
  double initial_area = 0.0;  // area of the initial guess
  int iterations = 0;
  std::vector<double> damping;            // accepted step length per iteration
  std::vector<double> residual_history;   // sup |H| before each iteration
  bool converged = false;
};

// Harmonic extension (in the disk parameter) of boundary heights.
Vec harmonic_extension(const ParamGrid& grid, const std::function<double(double)>& boundary_height);

// Mean curvature of the graph in divergence form, H = div_g(grad F / |grad F|)
// with F = x^axis - u(x'); the normal points towards increasing x^axis.
Vec graph_mean_curvature(const MetricSpec& spec, const PlateauDomain& domain, const ParamGrid& grid,
                         const Vec& heights);

SurfacePatch graph_patch(const PlateauDomain& domain, std::shared_ptr<const ParamGrid> grid, const Vec& heights);

// Damped Newton on the interior mean curvature with Armijo backtracking on
// sum H^2, starting from the harmonic extension unless a guess is given.
DiscreteGraphSurface solve_minimal_graph(const PlateauProblem& problem);

double graph_area(const MetricSpec& spec, const DiscreteGraphSurface& surface, const Vec& heights);

struct MinimalityProbe {
  int trials = 0;
  double min_gap = 0.0;             // min of area(u + delta) - area(u)
  int non_positive_gaps = 0;
  double second_variation_min_eig = 0.0;  // Dirichlet stability operator
  bool locally_minimizing = false;
};

MinimalityProbe local_minimality_probe(const MetricSpec& spec, const DiscreteGraphSurface& surface, int trials,
                                       std::uint64_t seed);

struct RadiusReport {
  double radius = 0.0;
  bool intersects_inner_ball = false;
  double min_norm = 0.0;         // min over nodes of |x|
  double area = 0.0;
  double drift = -1.0;           // sup vertical distance to the previous radius on the window (-1 for the first)
  double sup_h = 0.0;
  double sup_abs_height = 0.0;
  int iterations = 0;
  double boundary_sphere_deviation = 0.0;
};

struct SequenceOptions {
  int n_cheb = 15;
  int n_phi = 16;
  double tolerance = 1e-8;
  bool check_expansion = true;
  std::vector<double> fit_radii;  // defaults to r_1 * {1, 2, 4, 8}
  int jobs = 1;
  int window_rings = 8;
  int window_angles = 16;
};

struct SequenceReport {
  double r0 = 0.0;
  int axis = 2;
  std::vector<RadiusReport> radii;
  std::vector<DiscreteGraphSurface> solutions;
  bool all_intersect = false;
  bool drift_non_increasing = false;
  double final_drift = 0.0;
  bool prediction_held = false;
};

SequenceReport radius_sequence_experiment(const MetricSpec& spec, const ScalarFieldSpec& v,
                                          const std::vector<double>& radii, double r0,
                                          const SequenceOptions& options = {});

}  // namespace staticgeo
