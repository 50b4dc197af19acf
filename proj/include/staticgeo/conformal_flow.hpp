#pragma once

// Normal exponential flow of a surface in the conformal metric V^{-2} g, and
// the two identities it satisfies for static potentials: d/dt (H/V) = |A|^2
// and the first variation of area d|Sigma_t|/dt = -int V H.
//
// Orientation: H in both identities is taken with respect to the unit normal
// opposite to the flow velocity. With this choice outward-flowing round
// spheres in flat space (V = 1) have H/V = -2/(1+t) and d/dt(H/V) = |A|^2.

#include <vector>

#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/field.hpp"
#include "staticgeo/hypersurface.hpp"

namespace staticgeo {

struct FlowOptions {
  bool verify_halving = true;  // repeat with half steps and report the difference
  int jobs = 1;                // threads for the per-node geodesics
};

struct FlowState {
  std::vector<double> times;
  std::vector<SurfacePatch> surfaces;  // Sigma_t at each time sample
  std::vector<Vec> h;                  // mean curvature w.r.t. the normal opposite to the velocity
  std::vector<Vec> a_norm2;
  std::vector<Vec> v;                  // V along the surface
  std::vector<Vec> vh;                 // V H at each node
  std::vector<double> area;
  std::vector<double> integral_vh;     // int_{Sigma_t} V H dsigma
  Mat velocity0;                       // initial velocities (one row per node)
  double initial_speed_error = 0.0;    // max | |dPhi/dt|_g - V | at t = 0
  double halving_difference = -1.0;    // max node distance vs. the half-step run (-1 if skipped)
  int steps = 0;
};

// Integrates each node's V^{-2} g geodesic with initial velocity V nu (g-length
// V, unit length in the conformal metric) with RK4 at fixed step t_end/steps.
FlowState conformal_normal_flow(const MetricSpec& spec, const ScalarFieldSpec& v, const SurfacePatch& initial,
                                double t_end, int steps, const FlowOptions& options = {});

// Minimum number of time samples for the centred time derivatives.
inline constexpr int kMinFlowSamples = 9;

struct MonotonicityReport {
  double residual = 0.0;        // max |d/dt(H/V) - |A|^2| over nodes and interior times
  bool monotone = false;        // H/V non-decreasing at every node
  double min_increment = 0.0;   // smallest step-to-step change of H/V
  double min_h_after_start = 0.0;  // min H over t > 0
};

MonotonicityReport monotonicity_residual(const FlowState& flow, double monotone_tolerance = 1e-10);

// max over interior times of |d|Sigma_t|/dt + int V H|.
double area_variation_check(const FlowState& flow);

}  // namespace staticgeo
