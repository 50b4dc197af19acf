#pragma once

// Embedded surfaces in a 3-dimensional chart: induced geometry, area, the
// stability (Jacobi) operator and the identities satisfied by static
// potentials along minimal and totally geodesic surfaces.
//
// Surfaces are discretized spectrally. Every parameter grid is the set of
// "physical" nodes of a larger tensor grid on which both parameter directions
// are periodic (Fourier) or Chebyshev. Closed spheres use the double Fourier
// sphere: theta is extended to a full circle by f(2 pi - theta, phi) =
// f(theta, phi + pi). Disks use the polar Chebyshev extension f(-r, phi) =
// f(r, phi + pi). Tori are doubly periodic; annuli are Chebyshev x Fourier.
//
// Sign conventions: A(X, Y) = <nabla_X nu, Y>, H = tr A, so the outward unit
// round sphere in flat space has H = 2.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "staticgeo/chart_metrics.hpp"
#include "staticgeo/curvature.hpp"
#include "staticgeo/field.hpp"

namespace staticgeo {

enum class GridKind { Sphere, Torus, Disk, Annulus };
const char* to_string(GridKind kind);

class ParamGrid {
 public:
  // theta cell-centred, n_theta >= 2; n_phi even.
  static std::shared_ptr<const ParamGrid> sphere(int n_theta, int n_phi);
  // u, v in [0, 2 pi), both even.
  static std::shared_ptr<const ParamGrid> torus(int n_u, int n_v);
  // Unit-disk parameter: Chebyshev-Lobatto in r on [-1, 1] with an odd number
  // of intervals (no node at the centre); n_phi even.
  static std::shared_ptr<const ParamGrid> disk(int n_cheb, int n_phi);
  // r in [a, b] (Chebyshev-Lobatto, n_cheb intervals) x phi periodic.
  static std::shared_ptr<const ParamGrid> annulus(double a, double b, int n_cheb, int n_phi);

  GridKind kind() const { return kind_; }
  bool closed() const { return kind_ == GridKind::Sphere || kind_ == GridKind::Torus; }
  int size() const { return static_cast<int>(u_.size()); }
  double u(int p) const { return u_[p]; }
  double v(int p) const { return v_[p]; }
  bool on_boundary(int p) const { return boundary_[p]; }
  double weight(int p) const { return weights_[p]; }  // parameter-space quadrature weight
  int n1() const { return n1_; }                       // extended grid shape
  int n2() const { return n2_; }

  // Derivatives of node values whose extension has the given parity (0: even,
  // e.g. scalars and positions; 1: odd, e.g. tensor components with one index
  // along the reflected direction). Applied through the extended tensor grid.
  enum class Deriv { U, V, UU, UV, VV };
  Vec derivative(Deriv d, const Vec& values, int parity = 0) const;
  Mat derivative(Deriv d, const Mat& columns, int parity = 0) const;
  // Dense matrix of the same operator (built on demand; size() x size()).
  Mat derivative_matrix(Deriv d, int parity = 0) const;

  // Spectral interpolation of node values (even parity) at parameter (a, b).
  double interpolate(const Vec& values, double a, double b) const;

  // Constructor arguments (resolution along each axis; radial bounds for
  // annuli), used by mesh serialization.
  int resolution1() const { return res1_; }
  int resolution2() const { return res2_; }
  double lower() const { return cheb_lo_; }
  double upper() const { return cheb_hi_; }
  // Physical rows of the extended grid (nodes are row-major, n2 per row).
  int rows() const { return size() / n2_; }

 private:
  ParamGrid() = default;
  Mat extend(const Vec& values, int parity) const;

  GridKind kind_ = GridKind::Sphere;
  int n1_ = 0, n2_ = 0;
  bool periodic1_ = true;
  std::vector<double> axis1_, axis2_;  // extended-grid coordinates
  Mat d1a_, d2a_, d1b_, d2b_;          // one-dimensional differentiation matrices
  std::vector<int> ext_source_;        // extended node -> physical node
  std::vector<int> ext_sign_flip_;     // 1 when the extended node is a reflected copy
  std::vector<int> phys_ext_;          // physical node -> extended node
  std::vector<double> u_, v_, weights_;
  std::vector<bool> boundary_;
  double cheb_lo_ = -1.0, cheb_hi_ = 1.0;
  int res1_ = 0, res2_ = 0;
};

struct SurfacePatch {
  std::string name;
  std::shared_ptr<const ParamGrid> grid;
  Mat positions;           // one row per physical node (3 columns)
  Vec period_u, period_v;  // translation per period for flat tori (zero otherwise)
  int orientation = 1;     // multiplies the normal built from X_u x X_v

  bool closed() const { return grid->closed(); }
  SurfacePatch flipped() const;
};

using Embedding = std::function<Vec(double, double)>;

SurfacePatch sphere_patch(const std::string& name, const Embedding& x, int n_theta, int n_phi);
SurfacePatch coordinate_sphere(double radius, int n_theta = 16, int n_phi = 32, const Vec& center = Vec::Zero(3));
SurfacePatch torus_patch(const std::string& name, const Embedding& x, int n_u, int n_v,
                         const Vec& period_u = Vec::Zero(3), const Vec& period_v = Vec::Zero(3));
// Graph-like patch over the unit disk parameter (r, phi).
SurfacePatch disk_patch(const std::string& name, const Embedding& x, int n_cheb, int n_phi);
SurfacePatch annulus_patch(const std::string& name, const Embedding& x, double a, double b, int n_cheb, int n_phi);
// Plane x^axis = level over the disk of given radius centred on the axis.
SurfacePatch planar_disk(int axis, double level, double radius, int n_cheb = 15, int n_phi = 24);
SurfacePatch patch_from_positions(const std::string& name, std::shared_ptr<const ParamGrid> grid, Mat positions,
                                  int orientation = 1);

struct FundamentalForms {
  Vec x;             // position
  Vec nu;            // unit normal (index up)
  Mat gamma;         // induced metric
  Mat a;             // second fundamental form
  double h = 0.0;    // mean curvature
  double a_norm2 = 0.0;
  double umbilic = 0.0;   // |A - (H/2) gamma|
  double ric_nu_nu = 0.0;
  double ambient_scalar = 0.0;
  double gauss_curvature = 0.0;   // intrinsic K
  double sigma_scalar = 0.0;      // R_Sigma = 2 K
  double gauss_residual = 0.0;    // 2 Ric(nu,nu) - (R - R_Sigma + H^2 - |A|^2)
  double area_density = 0.0;      // sqrt det gamma
};

class SurfaceGeometry {
 public:
  SurfaceGeometry(const MetricSpec& spec, const SurfacePatch& patch);

  const SurfacePatch& patch() const { return patch_; }
  const std::vector<FundamentalForms>& nodes() const { return nodes_; }
  const FundamentalForms& at(int p) const { return nodes_[p]; }
  int size() const { return static_cast<int>(nodes_.size()); }

  double area() const;
  double integrate(const Vec& f) const;
  Vec laplacian(const Vec& f) const;
  Mat laplacian_matrix() const;
  // Intrinsic Hessian nabla^2_Sigma f at every node (2 x 2 each).
  std::vector<Mat> hessian(const Vec& f) const;
  Vec gradient_norm2(const Vec& f) const;
  // Ambient Ricci restricted to the tangent plane (2 x 2 each).
  const std::vector<Mat>& tangential_ricci() const { return tangential_ricci_; }

  double sup_abs_h() const;
  double sup_norm_a() const;
  double sup_gauss_residual() const;

 private:
  SurfacePatch patch_;
  std::vector<FundamentalForms> nodes_;
  std::vector<Mat> gamma_inv_;
  std::vector<Mat> christoffel_;  // christoffel_[p](c, 2 a + b) = Gamma^c_ab
  std::vector<Mat> tangential_ricci_;
  std::vector<Mat> x_u_;  // tangent vectors per node (columns X_u, X_v)
};

// Geometry at one physical node.
FundamentalForms surface_geometry(const MetricSpec& spec, const SurfacePatch& patch, int node);
double surface_area(const MetricSpec& spec, const SurfacePatch& patch);

struct StabilityReport {
  double min_eigenvalue = 0.0;
  double next_eigenvalue = 0.0;
  bool eigenfunction_sign_definite = false;
  bool dirichlet = false;
};

// Smallest eigenvalue of -Delta - (|A|^2 + Ric(nu, nu)); Dirichlet data on the
// boundary when the patch has one.
StabilityReport stability_min_eig(const MetricSpec& spec, const SurfacePatch& patch);

struct IdentityTolerances {
  double minimal = 1e-6;       // sup |H| for "minimal"
  double geodesic = 1e-6;      // sup |A| for "totally geodesic"
  double static_residual = 1e-6;
  double scalar_flat = 1e-6;
};

// sup |Delta_Sigma V + Ric(nu, nu) V|.
double jacobi_residual(const MetricSpec& spec, const SurfacePatch& patch, const ScalarFieldSpec& v,
                       const IdentityTolerances& tol = {});

struct SplittingReport {
  double ricci_split = 0.0;      // Ric|_T - 1/2 Ric_Sigma
  double hessian_split = 0.0;    // Hess_Sigma V - 1/2 V Ric_Sigma
  double laplacian_split = 0.0;  // Delta_Sigma V - 1/2 V R_Sigma
  double conserved_variation = 0.0;  // max - min of R_Sigma V^2 + 2 |grad V|^2
  double tolerance = 0.0;
  bool identities_hold = false;
};

SplittingReport splitting_identity_report(const MetricSpec& spec, const SurfacePatch& patch, const ScalarFieldSpec& v,
                                          const IdentityTolerances& tol = {}, double report_tolerance = 1e-6);

// sup |Delta_Sigma V + H dV/dnu + 1/2 (H^2 - |A|^2 - 2 K) V|.
double boundary_static_identity(const MetricSpec& spec, const SurfacePatch& patch, const ScalarFieldSpec& v,
                                const IdentityTolerances& tol = {});

// Mesh export: JSON (kind, grid shape, parameters, positions) and ASCII PLY.
std::string mesh_json(const SurfacePatch& patch);
void write_mesh_json(const std::filesystem::path& path, const SurfacePatch& patch);
SurfacePatch read_mesh_json(const std::filesystem::path& path);
SurfacePatch parse_mesh_json(const std::string& text);
void write_ply(const std::filesystem::path& path, const SurfacePatch& patch);

}  // namespace staticgeo
