#pragma once

// Uniform tensor-product grids: the on-disk grid file format and the C^2
// cubic B-spline interpolant used for tabulated metrics and potentials.

#include <filesystem>
#include <span>
#include <vector>

#include "staticgeo/jet.hpp"

namespace staticgeo {

// Samples on a uniform box grid. `values` is row-major over `shape` (last axis
// fastest) with the `components` payload entries of each node contiguous.
struct GridData {
  int dim = 0;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<int> shape;
  int components = 1;
  std::vector<double> values;

  std::size_t node_count() const;
  double spacing(int axis) const;
};

// Grid file: one ASCII header line
//   n=<dim> lo=<v1,v2,...> hi=<v1,v2,...> shape=<i1,i2,...>
// terminated by '\n', followed by the raw little-endian float64 payload. The
// component count is implied by the payload size (1 for scalar fields,
// n(n+1)/2 for metrics, stored as the upper triangle row by row).
GridData read_grid_file(const std::filesystem::path& path);
void write_grid_file(const std::filesystem::path& path, const GridData& data);

// Tensor-product uniform cubic B-spline interpolant. Non-periodic axes use
// second-derivative end conditions estimated from the data (third-order
// one-sided differences); periodic axes treat node N as node 0.
class CubicSplineGrid {
 public:
  CubicSplineGrid(const GridData& data, std::vector<bool> periodic = {});

  int dim() const { return dim_; }
  int components() const { return components_; }
  bool contains(std::span<const double> x) const;

  // Writes one jet per component (derivatives with respect to the grid
  // coordinates). Throws OutsideDomain when x is outside a non-periodic axis.
  void evaluate(std::span<const double> x, std::span<Jet> out) const;

 private:
  int dim_;
  int components_;
  std::vector<double> lo_;
  std::vector<double> h_;
  std::vector<int> nodes_;
  std::vector<int> coef_shape_;
  std::vector<bool> periodic_;
  std::vector<double> coef_;
};

}  // namespace staticgeo
