#pragma once

#include <Eigen/Dense>
#include <initializer_list>
#include <string>

namespace staticgeo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A point given by its coordinates in the chart of one end.
struct Point {
  Vec coords;
  std::string chart_id = "end";

  int dim() const { return static_cast<int>(coords.size()); }
};

inline Point make_point(std::initializer_list<double> xs) {
  Point p;
  p.coords.resize(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) p.coords[i++] = x;
  return p;
}

}  // namespace staticgeo
