#pragma once

#include <Eigen/Dense>
#include <vector>

namespace poisat {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Axis-aligned box; an empty box (dim 0) contains everything.
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);
  static Box cube(int dim, double half_width);

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& p, double slack = 0.0) const;
  Vector center() const;
};

std::vector<double> to_std(const Vector& v);

}  // namespace poisat
