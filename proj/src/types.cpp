#include "poisat/types.hpp"

#include <stdexcept>

#include "poisat/errors.hpp"

namespace poisat {

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw Error("box bounds have different dimensions");
  for (int i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i])) throw Error("box lower bound exceeds upper bound");
}

Box Box::cube(int dim, double half_width) {
  return Box(Vector::Constant(dim, -half_width), Vector::Constant(dim, half_width));
}

bool Box::contains(const Vector& p, double slack) const {
  if (dim() == 0) return true;
  if (p.size() != lower.size()) return false;
  for (int i = 0; i < p.size(); ++i)
    if (p[i] < lower[i] - slack || p[i] > upper[i] + slack) return false;
  return true;
}

Vector Box::center() const { return 0.5 * (lower + upper); }

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

EvalError::EvalError(const std::string& what, std::vector<double> point)
    : Error([&] {
        std::string s = what + " at (";
        for (std::size_t i = 0; i < point.size(); ++i) {
          if (i) s += ", ";
          s += std::to_string(point[i]);
        }
        return s + ")";
      }()),
      point_(std::move(point)) {}

}  // namespace poisat
