#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poisat/expr.hpp"
#include "poisat/field.hpp"
#include "poisat/linear.hpp"

namespace poisat::submanifold {

using expr::Expression;
using field::BivectorField;
using linear::DiracSpace;
using linear::Subspace;

// u -> X(u) in R^n, u in a box of R^k.
class Chart {
 public:
  Chart() = default;
  Chart(int ambient_dim, std::vector<Expression> components, Box domain, std::vector<std::string> param_names = {});

  int param_dim() const { return k_; }
  int ambient_dim() const { return n_; }
  const Box& domain() const { return domain_; }
  const std::vector<Expression>& components() const { return components_; }
  const std::vector<std::string>& param_names() const { return names_; }

  Vector point(const Vector& u) const;
  Matrix jacobian(const Vector& u) const;  // n x k

 private:
  int k_ = 0;
  int n_ = 0;
  Box domain_;
  std::vector<Expression> components_;
  std::vector<Expression> jac_;  // row major n x k
  std::vector<std::string> names_;
};

struct PointData {
  Vector u;
  Vector x;
  Subspace tangent;   // TX
  Subspace conormal;  // TX^0
  Subspace perp;      // pi#(TX^0)
  int kernel_dim = 0; // dim(ker pi# cap TX^0)
};

// Rank decisions on pi#(TX^0) are relative to the spectral norm of Pi(x).
PointData point_data(const BivectorField& pi, const Chart& chart, const Vector& u, double tol = linear::kRankTol);

// Tensor grid with `counts[i]` points per axis (1 means the center).
std::vector<Vector> tensor_grid(const Box& box, const std::vector<int>& counts);
// `factor` seeded uniform points per grid point.
std::vector<Vector> random_refinement(const Box& box, std::size_t grid_size, int factor, std::uint64_t seed);

struct RegularityReport {
  bool is_regular = true;
  int min_rank = 0;
  int max_rank = 0;
  int samples = 0;
  std::map<int, std::vector<Vector>> witnesses;  // rank -> parameters, in sample order
};

RegularityReport regularity_scan(const BivectorField& pi, const Chart& chart, const std::vector<Vector>& points,
                                 double tol = linear::kRankTol);

struct RankRange {
  int min = 0;
  int max = 0;
  bool constant() const { return min == max; }
};

struct Classification {
  bool regular = false;
  bool transversal = false;
  bool poisson_submanifold = false;
  bool coisotropic = false;
  bool pre_poisson = false;
  bool poisson_dirac = false;
  RankRange perp_rank;       // rk TXperp
  RankRange cap_rank;        // rk(TXperp cap TX)
  RankRange sum_rank;        // rk(TX + TXperp)
};

Classification classify(const BivectorField& pi, const Chart& chart, const std::vector<Vector>& points,
                        double tol = linear::kRankTol);

// i*L_pi on the parameter space. With expected_perp_rank set, a point whose
// rk TXperp differs raises RankDefect.
DiracSpace pullback_dirac(const BivectorField& pi, const Chart& chart, const Vector& u,
                          std::optional<int> expected_perp_rank = std::nullopt, double tol = linear::kRankTol);
// Second route through {pi#(a) + i*a : a in (TXperp)^0}.
DiracSpace pullback_dirac_via_perp(const BivectorField& pi, const Chart& chart, const Vector& u,
                                   double tol = linear::kRankTol);

struct Transversal {
  Chart chart;      // tau(u, e) = X(u) + E e
  Matrix e_frame;   // n x m, frozen at u0
  int span_rank = 0;  // rank of TX + Im pi# + T tau at u0
};

Transversal make_transversal(const BivectorField& pi, const Chart& chart, const Vector& u0, double half_width = 1.0,
                             double tol = linear::kRankTol);

}  // namespace poisat::submanifold
