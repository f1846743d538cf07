#pragma once

#include <cstdint>
#include <vector>

#include "poisat/expr.hpp"
#include "poisat/linear.hpp"

namespace poisat::field {

using expr::Expression;

struct Entry {
  int i = 0;  // 0-based
  int j = 0;
  Expression value;
};

// Pi^{ij}(x); entries with i > j are stored as the negated transposed entry.
class BivectorField {
 public:
  BivectorField() = default;
  BivectorField(int dim, const std::vector<Entry>& entries, Box domain = {});
  static BivectorField zero(int dim, Box domain = {});

  int dim() const { return n_; }
  const Box& domain() const { return domain_; }
  Expression entry(int i, int j) const;  // any i, j

  Matrix matrix(const Vector& x) const;
  linear::SkewForm form(const Vector& x) const { return linear::SkewForm::from_lower(matrix(x)); }
  // d_l Pi, one antisymmetric matrix per coordinate l.
  std::vector<Matrix> derivatives(const Vector& x) const;
  bool is_constant() const { return constant_; }

 private:
  int n_ = 0;
  Box domain_;
  std::vector<Expression> upper_;       // i < j, row major
  std::vector<Expression> upper_diff_;  // (pair, l)
  bool constant_ = true;
  int pair_index(int i, int j) const;
};

Vector sharp(const BivectorField& pi, const Vector& x, const Vector& alpha);
// pi(a, b) := <pi#(a), b>
double pairing(const BivectorField& pi, const Vector& x, const Vector& a, const Vector& b);

double jacobi_residual(const BivectorField& pi, const Vector& x);
// Same cyclic sum from a bivector value and its coordinate derivatives.
double jacobi_residual(const Matrix& p, const std::vector<Matrix>& dp);

struct JacobiCertificate {
  double max_residual = 0.0;
  Vector worst_point;
  int samples = 0;
  bool passed = true;
};

// Uniform seeded samples in the domain box (or the cube [-1,1]^n when none).
JacobiCertificate certify_jacobi(const BivectorField& pi, int samples, std::uint64_t seed, double tol);

std::vector<Expression> hamiltonian_vf(const BivectorField& pi, const Expression& f);
int leaf_dim(const BivectorField& pi, const Vector& x, double tol = linear::kRankTol);

}  // namespace poisat::field
