#pragma once

#include <optional>

#include "poisat/types.hpp"

namespace poisat::linear {

inline constexpr double kRankTol = 1e-8;

// Orthonormal column basis of a linear subspace of R^n.
class Subspace {
 public:
  explicit Subspace(int ambient_dim = 0);  // zero subspace

  // Column space of `vectors`, rank decided as in rank_svd. Zero columns allowed.
  static Subspace span(const Matrix& vectors, double tol_rel = kRankTol, double reference = 0.0);
  static Subspace full(int n);

  int ambient_dim() const { return n_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }
  Matrix projector() const { return basis_ * basis_.transpose(); }
  // Euclidean distance of v from the subspace.
  double distance(const Vector& v) const;

 private:
  int n_ = 0;
  Matrix basis_;
};

struct RankResult {
  int rank = 0;
  Subspace column_space;
  Subspace null_space;
  Vector singular_values;
};

// Counts singular values > tol_rel * reference, where reference defaults to the
// largest singular value. Throws on an empty matrix.
RankResult rank_svd(const Matrix& m, double tol_rel = kRankTol, double reference = 0.0);
// Same count, but 0 for matrices with no rows or columns.
int numeric_rank(const Matrix& m, double tol_rel = kRankTol, double reference = 0.0);
Subspace null_space(const Matrix& m, double tol_rel = kRankTol, double reference = 0.0);

Subspace annihilator(const Subspace& s);
Subspace sum(const Subspace& a, const Subspace& b, double tol_rel = kRankTol);
Subspace intersection(const Subspace& a, const Subspace& b, double tol_rel = kRankTol);
// Orthogonal complement of `inner` inside `outer` (inner assumed contained).
Subspace complement_within(const Subspace& inner, const Subspace& outer, double tol_rel = kRankTol);

// Largest principal angle; pi/2 when dimensions differ.
double max_principal_angle(const Subspace& a, const Subspace& b);
bool same_space(const Subspace& a, const Subspace& b, double angle_tol = 1e-8);
// max over unit vectors of `inner` of the distance to `outer`.
double containment_residual(const Subspace& inner, const Subspace& outer);

// Antisymmetric n x n matrix. Values are taken from the strictly lower triangle,
// the upper triangle is its negated mirror, so antisymmetry is exact.
class SkewForm {
 public:
  explicit SkewForm(int n = 0) : m_(Matrix::Zero(n, n)) {}
  static SkewForm from_lower(const Matrix& m);
  static SkewForm antisymmetrized(const Matrix& m);  // (m - m^T)/2

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  double apply(const Vector& a, const Vector& b) const { return a.dot(m_ * b); }
  // A^T M A
  SkewForm pullback(const Matrix& a) const { return antisymmetrized(a.transpose() * m_ * a); }
  double max_abs() const { return m_.size() ? m_.cwiseAbs().maxCoeff() : 0.0; }

  SkewForm operator+(const SkewForm& o) const { return from_lower(m_ + o.m_); }
  SkewForm operator-(const SkewForm& o) const { return from_lower(m_ - o.m_); }
  SkewForm operator-() const { return from_lower(-m_); }
  SkewForm operator*(double s) const { return from_lower(s * m_); }

 private:
  Matrix m_;
};

// Canonical symplectic matrix [[0, I], [-I, 0]] on (x, xi) in R^{2n}.
Matrix canonical_symplectic(int n);
// Block swap [[0, I], [I, 0]] giving <(u,a),(v,b)> = a(v) + b(u).
Matrix pairing_matrix(int n);

enum class FormKind { bivector, two_form };

// Maximal isotropic subspace of R^n + (R^n)*; rows are tangent then cotangent.
class DiracSpace {
 public:
  DiracSpace() = default;
  // Throws RankDefect unless `spanning` spans exactly n dimensions, and Error
  // when the span is not isotropic.
  static DiracSpace from_spanning(const Matrix& spanning, int n, double tol_rel = kRankTol);

  int dim() const { return n_; }
  const Matrix& basis() const { return basis_; }
  Matrix tangent() const { return basis_.topRows(n_); }
  Matrix cotangent() const { return basis_.bottomRows(n_); }
  Subspace subspace() const;
  double isotropy_residual() const;

 private:
  int n_ = 0;
  Matrix basis_;
};

DiracSpace dirac_graph(const SkewForm& form, FormKind kind);
DiracSpace dirac_gauge(const DiracSpace& l, const SkewForm& eta);

struct Pullback {
  DiracSpace space;
  int kernel_dim = 0;  // dim of L cap (0 + ker A^T)
};

// Backward image {(u, A^T b) : (A u, b) in L} for A mapping source R^k to the
// space of L. With expected_kernel_dim set, a different kernel dimension is
// reported as RankDefect.
Pullback dirac_pullback(const DiracSpace& l, const Matrix& a, std::optional<int> expected_kernel_dim = std::nullopt,
                        double tol_rel = kRankTol);

// Bivector Pi with graph {(Pi a, a)} equal to L; NotPoisson with the dimension of
// L cap (V + 0) otherwise.
SkewForm dirac_to_bivector(const DiracSpace& l, double tol_rel = kRankTol);
// Two-form A with graph {(v, A^T v)} equal to L; RankDefect with the dimension of
// L cap (0 + V*) otherwise.
SkewForm dirac_to_two_form(const DiracSpace& l, double tol_rel = kRankTol);

bool same_dirac(const DiracSpace& a, const DiracSpace& b, double angle_tol = 1e-8);

// Lagrangian complement of L0 inside (S, omega|_S), where omega is an ambient
// form whose restriction to S is nondegenerate.
Subspace lagrangian_complement(const SkewForm& omega, const Subspace& s, const Subspace& l0,
                               double tol_rel = kRankTol);

}  // namespace poisat::linear
