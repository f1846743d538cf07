#include "poisat/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "poisat/errors.hpp"

namespace poisat::linear {

namespace {

constexpr double kIsotropyTol = 1e-10;

struct Svd {
  Matrix u, v;
  Vector s;
};

Svd full_svd(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixU(), svd.matrixV(), svd.singularValues()};
}

int count_rank(const Vector& s, double tol_rel, double reference) {
  if (s.size() == 0) return 0;
  double ref = reference > 0.0 ? reference : s.maxCoeff();
  if (!(ref > 0.0)) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > tol_rel * ref) ++r;
  return r;
}

// cols are already orthonormal
Subspace from_columns(const Matrix& cols) { return Subspace::span(cols, 0.5); }

}  // namespace

Subspace::Subspace(int ambient_dim) : n_(ambient_dim), basis_(ambient_dim, 0) {}

Subspace Subspace::span(const Matrix& vectors, double tol_rel, double reference) {
  Subspace out(static_cast<int>(vectors.rows()));
  if (vectors.rows() == 0 || vectors.cols() == 0) return out;
  Svd svd = full_svd(vectors);
  int r = count_rank(svd.s, tol_rel, reference);
  out.basis_ = svd.u.leftCols(r);
  return out;
}

Subspace Subspace::full(int n) {
  Subspace out(n);
  out.basis_ = Matrix::Identity(n, n);
  return out;
}

double Subspace::distance(const Vector& v) const {
  if (dim() == 0) return v.norm();
  return (v - basis_ * (basis_.transpose() * v)).norm();
}

RankResult rank_svd(const Matrix& m, double tol_rel, double reference) {
  if (m.rows() == 0 || m.cols() == 0) throw Error("rank_svd: empty matrix");
  if (!(tol_rel > 0.0)) throw Error("rank_svd: tolerance must be positive");
  Svd svd = full_svd(m);
  RankResult out;
  out.rank = count_rank(svd.s, tol_rel, reference);
  out.singular_values = svd.s;
  out.column_space = Subspace(static_cast<int>(m.rows()));
  out.null_space = Subspace(static_cast<int>(m.cols()));
  if (out.rank > 0) out.column_space = from_columns(svd.u.leftCols(out.rank));
  if (out.rank < m.cols())
    out.null_space = from_columns(svd.v.rightCols(m.cols() - out.rank));
  return out;
}

int numeric_rank(const Matrix& m, double tol_rel, double reference) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return count_rank(svd.singularValues(), tol_rel, reference);
}

Subspace null_space(const Matrix& m, double tol_rel, double reference) {
  if (m.cols() == 0) return Subspace(0);
  if (m.rows() == 0) return Subspace::full(static_cast<int>(m.cols()));
  return rank_svd(m, tol_rel, reference).null_space;
}

Subspace annihilator(const Subspace& s) {
  int n = s.ambient_dim();
  if (s.dim() == 0) return Subspace::full(n);
  if (s.dim() == n) return Subspace(n);
  Svd svd = full_svd(s.basis());
  return from_columns(svd.u.rightCols(n - s.dim()));
}

Subspace sum(const Subspace& a, const Subspace& b, double tol_rel) {
  if (a.ambient_dim() != b.ambient_dim()) throw Error("sum: ambient dimensions differ");
  Matrix m(a.ambient_dim(), a.dim() + b.dim());
  m << a.basis(), b.basis();
  return Subspace::span(m, tol_rel);
}

Subspace intersection(const Subspace& a, const Subspace& b, double tol_rel) {
  if (a.ambient_dim() != b.ambient_dim()) throw Error("intersection: ambient dimensions differ");
  int n = a.ambient_dim();
  if (a.dim() == 0 || b.dim() == 0) return Subspace(n);
  // (p, q) with A p = B q; singular values of [A, -B] near zero mark the intersection.
  Matrix m(n, a.dim() + b.dim());
  m << a.basis(), -b.basis();
  Svd svd = full_svd(m);
  int cols = static_cast<int>(m.cols());
  Vector s = Vector::Zero(cols);
  s.head(svd.s.size()) = svd.s;
  Matrix keep(n, 0);
  for (int i = 0; i < cols; ++i) {
    if (s[i] <= tol_rel * std::sqrt(2.0)) {
      keep.conservativeResize(n, keep.cols() + 1);
      keep.col(keep.cols() - 1) = a.basis() * svd.v.col(i).head(a.dim());
    }
  }
  return Subspace::span(keep, 1e-6);
}

Subspace complement_within(const Subspace& inner, const Subspace& outer, double tol_rel) {
  if (outer.dim() == 0) return Subspace(outer.ambient_dim());
  Matrix projected = outer.basis() - inner.basis() * (inner.basis().transpose() * outer.basis());
  Subspace c = Subspace::span(projected, tol_rel, 1.0);
  return c;
}

double max_principal_angle(const Subspace& a, const Subspace& b) {
  if (a.dim() != b.dim() || a.ambient_dim() != b.ambient_dim()) return std::numbers::pi / 2;
  if (a.dim() == 0) return 0.0;
  double s = containment_residual(b, a);
  return std::asin(std::min(1.0, s));
}

bool same_space(const Subspace& a, const Subspace& b, double angle_tol) {
  return a.dim() == b.dim() && max_principal_angle(a, b) <= angle_tol;
}

double containment_residual(const Subspace& inner, const Subspace& outer) {
  if (inner.dim() == 0) return 0.0;
  Matrix r = inner.basis() - outer.basis() * (outer.basis().transpose() * inner.basis());
  Eigen::JacobiSVD<Matrix> svd(r);
  return svd.singularValues()(0);
}

SkewForm SkewForm::from_lower(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error("skew form needs a square matrix");
  SkewForm f(static_cast<int>(m.rows()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < i; ++j) {
      f.m_(i, j) = m(i, j);
      f.m_(j, i) = -m(i, j);
    }
  return f;
}

SkewForm SkewForm::antisymmetrized(const Matrix& m) { return from_lower(0.5 * (m - m.transpose())); }

Matrix canonical_symplectic(int n) {
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = Matrix::Identity(n, n);
  j.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
  return j;
}

Matrix pairing_matrix(int n) {
  Matrix p = Matrix::Zero(2 * n, 2 * n);
  p.topRightCorner(n, n) = Matrix::Identity(n, n);
  p.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
  return p;
}

DiracSpace DiracSpace::from_spanning(const Matrix& spanning, int n, double tol_rel) {
  if (spanning.rows() != 2 * n) throw Error("Dirac spanning set has wrong row count");
  Subspace s = Subspace::span(spanning, tol_rel);
  if (s.dim() != n)
    throw RankDefect("Dirac space has dimension " + std::to_string(s.dim()) + ", expected " + std::to_string(n),
                     n - s.dim());
  DiracSpace d;
  d.n_ = n;
  d.basis_ = s.basis();
  double iso = d.isotropy_residual();
  if (iso > kIsotropyTol) throw Error("Dirac space is not isotropic (residual " + std::to_string(iso) + ")");
  return d;
}

Subspace DiracSpace::subspace() const { return Subspace::span(basis_, 0.5); }

double DiracSpace::isotropy_residual() const {
  if (n_ == 0) return 0.0;
  Matrix g = basis_.transpose() * pairing_matrix(n_) * basis_;
  return g.cwiseAbs().maxCoeff();
}

DiracSpace dirac_graph(const SkewForm& form, FormKind kind) {
  int n = form.dim();
  Matrix m(2 * n, n);
  if (kind == FormKind::bivector) m << form.matrix(), Matrix::Identity(n, n);
  else m << Matrix::Identity(n, n), form.matrix().transpose();
  return DiracSpace::from_spanning(m, n);
}

DiracSpace dirac_gauge(const DiracSpace& l, const SkewForm& eta) {
  int n = l.dim();
  if (eta.dim() != n) throw Error("gauge form dimension mismatch");
  Matrix m(2 * n, n);
  Matrix u = l.tangent();
  m << u, l.cotangent() + eta.matrix().transpose() * u;
  return DiracSpace::from_spanning(m, n);
}

Pullback dirac_pullback(const DiracSpace& l, const Matrix& a, std::optional<int> expected_kernel_dim,
                        double tol_rel) {
  int n = l.dim();
  if (a.rows() != n) throw Error("pullback map has wrong target dimension");
  int k = static_cast<int>(a.cols());
  Pullback out;
  Matrix u = l.tangent(), v = l.cotangent();
  if (k == 0) {
    out.space = DiracSpace::from_spanning(Matrix(0, 0), 0);
    out.kernel_dim = n - numeric_rank(u, tol_rel, 1.0);
    return out;
  }
  // (w, c) with A w = U c
  Matrix m(n, k + n);
  m << a, -u;
  double scale = std::max(1.0, a.norm());
  Subspace sol = null_space(m, tol_rel, scale);
  Matrix img(2 * k, sol.dim());
  Matrix w = sol.basis().topRows(k);
  Matrix c = sol.basis().bottomRows(n);
  img << w, a.transpose() * v * c;
  Subspace s = Subspace::span(img, tol_rel);
  out.kernel_dim = sol.dim() - s.dim();
  if (s.dim() != k)
    throw RankDefect("pullback has dimension " + std::to_string(s.dim()) + ", expected " + std::to_string(k),
                     k - s.dim());
  if (expected_kernel_dim && *expected_kernel_dim != out.kernel_dim)
    throw RankDefect("pullback kernel dimension " + std::to_string(out.kernel_dim) + " differs from expected " +
                         std::to_string(*expected_kernel_dim),
                     out.kernel_dim - *expected_kernel_dim);
  out.space = DiracSpace::from_spanning(s.basis(), k);
  return out;
}

SkewForm dirac_to_bivector(const DiracSpace& l, double tol_rel) {
  int n = l.dim();
  Matrix v = l.cotangent();
  int r = numeric_rank(v, tol_rel, 1.0);
  if (r < n) throw NotPoisson("Dirac space meets V+0 in dimension " + std::to_string(n - r), n - r);
  Matrix pi = l.tangent() * v.inverse();
  return SkewForm::antisymmetrized(pi);
}

SkewForm dirac_to_two_form(const DiracSpace& l, double tol_rel) {
  int n = l.dim();
  Matrix u = l.tangent();
  int r = numeric_rank(u, tol_rel, 1.0);
  if (r < n) throw RankDefect("Dirac space meets 0+V* in dimension " + std::to_string(n - r), n - r);
  Matrix at = l.cotangent() * u.inverse();
  return SkewForm::antisymmetrized(at.transpose());
}

bool same_dirac(const DiracSpace& a, const DiracSpace& b, double angle_tol) {
  return a.dim() == b.dim() && same_space(a.subspace(), b.subspace(), angle_tol);
}

Subspace lagrangian_complement(const SkewForm& omega, const Subspace& s, const Subspace& l0, double tol_rel) {
  int n = s.ambient_dim();
  if (omega.dim() != n || l0.ambient_dim() != n) throw Error("lagrangian_complement: dimension mismatch");
  const Matrix& q = s.basis();
  if (s.dim() == 0) return Subspace(n);
  Matrix ws = q.transpose() * omega.matrix() * q;
  if (s.dim() % 2 != 0 || numeric_rank(ws, tol_rel) < s.dim())
    throw PrerequisiteError("form is degenerate on the subspace");
  int m = s.dim() / 2;
  double scale = ws.cwiseAbs().maxCoeff();
  if (l0.dim() != m || containment_residual(l0, s) > 1e-8)
    throw PrerequisiteError("subspace is not Lagrangian: wrong dimension or not contained");
  const Matrix& e = l0.basis();
  if ((e.transpose() * omega.matrix() * e).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale))
    throw PrerequisiteError("subspace is not Lagrangian: not isotropic");
  Subspace orth = complement_within(l0, s);
  const Matrix& f = orth.basis();
  Matrix p = e.transpose() * omega.matrix() * f;
  Matrix ff = f.transpose() * omega.matrix() * f;
  Matrix c = 0.5 * p.transpose().fullPivLu().solve(ff);
  return Subspace::span(f + e * c, tol_rel);
}

}  // namespace poisat::linear
