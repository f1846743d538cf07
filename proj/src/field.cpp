#include "poisat/field.hpp"

#include <random>

#include "poisat/errors.hpp"

namespace poisat::field {

BivectorField::BivectorField(int dim, const std::vector<Entry>& entries, Box domain)
    : n_(dim), domain_(std::move(domain)) {
  if (dim < 1) throw Error("bivector dimension must be positive");
  if (domain_.dim() != 0 && domain_.dim() != dim) throw Error("bivector domain has wrong dimension");
  upper_.assign(static_cast<std::size_t>(n_ * (n_ - 1) / 2), Expression::constant(0.0, n_));
  std::vector<bool> seen(upper_.size(), false);
  for (const auto& e : entries) {
    if (e.i < 0 || e.j < 0 || e.i >= n_ || e.j >= n_) throw Error("bivector entry index out of range");
    if (e.i == e.j) throw Error("bivector diagonal entries must vanish");
    if (e.value.arity() > n_) throw Error("bivector entry uses more variables than the dimension");
    int p = pair_index(e.i, e.j);
    if (seen[p]) throw Error("bivector entry given twice");
    seen[p] = true;
    Expression v = e.value.arity() == n_ ? e.value : e.value + Expression::constant(0.0, n_);
    upper_[p] = e.i < e.j ? v : -v;
  }
  for (const auto& u : upper_) {
    for (int l = 0; l < n_; ++l) {
      Expression d = u.arity() == n_ ? u.derive(l) : Expression::constant(0.0, n_);
      if (!d.is_zero()) constant_ = false;
      upper_diff_.push_back(d);
    }
  }
}

BivectorField BivectorField::zero(int dim, Box domain) { return BivectorField(dim, {}, std::move(domain)); }

int BivectorField::pair_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

Expression BivectorField::entry(int i, int j) const {
  if (i == j) return Expression::constant(0.0, n_);
  const Expression& e = upper_[pair_index(i, j)];
  return i < j ? e : -e;
}

Matrix BivectorField::matrix(const Vector& x) const {
  if (x.size() != n_) throw Error("point dimension does not match bivector");
  Matrix m = Matrix::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) {
      double v = upper_[pair_index(i, j)].eval(x);
      m(i, j) = v;
      m(j, i) = -v;
    }
  return m;
}

std::vector<Matrix> BivectorField::derivatives(const Vector& x) const {
  std::vector<Matrix> d(n_, Matrix::Zero(n_, n_));
  if (constant_) return d;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) {
      int p = pair_index(i, j);
      for (int l = 0; l < n_; ++l) {
        const Expression& e = upper_diff_[p * n_ + l];
        if (e.is_zero()) continue;
        double v = e.eval(x);
        d[l](i, j) = v;
        d[l](j, i) = -v;
      }
    }
  return d;
}

Vector sharp(const BivectorField& pi, const Vector& x, const Vector& alpha) { return pi.matrix(x) * alpha; }

double pairing(const BivectorField& pi, const Vector& x, const Vector& a, const Vector& b) {
  return b.dot(pi.matrix(x) * a);
}

double jacobi_residual(const Matrix& p, const std::vector<Matrix>& dp) {
  int n = static_cast<int>(p.rows());
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += p(l, k) * dp[l](i, j) + p(l, i) * dp[l](j, k) + p(l, j) * dp[l](k, i);
        worst = std::max(worst, std::abs(s));
      }
  return worst;
}

double jacobi_residual(const BivectorField& pi, const Vector& x) {
  if (pi.is_constant()) return 0.0;
  return jacobi_residual(pi.matrix(x), pi.derivatives(x));
}

JacobiCertificate certify_jacobi(const BivectorField& pi, int samples, std::uint64_t seed, double tol) {
  int n = pi.dim();
  Box box = pi.domain().dim() == n ? pi.domain() : Box::cube(n, 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  JacobiCertificate c;
  c.worst_point = box.center();
  for (int s = 0; s < samples; ++s) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = box.lower[i] + unit(rng) * (box.upper[i] - box.lower[i]);
    double r = jacobi_residual(pi, x);
    if (r > c.max_residual) {
      c.max_residual = r;
      c.worst_point = x;
    }
  }
  c.samples = samples;
  c.passed = c.max_residual <= tol;
  return c;
}

std::vector<Expression> hamiltonian_vf(const BivectorField& pi, const Expression& f) {
  int n = pi.dim();
  if (f.arity() > n) throw Error("function arity exceeds bivector dimension");
  std::vector<Expression> df;
  for (int j = 0; j < n; ++j) df.push_back(j < f.arity() ? f.derive(j) : Expression::constant(0.0, n));
  std::vector<Expression> out;
  for (int i = 0; i < n; ++i) {
    Expression s = Expression::constant(0.0, n);
    for (int j = 0; j < n; ++j) s = s + pi.entry(i, j) * df[j];
    out.push_back(s);
  }
  return out;
}

int leaf_dim(const BivectorField& pi, const Vector& x, double tol) {
  return linear::numeric_rank(pi.matrix(x), tol);
}

}  // namespace poisat::field
