#include "poisat/sprayflow.hpp"

#include "poisat/errors.hpp"

namespace poisat::sprayflow {

namespace {

// d/dx of Pi(x) xi: column l is (d_l Pi) xi.
Matrix anchor_derivative(const BivectorField& pi, const Vector& x, const Vector& xi) {
  int n = pi.dim();
  Matrix m = Matrix::Zero(n, n);
  if (pi.is_constant()) return m;
  auto d = pi.derivatives(x);
  for (int l = 0; l < n; ++l) m.col(l) = d[l] * xi;
  return m;
}

void check_state(const BivectorField& pi, const CotangentState& s) {
  if (s.x.size() != pi.dim() || s.xi.size() != pi.dim()) throw Error("state dimension does not match bivector");
}

}  // namespace

SprayValue spray_eval(const BivectorField& pi, const CotangentState& s) {
  check_state(pi, s);
  return {pi.matrix(s.x) * s.xi, Vector::Zero(pi.dim())};
}

Matrix spray_jacobian(const BivectorField& pi, const CotangentState& s) {
  check_state(pi, s);
  int n = pi.dim();
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  j.topLeftCorner(n, n) = anchor_derivative(pi, s.x, s.xi);
  j.topRightCorner(n, n) = pi.matrix(s.x);
  return j;
}

FlowResult integrate(const BivectorField& pi, const CotangentState& s, double t_end, const FlowOptions& options) {
  check_state(pi, s);
  if (options.steps < kMinSteps) throw FlowError("flow needs at least " + std::to_string(kMinSteps) + " steps");
  if (options.omega && options.steps % 2 != 0) throw FlowError("Simpson quadrature needs an even step count");
  int n = pi.dim();
  int steps = options.steps;
  double h = t_end / steps;
  const Vector xi = s.xi;  // constant along the flat spray
  const bool var = options.variational || options.omega;
  const Matrix jcan = linear::canonical_symplectic(n);

  FlowResult r;
  Vector x = s.x;
  Matrix y = Matrix::Identity(2 * n, 2 * n);
  Matrix acc = Matrix::Zero(2 * n, 2 * n);
  auto add_node = [&](int k, const Vector& xk, const Matrix& yk) {
    if (options.trajectory) r.trajectory.push_back({xk, xi});
    if (!pi.domain().contains(xk)) r.left_domain = true;
    if (options.omega) {
      double w = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += w * (yk.transpose() * jcan * yk);
    }
  };
  auto rhs = [&](const Vector& xs, const Matrix& ys, Vector& dx, Matrix& dy) {
    Matrix p = pi.matrix(xs);
    dx = p * xi;
    if (var) {
      Matrix a = Matrix::Zero(2 * n, 2 * n);
      a.topLeftCorner(n, n) = anchor_derivative(pi, xs, xi);
      a.topRightCorner(n, n) = p;
      dy = a * ys;
    }
  };

  try {
    add_node(0, x, y);
    Vector k1, k2, k3, k4;
    Matrix l1, l2, l3, l4;
    for (int step = 1; step <= steps; ++step) {
      rhs(x, y, k1, l1);
      rhs(x + 0.5 * h * k1, var ? Matrix(y + 0.5 * h * l1) : y, k2, l2);
      rhs(x + 0.5 * h * k2, var ? Matrix(y + 0.5 * h * l2) : y, k3, l3);
      rhs(x + h * k3, var ? Matrix(y + h * l3) : y, k4, l4);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (var) y += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
      add_node(step, x, y);
    }
  } catch (const EvalError& e) {
    throw FlowError(std::string("flow evaluation failed: ") + e.what());
  }

  r.end = {x, xi};
  r.jac = var ? y : Matrix();
  if (options.omega) {
    // The integral runs over [0, 1] in the flow parameter.
    r.omega = SkewForm::antisymmetrized(acc * (h / 3.0));
  }
  if (var) {
    Eigen::JacobiSVD<Matrix> svd(y);
    const auto& sv = svd.singularValues();
    r.condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  }
  return r;
}

FlowResult flow(const BivectorField& pi, const CotangentState& s, double t_end, int steps, bool keep_trajectory) {
  FlowOptions o;
  o.steps = steps;
  o.trajectory = keep_trajectory;
  return integrate(pi, s, t_end, o);
}

Vector exp_chi(const BivectorField& pi, const CotangentState& s, int steps) {
  FlowOptions o;
  o.steps = steps;
  o.variational = false;
  return integrate(pi, s, 1.0, o).end.x;
}

SkewForm omega_chi(const BivectorField& pi, const CotangentState& s, int steps) {
  FlowOptions o;
  o.steps = steps;
  o.omega = true;
  return integrate(pi, s, 1.0, o).omega;
}

double cotangent_path_residual(const BivectorField& pi, const std::vector<CotangentState>& nodes, double h) {
  int m = static_cast<int>(nodes.size());
  if (m < 5) throw Error("cotangent path residual needs at least five nodes");
  double worst = 0.0;
  for (int k = 0; k < m; ++k) {
    Vector d;
    auto y = [&](int i) -> const Vector& { return nodes[i].x; };
    if (k >= 2 && k <= m - 3) {
      d = (-y(k + 2) + 8.0 * y(k + 1) - 8.0 * y(k - 1) + y(k - 2)) / (12.0 * h);
    } else if (k == 0) {
      d = (-25.0 * y(0) + 48.0 * y(1) - 36.0 * y(2) + 16.0 * y(3) - 3.0 * y(4)) / (12.0 * h);
    } else if (k == 1) {
      d = (-3.0 * y(0) - 10.0 * y(1) + 18.0 * y(2) - 6.0 * y(3) + y(4)) / (12.0 * h);
    } else if (k == m - 2) {
      d = (3.0 * y(m - 1) + 10.0 * y(m - 2) - 18.0 * y(m - 3) + 6.0 * y(m - 4) - y(m - 5)) / (12.0 * h);
    } else {
      d = (25.0 * y(m - 1) - 48.0 * y(m - 2) + 36.0 * y(m - 3) - 16.0 * y(m - 4) + 3.0 * y(m - 5)) / (12.0 * h);
    }
    Vector expected = pi.matrix(nodes[k].x) * nodes[k].xi;
    worst = std::max(worst, (d - expected).cwiseAbs().maxCoeff());
  }
  return worst;
}

double cotangent_path_residual(const BivectorField& pi, const CotangentState& s, int steps) {
  FlowOptions o;
  o.steps = steps;
  o.variational = false;
  o.trajectory = true;
  auto r = integrate(pi, s, 1.0, o);
  return cotangent_path_residual(pi, r.trajectory, 1.0 / steps);
}

SkewForm zero_section_omega(const Matrix& p) {
  int n = static_cast<int>(p.rows());
  // pi(xi1, xi2) = xi2^T P xi1 = xi1^T P^T xi2
  Matrix m = linear::canonical_symplectic(n);
  m.bottomRightCorner(n, n) = p.transpose();
  return SkewForm::from_lower(m);
}

DualPairReport dual_pair_check(const BivectorField& pi, const submanifold::Chart& chart, const Vector& u,
                               const Vector& zeta, int steps, double tol, double rank_tol) {
  int n = pi.dim(), k = chart.param_dim();
  auto pd = submanifold::point_data(pi, chart, u, rank_tol);
  FlowOptions o;
  o.steps = steps;
  o.omega = true;
  auto fr = integrate(pi, {pd.x, zeta}, 1.0, o);

  Matrix d = Matrix::Zero(2 * n, k + n);
  d.topLeftCorner(n, k) = chart.jacobian(u);
  d.bottomRightCorner(n, n) = Matrix::Identity(n, n);
  Matrix omega_x = d.transpose() * fr.omega.matrix() * d;
  Matrix s1m = Matrix::Zero(k + n, n);
  s1m.bottomRows(n) = Matrix::Identity(n, n);
  linear::Subspace s1 = linear::Subspace::span(s1m);
  linear::Subspace s2 = linear::null_space(fr.jac.topRows(n) * d, rank_tol);
  linear::Subspace kk = linear::null_space(omega_x, rank_tol);

  DualPairReport rep;
  rep.dim_sigma_x = k + n;
  rep.dim_x = k;
  rep.dim_p = k + pd.perp.dim();
  rep.property1 = s2.dim() ? (s1.basis().transpose() * omega_x * s2.basis()).cwiseAbs().maxCoeff() : 0.0;
  rep.rank_s2 = s2.dim();
  rep.expected_rank_s2 = n - pd.perp.dim();
  auto triple = linear::intersection(linear::intersection(s1, kk, rank_tol), s2, rank_tol);
  rep.rank_triple = triple.dim();
  rep.expected_rank_triple = rep.dim_sigma_x - rep.dim_x - rep.dim_p;
  rep.passed = rep.property1 <= tol && rep.rank_s2 == rep.expected_rank_s2 &&
               rep.rank_triple == rep.expected_rank_triple;
  return rep;
}

}  // namespace poisat::sprayflow
