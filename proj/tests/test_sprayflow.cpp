#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "doctest.h"
#include "poisat/errors.hpp"
#include "poisat/expr.hpp"
#include "poisat/sprayflow.hpp"

using namespace poisat;
using expr::Expression;
using field::BivectorField;
using sprayflow::CotangentState;
using submanifold::Chart;

namespace {

Expression amb(const char* s, int n) { return expr::parse(s, expr::Variables::ambient(n)); }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<int>(v.size()));
  int i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

BivectorField so3() { return BivectorField(3, {{0, 1, amb("z", 3)}, {1, 2, amb("x", 3)}, {2, 0, amb("y", 3)}}); }
BivectorField sympl4() { return BivectorField(4, {{0, 1, amb("1", 4)}, {2, 3, amb("1", 4)}}); }
BivectorField dxdy() { return BivectorField(3, {{0, 1, amb("1", 3)}}); }

// x' = xi cross x: rotation about xi by |xi| t.
Vector rodrigues(const Vector& x, const Vector& xi, double t) {
  double a = xi.norm();
  if (a == 0) return x;
  Eigen::Vector3d axis = Eigen::Vector3d(xi[0], xi[1], xi[2]) / a;
  Eigen::Vector3d p(x[0], x[1], x[2]);
  return Eigen::AngleAxisd(a * t, axis) * p;
}

Chart chart(int n, std::vector<const char*> comps, Box box) {
  auto vars = expr::Variables::parameters(box.dim(), {});
  std::vector<Expression> e;
  for (auto c : comps) e.push_back(expr::parse(c, vars));
  return Chart(n, e, box);
}

Vector random_vec(std::mt19937_64& rng, int n, double s = 1.0) {
  std::normal_distribution<double> d(0, s);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

}  // namespace

TEST_CASE("spray axioms") {
  std::mt19937_64 rng(4);
  for (const auto& pi : {so3(), dxdy()}) {
    for (int t = 0; t < 200; ++t) {
      CotangentState s{random_vec(rng, 3), random_vec(rng, 3)};
      auto v = sprayflow::spray_eval(pi, s);
      CHECK(v.dx == field::sharp(pi, s.x, s.xi));
      CHECK(v.dxi.isZero(0));
      auto v2 = sprayflow::spray_eval(pi, {s.x, 2.0 * s.xi});
      CHECK(v2.dx == 2.0 * v.dx);
    }
  }
  CHECK(sprayflow::spray_eval(so3(), {vec({1, 2, 3}), Vector::Zero(3)}).dx.isZero(0));
  auto c = sprayflow::spray_eval(dxdy(), {Vector::Zero(3), Vector::Unit(3, 1)});
  CHECK(c.dx == Vector::Unit(3, 0));
}

TEST_CASE("spray jacobian matches differences") {
  auto pi = so3();
  CotangentState s{vec({0.3, -0.2, 0.9}), vec({0.5, 0.1, -0.4})};
  Matrix j = sprayflow::spray_jacobian(pi, s);
  double h = 1e-6;
  for (int c = 0; c < 6; ++c) {
    CotangentState a = s, b = s;
    if (c < 3) a.x[c] += h, b.x[c] -= h;
    else a.xi[c - 3] += h, b.xi[c - 3] -= h;
    Vector fa = sprayflow::spray_eval(pi, a).dx, fb = sprayflow::spray_eval(pi, b).dx;
    CHECK(((fa - fb) / (2 * h) - j.col(c).head(3)).norm() <= 1e-8);
  }
}

TEST_CASE("zero and constant structures flow exactly") {
  CotangentState s{vec({0.1, 0.2, 0.3}), vec({1, -1, 2})};
  auto z = sprayflow::flow(BivectorField::zero(3), s, 1.0, 16);
  CHECK(z.end.x == s.x);
  CHECK(z.jac.isIdentity(0));
  CHECK((sprayflow::omega_chi(BivectorField::zero(3), s, 16).matrix() - linear::canonical_symplectic(3)).isZero(0));

  auto pi = sympl4();
  Matrix p = pi.matrix(Vector::Zero(4));
  std::mt19937_64 rng(1);
  for (int steps : {16, 64, 1024}) {
    CotangentState c{random_vec(rng, 4), random_vec(rng, 4)};
    auto f = sprayflow::flow(pi, c, 1.0, steps);
    CHECK((f.end.x - (c.x + p * c.xi)).norm() <= 1e-13);
    Matrix y = Matrix::Identity(8, 8);
    y.topRightCorner(4, 4) = p;
    CHECK((f.jac - y).cwiseAbs().maxCoeff() <= 1e-13);
    // average of Y^T J Y over [0,1] in closed form
    Matrix w = sprayflow::zero_section_omega(p).matrix();
    CHECK((sprayflow::omega_chi(pi, c, steps).matrix() - w).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("so(3)* flow is a rotation") {
  auto pi = so3();
  CotangentState s{vec({1, 0, 0}), vec({0, 0, 1})};
  auto f = sprayflow::flow(pi, s, 1.0, 1024);
  CHECK((f.end.x - rodrigues(s.x, s.xi, 1.0)).norm() <= 1e-12);
  auto ref = sprayflow::flow(pi, s, 1.0, 4096);
  CHECK((f.end.x - ref.end.x).norm() <= 1e-9);

  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    CotangentState c{random_vec(rng, 3), random_vec(rng, 3)};
    CHECK((sprayflow::exp_chi(pi, c, 512) - rodrigues(c.x, c.xi, 1.0)).norm() <= 1e-10 * (1 + c.xi.norm()));
  }
}

TEST_CASE("RK4 self-convergence order") {
  auto pi = so3();
  CotangentState s{vec({0.4, -0.7, 0.2}), vec({1.5, 2.0, -1.0})};
  Vector exact = rodrigues(s.x, s.xi, 1.0);
  double e1 = (sprayflow::exp_chi(pi, s, 32) - exact).norm();
  double e2 = (sprayflow::exp_chi(pi, s, 64) - exact).norm();
  CHECK(e1 / e2 >= 12.0);
  CHECK(e1 / e2 <= 20.0);
}

TEST_CASE("variational jacobian") {
  auto pi = so3();
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    CotangentState s{random_vec(rng, 3), random_vec(rng, 3, 0.5)};
    auto f = sprayflow::flow(pi, s, 1.0, 256);
    double h = 1e-6;
    for (int c = 0; c < 6; ++c) {
      CotangentState a = s, b = s;
      if (c < 3) a.x[c] += h, b.x[c] -= h;
      else a.xi[c - 3] += h, b.xi[c - 3] -= h;
      Vector d = (sprayflow::exp_chi(pi, a, 256) - sprayflow::exp_chi(pi, b, 256)) / (2 * h);
      CHECK((d - f.jac.col(c).head(3)).norm() <= 1e-7);
    }
  }
  // zero section: d exp = (v, xi) -> v + pi#(xi)
  Vector x = vec({0.2, 0.5, -1.0});
  auto z = sprayflow::flow(pi, {x, Vector::Zero(3)}, 1.0, 64);
  Matrix expect(3, 6);
  expect << Matrix::Identity(3, 3), pi.matrix(x);
  CHECK((z.jac.topRows(3) - expect).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("omega on the zero section") {
  auto pi = so3();
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    Vector x = random_vec(rng, 3);
    auto w = sprayflow::omega_chi(pi, {x, Vector::Zero(3)}, 1024);
    Matrix expect = sprayflow::zero_section_omega(pi.matrix(x)).matrix();
    CHECK((w.matrix() - expect).cwiseAbs().maxCoeff() <= 1e-6);
    // hand evaluation of the pairing formula on random vectors
    Vector v1 = random_vec(rng, 3), v2 = random_vec(rng, 3), a = random_vec(rng, 3), b = random_vec(rng, 3);
    Vector p(6), q(6);
    p << v1, a;
    q << v2, b;
    double hand = v1.dot(b) - v2.dot(a) + field::pairing(pi, x, a, b);
    CHECK(std::abs(p.dot(w.matrix() * q) - hand) <= 1e-6 * (1 + std::abs(hand)));
  }
  CHECK_THROWS(sprayflow::integrate(pi, {Vector::Zero(3), Vector::Zero(3)}, 1.0, {17, true, false, true}));
}

TEST_CASE("omega is nondegenerate near the zero section") {
  auto pi = so3();
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    Vector xi = random_vec(rng, 3);
    xi *= 0.1 / xi.norm();
    auto w = sprayflow::omega_chi(pi, {random_vec(rng, 3), xi}, 256);
    Eigen::JacobiSVD<Matrix> svd(w.matrix());
    CHECK(svd.singularValues().minCoeff() > 0.1);
  }
}

TEST_CASE("cotangent path residual") {
  auto pi = so3();
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    CotangentState s{random_vec(rng, 3), random_vec(rng, 3)};
    CHECK(sprayflow::cotangent_path_residual(pi, s, 1024) <= 1e-8);
  }
  // a path that is not a cotangent path: nodes from the wrong structure
  auto f = sprayflow::flow(dxdy(), {Vector::Zero(3), Vector::Unit(3, 1)}, 1.0, 64, true);
  CHECK(sprayflow::cotangent_path_residual(BivectorField::zero(3), f.trajectory, 1.0 / 64) > 0.5);
}

TEST_CASE("leaving the domain is flagged") {
  BivectorField pi(3, {{0, 1, amb("1", 3)}}, Box::cube(3, 1.0));
  auto f = sprayflow::flow(pi, {Vector::Zero(3), 5.0 * Vector::Unit(3, 1)}, 1.0, 32);
  CHECK(f.left_domain);
  CHECK(f.end.x[0] == doctest::Approx(5.0));
  BivectorField bad(2, {{0, 1, amb("1/x", 2)}});
  CHECK_THROWS_AS(sprayflow::flow(bad, {Vector::Zero(2), vec({0, 1.0})}, 1.0, 16), FlowError);
}

TEST_CASE("dual pair rank conditions") {
  auto line = chart(3, {"u", "0", "0"}, Box(vec({-1}), vec({1})));
  auto r = sprayflow::dual_pair_check(dxdy(), line, vec({0.2}), vec({0.1, -0.3, 0.2}), 256);
  CHECK(r.property1 <= 1e-8);
  CHECK(r.dim_sigma_x == 4);
  CHECK(r.dim_p == 2);
  CHECK(r.rank_triple == 1);
  CHECK(r.rank_triple == r.expected_rank_triple);
  CHECK(r.passed);

  auto plane = chart(4, {"u", "v", "0.25*u*v", "0.1*u^2"}, Box(vec({-1, -1}), vec({1, 1})));
  auto q = sprayflow::dual_pair_check(sympl4(), plane, vec({0.3, -0.2}), vec({0.05, 0.1, -0.1, 0.2}), 256);
  CHECK(q.rank_s2 == 2);
  CHECK(q.rank_s2 == q.expected_rank_s2);
  CHECK(q.property1 <= 1e-8);
  CHECK(q.passed);

  auto z = sprayflow::dual_pair_check(BivectorField::zero(3), line, vec({0.0}), vec({1, 2, 3}), 64);
  CHECK(z.rank_triple == 4 - 1 - 1);
  CHECK(z.passed);
}
