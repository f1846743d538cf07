#include "poisat/submanifold.hpp"

#include <random>

#include "poisat/errors.hpp"

namespace poisat::submanifold {

using linear::numeric_rank;

Chart::Chart(int ambient_dim, std::vector<Expression> components, Box domain, std::vector<std::string> param_names)
    : k_(domain.dim()), n_(ambient_dim), domain_(std::move(domain)), components_(std::move(components)),
      names_(std::move(param_names)) {
  if (static_cast<int>(components_.size()) != n_)
    throw Error("chart has " + std::to_string(components_.size()) + " components, expected " + std::to_string(n_));
  for (auto& c : components_) {
    if (c.arity() > k_) throw Error("chart component uses more variables than the parameter dimension");
    if (c.arity() < k_) c = c + Expression::constant(0.0, k_);
  }
  for (const auto& c : components_)
    for (int a = 0; a < k_; ++a) jac_.push_back(c.derive(a));
}

Vector Chart::point(const Vector& u) const {
  if (u.size() != k_) throw Error("parameter dimension mismatch");
  Vector x(n_);
  for (int i = 0; i < n_; ++i) x[i] = components_[i].eval(u);
  return x;
}

Matrix Chart::jacobian(const Vector& u) const {
  if (u.size() != k_) throw Error("parameter dimension mismatch");
  Matrix j(n_, k_);
  for (int i = 0; i < n_; ++i)
    for (int a = 0; a < k_; ++a) j(i, a) = jac_[i * k_ + a].eval(u);
  return j;
}

PointData point_data(const BivectorField& pi, const Chart& chart, const Vector& u, double tol) {
  if (pi.dim() != chart.ambient_dim()) throw Error("chart and bivector live in different dimensions");
  PointData d;
  d.u = u;
  d.x = chart.point(u);
  Matrix j = chart.jacobian(u);
  int k = chart.param_dim();
  d.tangent = Subspace::span(j, tol);
  if (d.tangent.dim() != k)
    throw RankDefect("chart is not immersive at this parameter", k - d.tangent.dim());
  d.conormal = linear::annihilator(d.tangent);
  Matrix p = pi.matrix(d.x);
  double scale = p.size() ? Eigen::JacobiSVD<Matrix>(p).singularValues()(0) : 0.0;
  Matrix image = p * d.conormal.basis();
  if (scale > 0.0) {
    d.perp = Subspace::span(image, tol, scale);
  } else {
    d.perp = Subspace(pi.dim());
  }
  d.kernel_dim = d.conormal.dim() - d.perp.dim();
  return d;
}

std::vector<Vector> tensor_grid(const Box& box, const std::vector<int>& counts) {
  int k = box.dim();
  if (static_cast<int>(counts.size()) != k) throw Error("grid counts do not match box dimension");
  std::vector<Vector> out;
  std::vector<int> idx(k, 0);
  for (int c : counts)
    if (c < 1) throw Error("grid counts must be positive");
  for (;;) {
    Vector u(k);
    for (int a = 0; a < k; ++a) {
      u[a] = counts[a] == 1 ? 0.5 * (box.lower[a] + box.upper[a])
                            : box.lower[a] + (box.upper[a] - box.lower[a]) * idx[a] / (counts[a] - 1);
    }
    out.push_back(u);
    int a = k - 1;
    while (a >= 0 && ++idx[a] == counts[a]) idx[a--] = 0;
    if (a < 0) break;
  }
  return out;
}

std::vector<Vector> random_refinement(const Box& box, std::size_t grid_size, int factor, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> out;
  std::size_t total = grid_size * static_cast<std::size_t>(std::max(factor, 0));
  for (std::size_t s = 0; s < total; ++s) {
    Vector u(box.dim());
    for (int a = 0; a < box.dim(); ++a) u[a] = box.lower[a] + unit(rng) * (box.upper[a] - box.lower[a]);
    out.push_back(u);
  }
  return out;
}

RegularityReport regularity_scan(const BivectorField& pi, const Chart& chart, const std::vector<Vector>& points,
                                 double tol) {
  if (points.empty()) throw Error("regularity scan needs at least one point");
  RegularityReport r;
  bool first = true;
  for (const auto& u : points) {
    int rk = point_data(pi, chart, u, tol).perp.dim();
    r.witnesses[rk].push_back(u);
    if (first) {
      r.min_rank = r.max_rank = rk;
      first = false;
    }
    r.min_rank = std::min(r.min_rank, rk);
    r.max_rank = std::max(r.max_rank, rk);
    ++r.samples;
  }
  r.is_regular = r.min_rank == r.max_rank;
  return r;
}

namespace {
void widen(RankRange& r, int v, bool first) {
  if (first) r.min = r.max = v;
  r.min = std::min(r.min, v);
  r.max = std::max(r.max, v);
}
}  // namespace

Classification classify(const BivectorField& pi, const Chart& chart, const std::vector<Vector>& points, double tol) {
  if (points.empty()) throw Error("classification needs at least one point");
  Classification c;
  int n = pi.dim();
  bool all_transversal = true, all_coiso = true, all_cap_zero = true;
  bool first = true;
  for (const auto& u : points) {
    PointData d = point_data(pi, chart, u, tol);
    int cap = linear::intersection(d.perp, d.tangent, tol).dim();
    int sum = linear::sum(d.perp, d.tangent, tol).dim();
    widen(c.perp_rank, d.perp.dim(), first);
    widen(c.cap_rank, cap, first);
    widen(c.sum_rank, sum, first);
    first = false;
    all_transversal = all_transversal && sum == n && cap == 0;
    all_coiso = all_coiso && cap == d.perp.dim();
    all_cap_zero = all_cap_zero && cap == 0;
  }
  c.regular = c.perp_rank.constant();
  c.transversal = all_transversal;
  c.poisson_submanifold = c.perp_rank.max == 0;
  c.coisotropic = all_coiso;
  c.pre_poisson = c.sum_rank.constant();
  c.poisson_dirac = c.regular && all_cap_zero;
  return c;
}

DiracSpace pullback_dirac(const BivectorField& pi, const Chart& chart, const Vector& u,
                          std::optional<int> expected_perp_rank, double tol) {
  PointData d = point_data(pi, chart, u, tol);
  if (expected_perp_rank && d.perp.dim() != *expected_perp_rank)
    throw RankDefect("rank of TXperp is " + std::to_string(d.perp.dim()) + ", expected " +
                         std::to_string(*expected_perp_rank),
                     *expected_perp_rank - d.perp.dim());
  auto lpi = linear::dirac_graph(pi.form(d.x), linear::FormKind::bivector);
  std::optional<int> kernel;
  if (expected_perp_rank) kernel = d.conormal.dim() - *expected_perp_rank;
  return linear::dirac_pullback(lpi, chart.jacobian(u), kernel, tol).space;
}

DiracSpace pullback_dirac_via_perp(const BivectorField& pi, const Chart& chart, const Vector& u, double tol) {
  PointData d = point_data(pi, chart, u, tol);
  Matrix j = chart.jacobian(u);
  int k = chart.param_dim();
  Subspace alphas = linear::annihilator(d.perp);
  Matrix p = pi.matrix(d.x);
  Matrix tangent = j.completeOrthogonalDecomposition().solve(p * alphas.basis());
  Matrix m(2 * k, alphas.dim());
  m << tangent, j.transpose() * alphas.basis();
  return DiracSpace::from_spanning(m, k, tol);
}

Transversal make_transversal(const BivectorField& pi, const Chart& chart, const Vector& u0, double half_width,
                             double tol) {
  PointData d = point_data(pi, chart, u0, tol);
  int n = pi.dim(), k = chart.param_dim();
  Matrix p = pi.matrix(d.x);
  Subspace tp = linear::sum(d.tangent, Subspace::span(p * d.perp.basis(), tol, 1.0), tol);
  Subspace e = linear::annihilator(tp);
  int m = e.dim();
  Transversal t;
  t.e_frame = e.basis();
  std::vector<Expression> comps;
  for (int i = 0; i < n; ++i) {
    Expression c = chart.components()[i] + Expression::constant(0.0, k + m);
    for (int l = 0; l < m; ++l)
      c = c + Expression::constant(t.e_frame(i, l), k + m) * Expression::variable(k + l, k + m);
    comps.push_back(c);
  }
  Vector lo(k + m), hi(k + m);
  lo.head(k) = chart.domain().lower;
  hi.head(k) = chart.domain().upper;
  lo.tail(m).setConstant(-half_width);
  hi.tail(m).setConstant(half_width);
  auto names = chart.param_names();
  if (!names.empty())
    for (int l = 0; l < m; ++l) names.push_back("e" + std::to_string(l + 1));
  t.chart = Chart(n, comps, Box(lo, hi), names);
  Matrix span(n, k + n + k + m);
  Vector tau0(k + m);
  tau0 << u0, Vector::Zero(m);
  span << chart.jacobian(u0), p, t.chart.jacobian(tau0);
  t.span_rank = numeric_rank(span, tol);
  return t;
}

}  // namespace poisat::submanifold
