#include "poisat/model.hpp"

#include <random>

#include "poisat/errors.hpp"

namespace poisat::model {

using linear::annihilator;
using linear::containment_residual;
using linear::intersection;
using linear::numeric_rank;
using linear::sum;

namespace {

constexpr double kFdStep = 1e-3;

// Fourth-order central difference of a matrix-valued function along one coordinate.
template <class F>
Matrix central_difference(const F& f, const Vector& z, int a, double h) {
  Vector p1 = z, p2 = z, m1 = z, m2 = z;
  p1[a] += h;
  p2[a] += 2 * h;
  m1[a] -= h;
  m2[a] -= 2 * h;
  return (-f(p2) + 8.0 * f(p1) - 8.0 * f(m1) + f(m2)) / (12.0 * h);
}

Matrix projection_matrix(int k, int r) {
  Matrix a = Matrix::Zero(k, k + r);
  a.leftCols(k) = Matrix::Identity(k, k);
  return a;
}

// Max |(I - P_W) Pi N| over an orthonormal basis N of `covectors`.
double invariance_residual(const Matrix& p, const Subspace& covectors, const Subspace& w) {
  if (covectors.dim() == 0) return 0.0;
  Matrix img = p * covectors.basis();
  Matrix out = img - w.basis() * (w.basis().transpose() * img);
  return out.cwiseAbs().maxCoeff();
}

// Angle between W cap TX and G.
double tangent_residual(const Subspace& w, const Subspace& tangent, const Subspace& g, double tol) {
  return linear::max_principal_angle(intersection(w, tangent, tol), g);
}

// Symplectic form omega(pi#a, pi#b) = pi(a, b) on S = pi#(span of `covectors`),
// lifted to an ambient form that vanishes on S-perp.
SkewForm induced_form(const Matrix& p, const Subspace& covectors, Subspace& s, double tol) {
  Matrix img = p * covectors.basis();
  s = Subspace::span(img, tol, std::max(1e-300, p.norm()));
  if (s.dim() == 0) return SkewForm(static_cast<int>(p.rows()));
  Matrix coeff = img.completeOrthogonalDecomposition().solve(s.basis());
  Matrix pre = covectors.basis() * coeff;  // pi# pre = s basis
  Matrix ws = s.basis().transpose() * pre;  // omega(q_i, q_j) = <q_i, pre_j>
  return SkewForm::antisymmetrized(s.basis() * ws * s.basis().transpose());
}

Subspace frame_or(const std::optional<Frame>& f, const Vector& u, int n, const Subspace& fallback, double tol) {
  if (!f) return fallback;
  return Subspace::span(evaluate_frame(*f, u, n), tol);
}

}  // namespace

std::string to_string(ComplementMode mode) {
  switch (mode) {
    case ComplementMode::standard: return "default";
    case ComplementMode::transversal: return "transversal";
    case ComplementMode::coisotropic: return "coisotropic";
    case ComplementMode::pre_poisson: return "pre_poisson";
    case ComplementMode::custom: return "custom";
  }
  return "default";
}

ComplementMode complement_mode_from_string(const std::string& name) {
  if (name == "default") return ComplementMode::standard;
  if (name == "transversal") return ComplementMode::transversal;
  if (name == "coisotropic") return ComplementMode::coisotropic;
  if (name == "pre_poisson") return ComplementMode::pre_poisson;
  if (name == "custom") return ComplementMode::custom;
  throw Error("unknown complement mode '" + name + "'");
}

Matrix evaluate_frame(const Frame& frame, const Vector& u, int n) {
  Matrix m(n, static_cast<int>(frame.size()));
  for (std::size_t c = 0; c < frame.size(); ++c) {
    if (static_cast<int>(frame[c].size()) != n) throw Error("frame vector has the wrong number of components");
    for (int i = 0; i < n; ++i) m(i, static_cast<int>(c)) = frame[c][i].eval(u);
  }
  return m;
}

Matrix inclusion_for(const Matrix& b, const Subspace& w) {
  int n = static_cast<int>(b.rows()), r = static_cast<int>(b.cols());
  if (r == 0) return Matrix(n, 0);
  Subspace w0 = annihilator(w);
  if (w0.dim() != r) throw PrerequisiteError("complement has the wrong dimension");
  Matrix m = b.transpose() * w0.basis();
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible() || numeric_rank(m, 1e-10, 1.0) < r)
    throw PrerequisiteError("W is not a complement of TXperp");
  return w0.basis() * lu.inverse();
}

ComplementChoice complement(const BivectorField& pi, const Chart& chart, const Vector& u, const ComplementSpec& spec,
                            double tol) {
  auto d = submanifold::point_data(pi, chart, u, tol);
  int n = pi.dim();
  Matrix p = pi.matrix(d.x);
  ComplementChoice c;
  c.mode = spec.mode;
  c.tangent = d.tangent;
  c.perp = d.perp;
  c.g = Subspace(n);
  c.h = Subspace(n);
  c.cap = intersection(d.perp, d.tangent, tol);

  switch (spec.mode) {
    case ComplementMode::standard:
      c.w = annihilator(d.perp);
      break;
    case ComplementMode::transversal:
      if (sum(d.perp, d.tangent, tol).dim() != n || c.cap.dim() != 0)
        throw PrerequisiteError("transversal complement needs TX + TXperp = TM");
      c.w = d.tangent;
      break;
    case ComplementMode::custom:
      if (!spec.w) throw PrerequisiteError("custom complement needs a W frame");
      c.w = Subspace::span(evaluate_frame(*spec.w, u, n), tol);
      break;
    case ComplementMode::coisotropic: {
      if (containment_residual(d.perp, d.tangent) > 1e-8)
        throw PrerequisiteError("coisotropic complement needs TXperp inside TX");
      c.g = frame_or(spec.g, u, n, linear::complement_within(d.perp, d.tangent, tol), tol);
      if (sum(c.g, d.perp, tol).dim() != d.tangent.dim() || c.g.dim() + d.perp.dim() != d.tangent.dim())
        throw PrerequisiteError("G is not a complement of TXperp in TX");
      Subspace s;
      SkewForm omega = induced_form(p, annihilator(c.g), s, tol);
      if (s.dim() != 2 * d.perp.dim()) throw RankDefect("pi#(G^0) does not have twice the rank of TXperp", 1);
      Subspace v = linear::lagrangian_complement(omega, s, d.perp, tol);
      Subspace vg = sum(v, c.g, tol);
      Subspace hh = annihilator(sum(d.perp, vg, tol));
      c.w = sum(vg, hh, tol);
      break;
    }
    case ComplementMode::pre_poisson: {
      c.g = frame_or(spec.g, u, n, linear::complement_within(c.cap, d.tangent, tol), tol);
      c.h = frame_or(spec.h, u, n, linear::complement_within(c.cap, d.perp, tol), tol);
      if (c.g.dim() + c.cap.dim() != d.tangent.dim() || sum(c.g, c.cap, tol).dim() != d.tangent.dim())
        throw PrerequisiteError("G is not a complement of TXperp cap TX in TX");
      if (c.h.dim() + c.cap.dim() != d.perp.dim() || sum(c.h, c.cap, tol).dim() != d.perp.dim())
        throw PrerequisiteError("H is not a complement of TXperp cap TX in TXperp");
      Subspace gh = sum(c.g, c.h, tol);
      Subspace s;
      SkewForm omega = induced_form(p, annihilator(gh), s, tol);
      if (s.dim() != 2 * c.cap.dim())
        throw RankDefect("pi#((G+H)^0) does not have twice the rank of TXperp cap TX", 1);
      Subspace cl = linear::lagrangian_complement(omega, s, c.cap, tol);
      Subspace gc = sum(c.g, cl, tol);
      Subspace y = annihilator(sum(sum(c.cap, c.h, tol), gc, tol));
      c.w = sum(gc, y, tol);
      break;
    }
  }

  c.direct_sum_rank = sum(d.perp, c.w, tol).dim();
  if (c.direct_sum_rank != n || d.perp.dim() + c.w.dim() != n)
    throw PrerequisiteError("W is not a complement of TXperp");
  c.j = inclusion_for(d.perp.basis(), c.w);
  if (spec.mode == ComplementMode::pre_poisson) {
    c.invariance_residual = invariance_residual(p, annihilator(sum(c.h, c.w, tol)), c.w);
  } else {
    c.invariance_residual = invariance_residual(p, annihilator(c.w), c.w);
  }
  if (spec.mode == ComplementMode::coisotropic || spec.mode == ComplementMode::pre_poisson)
    c.tangent_residual = tangent_residual(c.w, d.tangent, c.g, tol);
  return c;
}

BundleChart::BundleChart(const BivectorField& pi, const Chart& chart, ComplementSpec spec, const Vector& anchor,
                         double tol)
    : pi_(&pi), chart_(&chart), spec_(std::move(spec)), anchor_(anchor), tol_(tol) {
  auto d = submanifold::point_data(pi, chart, anchor, tol);
  r_ = d.perp.dim();
  reference_ = d.perp.basis();
}

ComplementChoice BundleChart::choice(const Vector& u) const {
  ComplementChoice c = complement(*pi_, *chart_, u, spec_, tol_);
  if (c.perp.dim() != r_)
    throw RankDefect("rank of TXperp changed from " + std::to_string(r_) + " to " + std::to_string(c.perp.dim()),
                     r_ - c.perp.dim());
  c.j = inclusion_for(c.perp.projector() * reference_, c.w);
  return c;
}

Matrix BundleChart::perp_frame(const Vector& u) const {
  auto d = submanifold::point_data(*pi_, *chart_, u, tol_);
  if (d.perp.dim() != r_)
    throw RankDefect("rank of TXperp changed from " + std::to_string(r_) + " to " + std::to_string(d.perp.dim()),
                     r_ - d.perp.dim());
  return d.perp.projector() * reference_;
}

Matrix BundleChart::inclusion(const Vector& u) const { return choice(u).j; }

Matrix BundleChart::inclusion_derivative(const Vector& u, const Vector& xi) const {
  int n = ambient_dim(), k = base_dim();
  Matrix out = Matrix::Zero(n, k);
  if (r_ == 0) return out;
  auto f = [&](const Vector& v) -> Matrix { return inclusion(v) * xi; };
  for (int a = 0; a < k; ++a) out.col(a) = central_difference(f, u, a, kFdStep);
  return out;
}

sprayflow::CotangentState BundleChart::state(const Vector& u, const Vector& xi) const {
  if (xi.size() != r_) throw Error("fiber coordinate has the wrong dimension");
  return {chart_->point(u), inclusion(u) * xi};
}

Matrix BundleChart::embed_jacobian(const Vector& u, const Vector& xi) const {
  int n = ambient_dim(), k = base_dim();
  Matrix d = Matrix::Zero(2 * n, k + r_);
  d.topLeftCorner(n, k) = chart_->jacobian(u);
  d.bottomLeftCorner(n, k) = inclusion_derivative(u, xi);
  d.bottomRightCorner(n, r_) = inclusion(u);
  return d;
}

SkewForm SigmaTau::restricted_eta() const {
  int k = static_cast<int>(pairing.rows()), r = static_cast<int>(pairing.cols());
  Matrix m = Matrix::Zero(k + r, k + r);
  m.topRightCorner(k, r) = -pairing;
  m.bottomLeftCorner(r, k) = pairing.transpose();
  m.bottomRightCorner(r, r) = -sigma.matrix();
  return SkewForm::from_lower(m);
}

SigmaTau sigma_tau(const BivectorField& pi, const Chart& chart, const Vector& u, const Matrix& j) {
  Matrix p = pi.matrix(chart.point(u));
  Matrix jac = chart.jacobian(u);
  int k = chart.param_dim(), r = static_cast<int>(j.cols());
  SigmaTau st;
  st.sigma = SkewForm::antisymmetrized(j.transpose() * p.transpose() * j);
  st.pairing = jac.transpose() * j;
  Matrix t = Matrix::Zero(k + r, k + r);
  t.topRightCorner(k, r) = st.pairing;
  t.bottomLeftCorner(r, k) = -st.pairing.transpose();
  st.tau = SkewForm::from_lower(t);
  return st;
}

SigmaTau sigma_tau(const BundleChart& bundle, const Vector& u) {
  return sigma_tau(bundle.bivector(), bundle.chart(), u, bundle.inclusion(u));
}

SkewForm eta_canonical(const BundleChart& bundle, const Vector& u, const Vector& xi, int steps) {
  sprayflow::FlowOptions o;
  o.steps = steps;
  o.omega = true;
  o.variational = true;
  auto fr = sprayflow::integrate(bundle.bivector(), bundle.state(u, xi), 1.0, o);
  return -fr.omega.pullback(bundle.embed_jacobian(u, xi));
}

double eta_closedness(const BundleChart& bundle, const Vector& u, const Vector& xi, int steps, double h) {
  int k = bundle.base_dim(), r = bundle.fiber_dim(), m = k + r;
  if (m < 3) return 0.0;
  Vector z(m);
  z << u, xi;
  auto eta = [&](const Vector& v) -> Matrix {
    return eta_canonical(bundle, v.head(k), v.tail(r), steps).matrix();
  };
  std::vector<Matrix> d;
  for (int a = 0; a < m; ++a) d.push_back(central_difference(eta, z, a, h));
  double worst = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      for (int c = b + 1; c < m; ++c)
        worst = std::max(worst, std::abs(d[a](b, c) + d[b](c, a) + d[c](a, b)));
  return worst;
}

SkewForm local_model_bivector(const BundleChart& bundle, const Vector& u, const SkewForm& eta) {
  int k = bundle.base_dim(), r = bundle.fiber_dim();
  auto lx = submanifold::pullback_dirac(bundle.bivector(), bundle.chart(), u, r, bundle.tol());
  auto pr = linear::dirac_pullback(lx, projection_matrix(k, r)).space;
  return linear::dirac_to_bivector(linear::dirac_gauge(pr, eta), bundle.tol());
}

ModelRadius model_radius(const BundleChart& bundle, const std::vector<Vector>& us, double max_radius, int steps,
                         std::uint64_t seed) {
  ModelRadius out;
  int r = bundle.fiber_dim();
  if (r == 0) {
    out.radius = max_radius;
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Vector> dirs;
  for (int i = 0; i < r; ++i) {
    dirs.push_back(Vector::Unit(r, i));
    dirs.push_back(-Vector::Unit(r, i));
  }
  for (int s = 0; s < 2; ++s) {
    Vector v(r);
    for (int i = 0; i < r; ++i) v[i] = nd(rng);
    dirs.push_back(v.normalized());
  }
  double rho = max_radius;
  for (int level = 0; level < 12; ++level, rho *= 0.5) {
    bool ok = true;
    for (const auto& u : us) {
      for (const auto& dvec : dirs) {
        ++out.probes;
        try {
          Vector xi = rho * dvec;
          local_model_bivector(bundle, u, eta_canonical(bundle, u, xi, steps));
        } catch (const NotPoisson&) {
          ok = false;
        }
      }
    }
    if (ok) {
      out.radius = rho;
      return out;
    }
    ++out.failures;
  }
  return out;
}

SaturationChart saturation_chart(const BundleChart& bundle, const std::vector<Vector>& us,
                                 const std::vector<Vector>& xis, int steps) {
  SaturationChart sc;
  sc.expected_rank = bundle.base_dim() + bundle.fiber_dim();
  int n = bundle.ambient_dim();
  bool first = true;
  for (const auto& u : us) {
    for (const auto& xi : xis) {
      auto fr = sprayflow::flow(bundle.bivector(), bundle.state(u, xi), 1.0, steps);
      SaturationSample s;
      s.u = u;
      s.xi = xi;
      s.x = fr.end.x;
      s.df = fr.jac.topRows(n) * bundle.embed_jacobian(u, xi);
      s.rank = numeric_rank(s.df, bundle.tol());
      sc.left_domain = sc.left_domain || fr.left_domain;
      if (first) sc.min_rank = sc.max_rank = s.rank;
      first = false;
      sc.min_rank = std::min(sc.min_rank, s.rank);
      sc.max_rank = std::max(sc.max_rank, s.rank);
      sc.samples.push_back(std::move(s));
    }
  }
  return sc;
}

SaturationReport verify_saturation_poisson(const BivectorField& pi, const SaturationChart& chart, double tol) {
  SaturationReport rep;
  for (const auto& s : chart.samples) {
    Subspace tp = Subspace::span(s.df);
    Subspace normal = annihilator(tp);
    if (normal.dim() == 0) continue;
    double res = (pi.matrix(s.x) * normal.basis()).cwiseAbs().maxCoeff();
    rep.max_residual = std::max(rep.max_residual, res);
  }
  rep.passed = rep.max_residual <= tol;
  return rep;
}

Inversion invert_chart(const BundleChart& bundle, const Vector& y, Vector u, Vector xi, int steps,
                       int max_iterations) {
  int k = bundle.base_dim(), r = bundle.fiber_dim(), n = bundle.ambient_dim();
  Inversion inv;
  for (int it = 0; it <= max_iterations; ++it) {
    auto fr = sprayflow::flow(bundle.bivector(), bundle.state(u, xi), 1.0, steps);
    Vector res = fr.end.x - y;
    inv.distance = res.norm();
    inv.iterations = it;
    if (inv.distance < 1e-13 || it == max_iterations) break;
    Matrix df = fr.jac.topRows(n) * bundle.embed_jacobian(u, xi);
    Vector delta = df.completeOrthogonalDecomposition().solve(-res);
    u += delta.head(k);
    xi += delta.tail(r);
    if (delta.norm() < 1e-15) break;
  }
  inv.u = u;
  inv.xi = xi;
  return inv;
}

Step2Report verify_full_fiber(const BundleChart& bundle, const std::vector<Vector>& us,
                              const std::vector<Vector>& zetas, int steps, double tol) {
  Step2Report rep;
  const auto& pi = bundle.bivector();
  for (const auto& u : us) {
    Vector x = bundle.chart().point(u);
    Matrix b = bundle.perp_frame(u);
    Matrix j = bundle.inclusion(u);
    Matrix jac = bundle.chart().jacobian(u);
    for (const auto& zeta : zetas) {
      Vector y = sprayflow::exp_chi(pi, {x, zeta}, steps);
      Vector xi0 = b.transpose() * zeta;
      Vector alpha = zeta - j * xi0;
      Vector u0 = u + jac.completeOrthogonalDecomposition().solve(pi.matrix(x) * alpha);
      auto inv = invert_chart(bundle, y, u0, xi0, steps);
      rep.max_distance = std::max(rep.max_distance, inv.distance);
      ++rep.samples;
    }
  }
  rep.passed = rep.max_distance <= tol;
  return rep;
}

NormalFormSample normal_form_at(const BundleChart& bundle, const Vector& u, const Vector& xi, int steps) {
  int n = bundle.ambient_dim(), m = bundle.base_dim() + bundle.fiber_dim();
  sprayflow::FlowOptions o;
  o.steps = steps;
  o.omega = true;
  auto fr = sprayflow::integrate(bundle.bivector(), bundle.state(u, xi), 1.0, o);
  Matrix dphi = bundle.embed_jacobian(u, xi);
  SkewForm eta = -fr.omega.pullback(dphi);
  SkewForm model = local_model_bivector(bundle, u, eta);
  Matrix df = fr.jac.topRows(n) * dphi;
  Subspace tp = Subspace::span(df, bundle.tol());
  if (tp.dim() != m) throw RankDefect("saturation chart is not immersive at this state", m - tp.dim());
  NormalFormSample s;
  s.u = u;
  s.xi = xi;
  s.x = fr.end.x;
  s.pushed = df * model.matrix() * df.transpose();
  Matrix q = tp.basis();
  s.mismatch = m ? (q.transpose() * (s.pushed - bundle.bivector().matrix(s.x)) * q).cwiseAbs().maxCoeff() : 0.0;
  return s;
}

NormalFormReport verify_normal_form(const BundleChart& bundle, const std::vector<Vector>& us,
                                    const std::vector<Vector>& xis, int steps, double tol) {
  NormalFormReport rep;
  for (const auto& u : us)
    for (const auto& xi : xis) {
      auto s = normal_form_at(bundle, u, xi, steps);
      rep.max_mismatch = std::max(rep.max_mismatch, s.mismatch);
      rep.samples.push_back(std::move(s));
    }
  rep.passed = rep.max_mismatch <= tol;
  return rep;
}

IndependenceReport compare_models(const BundleChart& first, const BundleChart& second,
                                  const std::vector<Vector>& us, const std::vector<Vector>& xis, int steps,
                                  double tol) {
  IndependenceReport rep;
  const auto& pi = first.bivector();
  for (const auto& u : us) {
    Matrix dj = first.inclusion(u) - second.inclusion(u);
    Matrix jac = first.chart().jacobian(u);
    Matrix p = pi.matrix(first.chart().point(u));
    for (const auto& xi : xis) {
      auto s0 = normal_form_at(first, u, xi, steps);
      Vector u1 = u + jac.completeOrthogonalDecomposition().solve(p * dj * xi);
      auto inv = invert_chart(second, s0.x, u1, xi, steps);
      auto s1 = normal_form_at(second, inv.u, inv.xi, steps);
      Matrix df = sprayflow::flow(pi, first.state(u, xi), 1.0, steps).jac.topRows(pi.dim()) *
                  first.embed_jacobian(u, xi);
      Matrix q = Subspace::span(df, first.tol()).basis();
      double diff = q.cols() ? (q.transpose() * (s0.pushed - s1.pushed) * q).cwiseAbs().maxCoeff() : 0.0;
      rep.max_difference = std::max(rep.max_difference, diff);
      rep.max_inversion_distance = std::max(rep.max_inversion_distance, inv.distance);
      ++rep.samples;
    }
  }
  rep.passed = rep.max_difference <= tol && rep.max_inversion_distance <= 1e-8;
  return rep;
}

DiracField presymplectic_dirac(const BivectorField& form) {
  return [form](const Vector& u) { return linear::dirac_graph(form.form(u), linear::FormKind::two_form); };
}

DiracField pullback_dirac_field(const BivectorField& pi, const Chart& chart, int expected_perp_rank, double tol) {
  return [pi, chart, expected_perp_rank, tol](const Vector& u) {
    return submanifold::pullback_dirac(pi, chart, u, expected_perp_rank, tol);
  };
}

GotayModel::GotayModel(DiracField l, int base_dim, const Vector& anchor, double tol)
    : l_(std::move(l)), k_(base_dim), anchor_(anchor), tol_(tol) {
  r_ = -1;
  Subspace k0 = kernel(anchor);
  r_ = k0.dim();
  reference_ = k0.basis();
}

Subspace GotayModel::kernel(const Vector& u) const {
  DiracSpace l = l_(u);
  if (l.dim() != k_) throw Error("Dirac field has the wrong dimension");
  Subspace c = linear::null_space(l.cotangent(), tol_, 1.0);
  Subspace k = Subspace::span(l.tangent() * c.basis(), tol_, 1.0);
  if (r_ >= 0 && k.dim() != r_)
    throw RankDefect("L cap TX changed rank from " + std::to_string(r_) + " to " + std::to_string(k.dim()),
                     r_ - k.dim());
  return k;
}

Matrix GotayModel::inclusion(const Vector& u) const {
  Subspace kk = kernel(u);
  if (r_ == 0) return Matrix(k_, 0);
  Matrix b = kk.projector() * reference_;
  return inclusion_for(b, annihilator(kk));
}

SkewForm GotayModel::gauge_form(const Vector& u, const Vector& xi) const {
  Matrix d = Matrix::Zero(2 * k_, k_ + r_);
  d.topLeftCorner(k_, k_) = Matrix::Identity(k_, k_);
  if (r_ > 0) {
    auto f = [&](const Vector& v) -> Matrix { return inclusion(v) * xi; };
    for (int a = 0; a < k_; ++a) d.block(k_, a, k_, 1) = central_difference(f, u, a, kFdStep);
    d.bottomRightCorner(k_, r_) = inclusion(u);
  }
  return SkewForm::from_lower(linear::canonical_symplectic(k_)).pullback(d);
}

SkewForm GotayModel::bivector(const Vector& u, const Vector& xi) const {
  if (xi.size() != r_) throw Error("fiber coordinate has the wrong dimension");
  auto pr = linear::dirac_pullback(l_(u), projection_matrix(k_, r_)).space;
  return linear::dirac_to_bivector(linear::dirac_gauge(pr, gauge_form(u, xi)), tol_);
}

GotayReport verify_gotay(const GotayModel& model, const std::vector<Vector>& us, const std::vector<Vector>& xis,
                         double jacobi_tol, double tol, double h) {
  GotayReport rep;
  int k = model.base_dim(), r = model.fiber_dim(), m = k + r;
  rep.fiber_dim = r;
  try {
    for (const auto& u : us) model.kernel(u);
  } catch (const RankDefect&) {
    rep.constant_rank = false;
    return rep;
  }
  auto piz = [&](const Vector& z) -> Matrix { return model.bivector(z.head(k), z.tail(r)).matrix(); };
  for (const auto& u : us) {
    for (const auto& xi : xis) {
      Vector z(m);
      z << u, xi;
      std::vector<Matrix> d;
      for (int a = 0; a < m; ++a) d.push_back(central_difference(piz, z, a, h));
      rep.jacobi_residual = std::max(rep.jacobi_residual, field::jacobi_residual(piz(z), d));
    }
    Vector z0(m);
    z0 << u, Vector::Zero(r);
    Matrix p0 = piz(z0);
    if (r > 0) rep.coisotropy_residual = std::max(rep.coisotropy_residual, p0.bottomRightCorner(r, r).cwiseAbs().maxCoeff());
    Matrix inc = Matrix::Zero(m, k);
    inc.topRows(k) = Matrix::Identity(k, k);
    auto back = linear::dirac_pullback(linear::dirac_graph(SkewForm::from_lower(p0), linear::FormKind::bivector), inc);
    double angle = linear::max_principal_angle(back.space.subspace(), model.dirac(u).subspace());
    rep.pullback_angle = std::max(rep.pullback_angle, angle);
  }
  rep.passed = rep.constant_rank && rep.jacobi_residual <= jacobi_tol && rep.coisotropy_residual <= tol &&
               rep.pullback_angle <= tol;
  return rep;
}

MarleReport marle_invariants(const BivectorField& pi, const Chart& chart, const ComplementSpec& spec,
                             const std::vector<Vector>& us, double tol, double rank_tol) {
  if (spec.mode != ComplementMode::pre_poisson) throw PrerequisiteError("Marle invariants need the pre_poisson complement");
  MarleReport rep;
  for (const auto& u : us) {
    ComplementChoice c = complement(pi, chart, u, spec, rank_tol);
    Matrix p = pi.matrix(chart.point(u));
    MarleSample s;
    s.u = u;
    s.pullback = submanifold::pullback_dirac(pi, chart, u, c.perp.dim(), rank_tol);
    Subspace w0 = annihilator(c.w);
    Subspace hw0 = annihilator(sum(c.h, c.w, rank_tol));
    if (w0.dim() && hw0.dim()) s.cross_term = (w0.basis().transpose() * p * hw0.basis()).cwiseAbs().maxCoeff();
    Subspace q = annihilator(sum(c.w, c.tangent, rank_tol));
    s.quotient_form = q.basis().transpose() * p.transpose() * q.basis();
    rep.max_cross_term = std::max(rep.max_cross_term, s.cross_term);
    rep.samples.push_back(std::move(s));
  }
  rep.passed = rep.max_cross_term <= tol;
  return rep;
}

TubularMap::TubularMap(const BundleChart& bundle) : bundle_(&bundle) {
  const Vector& u = bundle.anchor();
  Vector x = bundle.chart().point(u);
  Matrix j = bundle.inclusion(u);
  Matrix jac = bundle.chart().jacobian(u);
  Matrix span(bundle.ambient_dim(), jac.cols() + j.cols());
  span << jac, bundle.bivector().matrix(x) * j;
  c_ = annihilator(Subspace::span(span, bundle.tol())).basis();
}

Vector TubularMap::operator()(const Vector& u, const Vector& xi, const Vector& c, int steps) const {
  return sprayflow::exp_chi(bundle_->bivector(), bundle_->state(u, xi), steps) + c_ * c;
}

Matrix TubularMap::jacobian(const Vector& u, const Vector& xi, int steps) const {
  int n = bundle_->ambient_dim();
  auto fr = sprayflow::flow(bundle_->bivector(), bundle_->state(u, xi), 1.0, steps);
  Matrix df = fr.jac.topRows(n) * bundle_->embed_jacobian(u, xi);
  Matrix out(n, df.cols() + c_.cols());
  out << df, c_;
  return out;
}

}  // namespace poisat::model
