#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "poisat/field.hpp"
#include "poisat/linear.hpp"
#include "poisat/sprayflow.hpp"
#include "poisat/submanifold.hpp"

namespace poisat::model {

using expr::Expression;
using field::BivectorField;
using linear::DiracSpace;
using linear::SkewForm;
using linear::Subspace;
using submanifold::Chart;

enum class ComplementMode { standard, transversal, coisotropic, pre_poisson, custom };

std::string to_string(ComplementMode mode);
ComplementMode complement_mode_from_string(const std::string& name);

// List of vector fields along X, each given by n expressions in the chart parameters.
using Frame = std::vector<std::vector<Expression>>;
Matrix evaluate_frame(const Frame& frame, const Vector& u, int n);

struct ComplementSpec {
  ComplementMode mode = ComplementMode::standard;
  std::optional<Frame> g;  // complement of TXperp (cap TX) inside TX
  std::optional<Frame> h;  // complement of TXperp cap TX inside TXperp
  std::optional<Frame> w;  // custom complement
};

struct ComplementChoice {
  ComplementMode mode = ComplementMode::standard;
  Subspace tangent, perp, w;
  Subspace g, h, cap;   // filled in coisotropic and pre-Poisson modes
  Matrix j;             // n x r, image W^0, dual to the orthonormal basis of perp
  int direct_sum_rank = 0;     // rank of TXperp + W
  double invariance_residual = 0.0;  // pi#(W^0) in W, or pi#((H+W)^0) in W
  double tangent_residual = 0.0;     // W cap TX = G (0 when not applicable)
};

ComplementChoice complement(const BivectorField& pi, const Chart& chart, const Vector& u, const ComplementSpec& spec,
                            double tol = linear::kRankTol);

// Inclusion (TXperp)* -> T*M with image W^0, dual to the perp frame B.
Matrix inclusion_for(const Matrix& b, const Subspace& w);

// Smooth trivialization of (TXperp)* over a chart neighbourhood of an anchor
// parameter. The fiber frame at u is the projection of the anchor's
// orthonormal frame onto TXperp(u).
class BundleChart {
 public:
  BundleChart(const BivectorField& pi, const Chart& chart, ComplementSpec spec, const Vector& anchor,
              double tol = linear::kRankTol);

  const BivectorField& bivector() const { return *pi_; }
  const Chart& chart() const { return *chart_; }
  const ComplementSpec& spec() const { return spec_; }
  const Vector& anchor() const { return anchor_; }
  int base_dim() const { return chart_->param_dim(); }
  int fiber_dim() const { return r_; }
  int ambient_dim() const { return pi_->dim(); }
  double tol() const { return tol_; }

  Matrix perp_frame(const Vector& u) const;
  ComplementChoice choice(const Vector& u) const;
  Matrix inclusion(const Vector& u) const;
  // d/du of j(u) xi, n x k
  Matrix inclusion_derivative(const Vector& u, const Vector& xi) const;
  sprayflow::CotangentState state(const Vector& u, const Vector& xi) const;
  // 2n x (k + r) differential of (u, xi) -> (X(u), j(u) xi)
  Matrix embed_jacobian(const Vector& u, const Vector& xi) const;

 private:
  const BivectorField* pi_;
  const Chart* chart_;
  ComplementSpec spec_;
  Vector anchor_;
  double tol_;
  int r_ = 0;
  Matrix reference_;  // orthonormal basis of TXperp at the anchor
};

struct SigmaTau {
  SkewForm sigma;   // r x r, sigma(a, b) = a^T S b = pi(j a, j b)
  Matrix pairing;   // k x r, <J w, j xi>
  SkewForm tau;     // on (w, xi) in R^{k+r}
  SkewForm restricted_eta() const;  // -sigma (+) -tau (+) 0 on R^{k+r}
};

SigmaTau sigma_tau(const BivectorField& pi, const Chart& chart, const Vector& u, const Matrix& j);
SigmaTau sigma_tau(const BundleChart& bundle, const Vector& u);

// -(pullback of Omega_chi under (u, xi) -> (X(u), j(u) xi)).
SkewForm eta_canonical(const BundleChart& bundle, const Vector& u, const Vector& xi, int steps);
// Max |d eta| on the bundle chart by fourth-order differences of eta_canonical.
double eta_closedness(const BundleChart& bundle, const Vector& u, const Vector& xi, int steps, double h = 1e-2);

// Bivector of (pr*(i*L_pi))^eta at (u, xi); NotPoisson when not a graph.
SkewForm local_model_bivector(const BundleChart& bundle, const Vector& u, const SkewForm& eta);

struct ModelRadius {
  double radius = 0.0;  // largest probed radius at which every probe extracted
  int probes = 0;
  int failures = 0;     // failed probes at larger radii
};

ModelRadius model_radius(const BundleChart& bundle, const std::vector<Vector>& us, double max_radius, int steps,
                         std::uint64_t seed = 0);

struct SaturationSample {
  Vector u, xi, x;
  Matrix df;  // n x (k + r)
  int rank = 0;
};

struct SaturationChart {
  std::vector<SaturationSample> samples;
  int expected_rank = 0;  // dim X + rk TXperp
  int min_rank = 0;
  int max_rank = 0;
  bool left_domain = false;
};

SaturationChart saturation_chart(const BundleChart& bundle, const std::vector<Vector>& us,
                                 const std::vector<Vector>& xis, int steps);

struct SaturationReport {
  double max_residual = 0.0;  // max |Pi(y) n| over orthonormal n in TP^0
  bool passed = false;
};

SaturationReport verify_saturation_poisson(const BivectorField& pi, const SaturationChart& chart, double tol);

struct Inversion {
  Vector u, xi;
  double distance = 0.0;
  int iterations = 0;
};

// Gauss-Newton solve of exp(j(u) xi) = y from an initial guess.
Inversion invert_chart(const BundleChart& bundle, const Vector& y, Vector u, Vector xi, int steps,
                       int max_iterations = 25);

struct Step2Report {
  double max_distance = 0.0;
  int samples = 0;
  bool passed = false;
};

// Full-fiber states (X(u), zeta) land on P.
Step2Report verify_full_fiber(const BundleChart& bundle, const std::vector<Vector>& us,
                              const std::vector<Vector>& zetas, int steps, double tol = 1e-4);

struct NormalFormSample {
  Vector u, xi, x;
  double mismatch = 0.0;
  Matrix pushed;  // dF pi_model dF^T at x
};

struct NormalFormReport {
  std::vector<NormalFormSample> samples;
  double max_mismatch = 0.0;
  bool passed = false;
};

NormalFormSample normal_form_at(const BundleChart& bundle, const Vector& u, const Vector& xi, int steps);
NormalFormReport verify_normal_form(const BundleChart& bundle, const std::vector<Vector>& us,
                                    const std::vector<Vector>& xis, int steps, double tol);

struct IndependenceReport {
  double max_difference = 0.0;
  double max_inversion_distance = 0.0;
  int samples = 0;
  bool passed = false;
};

// Compare the bivectors on P produced by two bundle charts at shared points.
IndependenceReport compare_models(const BundleChart& first, const BundleChart& second,
                                  const std::vector<Vector>& us, const std::vector<Vector>& xis, int steps,
                                  double tol);

// Dirac structure on a parameter space, given pointwise.
using DiracField = std::function<DiracSpace(const Vector& u)>;

DiracField presymplectic_dirac(const BivectorField& form);  // matrix field of a two-form
DiracField pullback_dirac_field(const BivectorField& pi, const Chart& chart, int expected_perp_rank,
                                double tol = linear::kRankTol);

// (pr*L)^{j* omega_can} on the bundle (L cap TX)* -> X, near an anchor.
class GotayModel {
 public:
  GotayModel(DiracField l, int base_dim, const Vector& anchor, double tol = linear::kRankTol);

  int base_dim() const { return k_; }
  int fiber_dim() const { return r_; }
  DiracSpace dirac(const Vector& u) const { return l_(u); }
  Subspace kernel(const Vector& u) const;  // L cap TX
  Matrix inclusion(const Vector& u) const; // k x r
  SkewForm gauge_form(const Vector& u, const Vector& xi) const;  // j* omega_can
  SkewForm bivector(const Vector& u, const Vector& xi) const;

 private:
  DiracField l_;
  int k_;
  Vector anchor_;
  double tol_;
  int r_ = 0;
  Matrix reference_;
};

struct GotayReport {
  int fiber_dim = 0;
  bool constant_rank = true;
  double jacobi_residual = 0.0;
  double coisotropy_residual = 0.0;
  double pullback_angle = 0.0;
  bool passed = false;
};

// Checks at (u, xi) states. Jacobi uses fourth-order differences with step h.
GotayReport verify_gotay(const GotayModel& model, const std::vector<Vector>& us, const std::vector<Vector>& xis,
                         double jacobi_tol, double tol, double h = 1e-3);

struct MarleSample {
  Vector u;
  DiracSpace pullback;      // i*L_pi
  Matrix quotient_form;     // pi on W^0 cap TX^0
  double cross_term = 0.0;  // max |pi(j1 a, j2 b)|
};

struct MarleReport {
  std::vector<MarleSample> samples;
  double max_cross_term = 0.0;
  bool passed = false;
};

MarleReport marle_invariants(const BivectorField& pi, const Chart& chart, const ComplementSpec& spec,
                             const std::vector<Vector>& us, double tol, double rank_tol = linear::kRankTol);

struct TubularSample {
  Vector u, xi, c, x;
  int rank = 0;
};

// psi(u, xi, c) = exp(j(u) xi) + C c with C a complement of TX + pi#(j(TXperp*)) at the anchor.
class TubularMap {
 public:
  explicit TubularMap(const BundleChart& bundle);
  int normal_dim() const { return static_cast<int>(c_.cols()); }
  const Matrix& normal_frame() const { return c_; }
  Vector operator()(const Vector& u, const Vector& xi, const Vector& c, int steps) const;
  Matrix jacobian(const Vector& u, const Vector& xi, int steps) const;  // n x (k + r + m)

 private:
  const BundleChart* bundle_;
  Matrix c_;
};

}  // namespace poisat::model
