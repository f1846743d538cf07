#include <algorithm>
#include <random>
#include <sstream>

#include "poisat/cli.hpp"
#include "poisat/errors.hpp"

namespace poisat::cli {

namespace {

constexpr const char* kConvention =
    "Pi^{ij} from 'entry = i j e' (i > j stores the negated entry); pi#(a)^i = sum_j Pi^{ij} a_j; "
    "pi(a,b) = <pi#(a), b>; two-form matrix A: omega(a,b) = a^T A b, iota_v omega = A^T v; "
    "gauge (v, a) -> (v, a + iota_v eta); omega_can = <v1,xi2> - <v2,xi1>";

constexpr int kMaxHalvings = 10;
constexpr std::size_t kMaxWitnesses = 5;

struct Failure {
  int code;
  std::string message;
};

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

// Sample points of a box grid, keeping those within the ball of radius r.
std::vector<Vector> fiber_points(int r, double radius, int per_axis) {
  if (r == 0) return {Vector(0)};
  auto pts = submanifold::tensor_grid(Box::cube(r, radius), std::vector<int>(r, per_axis));
  std::vector<Vector> out;
  for (auto& p : pts)
    if (p.norm() <= radius * (1 + 1e-12)) out.push_back(p);
  return out;
}

std::vector<Vector> random_directions(int n, int count, double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<Vector> out;
  for (int c = 0; c < count; ++c) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = d(rng);
    out.push_back(radius * v / v.norm());
  }
  return out;
}

std::vector<Vector> thin(const std::vector<Vector>& pts, std::size_t count) {
  if (pts.size() <= count) return pts;
  if (count == 1) return {pts[pts.size() / 2]};
  std::vector<Vector> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(pts[i * (pts.size() - 1) / (count - 1)]);
  return out;
}

const char* status(bool pass) { return pass ? "pass" : "fail"; }

class Pipeline {
 public:
  Pipeline(const scene::Scene& sc, const RunOptions& opt) : sc_(sc), built_(scene::build(sc)) {
    steps_ = opt.steps.value_or(sc.steps);
    if (steps_ < sprayflow::kMinSteps || steps_ % 2) throw SceneError("steps must be even and at least 16", 0);
    nf_tol_ = opt.tol.value_or(sc.normal_form_tol);
    radius_ = sc.xi_radius;
    if (sc.has_submanifold) {
      grid_ = submanifold::tensor_grid(sc.param_domain, sc.grid);
      anchor_ = sc.param_domain.center();
    } else if (sc.presymplectic) {
      grid_ = submanifold::tensor_grid(*sc.domain, sc.grid);
      anchor_ = sc.domain->center();
    }
  }

  Json parameters() const {
    Json p;
    p["steps"] = steps_;
    p["xi_radius_requested"] = sc_.xi_radius;
    p["xi_radius"] = radius_;
    p["xi_grid"] = sc_.xi_grid;
    p["normal_form_tol"] = nf_tol_;
    p["seed"] = sc_.seed;
    p["refine"] = sc_.refine;
    p["jacobi_samples"] = sc_.jacobi_samples;
    p["tolerances"] = {{"rank", sc_.tol.rank},         {"jacobi", sc_.tol.jacobi},
                       {"saturation", sc_.tol.saturation}, {"dual_pair", sc_.tol.dual_pair},
                       {"mode", sc_.tol.mode},         {"eta", sc_.tol.eta}};
    return p;
  }

  Json analyze() {
    Json j;
    if (sc_.presymplectic) return analyze_presymplectic();
    auto cert = field::certify_jacobi(built_.pi, sc_.jacobi_samples, sc_.seed, sc_.tol.jacobi);
    j["jacobi"] = {{"max_residual", cert.max_residual},
                   {"worst_point", to_json(cert.worst_point)},
                   {"samples", cert.samples},
                   {"passed", cert.passed}};
    if (!cert.passed) {
      j["status"] = "prerequisite";
      fail_ = Failure{prerequisite_violation, "bivector fails the Jacobi identity on sampled points"};
      return j;
    }
    if (!built_.chart) {
      j["status"] = "pass";
      return j;
    }
    auto pts = grid_;
    auto more = submanifold::random_refinement(sc_.param_domain, grid_.size(), sc_.refine, sc_.seed);
    pts.insert(pts.end(), more.begin(), more.end());
    auto reg = submanifold::regularity_scan(built_.pi, *built_.chart, pts, sc_.tol.rank);
    Json w = Json::object();
    for (const auto& [rank, list] : reg.witnesses) {
      Json a = Json::array();
      auto sorted = list;
      std::stable_sort(sorted.begin(), sorted.end(), [](const Vector& a, const Vector& b) { return a.norm() < b.norm(); });
      for (std::size_t i = 0; i < std::min(kMaxWitnesses, sorted.size()); ++i) a.push_back(to_json(sorted[i]));
      w[std::to_string(rank)] = a;
    }
    j["regularity"] = {{"regular_on_sampled_set", reg.is_regular},
                       {"samples", reg.samples},
                       {"min_rank", reg.min_rank},
                       {"max_rank", reg.max_rank},
                       {"witnesses", w}};
    auto c = submanifold::classify(built_.pi, *built_.chart, pts, sc_.tol.rank);
    j["classification"] = {{"regular", c.regular},
                           {"transversal", c.transversal},
                           {"poisson_submanifold", c.poisson_submanifold},
                           {"coisotropic", c.coisotropic},
                           {"pre_poisson", c.pre_poisson},
                           {"poisson_dirac", c.poisson_dirac},
                           {"perp_rank", {c.perp_rank.min, c.perp_rank.max}},
                           {"cap_rank", {c.cap_rank.min, c.cap_rank.max}},
                           {"sum_rank", {c.sum_rank.min, c.sum_rank.max}}};
    if (!reg.is_regular) {
      j["status"] = "prerequisite";
      fail_ = Failure{prerequisite_violation, "submanifold is not regular on the sampled set"};
      return j;
    }
    j["status"] = "pass";
    return j;
  }

  Json saturate() {
    Json j;
    if (!require_chart(j)) return j;
    auto& b = bundle();
    auto xis = choose_radius();
    auto sc = model::saturation_chart(b, grid_, xis, steps_);
    auto sat = model::verify_saturation_poisson(built_.pi, sc, sc_.tol.saturation);
    int r = b.fiber_dim(), k = b.base_dim(), n = b.ambient_dim();
    if (csv_rows_.empty()) {
      csv_header_ = header(k, r, n);
      for (const auto& s : sc.samples) {
        model::SaturationChart one;
        one.samples = {s};
        csv_rows_.push_back(row(s.u, s.xi, s.x, model::verify_saturation_poisson(built_.pi, one, 0).max_residual));
      }
    }
    auto zetas = random_directions(n, 4, radius_, sc_.seed);
    auto full = model::verify_full_fiber(b, thin(grid_, 3), zetas, steps_);
    bool immersed = sc.min_rank == sc.expected_rank && sc.max_rank == sc.expected_rank;
    j["fiber_dim"] = r;
    j["dim_p"] = sc.expected_rank;
    j["samples"] = static_cast<int>(sc.samples.size());
    j["rank"] = {{"min", sc.min_rank}, {"max", sc.max_rank}, {"expected", sc.expected_rank}, {"passed", immersed}};
    j["poisson_residual"] = {{"max", sat.max_residual}, {"passed", sat.passed}};
    j["full_fiber"] = {{"max_distance", full.max_distance}, {"samples", full.samples}, {"passed", full.passed}};
    bool pass = immersed && sat.passed && full.passed;
    j["status"] = status(pass);
    note(pass);
    return j;
  }

  Json model() {
    Json j;
    if (sc_.presymplectic) return model_presymplectic();
    if (!require_chart(j)) return j;
    auto& b = bundle();
    auto mode = sc_.mode;
    double worst_inv = 0, worst_tan = 0, worst_sigma = 0, worst_tau = 0, worst_eta = 0;
    for (const auto& u : grid_) {
      auto c = b.choice(u);
      worst_inv = std::max(worst_inv, c.invariance_residual);
      worst_tan = std::max(worst_tan, c.tangent_residual);
      auto st = model::sigma_tau(built_.pi, *built_.chart, u, c.j);
      worst_sigma = std::max(worst_sigma, st.sigma.max_abs());
      worst_tau = std::max(worst_tau, st.tau.max_abs());
    }
    for (const auto& u : thin(grid_, 5)) {
      auto eta = model::eta_canonical(b, u, Vector::Zero(b.fiber_dim()), steps_);
      auto expect = model::sigma_tau(b, u).restricted_eta();
      worst_eta = std::max(worst_eta, (eta - expect).max_abs());
    }
    Json comp = {{"mode", model::to_string(mode)}};
    bool comp_ok = true;
    if (mode == model::ComplementMode::coisotropic || mode == model::ComplementMode::pre_poisson) {
      comp["invariance_residual"] = worst_inv;
      comp["tangent_residual"] = worst_tan;
      comp_ok = worst_inv <= sc_.tol.mode && worst_tan <= sc_.tol.mode;
    }
    if (mode == model::ComplementMode::coisotropic) comp_ok = comp_ok && worst_sigma <= sc_.tol.mode;
    if (mode == model::ComplementMode::transversal) comp_ok = worst_tau <= sc_.tol.mode;
    comp["passed"] = comp_ok;
    j["complement"] = comp;
    j["sigma_max"] = worst_sigma;
    j["tau_max"] = worst_tau;
    bool eta_ok = worst_eta <= sc_.tol.eta;
    j["eta_zero_section"] = {{"max_error", worst_eta}, {"passed", eta_ok}};

    auto xis = choose_radius();
    double closed = 0;
    for (const auto& u : thin(grid_, 2))
      for (const auto& xi : thin(xis, 2)) closed = std::max(closed, model::eta_closedness(b, u, xi, steps_));
    bool closed_ok = closed <= sc_.tol.eta;
    j["eta_closedness"] = {{"max_residual", closed}, {"passed", closed_ok}};
    auto rad = model::model_radius(b, thin(grid_, 3), radius_, steps_, sc_.seed);
    j["model_radius"] = {{"radius", rad.radius}, {"probes", rad.probes}, {"halvings", rad.failures}};
    bool rad_ok = rad.radius > 0;
    bool marle_ok = true;
    if (mode == model::ComplementMode::pre_poisson) {
      auto m = model::marle_invariants(built_.pi, *built_.chart, built_.spec, grid_, sc_.tol.mode, sc_.tol.rank);
      marle_ok = m.passed;
      Json forms = Json::array();
      if (!m.samples.empty()) forms.push_back(to_json(m.samples.front().quotient_form));
      j["marle"] = {{"max_cross_term", m.max_cross_term}, {"quotient_form_at_first_sample", forms}, {"passed", m.passed}};
    }
    bool pass = comp_ok && eta_ok && closed_ok && rad_ok && marle_ok;
    j["status"] = status(pass);
    note(pass);
    return j;
  }

  Json verify() {
    Json j;
    if (sc_.presymplectic) {
      j["status"] = "skipped";
      return j;
    }
    if (!require_chart(j)) return j;
    auto& b = bundle();
    auto xis = choose_radius();
    auto nf = model::verify_normal_form(b, grid_, xis, steps_, nf_tol_);
    j["normal_form"] = {{"max_mismatch", nf.max_mismatch},
                        {"samples", static_cast<int>(nf.samples.size())},
                        {"tolerance", nf_tol_},
                        {"passed", nf.passed}};
    int n = b.ambient_dim();
    auto zetas = random_directions(n, 3, radius_, sc_.seed + 1);
    double prop1 = 0;
    bool ranks_ok = true;
    Json ranks = Json::array();
    for (const auto& u : thin(grid_, 3)) {
      for (const auto& z : zetas) {
        auto d = sprayflow::dual_pair_check(built_.pi, *built_.chart, u, z, steps_, sc_.tol.dual_pair, sc_.tol.rank);
        prop1 = std::max(prop1, d.property1);
        ranks_ok = ranks_ok && d.rank_s2 == d.expected_rank_s2 && d.rank_triple == d.expected_rank_triple;
        if (ranks.empty())
          ranks = {d.rank_s2, d.expected_rank_s2, d.rank_triple, d.expected_rank_triple};
      }
    }
    bool dual_ok = prop1 <= sc_.tol.dual_pair && ranks_ok;
    j["dual_pair"] = {{"property1", prop1},
                      {"rank_s2", ranks[0]},
                      {"expected_rank_s2", ranks[1]},
                      {"rank_triple", ranks[2]},
                      {"expected_rank_triple", ranks[3]},
                      {"passed", dual_ok}};
    double path = 0, dexp = 0;
    for (const auto& u : thin(grid_, 3)) {
      Vector x = built_.chart->point(u);
      for (const auto& z : zetas) path = std::max(path, sprayflow::cotangent_path_residual(built_.pi, {x, z}, steps_));
      auto f = sprayflow::flow(built_.pi, {x, Vector::Zero(n)}, 1.0, steps_);
      Matrix expect(n, 2 * n);
      expect << Matrix::Identity(n, n), built_.pi.matrix(x);
      dexp = std::max(dexp, (f.jac.topRows(n) - expect).cwiseAbs().maxCoeff());
    }
    bool path_ok = path <= 1e-8;
    j["cotangent_path"] = {{"max_residual", path}, {"passed", path_ok}};
    j["exp_differential_zero_section"] = {{"max_error", dexp}, {"passed", dexp <= 1e-10}};
    bool indep_ok = true;
    if (sc_.mode != model::ComplementMode::standard) {
      model::BundleChart base(built_.pi, *built_.chart, model::ComplementSpec{}, anchor_, sc_.tol.rank);
      double tol = std::max(1e-4, nf_tol_);
      auto rep = model::compare_models(base, b, thin(grid_, 3), thin(xis, 3), steps_, tol);
      indep_ok = rep.passed;
      j["independence"] = {{"max_difference", rep.max_difference},
                           {"max_inversion_distance", rep.max_inversion_distance},
                           {"samples", rep.samples},
                           {"passed", rep.passed}};
    }
    fill_csv(nf);
    bool pass = nf.passed && dual_ok && path_ok && dexp <= 1e-10 && indep_ok;
    j["status"] = status(pass);
    note(pass);
    return j;
  }

  const std::optional<Failure>& failure() const { return fail_; }
  bool any_failed() const { return verification_failed_; }
  const std::vector<std::string>& csv_header() const { return csv_header_; }
  const std::vector<std::vector<double>>& csv_rows() const { return csv_rows_; }

 private:
  Json analyze_presymplectic() {
    Json j;
    // d omega by the cyclic sum of derivatives of the matrix entries
    double worst = 0;
    for (const auto& u : grid_) {
      auto d = built_.pi.derivatives(u);
      int n = built_.pi.dim();
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          for (int c = b + 1; c < n; ++c)
            worst = std::max(worst, std::abs(d[a](b, c) + d[b](c, a) + d[c](a, b)));
    }
    bool closed = worst <= sc_.tol.jacobi;
    j["closedness"] = {{"max_residual", worst}, {"passed", closed}};
    if (!closed) {
      j["status"] = "prerequisite";
      fail_ = Failure{prerequisite_violation, "two-form is not closed on sampled points"};
      return j;
    }
    model::GotayModel g(model::presymplectic_dirac(built_.pi), built_.pi.dim(), anchor_, sc_.tol.rank);
    bool constant = true;
    try {
      for (const auto& u : grid_) g.kernel(u);
    } catch (const RankDefect&) {
      constant = false;
    }
    j["kernel"] = {{"rank", g.fiber_dim()}, {"constant_on_sampled_set", constant}};
    if (!constant) {
      j["status"] = "prerequisite";
      fail_ = Failure{prerequisite_violation, "kernel of the two-form changes rank"};
      return j;
    }
    j["status"] = "pass";
    return j;
  }

  Json model_presymplectic() {
    Json j;
    model::GotayModel g(model::presymplectic_dirac(built_.pi), built_.pi.dim(), anchor_, sc_.tol.rank);
    auto xis = fiber_points(g.fiber_dim(), radius_, sc_.xi_grid);
    auto rep = model::verify_gotay(g, grid_, xis, sc_.tol.jacobi, sc_.tol.jacobi);
    j["gotay"] = {{"fiber_dim", rep.fiber_dim},
                  {"total_dim", g.base_dim() + g.fiber_dim()},
                  {"constant_rank", rep.constant_rank},
                  {"jacobi_residual", rep.jacobi_residual},
                  {"coisotropy_residual", rep.coisotropy_residual},
                  {"pullback_angle", rep.pullback_angle},
                  {"passed", rep.passed}};
    j["status"] = status(rep.passed);
    note(rep.passed);
    return j;
  }

  bool require_chart(Json& j) {
    if (built_.chart) return true;
    j["status"] = "skipped";
    j["reason"] = "scene has no submanifold";
    return false;
  }

  model::BundleChart& bundle() {
    if (!bundle_) bundle_.emplace(built_.pi, *built_.chart, built_.spec, anchor_, sc_.tol.rank);
    return *bundle_;
  }

  // Halve the fiber radius until every sampled flow stays in the domain.
  std::vector<Vector> choose_radius() {
    auto& b = bundle();
    if (radius_chosen_) return fiber_points(b.fiber_dim(), radius_, sc_.xi_grid);
    for (int h = 0; h <= kMaxHalvings; ++h) {
      auto xis = fiber_points(b.fiber_dim(), radius_, sc_.xi_grid);
      bool ok = true;
      try {
        for (const auto& u : grid_)
          for (const auto& xi : xis)
            if (sprayflow::flow(built_.pi, b.state(u, xi), 1.0, steps_).left_domain) ok = false;
      } catch (const FlowError&) {
        ok = false;
      }
      if (ok) {
        radius_chosen_ = true;
        return xis;
      }
      radius_ *= 0.5;
    }
    throw FlowError("flows leave the domain for every fiber radius tried");
  }

  void note(bool pass) {
    if (!pass) verification_failed_ = true;
  }

  static std::vector<std::string> header(int k, int r, int n) {
    std::vector<std::string> h;
    for (int i = 0; i < k; ++i) h.push_back("u" + std::to_string(i + 1));
    for (int i = 0; i < r; ++i) h.push_back("xi" + std::to_string(i + 1));
    for (int i = 0; i < n; ++i) h.push_back("x" + std::to_string(i + 1));
    h.push_back("residual");
    return h;
  }

  static std::vector<double> row(const Vector& u, const Vector& xi, const Vector& x, double residual) {
    std::vector<double> out(u.data(), u.data() + u.size());
    out.insert(out.end(), xi.data(), xi.data() + xi.size());
    out.insert(out.end(), x.data(), x.data() + x.size());
    out.push_back(residual);
    return out;
  }

  // Normal-form mismatches replace the saturation residuals when available.
  void fill_csv(const model::NormalFormReport& nf) {
    auto& b = bundle();
    csv_header_ = header(b.base_dim(), b.fiber_dim(), b.ambient_dim());
    csv_rows_.clear();
    for (const auto& s : nf.samples) csv_rows_.push_back(row(s.u, s.xi, s.x, s.mismatch));
  }

  const scene::Scene& sc_;
  scene::Built built_;
  int steps_ = 1024;
  double nf_tol_ = 1e-5;
  double radius_ = 0.2;
  bool radius_chosen_ = false;
  std::vector<Vector> grid_;
  Vector anchor_;
  std::optional<model::BundleChart> bundle_;
  std::optional<Failure> fail_;
  bool verification_failed_ = false;
  std::vector<std::string> csv_header_;
  std::vector<std::vector<double>> csv_rows_;

 public:
  Json params_json() const { return parameters(); }
};

const char* command_name(Command c) {
  switch (c) {
    case Command::analyze: return "analyze";
    case Command::saturate: return "saturate";
    case Command::model: return "model";
    case Command::verify: return "verify";
    case Command::all: return "all";
  }
  return "all";
}

}  // namespace

std::optional<Command> command_from_string(const std::string& name) {
  for (auto c : {Command::analyze, Command::saturate, Command::model, Command::verify, Command::all})
    if (name == command_name(c)) return c;
  return std::nullopt;
}

Outcome run_scene(const scene::Scene& sc, Command command, const RunOptions& options) {
  Outcome out;
  Json& r = out.report;
  r["schema"] = 1;
  r["convention"] = kConvention;
  r["command"] = command_name(command);
  r["scene"] = {{"kind", sc.presymplectic ? "presymplectic" : "poisson"},
                {"dim", sc.dim},
                {"param_dim", sc.has_submanifold ? sc.param_domain.dim() : 0},
                {"mode", model::to_string(sc.mode)}};
  Json stages = Json::object();
  std::optional<Failure> failure;
  std::optional<Pipeline> p;
  auto stage = [&](const char* name, auto fn) {
    if (failure) return;
    try {
      stages[name] = fn();
      if (p->failure()) failure = p->failure();
    } catch (const PrerequisiteError& e) {
      failure = Failure{prerequisite_violation, e.what()};
    } catch (const RankDefect& e) {
      failure = Failure{prerequisite_violation, e.what()};
    } catch (const Error& e) {
      failure = Failure{numeric_failure, e.what()};
    }
    if (failure && !stages.contains(name)) stages[name] = {{"status", "error"}, {"message", failure->message}};
  };
  try {
    p.emplace(sc, options);
  } catch (const SceneError& e) {
    failure = Failure{numeric_failure, e.what()};
    r["line"] = e.line();
  } catch (const Error& e) {
    failure = Failure{numeric_failure, e.what()};
  }
  bool s = command == Command::saturate || command == Command::all;
  bool m = command == Command::model || command == Command::all;
  bool v = command == Command::verify || command == Command::all;
  if (p) {
    stage("analyze", [&] { return p->analyze(); });
    if (s) stage("saturate", [&] { return p->saturate(); });
    if (m) stage("model", [&] { return p->model(); });
    if (v) stage("verify", [&] { return p->verify(); });
    r["parameters"] = p->params_json();
  }
  r["stages"] = stages;
  if (failure) {
    out.exit_code = failure->code;
    r["status"] = failure->code == prerequisite_violation ? "prerequisite_violation" : "numeric_failure";
    r["error"] = failure->message;
  } else if (p->any_failed()) {
    out.exit_code = verification_failure;
    r["status"] = "verification_failure";
  } else {
    out.exit_code = ok;
    r["status"] = "pass";
  }
  r["exit_code"] = out.exit_code;
  if (p) {
    out.csv_header = p->csv_header();
    out.csv_rows = p->csv_rows();
  }
  return out;
}

std::string csv_text(const Outcome& o) {
  std::ostringstream s;
  s.precision(17);
  for (std::size_t i = 0; i < o.csv_header.size(); ++i) s << (i ? "," : "") << o.csv_header[i];
  s << "\n";
  for (const auto& row : o.csv_rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << row[i];
    s << "\n";
  }
  return s.str();
}

}  // namespace poisat::cli
