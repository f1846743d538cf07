#include "poisat/scene.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "poisat/errors.hpp"

namespace poisat::scene {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Strip a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (!quoted && s[i] == '#') return s.substr(0, i);
  }
  return s;
}

std::vector<std::string> tokens(const std::string& value, int line) {
  std::istringstream in(value);
  std::vector<std::string> out;
  std::string t;
  while (in >> std::ws && !in.eof()) {
    if (in.peek() == '"') {
      if (!(in >> std::quoted(t))) throw SceneError("unterminated string", line);
      if (in.fail()) throw SceneError("unterminated string", line);
    } else {
      in >> t;
    }
    out.push_back(t);
  }
  if (std::count(value.begin(), value.end(), '"') % 2) throw SceneError("unterminated string", line);
  return out;
}

double to_double(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SceneError("expected a number, got '" + s + "'", line);
  }
}

long long to_int(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SceneError("expected an integer, got '" + s + "'", line);
  }
}

void expect_count(const std::vector<std::string>& t, std::size_t n, const std::string& key, int line) {
  if (t.size() != n) throw SceneError("'" + key + "' expects " + std::to_string(n) + " value(s)", line);
}

Box parse_box(const std::vector<std::string>& t, int line) {
  if (t.size() % 2) throw SceneError("domain needs lower/upper pairs", line);
  int k = static_cast<int>(t.size() / 2);
  Vector lo(k), hi(k);
  for (int i = 0; i < k; ++i) {
    lo[i] = to_double(t[2 * i], line);
    hi[i] = to_double(t[2 * i + 1], line);
    if (!(lo[i] <= hi[i])) throw SceneError("domain lower bound exceeds upper bound", line);
  }
  return Box(lo, hi);
}

// Split "(a, b, c)" at top-level commas.
std::vector<std::string> split_tuple(const std::string& s, int line) {
  std::string body = trim(s);
  if (body.size() < 2 || body.front() != '(' || body.back() != ')') throw SceneError("malformed tuple", line);
  body = body.substr(1, body.size() - 2);
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : body) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::vector<Located> located(const std::vector<std::string>& t, int line) {
  std::vector<Located> out;
  for (const auto& s : t) out.push_back({s, line});
  return out;
}

std::string fmt(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

std::string quote(const std::string& s) {
  std::ostringstream o;
  o << std::quoted(s);
  return o.str();
}

std::string box_text(const Box& b) {
  std::string out;
  for (int i = 0; i < b.dim(); ++i) out += (i ? " " : "") + fmt(b.lower[i]) + " " + fmt(b.upper[i]);
  return out;
}

expr::Expression compile(const Located& l, const expr::Variables& vars) {
  try {
    return expr::parse(l.text, vars);
  } catch (const ParseError& e) {
    throw SceneError(std::string("in \"") + l.text + "\": " + e.what(), l.line);
  }
}

}  // namespace

Scene parse_scene(std::string_view text) {
  Scene sc;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  bool seen_field = false;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw SceneError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      static const std::vector<std::string> known = {"poisson", "presymplectic", "submanifold", "flow",
                                                     "complement", "model", "tolerances", "run"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        throw SceneError("unknown section [" + section + "]", line);
      if (section == "poisson" || section == "presymplectic") {
        if (seen_field) throw SceneError("only one of [poisson] and [presymplectic] may appear", line);
        seen_field = true;
        sc.presymplectic = section == "presymplectic";
      }
      if (section == "submanifold") sc.has_submanifold = true;
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw SceneError("expected 'key = value'", line);
    std::string key = trim(s.substr(0, eq));
    auto t = tokens(s.substr(eq + 1), line);
    if (section.empty()) throw SceneError("key outside of a section", line);
    auto unknown = [&] { throw SceneError("unknown key '" + key + "' in [" + section + "]", line); };

    if (section == "poisson" || section == "presymplectic") {
      if (key == "dim") {
        expect_count(t, 1, key, line);
        sc.dim = static_cast<int>(to_int(t[0], line));
        if (sc.dim <= 0) throw SceneError("dim must be positive", line);
      } else if (key == "entry") {
        expect_count(t, 3, key, line);
        EntryText e{static_cast<int>(to_int(t[0], line)), static_cast<int>(to_int(t[1], line)), {t[2], line}};
        if (e.i < 1 || e.j < 1 || e.i > sc.dim || e.j > sc.dim || e.i == e.j)
          throw SceneError("entry indices must be distinct and within 1..dim", line);
        for (const auto& o : sc.entries)
          if (std::minmax(o.i, o.j) == std::minmax(e.i, e.j)) throw SceneError("entry given twice", line);
        sc.entries.push_back(e);
      } else if (key == "domain") {
        sc.domain = parse_box(t, line);
      } else if (key == "grid" && sc.presymplectic) {
        sc.grid.clear();
        for (auto& v : t) sc.grid.push_back(static_cast<int>(to_int(v, line)));
      } else {
        unknown();
      }
    } else if (section == "submanifold") {
      if (key == "params") {
        sc.params = t;
      } else if (key == "map") {
        if (t.size() == 1 && trim(t[0]).starts_with("(")) sc.map = located(split_tuple(t[0], line), line);
        else sc.map = located(t, line);
      } else if (key == "domain") {
        sc.param_domain = parse_box(t, line);
      } else if (key == "grid") {
        sc.grid.clear();
        for (auto& v : t) sc.grid.push_back(static_cast<int>(to_int(v, line)));
      } else {
        unknown();
      }
    } else if (section == "flow") {
      expect_count(t, 1, key, line);
      if (key == "steps") sc.steps = static_cast<int>(to_int(t[0], line));
      else if (key == "xi_radius") sc.xi_radius = to_double(t[0], line);
      else unknown();
    } else if (section == "complement") {
      if (key == "mode") {
        expect_count(t, 1, key, line);
        try {
          sc.mode = model::complement_mode_from_string(t[0]);
        } catch (const Error& e) {
          throw SceneError(e.what(), line);
        }
      } else if (key == "g" || key == "h" || key == "w") {
        auto& f = key == "g" ? sc.g : key == "h" ? sc.h : sc.w;
        if (t.size() == 1 && trim(t[0]).starts_with("(")) f.push_back(located(split_tuple(t[0], line), line));
        else f.push_back(located(t, line));
      } else {
        unknown();
      }
    } else if (section == "model") {
      expect_count(t, 1, key, line);
      if (key == "xi_grid") sc.xi_grid = static_cast<int>(to_int(t[0], line));
      else if (key == "normal_form_tol") sc.normal_form_tol = to_double(t[0], line);
      else unknown();
    } else if (section == "tolerances") {
      expect_count(t, 1, key, line);
      static const std::map<std::string, double Tolerances::*> keys = {
          {"rank", &Tolerances::rank},           {"jacobi", &Tolerances::jacobi},
          {"saturation", &Tolerances::saturation}, {"dual_pair", &Tolerances::dual_pair},
          {"mode", &Tolerances::mode},           {"eta", &Tolerances::eta}};
      auto it = keys.find(key);
      if (it == keys.end()) unknown();
      double v = to_double(t[0], line);
      if (!(v > 0)) throw SceneError("tolerances must be positive", line);
      sc.tol.*(it->second) = v;
    } else if (section == "run") {
      expect_count(t, 1, key, line);
      if (key == "seed") sc.seed = static_cast<std::uint64_t>(to_int(t[0], line));
      else if (key == "refine") sc.refine = static_cast<int>(to_int(t[0], line));
      else if (key == "jacobi_samples") sc.jacobi_samples = static_cast<int>(to_int(t[0], line));
      else unknown();
    }
  }

  if (!seen_field) throw SceneError("missing [poisson] or [presymplectic] section", 0);
  if (sc.dim <= 0) throw SceneError("missing dim", 0);
  if (sc.steps < sprayflow::kMinSteps || sc.steps % 2) throw SceneError("flow steps must be even and at least 16", 0);
  if (!(sc.xi_radius > 0) || !(sc.normal_form_tol > 0)) throw SceneError("radii and tolerances must be positive", 0);
  if (sc.xi_grid < 1) throw SceneError("xi_grid must be at least 1", 0);
  if (sc.presymplectic) {
    if (!sc.domain) throw SceneError("[presymplectic] needs a domain", 0);
    if (sc.domain->dim() != sc.dim) throw SceneError("domain dimension differs from dim", 0);
    if (sc.grid.empty()) sc.grid.assign(sc.dim, 3);
    if (static_cast<int>(sc.grid.size()) != sc.dim) throw SceneError("grid needs one count per coordinate", 0);
  } else {
    if (sc.domain && sc.domain->dim() != sc.dim) throw SceneError("domain dimension differs from dim", 0);
    if (sc.has_submanifold) {
      int k = sc.param_domain.dim();
      if (k == 0 && !sc.params.empty()) throw SceneError("submanifold needs a parameter domain", 0);
      if (!sc.params.empty() && static_cast<int>(sc.params.size()) != k)
        throw SceneError("params and domain disagree on the parameter count", 0);
      if (static_cast<int>(sc.map.size()) != sc.dim) throw SceneError("map needs one expression per ambient coordinate", 0);
      if (sc.grid.empty()) sc.grid.assign(k, 5);
      if (static_cast<int>(sc.grid.size()) != k) throw SceneError("grid needs one count per parameter", 0);
    }
  }
  for (int c : sc.grid)
    if (c < 1) throw SceneError("grid counts must be positive", 0);
  return sc;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scene file '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scene(ss.str());
}

std::string write_scene(const Scene& sc) {
  std::ostringstream o;
  o << (sc.presymplectic ? "[presymplectic]\n" : "[poisson]\n");
  o << "dim = " << sc.dim << "\n";
  for (const auto& e : sc.entries) o << "entry = " << e.i << " " << e.j << " " << quote(e.value.text) << "\n";
  if (sc.domain) o << "domain = " << box_text(*sc.domain) << "\n";
  if (sc.presymplectic) {
    o << "grid =";
    for (int c : sc.grid) o << " " << c;
    o << "\n";
  }
  if (sc.has_submanifold) {
    o << "\n[submanifold]\n";
    if (!sc.params.empty()) {
      o << "params =";
      for (const auto& p : sc.params) o << " " << p;
      o << "\n";
    }
    o << "map =";
    for (const auto& m : sc.map) o << " " << quote(m.text);
    o << "\ndomain = " << box_text(sc.param_domain) << "\ngrid =";
    for (int c : sc.grid) o << " " << c;
    o << "\n";
  }
  o << "\n[flow]\nsteps = " << sc.steps << "\nxi_radius = " << fmt(sc.xi_radius) << "\n";
  o << "\n[complement]\nmode = " << model::to_string(sc.mode) << "\n";
  for (const auto* f : {&sc.g, &sc.h, &sc.w}) {
    const char* name = f == &sc.g ? "g" : f == &sc.h ? "h" : "w";
    for (const auto& v : *f) {
      o << name << " =";
      for (const auto& c : v) o << " " << quote(c.text);
      o << "\n";
    }
  }
  o << "\n[model]\nxi_grid = " << sc.xi_grid << "\nnormal_form_tol = " << fmt(sc.normal_form_tol) << "\n";
  o << "\n[tolerances]\nrank = " << fmt(sc.tol.rank) << "\njacobi = " << fmt(sc.tol.jacobi)
    << "\nsaturation = " << fmt(sc.tol.saturation) << "\ndual_pair = " << fmt(sc.tol.dual_pair)
    << "\nmode = " << fmt(sc.tol.mode) << "\neta = " << fmt(sc.tol.eta) << "\n";
  o << "\n[run]\nseed = " << sc.seed << "\nrefine = " << sc.refine << "\njacobi_samples = " << sc.jacobi_samples
    << "\n";
  return o.str();
}

Built build(const Scene& sc) {
  Built b;
  auto ambient = expr::Variables::ambient(sc.dim);
  std::vector<field::Entry> entries;
  for (const auto& e : sc.entries) entries.push_back({e.i - 1, e.j - 1, compile(e.value, ambient)});
  try {
    b.pi = field::BivectorField(sc.dim, entries, sc.domain.value_or(Box{}));
  } catch (const SceneError&) {
    throw;
  } catch (const Error& e) {
    throw SceneError(e.what(), sc.entries.empty() ? 0 : sc.entries.front().value.line);
  }
  b.spec.mode = sc.mode;
  if (sc.presymplectic || !sc.has_submanifold) return b;

  int k = sc.param_domain.dim();
  auto vars = expr::Variables::parameters(k, sc.params);
  std::vector<expr::Expression> comps;
  for (const auto& m : sc.map) comps.push_back(compile(m, vars));
  b.chart = submanifold::Chart(sc.dim, comps, sc.param_domain, sc.params);
  auto frame = [&](const std::vector<std::vector<Located>>& f) -> std::optional<model::Frame> {
    if (f.empty()) return std::nullopt;
    model::Frame out;
    for (const auto& v : f) {
      if (static_cast<int>(v.size()) != sc.dim)
        throw SceneError("frame vector needs one expression per ambient coordinate", v.empty() ? 0 : v[0].line);
      std::vector<expr::Expression> col;
      for (const auto& c : v) col.push_back(compile(c, vars));
      out.push_back(col);
    }
    return out;
  };
  b.spec.g = frame(sc.g);
  b.spec.h = frame(sc.h);
  b.spec.w = frame(sc.w);
  return b;
}

}  // namespace poisat::scene
