#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "poisat/cli.hpp"
#include "poisat/errors.hpp"
#include "poisat/fixtures.hpp"
#include "poisat/scene.hpp"

using namespace poisat;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "poisat");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("poisat_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::string read(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("fixture catalog") {
  auto r = invoke({"fixtures", "list"});
  CHECK(r.code == 0);
  CHECK(r.out ==
        "so3-plane\nlogsympl-axis\ncubic-graph\nfigure-eight\ncoiso-line\ntransversal-ray\nsympl-plane\n"
        "zero-structure\ngotay-presymplectic\n");
  for (const auto& n : fixtures::names()) {
    auto a = invoke({"fixtures", "emit", n}), b = invoke({"fixtures", "emit", n});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == fixtures::text(n));
  }
  auto so3 = fixtures::text("so3-plane");
  CHECK(so3.find("entry = 1 2 \"z\"") != std::string::npos);
  CHECK(so3.find("entry = 2 3 \"x\"") != std::string::npos);
  CHECK(so3.find("entry = 3 1 \"y\"") != std::string::npos);
  CHECK(fixtures::text("figure-eight").find("\"(sin(2*t), sin(t), t, th)\"") != std::string::npos);
  CHECK(invoke({"fixtures", "emit", "nope"}).code == 1);
  CHECK(invoke({"fixtures"}).code == 1);
}

TEST_CASE("every fixture parses and round-trips") {
  for (const auto& n : fixtures::names()) {
    CAPTURE(n);
    auto sc = scene::parse_scene(fixtures::text(n));
    auto text = scene::write_scene(sc);
    auto again = scene::parse_scene(text);
    CHECK(scene::write_scene(again) == text);
    auto b = scene::build(sc);
    CHECK(b.pi.dim() == sc.dim);
    CHECK(b.chart.has_value() == sc.has_submanifold);
  }
  auto fe = scene::parse_scene(fixtures::text("figure-eight"));
  REQUIRE(fe.map.size() == 4);
  CHECK(fe.map[0].text == "sin(2*t)");
  CHECK(fe.params == std::vector<std::string>{"t", "th"});
  auto b = scene::build(fe);
  Vector u(2);
  u << 0.5, 1.0;
  CHECK(b.chart->point(u)[0] == doctest::Approx(std::sin(1.0)));
  CHECK(b.pi.matrix(u.head(2).replicate(2, 1))(2, 3) == 1.0);
}

TEST_CASE("scene errors carry line numbers") {
  auto fails_at = [](const std::string& text, int line) {
    try {
      auto sc = scene::parse_scene(text);
      scene::build(sc);
    } catch (const SceneError& e) {
      CHECK(e.line() == line);
      return;
    }
    FAIL("no SceneError");
  };
  fails_at("[poisson]\ndim = 3\nentry = 1 2 \"z +* x\"\n", 3);
  fails_at("[poisson]\ndim = 3\n\nentry = 1 4 \"z\"\n", 4);
  fails_at("[poisson]\ndim = 3\nentry = 1 2 \"z\"\nentry = 2 1 \"x\"\n", 4);
  fails_at("[poisson]\ndim = x\n", 2);
  fails_at("[poison]\n", 1);
  fails_at("[poisson]\ndim = 2\nfoo = 1\n", 3);
  fails_at("[poisson]\ndim = 2\n[submanifold]\nmap = \"u\" \"q\"\ndomain = -1 1\n", 4);
  fails_at("[poisson]\ndim = 2\n[complement]\nmode = sideways\n", 4);
  fails_at("[poisson]\ndim = 2\nentry = 1 2 \"x\n", 3);
  CHECK_THROWS_AS(scene::parse_scene("# nothing\n"), SceneError);
  CHECK_THROWS_AS(scene::parse_scene("[poisson]\ndim = 2\n[flow]\nsteps = 15\n"), SceneError);
  // comments and quoted '#'
  auto sc = scene::parse_scene("[poisson] # heading\ndim = 2 # two\nentry = 1 2 \"x\" # log\n");
  CHECK(sc.entries.size() == 1);
}

TEST_CASE("exit codes of the fixture matrix") {
  auto dir = temp_dir("matrix");
  std::map<std::string, int> expected = {{"so3-plane", 3},     {"logsympl-axis", 3},   {"cubic-graph", 3},
                                         {"figure-eight", 0},  {"coiso-line", 0},      {"transversal-ray", 0},
                                         {"sympl-plane", 0},   {"zero-structure", 0},  {"gotay-presymplectic", 0}};
  for (const auto& [name, code] : expected) {
    CAPTURE(name);
    auto path = write(dir, name + ".scene", fixtures::text(name));
    auto cmd = code == 3 ? "analyze" : "all";
    auto r = invoke({cmd, path.string(), "--steps", "256"});
    CHECK(r.code == code);
    auto j = cli::Json::parse(r.out);
    CHECK(j["schema"] == 1);
    CHECK(j["exit_code"] == code);
  }
}

TEST_CASE("non-regular plane reports a witness at the origin") {
  auto dir = temp_dir("plane");
  auto path = write(dir, "plane.scene", fixtures::text("so3-plane"));
  auto r = invoke({"analyze", path.string()});
  CHECK(r.code == 3);
  auto j = cli::Json::parse(r.out);
  CHECK(j["stages"]["analyze"]["regularity"]["regular_on_sampled_set"] == false);
  auto w = j["stages"]["analyze"]["regularity"]["witnesses"]["0"];
  REQUIRE(w.size() >= 1);
  CHECK(w[0][0] == 0.0);
  CHECK(w[0][1] == 0.0);
}

TEST_CASE("coisotropic line passes end to end, deterministically, with outputs") {
  auto dir = temp_dir("line");
  auto path = write(dir, "line.scene", fixtures::text("coiso-line"));
  auto out = dir / "out";
  auto r = invoke({"all", path.string(), "--out", out.string(), "--csv"});
  CHECK(r.code == 0);
  auto again = invoke({"all", path.string()});
  CHECK(again.out == r.out);
  CHECK(read(out / "report.json") == r.out);
  auto csv = read(out / "points.csv");
  CHECK(csv.rfind("u1,xi1,x1,x2,x3,residual\n", 0) == 0);
  auto j = cli::Json::parse(r.out);
  CHECK(j["status"] == "pass");
  CHECK(j["stages"]["verify"]["normal_form"]["max_mismatch"].get<double>() <= 1e-5);
  CHECK(j["parameters"]["xi_radius"] == 0.2);
}

TEST_CASE("failure exit codes") {
  auto dir = temp_dir("fail");
  CHECK(invoke({"all", (dir / "missing.scene").string()}).code == 1);
  CHECK(invoke({"frobnicate", "x"}).code == 1);
  CHECK(invoke({}).code == 1);

  auto bad = write(dir, "bad.scene", "[poisson]\ndim = 3\nentry = 1 2 \"z +* x\"\n");
  auto r = invoke({"analyze", bad.string()});
  CHECK(r.code == 4);
  CHECK(r.out.find("position") != std::string::npos);
  CHECK(cli::Json::parse(r.out)["line"] == 3);

  auto notpoisson = write(dir, "np.scene",
                          "[poisson]\ndim = 3\nentry = 1 2 \"x\"\nentry = 2 3 \"x\"\nentry = 3 1 \"y\"\n"
                          "domain = -1 1 -1 1 -1 1\n");
  CHECK(invoke({"analyze", notpoisson.string()}).code == 3);

  auto sing = write(dir, "sing.scene",
                    "[poisson]\ndim = 2\nentry = 1 2 \"1/x\"\n[submanifold]\nmap = \"u\" \"0\"\ndomain = -1 1\n"
                    "grid = 3\n[run]\njacobi_samples = 10\n");
  CHECK(invoke({"analyze", sing.string()}).code == 4);

  // tolerance override makes a passing scene fail verification
  auto line = write(dir, "ray.scene", fixtures::text("transversal-ray"));
  CHECK(invoke({"verify", line.string(), "--tol", "1e-30", "--steps", "64"}).code == 2);
  CHECK(invoke({"verify", line.string(), "--steps", "15"}).code == 4);
}

TEST_CASE("radius halving on domain exit") {
  scene::Scene sc = scene::parse_scene(
      "[poisson]\ndim = 3\nentry = 1 2 \"1\"\ndomain = -1.1 1.1 -0.5 0.5 -1 1\n[submanifold]\nmap = \"u\" \"0\" \"0\"\n"
      "domain = -1 1\ngrid = 3\n[flow]\nsteps = 64\nxi_radius = 2\n[run]\njacobi_samples = 10\n");
  auto o = cli::run_scene(sc, cli::Command::saturate);
  CHECK(o.exit_code == 0);
  CHECK(o.report["parameters"]["xi_radius"].get<double>() == 0.5);
}
