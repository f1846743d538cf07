#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "poisat/cli.hpp"
#include "poisat/errors.hpp"
#include "poisat/fixtures.hpp"

namespace poisat::cli {

namespace {

int fixtures_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.size() == 1 && args[0] == "list") {
    for (const auto& n : fixtures::names()) out << n << "\n";
    return ok;
  }
  if (args.size() == 2 && args[0] == "emit") {
    try {
      out << fixtures::text(args[1]);
      return ok;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return usage;
    }
  }
  err << "usage: poisat fixtures list | poisat fixtures emit NAME\n";
  return usage;
}

bool write_file(const std::filesystem::path& path, const std::string& text, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) {
    err << "error: cannot write '" << path.string() << "'\n";
    return false;
  }
  return true;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local Poisson saturations and normal forms around submanifolds", "poisat"};
  std::string command;
  std::vector<std::string> args;
  std::optional<int> steps;
  std::optional<double> tol;
  std::string out_dir;
  bool csv = false;
  app.add_option("command", command, "analyze | saturate | model | verify | all | fixtures")->required();
  app.add_option("args", args, "scene file, or fixtures arguments");
  app.add_option("--steps", steps, "RK4 steps per unit time (even, at least 16)");
  app.add_option("--tol", tol, "normal-form tolerance");
  app.add_option("--out", out_dir, "directory for report.json and points.csv");
  app.add_flag("--csv", csv, "write points.csv (to --out, or the working directory)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return usage;
  }

  if (command == "fixtures") return fixtures_command(args, out, err);
  auto cmd = command_from_string(command);
  if (!cmd || args.size() != 1) {
    err << "usage: poisat <analyze|saturate|model|verify|all> <scene> [--steps N] [--tol T] [--out DIR] [--csv]\n";
    return usage;
  }
  if (!std::filesystem::exists(args[0])) {
    err << "error: scene file '" << args[0] << "' not found\n";
    return usage;
  }

  Outcome o;
  try {
    o = run_scene(scene::load_scene(args[0]), *cmd, RunOptions{steps, tol});
  } catch (const SceneError& e) {
    o.exit_code = numeric_failure;
    o.report = {{"schema", 1}, {"command", command}, {"status", "parse_error"}, {"error", e.what()},
                {"line", e.line()}, {"exit_code", numeric_failure}};
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  }

  std::string text = o.report.dump(2) + "\n";
  out << text;
  if (o.report.contains("error")) err << "error: " << o.report["error"].get<std::string>() << "\n";
  std::filesystem::path dir = out_dir.empty() ? std::filesystem::current_path() : std::filesystem::path(out_dir);
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!write_file(dir / "report.json", text, err)) return usage;
  }
  if (csv && !write_file(dir / "points.csv", csv_text(o), err)) return usage;
  return o.exit_code;
}

}  // namespace poisat::cli
