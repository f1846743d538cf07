#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poisat/scene.hpp"

namespace poisat::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { ok = 0, usage = 1, verification_failure = 2, prerequisite_violation = 3, numeric_failure = 4 };

enum class Command { analyze, saturate, model, verify, all };
std::optional<Command> command_from_string(const std::string& name);

struct RunOptions {
  std::optional<int> steps;
  std::optional<double> tol;  // overrides the normal-form tolerance
};

struct Outcome {
  int exit_code = ok;
  Json report;
  std::vector<std::string> csv_header;
  std::vector<std::vector<double>> csv_rows;
};

Outcome run_scene(const scene::Scene& scene, Command command, const RunOptions& options = {});

std::string csv_text(const Outcome& outcome);

// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace poisat::cli
