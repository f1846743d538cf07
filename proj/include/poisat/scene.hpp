#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "poisat/field.hpp"
#include "poisat/model.hpp"
#include "poisat/submanifold.hpp"

namespace poisat::scene {

// Source text with the line it came from, for error reporting.
struct Located {
  std::string text;
  int line = 0;
};

struct EntryText {
  int i = 0;  // 1-based as written
  int j = 0;
  Located value;
};

struct Tolerances {
  double rank = 1e-8;
  double jacobi = 1e-10;
  double saturation = 1e-8;
  double dual_pair = 1e-8;
  double mode = 1e-10;
  double eta = 1e-6;
};

struct Scene {
  // [poisson], or [presymplectic] for a two-form on a parameter space
  bool presymplectic = false;
  int dim = 0;
  std::vector<EntryText> entries;
  std::optional<Box> domain;

  // [submanifold]
  bool has_submanifold = false;
  std::vector<std::string> params;
  std::vector<Located> map;
  Box param_domain;
  std::vector<int> grid;

  // [flow]
  int steps = 1024;
  double xi_radius = 0.2;

  // [complement]
  model::ComplementMode mode = model::ComplementMode::standard;
  std::vector<std::vector<Located>> g, h, w;

  // [model]
  int xi_grid = 3;  // points per fiber axis
  double normal_form_tol = 1e-5;

  Tolerances tol;

  // [run]
  std::uint64_t seed = 0;
  int refine = 10;
  int jacobi_samples = 1000;
};

Scene parse_scene(std::string_view text);
Scene load_scene(const std::filesystem::path& path);
std::string write_scene(const Scene& scene);

// Scene with expressions compiled. For presymplectic scenes `pi` holds the
// two-form matrix field on the parameter space and `chart` is empty.
struct Built {
  field::BivectorField pi;
  std::optional<submanifold::Chart> chart;
  model::ComplementSpec spec;
};

Built build(const Scene& scene);

}  // namespace poisat::scene
