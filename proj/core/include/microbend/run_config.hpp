#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "microbend/materials.hpp"
#include "microbend/minimize.hpp"
#include "microbend/plate.hpp"
#include "microbend/toml.hpp"

namespace microbend {

enum class CoefficientMode { Cell, Analytic };

struct RunConfig {
  // [run]
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;

  // [material]
  std::string material_kind = "homogeneous";
  materials::MaterialSpec material;

  // [cell]
  double gamma = 1.0;
  std::array<int, 3> divisions = {8, 8, 8};
  Vec2 macro_point = Vec2::Zero();  // sample point s for the cell command
  bool export_correctors = false;
  std::vector<int> h_levels = {4, 8, 16};  // divisions per level

  // [plate]
  double width = 1.0;
  double height = 1.0;
  int nx = 8;
  int ny = 8;
  std::string mesh_file;  // optional import; overrides the rectangle
  std::vector<int> H_levels = {4, 8, 16};  // nx per level

  // [bc]
  std::vector<plate::Side> clamp_sides;
  bool clamp_all = false;
  bool clamped() const { return clamp_all || !clamp_sides.empty(); }
  double ud_angle_deg = 0.0;  // in-plane rotation of u_D
  Vec3 ud_offset = Vec3::Zero();

  // [solver]
  minimize::SolveConfig solver;
  minimize::SeedSpec seed_spec;

  // [energy]
  CoefficientMode coeff_mode = CoefficientMode::Cell;
  Mat2 analytic_beff = Mat2::Zero();
  bool report_offset = true;

  // [converge]
  std::string converge_mode = "micro";

  // [check]
  bool check_break_quadrature = false;  // negative-control fixture

  // Sampled value of H * max_T |L|_W1inf (1 + |B|_W1inf), reported as a
  // validation warning proxy (the hypothesis cannot be proven by sampling).
  double w1inf_hypothesis(double H) const;

  void validate() const;

  plate::Triangulation build_plate_mesh() const;
  plate::Triangulation build_plate_mesh(int level_nx) const;
  plate::DirichletData dirichlet(const plate::Triangulation& mesh) const;
};

RunConfig parse_run_config(const toml::Table& table);
RunConfig load_run_config(const std::filesystem::path& path);
materials::MaterialSpec material_from_config(const toml::Table& t);

}  // namespace microbend
