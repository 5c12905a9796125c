#include "microbend/run_config.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "microbend/io.hpp"

namespace microbend {

using materials::MaterialSpec;
using materials::PrestrainKind;
using materials::PrestrainRule;
using materials::ScalarField;

namespace {

PrestrainRule prestrain_from_config(const toml::Table& t, const std::string& rho_key) {
  PrestrainRule rule;
  const std::string kind = t.get_string_or("material.prestrain", "none");
  if (kind == "none") {
    rule.kind = PrestrainKind::ConstantMatrix;
    rule.constant = Mat3::Zero();
  } else if (kind == "identity") {
    rule.kind = PrestrainKind::ScalarIdentity;
    rule.rho.base = t.get_double_or(rho_key, 0.0);
    rule.rho.grad_s1 = t.get_double_or("material.rho_grade_s1", 0.0);
    rule.rho.grad_s2 = t.get_double_or("material.rho_grade_s2", 0.0);
  } else if (kind == "matrix") {
    // [b11, b22, b33, b12, b13, b23]
    const auto m = t.get_double_array("material.matrix");
    if (m.size() != 6) throw ValidationError("material.matrix needs 6 entries");
    rule.kind = PrestrainKind::ConstantMatrix;
    rule.constant << m[0], m[3], m[4], m[3], m[1], m[5], m[4], m[5], m[2];
  } else if (kind == "linear") {
    // y3 * iota(A), A = [a11, a22, a12]
    const auto a = t.get_double_array("material.A");
    if (a.size() != 3) throw ValidationError("material.A needs 3 entries [a11, a22, a12]");
    rule.kind = PrestrainKind::LinearInY3;
    rule.curvature << a[0], a[2], a[2], a[1];
  } else {
    throw ValidationError("unknown material.prestrain kind: " + kind);
  }
  return rule;
}

ScalarField lame_field(const toml::Table& t, double base) {
  ScalarField f = materials::constant_field(base);
  f.grad_s1 = t.get_double_or("material.lame_grade_s1", 0.0);
  f.grad_s2 = t.get_double_or("material.lame_grade_s2", 0.0);
  f.micro_sin_amp = t.get_double_or("material.micro_sin_amp", 0.0);
  const std::int64_t axis = t.get_int_or("material.micro_sin_axis", 1);
  if (axis < 1 || axis > 3) throw ValidationError("material.micro_sin_axis must be 1, 2 or 3");
  f.micro_sin_axis = static_cast<int>(axis) - 1;
  return f;
}

}  // namespace

MaterialSpec material_from_config(const toml::Table& t) {
  const std::string kind = t.get_string_or("material.kind", "homogeneous");
  const double lambda = t.get_double_or("material.lambda", 1.0);
  const double mu = t.get_double_or("material.mu", 1.0);
  MaterialSpec spec;
  if (kind == "homogeneous") {
    spec = materials::make_homogeneous({lambda, mu}, prestrain_from_config(t, "material.rho"));
    // Micro oscillation / macro grading apply to the lambda field only when
    // requested; mu follows its own keys.
    spec.regions[0].lambda = lame_field(t, lambda);
    ScalarField mf = materials::constant_field(mu);
    mf.micro_sin_amp = t.get_double_or("material.mu_micro_sin_amp", 0.0);
    mf.micro_sin_axis = spec.regions[0].lambda.micro_sin_axis;
    spec.regions[0].mu = mf;
  } else if (kind == "bilayer") {
    PrestrainRule top = prestrain_from_config(t, "material.rho_top");
    PrestrainRule bottom = prestrain_from_config(t, "material.rho_bottom");
    const double lambda_top = t.get_double_or("material.lambda_top", lambda);
    const double mu_top = t.get_double_or("material.mu_top", mu);
    spec = materials::make_bilayer({lambda_top, mu_top}, top, {lambda, mu}, bottom);
  } else if (kind == "checkerboard") {
    const double lambda_b = t.get_double_or("material.lambda_b", 2.0 * lambda);
    const double mu_b = t.get_double_or("material.mu_b", 2.0 * mu);
    spec = materials::make_checkerboard({lambda, mu}, {lambda_b, mu_b},
                                        prestrain_from_config(t, "material.rho"));
  } else {
    throw ValidationError("unknown material.kind: " + kind);
  }
  spec.validate();
  return spec;
}

RunConfig parse_run_config(const toml::Table& t) {
  RunConfig cfg;
  cfg.out_dir = t.get_string_or("run.out", "out");
  cfg.seed = static_cast<std::uint64_t>(t.get_int_or("run.seed", 0));
  cfg.threads = static_cast<int>(t.get_int_or("run.threads", 1));

  cfg.material_kind = t.get_string_or("material.kind", "homogeneous");
  cfg.material = material_from_config(t);

  cfg.gamma = t.get_double_or("cell.gamma", 1.0);
  if (t.has("cell.divisions")) {
    const auto d = t.get_int_array("cell.divisions");
    if (d.size() != 3) throw ValidationError("cell.divisions needs 3 entries");
    cfg.divisions = {static_cast<int>(d[0]), static_cast<int>(d[1]), static_cast<int>(d[2])};
  }
  if (t.has("cell.s")) {
    const auto s = t.get_double_array("cell.s");
    if (s.size() != 2) throw ValidationError("cell.s needs 2 entries");
    cfg.macro_point = Vec2(s[0], s[1]);
  }
  cfg.export_correctors = t.get_bool_or("cell.export_correctors", false);
  if (t.has("cell.h_levels")) {
    cfg.h_levels.clear();
    for (auto v : t.get_int_array("cell.h_levels")) cfg.h_levels.push_back(static_cast<int>(v));
  }

  cfg.width = t.get_double_or("plate.width", 1.0);
  cfg.height = t.get_double_or("plate.height", 1.0);
  cfg.nx = static_cast<int>(t.get_int_or("plate.nx", 8));
  cfg.ny = static_cast<int>(t.get_int_or("plate.ny", cfg.nx));
  cfg.mesh_file = t.get_string_or("plate.mesh_file", "");
  if (t.has("plate.H_levels")) {
    cfg.H_levels.clear();
    for (auto v : t.get_int_array("plate.H_levels")) cfg.H_levels.push_back(static_cast<int>(v));
  }

  const std::string clamp = t.get_string_or("bc.clamp", "none");
  if (clamp == "all") {
    cfg.clamp_all = true;
  } else if (clamp != "none") {
    std::string item;
    std::istringstream ss(clamp);
    while (std::getline(ss, item, ',')) {
      if (item == "left") cfg.clamp_sides.push_back(plate::Side::Left);
      else if (item == "right") cfg.clamp_sides.push_back(plate::Side::Right);
      else if (item == "bottom") cfg.clamp_sides.push_back(plate::Side::Bottom);
      else if (item == "top") cfg.clamp_sides.push_back(plate::Side::Top);
      else throw ValidationError("unknown bc.clamp side: " + item);
    }
  }
  cfg.ud_angle_deg = t.get_double_or("bc.ud_angle_deg", 0.0);
  if (t.has("bc.ud_offset")) {
    const auto b = t.get_double_array("bc.ud_offset");
    if (b.size() != 3) throw ValidationError("bc.ud_offset needs 3 entries");
    cfg.ud_offset = Vec3(b[0], b[1], b[2]);
  }

  cfg.solver.max_iterations = static_cast<int>(t.get_int_or("solver.max_iterations", 1000));
  cfg.solver.grad_tol = t.get_double_or("solver.grad_tol", 1e-6);
  cfg.solver.armijo_slope = t.get_double_or("solver.armijo_slope", 0.2);
  cfg.solver.backtrack = t.get_double_or("solver.backtrack", 0.5);
  cfg.solver.initial_step = t.get_double_or("solver.initial_step", 1.0);
  cfg.solver.max_backtracks = static_cast<int>(t.get_int_or("solver.max_backtracks", 60));
  cfg.solver.metric_regularization = t.get_double_or("solver.metric_regularization", 1e-4);
  const std::string precond = t.get_string_or("solver.preconditioner", "metric");
  if (precond == "metric") cfg.solver.preconditioner = minimize::Preconditioner::Metric;
  else if (precond == "none") cfg.solver.preconditioner = minimize::Preconditioner::None;
  else throw ValidationError("unknown solver.preconditioner: " + precond);

  const std::string seed_kind = t.get_string_or("solver.seed", "flat");
  if (seed_kind == "flat") cfg.seed_spec.kind = minimize::SeedKind::Flat;
  else if (seed_kind == "cylinder") cfg.seed_spec.kind = minimize::SeedKind::Cylinder;
  else if (seed_kind == "perturbed") cfg.seed_spec.kind = minimize::SeedKind::Perturbed;
  else throw ValidationError("unknown solver.seed: " + seed_kind);
  cfg.seed_spec.kappa = t.get_double_or("solver.seed_kappa", 1.0);
  cfg.seed_spec.axis = static_cast<int>(t.get_int_or("solver.seed_axis", 1));
  cfg.seed_spec.sigma = t.get_double_or("solver.seed_sigma", 0.1);
  cfg.seed_spec.rng_seed = cfg.seed;

  const std::string mode = t.get_string_or("energy.coefficients", "cell");
  if (mode == "cell") cfg.coeff_mode = CoefficientMode::Cell;
  else if (mode == "analytic") cfg.coeff_mode = CoefficientMode::Analytic;
  else throw ValidationError("unknown energy.coefficients mode: " + mode);
  if (t.has("energy.beff")) {
    const auto b = t.get_double_array("energy.beff");
    if (b.size() != 3) throw ValidationError("energy.beff needs 3 entries [b11, b22, b12]");
    cfg.analytic_beff << b[0], b[2], b[2], b[1];
  }
  cfg.report_offset = t.get_bool_or("energy.report_offset", true);

  cfg.converge_mode = t.get_string_or("converge.mode", "micro");
  cfg.check_break_quadrature = t.get_bool_or("check.break_quadrature", false);

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(toml::Table::parse_file(path));
}

void RunConfig::validate() const {
  material.validate();
  if (!(gamma > 0)) throw ValidationError("cell.gamma must be positive");
  for (int d : divisions)
    if (d < 1) throw ValidationError("cell.divisions must be >= 1");
  if (threads < 1) throw ValidationError("run.threads must be >= 1");
  if (nx < 1 || ny < 1) throw ValidationError("plate.nx and plate.ny must be >= 1");
  if (!(width > 0) || !(height > 0)) throw ValidationError("plate dimensions must be positive");
  solver.validate();
  if (converge_mode != "micro" && converge_mode != "macro" && converge_mode != "simultaneous" &&
      converge_mode != "commute")
    throw ValidationError("converge.mode must be micro, macro, simultaneous or commute");
  // Region faces must be representable on the micro grid (and on every level
  // of an h-study): checked by constructing the meshes.
  rve::build_rve_mesh(divisions, material);
  for (int level : h_levels) rve::build_rve_mesh({level, level, level}, material);
}

plate::Triangulation RunConfig::build_plate_mesh() const { return build_plate_mesh(nx); }

plate::Triangulation RunConfig::build_plate_mesh(int level_nx) const {
  if (!mesh_file.empty()) return io::read_plate_mesh_file(mesh_file);
  const int level_ny = std::max(1, static_cast<int>(std::lround(level_nx * height / width)));
  return plate::build_rect_mesh(width, height, level_nx, level_ny);
}

plate::DirichletData RunConfig::dirichlet(const plate::Triangulation& mesh) const {
  plate::DirichletData bc;
  const double a = ud_angle_deg * std::numbers::pi / 180.0;
  bc.R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a), 0, 0;
  bc.b = ud_offset;
  const auto edges =
      clamp_all ? plate::all_boundary_edges(mesh) : plate::select_boundary_edges(mesh, clamp_sides);
  if (clamped() && edges.empty())
    throw ValidationError("bc.clamp selects no boundary edges on this mesh");
  bc.nodes = plate::nodes_of_edges(mesh, edges);
  bc.validate();
  return bc;
}

double RunConfig::w1inf_hypothesis(double H) const {
  double lame_norm = 0, prestrain_norm = 0;
  for (const auto& r : material.regions) {
    const Vec3 mid = 0.5 * (r.box.lo + r.box.hi);
    const Vec2 s(0.5, 0.5);
    const double value = std::abs(r.lambda.eval(s, mid)) + std::abs(r.mu.eval(s, mid));
    const double slope = std::abs(r.lambda.grad_s1) + std::abs(r.lambda.grad_s2) +
                         std::abs(r.mu.grad_s1) + std::abs(r.mu.grad_s2);
    lame_norm = std::max(lame_norm, value + slope);
    double bval = r.prestrain.eval(s, mid).norm();
    if (r.prestrain.kind == PrestrainKind::ScalarIdentity)
      bval += std::abs(r.prestrain.rho.grad_s1) + std::abs(r.prestrain.rho.grad_s2);
    prestrain_norm = std::max(prestrain_norm, bval);
  }
  return H * lame_norm * (1.0 + prestrain_norm);
}

}  // namespace microbend
