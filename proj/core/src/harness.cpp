#include "microbend/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "microbend/convergence.hpp"
#include "microbend/energy.hpp"
#include "microbend/io.hpp"

namespace microbend::harness {

using nlohmann::json;

namespace {

json mat_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

materials::IsotropicLame base_lame(const RunConfig& cfg) {
  const auto& r = cfg.material.regions.front();
  return {r.lambda.base, r.mu.base};
}

energy::CoefficientField build_coefficients(const RunConfig& cfg,
                                            const plate::Triangulation& mesh) {
  if (cfg.coeff_mode == CoefficientMode::Analytic) {
    const Mat3 qhat = rve::analytic_qhat_homogeneous(base_lame(cfg));
    const Mat2 beff = cfg.analytic_beff;
    return energy::build_coefficients_analytic(
        mesh, [qhat](const Vec2&) { return qhat; }, [beff](const Vec2&) { return beff; });
  }
  const auto rve_mesh = rve::build_rve_mesh(cfg.divisions, cfg.material);
  return energy::build_coefficients_cell(mesh, cfg.material, cfg.gamma, rve_mesh, cfg.threads);
}

// Richardson reference for the macro energy of a cylinder interpolant with
// constant coefficients: pointwise the reformulated integrand is constant.
double analytic_cylinder_energy(const Mat3& qhat, const Mat2& beff, double kappa, int axis,
                                double area) {
  Mat2 II = Mat2::Zero();
  II(axis - 1, axis - 1) = kappa;
  return area * (rve::qhom_eval(qhat, II - beff) - rve::qhom_eval(qhat, beff));
}

}  // namespace

int run_cell(const RunConfig& cfg, std::ostream& out) {
  const auto mesh = rve::build_rve_mesh(cfg.divisions, cfg.material);
  const auto cell = rve::solve_correctors(cfg.material, cfg.macro_point, cfg.gamma, mesh);

  json j;
  j["Qhat"] = mat_to_json(cell.Qhat);
  j["Bhat"] = {cell.Bhat[0], cell.Bhat[1], cell.Bhat[2]};
  j["Beff"] = mat_to_json(cell.Beff);
  j["meta"] = {{"gamma", cfg.gamma},
               {"h", mesh.h()},
               {"divisions", {cfg.divisions[0], cfg.divisions[1], cfg.divisions[2]}},
               {"s", {cfg.macro_point[0], cfg.macro_point[1]}},
               {"material", cfg.material_kind},
               {"provenance", "cell-solve"}};
  const std::string text = j.dump(2) + "\n";
  io::write_text_atomic(cfg.out_dir / "cell.json", text);
  if (cfg.export_correctors)
    io::write_text_atomic(cfg.out_dir / "correctors.vtk", io::vtk_rve_correctors(mesh, cell));
  out << text;
  return 0;
}

int run_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto mesh = cfg.build_plate_mesh();
  const dkt::DktSpace space(mesh);
  plate::DirichletData bc;
  const bool clamped = cfg.clamped();
  if (clamped) bc = cfg.dirichlet(mesh);

  const auto coeffs = build_coefficients(cfg, mesh);
  const auto w0 = minimize::seed_deformation(cfg.seed_spec, mesh, clamped ? &bc : nullptr);
  auto [w, report] = minimize::minimize_energy(w0, space, coeffs, clamped ? &bc : nullptr,
                                               cfg.solver);

  const auto energy_report = energy::assemble_energy(w, space, coeffs);
  const double offset = energy::reformulation_offset(coeffs, mesh);

  io::write_text_atomic(cfg.out_dir / "deformed.vtk", io::vtk_deformed_surface(mesh, w));
  io::write_text_atomic(cfg.out_dir / "iterations.csv", io::csv_iteration_report(report));

  json j;
  j["energy"] = {{"total", energy_report.total},
                 {"quadratic", energy_report.quadratic},
                 {"coupling", energy_report.coupling}};
  if (cfg.report_offset) {
    j["offset"] = offset;
    j["total_with_offset"] = energy_report.total + offset;
  }
  j["minimizer"] = {{"converged", report.converged},
                    {"aborted", report.aborted},
                    {"iterations", report.rows.empty() ? 0 : report.rows.back().iter},
                    {"final_grad_norm", report.rows.empty() ? 0.0 : report.rows.back().grad_norm},
                    {"message", report.message}};
  j["mean_curvature_estimate"] = dkt::mean_curvature_estimate(w, space);
  j["meta"] = {{"H", mesh.max_diameter()},
               {"vertices", mesh.num_vertices()},
               {"triangles", mesh.num_triangles()},
               {"coefficients", cfg.coeff_mode == CoefficientMode::Cell ? "cell" : "analytic"},
               {"w1inf_hypothesis", cfg.w1inf_hypothesis(mesh.max_diameter())},
               {"seed", cfg.seed}};
  const std::string text = j.dump(2) + "\n";
  io::write_text_atomic(cfg.out_dir / "energy.json", text);
  out << text;
  if (report.aborted) throw SolverError("simulate: " + report.message);
  return 0;
}

namespace {

convergence::Table micro_table(const RunConfig& cfg) {
  convergence::Table table;
  table.quantity = "Qhat_11";
  std::vector<double> q11;
  for (int level : cfg.h_levels) {
    const auto mesh = rve::build_rve_mesh({level, level, level}, cfg.material);
    const auto cell = rve::solve_correctors(cfg.material, cfg.macro_point, cfg.gamma, mesh);
    convergence::Row row;
    row.h = mesh.h();
    row.values = {{"Qhat_11", cell.Qhat(0, 0)}, {"Qhat_12", cell.Qhat(0, 1)},
                  {"Qhat_13", cell.Qhat(0, 2)}, {"Qhat_22", cell.Qhat(1, 1)},
                  {"Qhat_23", cell.Qhat(1, 2)}, {"Qhat_33", cell.Qhat(2, 2)},
                  {"Beff_11", cell.Beff(0, 0)}, {"Beff_22", cell.Beff(1, 1)},
                  {"Beff_12", cell.Beff(0, 1)}};
    q11.push_back(cell.Qhat(0, 0));
    table.rows.push_back(row);
  }
  const auto& region = cfg.material.regions.front();
  const bool analytic_ok = cfg.material.regions.size() == 1 && region.lambda.uniform_in_y() &&
                           region.mu.uniform_in_y() && cfg.material.macro_uniform();
  convergence::ReferenceValue ref;
  if (analytic_ok) {
    ref.value = rve::analytic_qhat_homogeneous(base_lame(cfg))(0, 0);
    ref.provenance = "analytic";
    ref.description = "closed-form relaxation of the homogeneous isotropic cell";
  } else {
    const size_t n = q11.size();
    ref.value = convergence::richardson_limit(q11[n - 3], q11[n - 2], q11[n - 1]);
    ref.provenance = "richardson";
    ref.description = "extrapolated from the three finest micro levels";
  }
  table.reference = ref;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    table.rows[i].error = std::abs(q11[i] - ref.value);
    if (i > 0)
      table.rows[i].observed_order =
          convergence::observed_order(table.rows[i - 1].error, table.rows[i].error);
  }
  return table;
}

convergence::Table macro_table(const RunConfig& cfg) {
  convergence::Table table;
  table.quantity = "cylinder_interpolant_energy";
  const double kappa = cfg.seed_spec.kappa;
  const int axis = cfg.seed_spec.axis;
  std::vector<double> energies;
  double area = 0;
  for (int level : cfg.H_levels) {
    const auto mesh = cfg.build_plate_mesh(level);
    area = mesh.total_area();
    const dkt::DktSpace space(mesh);
    const auto coeffs = build_coefficients(cfg, mesh);
    const auto w = dkt::interpolate_dkt(dkt::cylinder(kappa, axis), mesh);
    const double e = energy::assemble_energy(w, space, coeffs).total;
    convergence::Row row;
    row.H = mesh.max_diameter();
    row.values = {{"energy", e}};
    energies.push_back(e);
    table.rows.push_back(row);
  }
  convergence::ReferenceValue ref;
  if (cfg.coeff_mode == CoefficientMode::Analytic) {
    ref.value = analytic_cylinder_energy(rve::analytic_qhat_homogeneous(base_lame(cfg)),
                                         cfg.analytic_beff, kappa, axis, area);
    ref.provenance = "analytic";
    ref.description = "constant-coefficient reformulated energy of the cylinder";
  } else {
    const size_t n = energies.size();
    ref.value = convergence::richardson_limit(energies[n - 3], energies[n - 2], energies[n - 1]);
    ref.provenance = "richardson";
    ref.description = "extrapolated from the three finest macro levels";
  }
  table.reference = ref;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    table.rows[i].error = std::abs(energies[i] - ref.value);
    if (i > 0)
      table.rows[i].observed_order =
          convergence::observed_order(table.rows[i - 1].error, table.rows[i].error);
  }
  return table;
}

double minimized_energy(const RunConfig& cfg, int h_level, int H_level) {
  const auto mesh = cfg.build_plate_mesh(H_level);
  const dkt::DktSpace space(mesh);
  plate::DirichletData bc;
  const bool clamped = cfg.clamped();
  if (clamped) bc = cfg.dirichlet(mesh);
  const auto rve_mesh = rve::build_rve_mesh({h_level, h_level, h_level}, cfg.material);
  const auto coeffs =
      energy::build_coefficients_cell(mesh, cfg.material, cfg.gamma, rve_mesh, cfg.threads);
  const auto w0 = minimize::seed_deformation(cfg.seed_spec, mesh, clamped ? &bc : nullptr);
  auto [w, report] =
      minimize::minimize_energy(w0, space, coeffs, clamped ? &bc : nullptr, cfg.solver);
  if (report.aborted) throw SolverError("converge: minimization aborted at (h_level=" +
                                        std::to_string(h_level) + ", H_level=" +
                                        std::to_string(H_level) + "): " + report.message);
  return energy::assemble_energy(w, space, coeffs).total;
}

}  // namespace

int run_converge(const RunConfig& cfg, std::ostream& out) {
  const std::string& mode = cfg.converge_mode;
  if (mode == "micro" || mode == "macro" || mode == "commute") {
    if ((mode == "macro" ? cfg.H_levels.size() : cfg.h_levels.size()) < 3 ||
        (mode == "commute" && cfg.H_levels.size() < 3))
      throw ValidationError("converge: need at least 3 levels");
  }

  if (mode == "micro" || mode == "macro") {
    const auto table = mode == "micro" ? micro_table(cfg) : macro_table(cfg);
    io::write_text_atomic(cfg.out_dir / ("converge_" + mode + ".csv"), table.to_csv());
    io::write_text_atomic(cfg.out_dir / ("converge_" + mode + ".json"),
                          table.to_json().dump(2) + "\n");
    out << table.to_csv();
    return 0;
  }

  if (mode == "simultaneous") {
    if (cfg.h_levels.size() != cfg.H_levels.size() || cfg.h_levels.size() < 3)
      throw ValidationError("converge simultaneous: h and H level lists must match, >= 3 levels");
    convergence::Table table;
    table.quantity = "minimized_energy";
    std::vector<double> energies;
    for (size_t i = 0; i < cfg.h_levels.size(); ++i) {
      const double e = minimized_energy(cfg, cfg.h_levels[i], cfg.H_levels[i]);
      convergence::Row row;
      row.h = 1.0 / cfg.h_levels[i];
      row.H = cfg.width / cfg.H_levels[i];
      row.values = {{"energy", e}};
      energies.push_back(e);
      table.rows.push_back(row);
    }
    const size_t n = energies.size();
    convergence::ReferenceValue ref;
    ref.value = convergence::richardson_limit(energies[n - 3], energies[n - 2], energies[n - 1]);
    ref.provenance = "richardson";
    ref.description = "extrapolated along the (h,H) diagonal";
    table.reference = ref;
    for (size_t i = 0; i < n; ++i) {
      table.rows[i].error = std::abs(energies[i] - ref.value);
      if (i > 0)
        table.rows[i].observed_order =
            convergence::observed_order(table.rows[i - 1].error, table.rows[i].error);
    }
    io::write_text_atomic(cfg.out_dir / "converge_simultaneous.csv", table.to_csv());
    io::write_text_atomic(cfg.out_dir / "converge_simultaneous.json",
                          table.to_json().dump(2) + "\n");
    out << table.to_csv();
    return 0;
  }

  // commute: full (h,H) grid, Richardson limits along both orders of limits.
  const int nh = static_cast<int>(cfg.h_levels.size());
  const int nH = static_cast<int>(cfg.H_levels.size());
  std::vector<std::vector<double>> grid(nh, std::vector<double>(nH));
  for (int i = 0; i < nh; ++i)
    for (int j = 0; j < nH; ++j) grid[i][j] = minimized_energy(cfg, cfg.h_levels[i], cfg.H_levels[j]);

  auto limit3 = [](const std::vector<double>& v) {
    const size_t n = v.size();
    return convergence::richardson_limit(v[n - 3], v[n - 2], v[n - 1]);
  };
  // h-first: extrapolate over h for each H, then over H.
  std::vector<double> over_h(nH);
  for (int j = 0; j < nH; ++j) {
    std::vector<double> col(nh);
    for (int i = 0; i < nh; ++i) col[i] = grid[i][j];
    over_h[j] = limit3(col);
  }
  const double limit_h_first = limit3(over_h);
  // H-first: extrapolate over H for each h, then over h.
  std::vector<double> over_H(nh);
  for (int i = 0; i < nh; ++i) over_H[i] = limit3(grid[i]);
  const double limit_H_first = limit3(over_H);

  const double finest = grid[nh - 1][nH - 1];
  const double error_estimate =
      std::max(std::abs(finest - limit_h_first), std::abs(finest - limit_H_first));
  const double discrepancy = std::abs(limit_h_first - limit_H_first);
  const bool within = discrepancy <= 2.0 * error_estimate;

  json j;
  j["grid_h_levels"] = cfg.h_levels;
  j["grid_H_levels"] = cfg.H_levels;
  j["minimized_energy"] = grid;
  j["limit_h_first"] = limit_h_first;
  j["limit_H_first"] = limit_H_first;
  j["discrepancy"] = discrepancy;
  j["error_estimate"] = error_estimate;
  j["within_bound"] = within;
  j["metric"] = "difference of Richardson limits along the two limit orders; "
                "bound is twice the finest-level distance to the limits";
  const std::string text = j.dump(2) + "\n";
  io::write_text_atomic(cfg.out_dir / "commute.json", text);
  std::ostringstream csv;
  csv << "h_level,H_level,energy\n";
  for (int i = 0; i < nh; ++i)
    for (int jj = 0; jj < nH; ++jj)
      csv << cfg.h_levels[i] << "," << cfg.H_levels[jj] << "," << io::format_g17(grid[i][jj])
          << "\n";
  io::write_text_atomic(cfg.out_dir / "commute.csv", csv.str());
  out << text;
  return 0;
}

// ---------------------------------------------------------------------------
// check: the invariant battery.

namespace {

struct CheckResult {
  std::string name;
  bool pass;
  std::string detail;
};

double integrate_triangle_subdivided(const std::function<double(const Vec2&)>& f, const Vec2& a,
                                     const Vec2& b, const Vec2& c, int depth) {
  if (depth == 0) {
    const double s15 = std::sqrt(15.0);
    const double b1 = (6.0 + s15) / 21.0, a1 = 1.0 - 2.0 * b1, w1 = (155.0 + s15) / 1200.0;
    const double b2 = (6.0 - s15) / 21.0, a2 = 1.0 - 2.0 * b2, w2 = (155.0 - s15) / 1200.0;
    const double area =
        0.5 * std::abs((b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0]);
    const std::array<Vec3, 7> bary = {Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3), Vec3(a1, b1, b1),
                                      Vec3(b1, a1, b1), Vec3(b1, b1, a1), Vec3(a2, b2, b2),
                                      Vec3(b2, a2, b2), Vec3(b2, b2, a2)};
    const std::array<double, 7> wts = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
    double sum = 0;
    for (int p = 0; p < 7; ++p)
      sum += wts[p] * f(bary[p][0] * a + bary[p][1] * b + bary[p][2] * c);
    return area * sum;
  }
  const Vec2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  return integrate_triangle_subdivided(f, a, ab, ca, depth - 1) +
         integrate_triangle_subdivided(f, b, bc, ab, depth - 1) +
         integrate_triangle_subdivided(f, c, ca, bc, depth - 1) +
         integrate_triangle_subdivided(f, ab, bc, ca, depth - 1);
}

// Measured coercivity constant: smallest C with E >= q/C - C.
double coercivity_constant(double e, double q) {
  return 0.5 * (-e + std::sqrt(e * e + 4.0 * q));
}

}  // namespace

int run_check(const RunConfig& cfg, std::ostream& out) {
  std::vector<CheckResult> results;
  auto record = [&](const std::string& name, bool pass, const std::string& detail) {
    results.push_back({name, pass, detail});
    out << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
  };
  const auto homogeneous =
      materials::make_homogeneous({1.0, 1.0}, materials::PrestrainRule{});

  // 1. Micro quadrature exactness on random tri-cubics.
  {
    std::mt19937_64 rng(cfg.seed + 11);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto rule = rve::MicroQuadratureRule::gauss2();
    if (cfg.check_break_quadrature) rule.weights[0] *= 1.01;  // negative-control fixture
    const auto mesh = rve::build_rve_mesh({3, 4, 5}, homogeneous);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      double coeff[4][4][4];
      for (auto& pa : coeff)
        for (auto& pb : pa)
          for (auto& pc : pb) pc = unif(rng);
      auto f = [&](const Vec3& y) {
        double px[4] = {1, y[0], y[0] * y[0], y[0] * y[0] * y[0]};
        double py[4] = {1, y[1], y[1] * y[1], y[1] * y[1] * y[1]};
        double pz[4] = {1, y[2], y[2] * y[2], y[2] * y[2] * y[2]};
        double v = 0;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) v += coeff[a][b][c] * px[a] * py[b] * pz[c];
        return v;
      };
      auto moment = [](double lo, double hi, int p) {
        return (std::pow(hi, p + 1) - std::pow(lo, p + 1)) / (p + 1);
      };
      double exact = 0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          for (int c = 0; c < 4; ++c)
            exact += coeff[a][b][c] * moment(0, 1, a) * moment(0, 1, b) * moment(-0.5, 0.5, c);
      const double got = rve::micro_integrate(mesh, rule, f);
      worst = std::max(worst, std::abs(got - exact) / std::max(1.0, std::abs(exact)));
    }
    record("micro_quadrature_exactness", worst <= 1e-13,
           "max relative error " + io::format_g17(worst));
  }

  // 2. Macro quadrature exactness on random quadratics.
  {
    std::mt19937_64 rng(cfg.seed + 23);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const auto mesh = plate::build_rect_mesh(1.3, 0.7, 3, 3);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      std::array<double, 6> c;
      for (auto& v : c) v = unif(rng);
      auto f = [&](const Vec2& s) {
        return c[0] + c[1] * s[0] + c[2] * s[1] + c[3] * s[0] * s[0] + c[4] * s[0] * s[1] +
               c[5] * s[1] * s[1];
      };
      double exact = 0;
      for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        exact += integrate_triangle_subdivided(f, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                               mesh.vertices[tri[2]], 0);
      }
      const double got = plate::macro_integrate(mesh, f);
      worst = std::max(worst, std::abs(got - exact) / std::max(1.0, std::abs(exact)));
    }
    record("macro_quadrature_exactness", worst <= 1e-13,
           "max relative error " + io::format_g17(worst));
  }

  // 3. Q1 norm equivalence on elements of widely varying size.
  {
    std::mt19937_64 rng(cfg.seed + 37);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> logsize(-3.0, 0.0);
    const auto& rule = rve::MicroQuadratureRule::gauss2();
    double chat = 1.0;
    for (int trial = 0; trial < 200; ++trial) {
      Vec3 size(std::pow(10.0, logsize(rng)), std::pow(10.0, logsize(rng)),
                std::pow(10.0, logsize(rng)));
      std::array<double, 8> corner;
      for (auto& v : corner) v = unif(rng);
      auto value_at = [&](const Vec3& r) {
        double v = 0;
        for (int c = 0; c < 8; ++c) {
          const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
          v += corner[c] * (bx ? r[0] : 1 - r[0]) * (by ? r[1] : 1 - r[1]) * (bz ? r[2] : 1 - r[2]);
        }
        return v;
      };
      const double volume = size.prod();
      double quad = 0;
      for (size_t qp = 0; qp < rule.points.size(); ++qp)
        quad += rule.weights[qp] * volume * value_at(rule.points[qp]) * value_at(rule.points[qp]);
      // Exact L2 via tensor 3-point Gauss on the reference cube.
      const double gp[3] = {0.5 * (1 - std::sqrt(0.6)), 0.5, 0.5 * (1 + std::sqrt(0.6))};
      const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
      double exact = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c) {
            const Vec3 r(gp[a], gp[b], gp[c]);
            exact += gw[a] * gw[b] * gw[c] * volume * value_at(r) * value_at(r);
          }
      if (exact > 0) {
        const double ratio = std::sqrt(quad / exact);
        chat = std::max({chat, ratio, 1.0 / ratio});
      }
    }
    record("q1_norm_equivalence", chat <= 1.0 + 1e-12, "measured C_hat " + io::format_g17(chat));
  }

  // 4. Galerkin orthogonality of the solved correctors.
  {
    const auto mesh = rve::build_rve_mesh(cfg.divisions, cfg.material);
    const auto cell = rve::solve_correctors(cfg.material, cfg.macro_point, cfg.gamma, mesh);
    const double scale = std::max(1.0, cell.Qhat.cwiseAbs().maxCoeff());
    double worst = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        worst = std::max(worst, std::abs(rve::galerkin_residual(cfg.material, cfg.macro_point,
                                                                mesh, cell, i, j)) / scale);
    record("galerkin_orthogonality", worst <= 1e-10, "max scaled residual " + io::format_g17(worst));
  }

  // 5. Energy gradient vs central finite differences.
  {
    std::mt19937_64 rng(cfg.seed + 53);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto mesh = plate::build_rect_mesh(1.0, 1.0, 3, 3);
    const dkt::DktSpace space(mesh);
    const Mat3 qhat = rve::analytic_qhat_homogeneous(base_lame(cfg));
    Mat2 beff;
    beff << 0.4, 0.1, 0.1, -0.2;
    const auto coeffs = energy::build_coefficients_analytic(
        mesh, [&](const Vec2&) { return qhat; }, [&](const Vec2&) { return beff; });
    minimize::SeedSpec seed;
    seed.kind = minimize::SeedKind::Perturbed;
    seed.sigma = 0.2;
    seed.rng_seed = cfg.seed + 5;
    const auto w = minimize::seed_deformation(seed, mesh, nullptr);
    const Eigen::VectorXd x0 = dkt::flatten(w);
    const Eigen::VectorXd grad = energy::assemble_gradient(w, space, coeffs);
    double worst = 0;
    const double step = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd d(x0.size());
      for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = gauss(rng);
      d.normalize();
      const double ep = energy::assemble_energy(dkt::unflatten(mesh, x0 + step * d), space, coeffs).total;
      const double em = energy::assemble_energy(dkt::unflatten(mesh, x0 - step * d), space, coeffs).total;
      const double fd = (ep - em) / (2 * step);
      const double an = grad.dot(d);
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
    }
    record("gradient_vs_fd", worst <= 1e-6, "max relative error " + io::format_g17(worst));
  }

  // 6. Reformulation identity on the cylinder family.
  {
    std::mt19937_64 rng(cfg.seed + 67);
    std::uniform_real_distribution<double> unif(-0.8, 0.8);
    const Mat3 qhat = rve::analytic_qhat_homogeneous(base_lame(cfg));
    double worst = 0;
    for (double kappa : {0.5, 1.0, 1.7}) {
      const auto u = dkt::cylinder(kappa, 1);
      for (int trial = 0; trial < 20; ++trial) {
        Mat2 beff;
        const double b11 = unif(rng), b22 = unif(rng), b12 = unif(rng);
        beff << b11, b12, b12, b22;
        const Vec2 s(unif(rng) + 1.0, unif(rng) + 1.0);
        const Mat32 g = u.gradient(s);
        const Vec3 n = g.col(0).cross(g.col(1));
        const Tensor322 hess = u.hessian(s);
        const Mat2 II = -contract_first(n, hess);
        const double lhs = rve::qhom_eval(qhat, II - beff);
        const double rhs = energy::contract_third_order(qhat, hess, hess) +
                           2.0 * energy::contract_third_order(qhat, hess, outer(n, beff)) +
                           rve::qhom_eval(qhat, beff);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
    record("reformulation_identity", worst <= 1e-12, "max pointwise gap " + io::format_g17(worst));
  }

  // 7. Coercivity constant stability across refinements.
  {
    const Mat3 qhat = rve::analytic_qhat_homogeneous(base_lame(cfg));
    const Mat2 beff = 0.5 * Mat2::Identity();
    std::vector<double> level_constant;
    for (int level : {4, 8, 16}) {
      const auto mesh = plate::build_rect_mesh(1.0, 1.0, level, level);
      const dkt::DktSpace space(mesh);
      const auto coeffs = energy::build_coefficients_analytic(
          mesh, [&](const Vec2&) { return qhat; }, [&](const Vec2&) { return beff; });
      double cmax = 0;
      for (int k = 0; k < 12; ++k) {
        minimize::SeedSpec seed;
        seed.kind = minimize::SeedKind::Perturbed;
        seed.sigma = 0.3;
        seed.rng_seed = cfg.seed + 100 + k;
        const auto w = minimize::seed_deformation(seed, mesh, nullptr);
        const double e = energy::assemble_energy(w, space, coeffs).total;
        const double q = std::pow(dkt::sym_hessian_l2_norm(w, space), 2);
        cmax = std::max(cmax, coercivity_constant(e, q));
      }
      level_constant.push_back(cmax);
    }
    const double lo = *std::min_element(level_constant.begin(), level_constant.end());
    const double hi = *std::max_element(level_constant.begin(), level_constant.end());
    record("coercivity_constant_stability", hi <= 2.0 * lo,
           "levels " + io::format_g17(level_constant[0]) + ", " +
               io::format_g17(level_constant[1]) + ", " + io::format_g17(level_constant[2]));
  }

  // 8. Discrete normal bounds.
  {
    std::mt19937_64 rng(cfg.seed + 83);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto mesh = plate::build_rect_mesh(1.0, 1.0, 8, 8);
    double worst_node = 0, worst_interior = 0;
    for (int k = 0; k < 5; ++k) {
      minimize::SeedSpec seed;
      seed.kind = minimize::SeedKind::Perturbed;
      seed.sigma = 0.4;
      seed.rng_seed = cfg.seed + 200 + k;
      const auto w = minimize::seed_deformation(seed, mesh, nullptr);
      const auto n = dkt::discrete_normal(w);
      for (const auto& nv : n.node_normal) worst_node = std::max(worst_node, std::abs(nv.norm() - 1.0));
      for (int p = 0; p < 100; ++p) {
        const int t = static_cast<int>(unif(rng) * mesh.num_triangles()) % mesh.num_triangles();
        double a = unif(rng), b = unif(rng);
        if (a + b > 1) {
          a = 1 - a;
          b = 1 - b;
        }
        worst_interior = std::max(worst_interior, n.eval(t, Vec3(1 - a - b, a, b)).norm() - 1.0);
      }
    }
    record("discrete_normal_bound", worst_node <= 1e-14 && worst_interior <= 1e-14,
           "nodal |n|-1 " + io::format_g17(worst_node) + ", interior excess " +
               io::format_g17(worst_interior));
  }

  // 9. Isometry defect scaling: C = defect/(H |hess| |grad|) stable on the
  // rough family; the smooth cylinder family stays below the same bound.
  {
    std::vector<double> constants;
    std::vector<double> cylinder_ratio;
    for (int level : {4, 8, 16}) {
      const auto mesh = plate::build_rect_mesh(1.0, 1.0, level, level);
      const dkt::DktSpace space(mesh);
      const double H = mesh.max_diameter();
      minimize::SeedSpec seed;
      seed.kind = minimize::SeedKind::Perturbed;
      seed.sigma = 0.2;
      seed.rng_seed = cfg.seed + 300;
      const auto w = minimize::seed_deformation(seed, mesh, nullptr);
      const double defect = dkt::isometry_defect(w, space);
      constants.push_back(defect / (H * dkt::hessian_l2_norm(w, space) *
                                    dkt::theta_l2_norm(w, space)));
      const auto wc = dkt::interpolate_dkt(dkt::cylinder(1.0, 1), mesh);
      cylinder_ratio.push_back(dkt::isometry_defect(wc, space) /
                               (H * dkt::hessian_l2_norm(wc, space) *
                                dkt::theta_l2_norm(wc, space)));
    }
    const double lo = *std::min_element(constants.begin(), constants.end());
    const double hi = *std::max_element(constants.begin(), constants.end());
    const double cyl_max = *std::max_element(cylinder_ratio.begin(), cylinder_ratio.end());
    const bool pass = hi <= 2.0 * lo && cyl_max <= 2.0 * hi;
    record("isometry_defect_scaling", pass,
           "rough-family C " + io::format_g17(constants[0]) + ", " + io::format_g17(constants[1]) +
               ", " + io::format_g17(constants[2]) + "; cylinder max " + io::format_g17(cyl_max));
  }

  // 10. Macro quadrature error scaling for W^{1,inf} x P1 x P1 integrands.
  {
    std::mt19937_64 rng(cfg.seed + 97);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto f = [](const Vec2& s) { return std::exp(s[0]) * std::cos(2.0 * s[1]); };
    auto grad_f = [](const Vec2& s) {
      return Vec2(std::exp(s[0]) * std::cos(2.0 * s[1]), -2.0 * std::exp(s[0]) * std::sin(2.0 * s[1]));
    };
    std::vector<double> level_ratio;
    for (int level : {2, 4, 8}) {
      const auto mesh = plate::build_rect_mesh(1.0, 1.0, level, level);
      double worst = 0;
      for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec2 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
        // Random affine g, ghat on this triangle.
        Vec3 gc, hc;
        for (int i = 0; i < 3; ++i) gc[i] = unif(rng);
        for (int i = 0; i < 3; ++i) hc[i] = unif(rng);
        auto lin = [&](const Vec3& coeff, const Vec2& s) {
          return coeff[0] + coeff[1] * s[0] + coeff[2] * s[1];
        };
        auto integrand = [&](const Vec2& s) { return f(s) * lin(gc, s) * lin(hc, s); };
        const double exact = integrate_triangle_subdivided(integrand, a, b, c, 2);
        double quad = 0;
        for (int q = 0; q < 3; ++q)
          quad += (mesh.area[t] / 3.0) * integrand(plate::MacroQuadratureRule::point(mesh, t, q));
        // W^{1,inf} norm of f sampled at vertices and midpoints.
        double fnorm = 0;
        for (const Vec2& p : {a, b, c, Vec2(0.5 * (a + b)), Vec2(0.5 * (b + c)), Vec2(0.5 * (c + a))})
          fnorm = std::max(fnorm, std::abs(f(p)) + grad_f(p).norm());
        auto l2 = [&](const Vec3& coeff) {
          auto sq = [&](const Vec2& s) { return lin(coeff, s) * lin(coeff, s); };
          return std::sqrt(integrate_triangle_subdivided(sq, a, b, c, 0));
        };
        const double denom = mesh.diameter[t] * fnorm * l2(gc) * l2(hc);
        if (denom > 0) worst = std::max(worst, std::abs(quad - exact) / denom);
      }
      level_ratio.push_back(worst);
    }
    const bool bounded = level_ratio[1] <= 2.0 * level_ratio[0] + 1e-12 &&
                         level_ratio[2] <= 2.0 * level_ratio[0] + 1e-12;
    record("macro_quadrature_error_scaling", bounded,
           "max ratios " + io::format_g17(level_ratio[0]) + ", " + io::format_g17(level_ratio[1]) +
               ", " + io::format_g17(level_ratio[2]));
  }

  json j;
  j["results"] = json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    j["results"].push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    all_pass = all_pass && r.pass;
  }
  j["all_pass"] = all_pass;
  io::write_text_atomic(cfg.out_dir / "check.json", j.dump(2) + "\n");
  out << (all_pass ? "all checks passed\n" : "CHECK FAILURES PRESENT\n");
  return all_pass ? 0 : 3;
}

int dispatch(const std::string& command, const RunConfig& cfg, std::ostream& out,
             std::ostream& err) {
  try {
    if (command == "cell") return run_cell(cfg, out);
    if (command == "simulate") return run_simulate(cfg, out);
    if (command == "converge") return run_converge(cfg, out);
    if (command == "check") return run_check(cfg, out);
    err << "unknown command: " << command << "\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace microbend::harness
