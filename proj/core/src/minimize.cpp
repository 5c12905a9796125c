#include "microbend/minimize.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>

namespace microbend::minimize {

Mat32 polar_retraction(const Mat32& F) {
  // Thin factors of fixed-size matrices are not available in JacobiSVD;
  // take the first two columns of the full U.
  Eigen::JacobiSVD<Mat32, Eigen::FullPivHouseholderQRPreconditioner> svd(
      F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv[1] > 1e-12 * std::max(sv[0], 1e-300)))
    throw SolverError("polar_retraction: rank-deficient frame (step too large?)");
  return svd.matrixU().leftCols<2>() * svd.matrixV().transpose();
}

Mat32 tangent_project(const Mat32& g, const Mat32& F) {
  const Mat2 ftg = F.transpose() * g;
  return g - F * (0.5 * (ftg + ftg.transpose()));
}

void SolveConfig::validate() const {
  if (max_iterations < 0) throw ValidationError("SolveConfig: max_iterations < 0");
  if (!(grad_tol > 0)) throw ValidationError("SolveConfig: grad_tol must be positive");
  if (!(armijo_slope > 0 && armijo_slope < 1))
    throw ValidationError("SolveConfig: armijo_slope must be in (0,1)");
  if (!(backtrack > 0 && backtrack < 1))
    throw ValidationError("SolveConfig: backtrack factor must be in (0,1)");
  if (!(initial_step > 0)) throw ValidationError("SolveConfig: initial_step must be positive");
}

namespace {

std::vector<bool> clamped_mask(const Triangulation& mesh, const plate::DirichletData* bc) {
  std::vector<bool> clamped(mesh.num_vertices(), false);
  if (bc)
    for (int v : bc->nodes) clamped[v] = true;
  return clamped;
}

void apply_bc(DktDeformation& w, const plate::DirichletData* bc, const Triangulation& mesh) {
  if (!bc) return;
  for (int v : bc->nodes) {
    w.value[v] = bc->value(mesh.vertices[v]);
    w.gradient[v] = bc->gradient();
  }
}

// Zero the 9 dofs of every clamped vertex.
void mask_clamped(Eigen::VectorXd& g, const std::vector<bool>& clamped) {
  for (size_t v = 0; v < clamped.size(); ++v)
    if (clamped[v]) g.segment<9>(9 * v).setZero();
}

void project_frames(Eigen::VectorXd& g, const DktDeformation& w) {
  for (size_t v = 0; v < w.gradient.size(); ++v) {
    Eigen::Map<Mat32> gf(g.data() + 9 * v + 3);
    gf = tangent_project(gf, w.gradient[v]);
  }
}

}  // namespace

DktDeformation seed_deformation(const SeedSpec& seed, const Triangulation& mesh,
                                const plate::DirichletData* bc) {
  DktDeformation w;
  switch (seed.kind) {
    case SeedKind::Flat:
      w = dkt::interpolate_dkt(dkt::flat_embedding(), mesh);
      break;
    case SeedKind::Cylinder:
      if (!(seed.kappa != 0)) throw ValidationError("seed_deformation: cylinder needs kappa != 0");
      w = dkt::interpolate_dkt(dkt::cylinder(seed.kappa, seed.axis), mesh);
      break;
    case SeedKind::Perturbed: {
      w = dkt::interpolate_dkt(dkt::flat_embedding(), mesh);
      const auto clamped = clamped_mask(mesh, bc);
      std::mt19937_64 rng(seed.rng_seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (int v = 0; v < mesh.num_vertices(); ++v) {
        Vec3 dv;
        Mat32 dF;
        for (int i = 0; i < 3; ++i) dv[i] = gauss(rng);
        for (int i = 0; i < 3; ++i)
          for (int k = 0; k < 2; ++k) dF(i, k) = gauss(rng);
        if (clamped[v]) continue;  // draws stay in sync regardless of clamping
        w.value[v] += seed.sigma * dv;
        w.gradient[v] =
            polar_retraction(w.gradient[v] + seed.sigma * tangent_project(dF, w.gradient[v]));
      }
      break;
    }
  }
  apply_bc(w, bc, mesh);
  if (dkt::max_isometry_violation(w) > 1e-8)
    throw ValidationError("seed_deformation: seed violates the nodal isometry constraint");
  return w;
}

std::pair<DktDeformation, IterationReport> minimize_energy(const DktDeformation& w0,
                                                           const DktSpace& space,
                                                           const energy::CoefficientField& coeffs,
                                                           const plate::DirichletData* bc,
                                                           const SolveConfig& cfg) {
  cfg.validate();
  const Triangulation& mesh = space.mesh();
  const auto clamped = clamped_mask(mesh, bc);

  if (dkt::max_isometry_violation(w0) > 1e-8)
    throw ValidationError("minimize_energy: initial deformation violates nodal isometry beyond 1e-8");

  DktDeformation w = w0;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (!clamped[v]) w.gradient[v] = polar_retraction(w.gradient[v]);
  apply_bc(w, bc, mesh);

  // Metric operator: quadratic-part Hessian with a relative diagonal shift,
  // clamped dofs replaced by identity rows. Factored once.
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> metric;
  const bool use_metric = cfg.preconditioner == Preconditioner::Metric;
  if (use_metric) {
    Eigen::SparseMatrix<double> H = energy::quadratic_hessian(space, coeffs);
    const double scale = std::max(H.diagonal().maxCoeff(), 1e-12);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(H.nonZeros() + H.rows());
    for (int k = 0; k < H.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(H, k); it; ++it) {
        const bool rc = clamped[it.row() / 9], cc = clamped[it.col() / 9];
        if (!rc && !cc) triplets.emplace_back(it.row(), it.col(), it.value());
      }
    for (int d = 0; d < H.rows(); ++d)
      triplets.emplace_back(d, d, clamped[d / 9] ? scale : cfg.metric_regularization * scale);
    Eigen::SparseMatrix<double> P(H.rows(), H.cols());
    P.setFromTriplets(triplets.begin(), triplets.end());
    metric.compute(P);
    if (metric.info() != Eigen::Success)
      throw SolverError("minimize_energy: metric operator factorization failed");
  }

  IterationReport report;
  double energy_value = energy::assemble_energy(w, space, coeffs).total;
  double step_prev = cfg.initial_step;

  for (int iter = 0; iter <= cfg.max_iterations; ++iter) {
    Eigen::VectorXd grad = energy::assemble_gradient(w, space, coeffs);
    mask_clamped(grad, clamped);
    project_frames(grad, w);
    mask_clamped(grad, clamped);
    const double grad_norm = grad.norm();
    const double violation = dkt::max_isometry_violation(w);

    if (grad_norm <= cfg.grad_tol) {
      report.rows.push_back({iter, energy_value, grad_norm, 0.0, violation});
      report.converged = true;
      report.message = "gradient tolerance reached";
      return {w, report};
    }
    if (iter == cfg.max_iterations) {
      report.rows.push_back({iter, energy_value, grad_norm, 0.0, violation});
      report.message = "maximum iterations reached";
      return {w, report};
    }

    Eigen::VectorXd dir = grad;
    if (use_metric) {
      dir = metric.solve(grad);
      mask_clamped(dir, clamped);
      project_frames(dir, w);
      mask_clamped(dir, clamped);
      const double slope = grad.dot(dir);
      if (!(slope > 0) || !std::isfinite(slope)) dir = grad;  // fall back to plain descent
    }
    const double slope = grad.dot(dir);

    double t = std::min(2.0 * step_prev, cfg.initial_step);
    bool accepted = false;
    DktDeformation trial;
    double trial_energy = 0;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      bool valid = true;
      trial = w;
      try {
        for (int v = 0; v < mesh.num_vertices(); ++v) {
          if (clamped[v]) continue;
          trial.value[v] -= t * dir.segment<3>(9 * v);
          const Eigen::Map<const Mat32> df(dir.data() + 9 * v + 3);
          trial.gradient[v] = polar_retraction(w.gradient[v] - t * df);
        }
      } catch (const SolverError&) {
        valid = false;  // degenerate trial frame: treat as a failed step
      }
      if (valid) {
        trial_energy = energy::assemble_energy(trial, space, coeffs).total;
        if (std::isfinite(trial_energy) &&
            trial_energy <= energy_value - cfg.armijo_slope * t * slope) {
          accepted = true;
          break;
        }
      }
      t *= cfg.backtrack;
    }
    if (!accepted) {
      report.rows.push_back({iter, energy_value, grad_norm, 0.0, violation});
      report.aborted = true;
      report.message = "line search failed after " + std::to_string(cfg.max_backtracks) +
                       " backtracks";
      return {w, report};
    }

    w = std::move(trial);
    energy_value = trial_energy;
    step_prev = t;
    report.rows.push_back({iter, energy_value, grad_norm, t, dkt::max_isometry_violation(w)});
  }
  return {w, report};  // unreachable
}

}  // namespace microbend::minimize
