#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "microbend/dkt.hpp"
#include "microbend/energy.hpp"
#include "microbend/plate.hpp"

namespace microbend::minimize {

using dkt::DktDeformation;
using dkt::DktSpace;
using plate::Triangulation;

// Nearest matrix with orthonormal columns (Frobenius), U V^T from the thin
// singular decomposition. Throws SolverError for rank-deficient input.
Mat32 polar_retraction(const Mat32& F);

// Removes the normal component at a Stiefel point: g - F sym(F^T g).
Mat32 tangent_project(const Mat32& g, const Mat32& F);

enum class Preconditioner { None, Metric };

struct SolveConfig {
  int max_iterations = 1000;
  double grad_tol = 1e-6;
  double armijo_slope = 0.2;  // fraction of the predicted decrease, in (0,1)
  double backtrack = 0.5;
  double initial_step = 1.0;  // also the cap for the adaptive trial step
  int max_backtracks = 60;
  Preconditioner preconditioner = Preconditioner::Metric;
  // Relative diagonal shift added to the quadratic-part operator.
  double metric_regularization = 1e-4;

  void validate() const;
};

struct IterationRecord {
  int iter;
  double energy;
  double grad_norm;
  double step;
  double max_violation;
};

struct IterationReport {
  std::vector<IterationRecord> rows;
  bool converged = false;
  bool aborted = false;  // line-search failure
  std::string message;
};

enum class SeedKind { Flat, Cylinder, Perturbed };

struct SeedSpec {
  SeedKind kind = SeedKind::Flat;
  double kappa = 1.0;  // cylinder curvature
  int axis = 1;        // cylinder bending direction (1 or 2)
  double sigma = 0.1;  // perturbation scale
  std::uint64_t rng_seed = 0;
};

// Member of the admissible set: nodewise isometric, clamped nodes set from bc.
// Perturbations are drawn in tangent directions and retracted; deterministic
// for a fixed rng seed.
DktDeformation seed_deformation(const SeedSpec& seed, const Triangulation& mesh,
                                const plate::DirichletData* bc);

// Riemannian gradient descent over values in R^3 and nodal frames on the
// Stiefel manifold, with polar retraction and Armijo backtracking.
std::pair<DktDeformation, IterationReport> minimize_energy(const DktDeformation& w0,
                                                           const DktSpace& space,
                                                           const energy::CoefficientField& coeffs,
                                                           const plate::DirichletData* bc,
                                                           const SolveConfig& cfg);

}  // namespace microbend::minimize
