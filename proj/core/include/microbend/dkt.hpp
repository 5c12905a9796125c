#pragma once

#include <functional>
#include <vector>

#include "microbend/common.hpp"
#include "microbend/plate.hpp"

namespace microbend::dkt {

using plate::Triangulation;

// Macroscopic deformation: value in R^3 and gradient in R^{3x2} per vertex
// (9 scalars per vertex). Per-triangle semantics are the reduced cubic space;
// membership in the admissible set is checked by predicates, not by the type.
struct DktDeformation {
  const Triangulation* mesh = nullptr;
  std::vector<Vec3> value;
  std::vector<Mat32> gradient;
};

// Global scalar dof layout used by energy gradients and the minimizer:
// per vertex v the block [value (3), gradient column-major (6)] at 9*v.
constexpr int kDofsPerVertex = 9;
Eigen::VectorXd flatten(const DktDeformation& w);
DktDeformation unflatten(const Triangulation& mesh, const Eigen::VectorXd& dofs);

// Deformation given in closed form, used for interpolation and references.
struct AnalyticDeformation {
  std::function<Vec3(const Vec2&)> value;
  std::function<Mat32(const Vec2&)> gradient;
  std::function<Tensor322(const Vec2&)> hessian;  // may be empty
};

AnalyticDeformation flat_embedding();
// Isometric roll-up with curvature kappa around the axis transverse to s_axis:
// axis=1 bends in s1, axis=2 bends in s2.
AnalyticDeformation cylinder(double kappa, int axis = 1);

// Nodal interpolation: values and gradients match at every vertex.
DktDeformation interpolate_dkt(const AnalyticDeformation& u, const Triangulation& mesh);

// P2 coefficients of theta_H = grad_H w_H on one triangle: values at the three
// vertices followed by the three edge midpoints (midpoint m is on the edge
// opposite vertex m, matching the macro quadrature indexing).
struct ThetaCoeffs {
  std::array<Mat32, 6> value;
};

// First-order Lagrange coefficients of the discrete normal n_H.
struct NormalField {
  const Triangulation* mesh = nullptr;
  std::vector<Vec3> node_normal;

  Vec3 eval(int t, const Vec3& bary) const;
};

NormalField discrete_normal(const DktDeformation& w);

// Caches the per-triangle reduced-cubic basis (via the 10x10 system of nodal
// functionals plus the center-of-mass constraint) and the derived linear maps
// used by the discrete gradient, hessian, and energy assembly.
class DktSpace {
 public:
  explicit DktSpace(const Triangulation& mesh);

  const Triangulation& mesh() const { return *mesh_; }

  Vec3 barycentric(int t, const Vec2& x) const;
  Vec2 point(int t, const Vec3& bary) const;

  // Reduced cubic evaluation of the deformation and its exact gradient.
  Vec3 eval(const DktDeformation& w, int t, const Vec3& bary) const;
  Mat32 eval_gradient(const DktDeformation& w, int t, const Vec3& bary) const;

  ThetaCoeffs discrete_gradient(const DktDeformation& w, int t) const;
  Mat32 theta_value(const ThetaCoeffs& theta, int t, const Vec3& bary) const;

  // Gradient of the P2 field theta_H; affine in the evaluation point.
  // Component i gives the 2x2 matrix (j,k) -> d_j theta_ik.
  Tensor322 discrete_hessian(const ThetaCoeffs& theta, int t, const Vec3& bary) const;

  // Discrete hessian at macro quadrature point q of triangle t (cached shape
  // gradients; same value as discrete_hessian at the edge midpoint).
  Tensor322 hessian_at_q(const ThetaCoeffs& theta, int t, int q) const;

  // d(discrete hessian at quadrature point q)/d(local scalar dof a); the same
  // 2x2 matrix applies to each of the three vector components.
  const std::array<Mat2, 9>& hessian_sensitivity(int t, int q) const;

  // Local scalar dofs of component comp on triangle t:
  // (w(z_l), d1 w(z_l), d2 w(z_l)) for the three local vertices l.
  Eigen::Matrix<double, 9, 1> local_dofs(const DktDeformation& w, int t, int comp) const;

 private:
  struct TriangleCache {
    double scale;                      // diameter, used to center/scale monomials
    Vec2 center;                       // centroid
    Eigen::Matrix<double, 10, 9> coeff_map;   // local dofs -> cubic coefficients
    Eigen::Matrix<double, 12, 9> theta_map;   // local dofs -> theta at 6 P2 nodes x 2 cols
    std::array<std::array<Mat2, 9>, 3> hess_sens;  // per quad point
    std::array<Eigen::Matrix<double, 2, 6>, 3> p2_grad_at_q;
  };

  const Triangulation* mesh_;
  std::vector<TriangleCache> cache_;

  friend struct DktSpaceTestAccess;
};

// ||(grad_H w)^T grad_H w - I_2||_{L^1(S)} by a degree-5 (7-point) rule; the
// integrand entries are quartic, so the rule upgrade over the energy rule is
// a diagnostic choice documented here, not part of the energy definition.
double isometry_defect(const DktDeformation& w, const DktSpace& space);

// Largest nodal violation max_z ||F(z)^T F(z) - I||_F.
double max_isometry_violation(const DktDeformation& w);

// Area-weighted mean of |n_H . grad grad_H w| over the macro quadrature
// points; equals the curvature magnitude for cylindrical states.
double mean_curvature_estimate(const DktDeformation& w, const DktSpace& space);

// L2(S) norms used by the diagnostics (7-point rule per triangle).
double theta_l2_norm(const DktDeformation& w, const DktSpace& space);
double hessian_l2_norm(const DktDeformation& w, const DktSpace& space);
double sym_hessian_l2_norm(const DktDeformation& w, const DktSpace& space);

}  // namespace microbend::dkt
