#pragma once

#include <array>
#include <functional>
#include <vector>

#include "microbend/common.hpp"
#include "microbend/materials.hpp"

namespace microbend::rve {

// Embedding iota : R^{2x2} -> R^{3x3}, top-left block G, third row/column zero.
Mat3 iota(const Mat2& G);

// Orthonormal basis G1, G2, G3 of Sym(2):
//   G1 = e1 x e1, G2 = e2 x e2, G3 = (e1 x e2 + e2 x e1)/sqrt(2).
const std::array<Mat2, 3>& sym_basis();
// Coefficients of sym(A) relative to the basis.
Vec3 sym_coeffs(const Mat2& A);
Mat2 from_sym_coeffs(const Vec3& a);

// Axis-aligned hexahedral partition of the RVE (0,1)^2 x (-1/2,1/2).
// Element (ex,ey,ez) has index ex + nx*(ey + ny*ez); node (i,j,k) has index
// i + (nx+1)*(j + (ny+1)*k).
struct RveMesh {
  std::array<std::vector<double>, 3> lines;
  // Region of each element in the generating MaterialSpec.
  std::vector<int> element_region;

  int nx() const { return static_cast<int>(lines[0].size()) - 1; }
  int ny() const { return static_cast<int>(lines[1].size()) - 1; }
  int nz() const { return static_cast<int>(lines[2].size()) - 1; }
  int num_elements() const { return nx() * ny() * nz(); }
  int num_nodes() const { return (nx() + 1) * (ny() + 1) * (nz() + 1); }
  int node_index(int i, int j, int k) const {
    return i + (nx() + 1) * (j + (ny() + 1) * k);
  }
  Vec3 node(int i, int j, int k) const {
    return Vec3(lines[0][i], lines[1][j], lines[2][k]);
  }
  double h() const;           // max element edge
  double max_aspect() const;  // max over elements of max-edge/min-edge
};

// Uniform divisions per axis; refuses if a region face of `spec` does not land
// on a grid plane.
RveMesh build_rve_mesh(const std::array<int, 3>& divisions, const materials::MaterialSpec& spec,
                       double max_aspect = 16.0);
// Explicit grid lines (must cover the box and contain all region faces).
RveMesh build_rve_mesh(const std::array<std::vector<double>, 3>& lines,
                       const materials::MaterialSpec& spec, double max_aspect = 16.0);

// Identifies y1=0 with y1=1 and y2=0 with y2=1 faces; the transverse faces
// remain distinct. Scalar nodes only; vector dofs are 3 per scalar node.
struct PeriodicDofMap {
  explicit PeriodicDofMap(const RveMesh& mesh);
  int scalar_node(int i, int j, int k) const {
    return (i % nx_) + nx_ * ((j % ny_) + ny_ * k);
  }
  int num_scalar_nodes() const { return nx_ * ny_ * (nz_ + 1); }

 private:
  int nx_, ny_, nz_;
};

// Tensor-product 2-point Gauss rule on [0,1]^3 (8 points). Q1-unisolvent and
// exact on tri-cubic polynomials.
struct MicroQuadratureRule {
  std::vector<Vec3> points;
  std::vector<double> weights;
  static const MicroQuadratureRule& gauss2();
};

double micro_integrate(const RveMesh& mesh, const MicroQuadratureRule& rule,
                       const std::function<double(const Vec3&)>& f);

// Solution of one discrete cell problem: affine part M plus in-plane-periodic
// nodal displacements phi (mean zero), for aspect ratio gamma.
struct Corrector {
  Mat2 M = Mat2::Zero();
  Eigen::VectorXd phi;  // 3 * num_scalar_nodes, layout 3*node + component
  double gamma = 1.0;
};

struct CellOutputs {
  Mat3 Qhat = Mat3::Zero();
  Vec3 Bhat = Vec3::Zero();
  Mat2 Beff = Mat2::Zero();
  std::array<Corrector, 3> correctors;
};

struct CellSolveOptions {
  double rel_residual_tol = 1e-12;
};

// Solves the three basis corrector problems at macro point s against one
// factorization and assembles Qhat, Bhat and Beff (Qhat * Beff_coeffs = Bhat).
CellOutputs solve_correctors(const materials::MaterialSpec& spec, const Vec2& s, double gamma,
                             const RveMesh& mesh, const CellSolveOptions& opts = {});

// G_Box[<L(s,y)(iota(y3 G_i) + grad_gamma theta_i), B(s,y)>] for solved
// correctors. When the stiffness has no macro variation the correctors and
// Qhat are s-independent, so only this integral needs recomputing per s.
Vec3 assemble_bhat(const materials::MaterialSpec& spec, const Vec2& s, const RveMesh& mesh,
                   const std::array<Corrector, 3>& correctors);

// Q_hom(G) = sum_ij Qhat_ij (sym G)^_i (sym G)^_j.
double qhom_eval(const Mat3& Qhat, const Mat2& G);
// L_hom F as a 2x2 matrix, the polarization of qhom_eval.
Mat2 lhom_apply(const Mat3& Qhat, const Mat2& F);

// Closed-form effective stiffness of a homogeneous isotropic plate,
//   Q_hom(G) = (1/12) (2 mu |G|^2 + (2 mu lambda / (2 mu + lambda)) (tr G)^2),
// expressed in the sym_basis coordinates. Used by the analytic-coefficient
// mode; independent of the cell solver.
Mat3 analytic_qhat_homogeneous(const materials::IsotropicLame& lame);

// The scaled-gradient strain iota(y3 G_i) + iota(M) + grad_gamma(phi) of a
// solved corrector, evaluated at a reference point r in element (ex,ey,ez).
Mat3 corrector_strain(const RveMesh& mesh, const PeriodicDofMap& dofs, const Corrector& c,
                      int basis_index, int ex, int ey, int ez, const Vec3& r);

// H1(Box) norm of the corrector field theta = iota(M) y + phi.
double corrector_h1_norm(const RveMesh& mesh, const PeriodicDofMap& dofs, const Corrector& c);

// Galerkin residual G_Box[<L (iota(y3 G_i) + grad_gamma theta_i), grad_gamma theta_j>],
// zero for the solved correctors up to solver tolerance.
double galerkin_residual(const materials::MaterialSpec& spec, const Vec2& s, const RveMesh& mesh,
                         const CellOutputs& cell, int i, int j);

}  // namespace microbend::rve
