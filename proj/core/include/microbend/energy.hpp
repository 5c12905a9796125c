#pragma once

#include <functional>
#include <vector>

#include <Eigen/SparseCore>

#include "microbend/common.hpp"
#include "microbend/dkt.hpp"
#include "microbend/plate.hpp"
#include "microbend/rve.hpp"

namespace microbend::energy {

using dkt::DktDeformation;
using dkt::DktSpace;
using plate::Triangulation;

enum class CoefficientProvenance { CellSolve, Analytic };

struct CoefficientPoint {
  Mat3 Qhat = Mat3::Zero();
  Mat2 Beff = Mat2::Zero();
  CoefficientProvenance provenance = CoefficientProvenance::Analytic;
};

// Effective coefficients at the macro quadrature points (edge midpoints);
// immutable once built. Entry (t, q) matches MacroQuadratureRule indexing.
class CoefficientField {
 public:
  CoefficientField() = default;
  CoefficientField(const Triangulation& mesh, std::vector<CoefficientPoint> points);

  const CoefficientPoint& at(int t, int q) const;
  int num_triangles() const { return num_triangles_; }

 private:
  int num_triangles_ = 0;
  std::vector<CoefficientPoint> points_;
};

// Cell solves at every quadrature point. Solves once when the spec has no
// macro variation; reuses correctors across points when only the prestrain
// varies with s (the stiffness part of the cell problem is s-independent).
CoefficientField build_coefficients_cell(const Triangulation& mesh,
                                         const materials::MaterialSpec& spec, double gamma,
                                         const rve::RveMesh& rve_mesh, int threads = 1);

CoefficientField build_coefficients_analytic(const Triangulation& mesh,
                                             const std::function<Mat3(const Vec2&)>& qhat,
                                             const std::function<Mat2(const Vec2&)>& beff);

// <L A, C> = sum_i <L_hom (e_i . A), e_i . C>; symmetric and positive
// semidefinite in A.
double contract_third_order(const Mat3& Qhat, const Tensor322& A, const Tensor322& C);

struct EnergyReport {
  double total = 0;
  double quadratic = 0;  // G_S[<L grad grad_H w, grad grad_H w>]
  double coupling = 0;   // G_S[2 <L grad grad_H w, n_H x B_eff>]
  std::vector<double> per_triangle;
};

EnergyReport assemble_energy(const DktDeformation& w, const DktSpace& space,
                             const CoefficientField& coeffs);

// Exact derivative of assemble_energy with respect to all nodal dofs
// (dkt::flatten layout), including the normal's dependence on the nodal
// gradients through the cross product. Clamped dofs are not masked here.
Eigen::VectorXd assemble_gradient(const DktDeformation& w, const DktSpace& space,
                                  const CoefficientField& coeffs);

// Sparse Hessian of the quadratic energy part (constant in w); used by the
// metric preconditioner. Block-diagonal across the three components.
Eigen::SparseMatrix<double> quadratic_hessian(const DktSpace& space,
                                              const CoefficientField& coeffs);

// int_S Q_hom(s, II_u - B_eff) ds for a closed-form isometry, by a degree-5
// rule per triangle. Validation reference for the reformulated energy.
double reference_energy_original(const dkt::AnalyticDeformation& u,
                                 const std::function<Mat3(const Vec2&)>& qhat,
                                 const std::function<Mat2(const Vec2&)>& beff,
                                 const Triangulation& mesh);

// G_S[Q_hom(s, B_eff(s))], the deformation-independent offset between the
// reformulated and the original energy.
double reformulation_offset(const CoefficientField& coeffs, const Triangulation& mesh);

}  // namespace microbend::energy
