#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace microbend {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

// Third-order tensor in R^{3x2x2}. Slab i is the 2x2 matrix A[i] with
// A[i](j,k) = the (j,k) entry of the i-th component slab; for a discrete
// Hessian this reads A[i](j,k) = d_j (theta_H)_{ik}.
using Tensor322 = std::array<Mat2, 3>;

inline Tensor322 zero_tensor322() { return {Mat2::Zero(), Mat2::Zero(), Mat2::Zero()}; }

inline Tensor322 outer(const Vec3& a, const Mat2& A) {
  return {a[0] * A, a[1] * A, a[2] * A};
}

// a . A, contracting the first index.
inline Mat2 contract_first(const Vec3& a, const Tensor322& A) {
  return a[0] * A[0] + a[1] * A[1] + a[2] * A[2];
}

inline double inner(const Tensor322& A, const Tensor322& B) {
  double r = 0;
  for (int i = 0; i < 3; ++i) r += A[i].cwiseProduct(B[i]).sum();
  return r;
}

// Configuration or input data fails an invariant; CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A linear or nonlinear solve failed; CLI exit code 2.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace microbend
