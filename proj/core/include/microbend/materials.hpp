#pragma once

#include <optional>
#include <vector>

#include "microbend/common.hpp"

namespace microbend::materials {

// Isotropic constituent of the composite. The induced elasticity tensor is
//   L F = 2 mu sym(F) + lambda tr(F) I.
struct IsotropicLame {
  double lambda = 0.0;
  double mu = 0.0;

  void validate() const;
};

Mat3 apply_elasticity(const IsotropicLame& lame, const Mat3& F);

// <L F, F> = 2 mu |sym F|^2 + lambda (tr F)^2.
double quadratic_form(const IsotropicLame& lame, const Mat3& F);

// Two-sided ellipticity constant c0 with (1/c0)|G|^2 <= <L G,G> <= c0 |G|^2
// for symmetric G.
double ellipticity_constant(const IsotropicLame& lame);

// Scalar coefficient on S x Box: affine grading in the macro variable plus an
// optional sinusoidal oscillation in one micro coordinate.
struct ScalarField {
  double base = 0.0;
  double grad_s1 = 0.0;
  double grad_s2 = 0.0;
  double micro_sin_amp = 0.0;
  int micro_sin_axis = 0;  // 0,1,2 -> y1,y2,y3

  double eval(const Vec2& s, const Vec3& y) const;
  bool uniform_in_s() const { return grad_s1 == 0.0 && grad_s2 == 0.0; }
  bool uniform_in_y() const { return micro_sin_amp == 0.0; }
};

inline ScalarField constant_field(double v) { return ScalarField{v, 0, 0, 0, 0}; }

// Axis-aligned box inside the RVE (0,1)^2 x (-1/2,1/2).
struct RegionBox {
  Vec3 lo;
  Vec3 hi;

  void validate() const;
  bool contains(const Vec3& y) const;        // closed box
  bool strictly_contains(const Vec3& y) const;
  double volume() const;
};

enum class PrestrainKind { ConstantMatrix, ScalarIdentity, LinearInY3 };

// Per-region prestrain rule: a constant symmetric matrix, rho(s,y) * I, or
// the through-thickness field y -> y3 * iota(A).
struct PrestrainRule {
  PrestrainKind kind = PrestrainKind::ConstantMatrix;
  Mat3 constant = Mat3::Zero();   // ConstantMatrix
  ScalarField rho;                // ScalarIdentity
  Mat2 curvature = Mat2::Zero();  // LinearInY3: A

  Mat3 eval(const Vec2& s, const Vec3& y) const;
  void validate() const;
};

struct MaterialRegion {
  RegionBox box;
  ScalarField lambda;
  ScalarField mu;
  PrestrainRule prestrain;
};

struct MaterialSample {
  IsotropicLame lame;
  Mat3 prestrain = Mat3::Zero();
};

// Piecewise definition of L(s,y) and B(s,y) over the RVE.
struct MaterialSpec {
  std::vector<MaterialRegion> regions;

  // Checks the region tiling, the Lame invariants on a sample grid, and the
  // Lipschitz bound of the macro modulation by difference quotients.
  void validate() const;

  bool macro_uniform() const;
  // True when only the prestrain (not the stiffness) varies with s.
  bool lame_macro_uniform() const;
  // Interior region faces orthogonal to the given axis; micro meshes must
  // place grid planes there.
  std::vector<double> region_planes(int axis) const;
  // Worst-case (largest) ellipticity constant over sampled (s,y).
  double ellipticity_constant() const;

  MaterialSample sample(const Vec2& s, const Vec3& y,
                        std::optional<int> region_hint = std::nullopt) const;
  int region_index(const Vec3& y, std::optional<int> region_hint = std::nullopt) const;
};

// Built-in catalogs.
MaterialSpec make_homogeneous(const IsotropicLame& lame, const PrestrainRule& prestrain);
// Split at y3 = 0; `top` applies on y3 > 0.
MaterialSpec make_bilayer(const IsotropicLame& top, const PrestrainRule& prestrain_top,
                          const IsotropicLame& bottom, const PrestrainRule& prestrain_bottom);
// 2x2 in-plane checkerboard of two constituents, uniform through thickness.
MaterialSpec make_checkerboard(const IsotropicLame& a, const IsotropicLame& b,
                               const PrestrainRule& prestrain);

}  // namespace microbend::materials
