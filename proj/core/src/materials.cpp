#include "microbend/materials.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace microbend::materials {

void IsotropicLame::validate() const {
  if (!(mu > 0.0))
    throw ValidationError("IsotropicLame: mu must be positive, got " + std::to_string(mu));
  if (!(2.0 * mu + lambda > 0.0))
    throw ValidationError("IsotropicLame: 2*mu + lambda must be positive");
  // Needed for positivity on the full symmetric space (bulk mode 2mu+3lambda).
  if (!(2.0 * mu + 3.0 * lambda > 0.0))
    throw ValidationError("IsotropicLame: 2*mu + 3*lambda must be positive");
}

Mat3 apply_elasticity(const IsotropicLame& lame, const Mat3& F) {
  const Mat3 sym = 0.5 * (F + F.transpose());
  return 2.0 * lame.mu * sym + lame.lambda * F.trace() * Mat3::Identity();
}

double quadratic_form(const IsotropicLame& lame, const Mat3& F) {
  const Mat3 sym = 0.5 * (F + F.transpose());
  const double tr = F.trace();
  return 2.0 * lame.mu * sym.squaredNorm() + lame.lambda * tr * tr;
}

double ellipticity_constant(const IsotropicLame& lame) {
  const double two_mu = 2.0 * lame.mu;
  const double bulk = 2.0 * lame.mu + 3.0 * lame.lambda;
  return std::max({bulk, two_mu, 1.0 / two_mu, 1.0 / bulk});
}

double ScalarField::eval(const Vec2& s, const Vec3& y) const {
  double v = base + grad_s1 * s[0] + grad_s2 * s[1];
  if (micro_sin_amp != 0.0)
    v += micro_sin_amp * std::sin(2.0 * std::numbers::pi * y[micro_sin_axis]);
  return v;
}

void RegionBox::validate() const {
  for (int a = 0; a < 3; ++a)
    if (!(lo[a] < hi[a])) throw ValidationError("RegionBox: lo < hi violated on axis " + std::to_string(a));
}

bool RegionBox::contains(const Vec3& y) const {
  for (int a = 0; a < 3; ++a)
    if (y[a] < lo[a] || y[a] > hi[a]) return false;
  return true;
}

bool RegionBox::strictly_contains(const Vec3& y) const {
  for (int a = 0; a < 3; ++a)
    if (y[a] <= lo[a] || y[a] >= hi[a]) return false;
  return true;
}

double RegionBox::volume() const { return (hi - lo).prod(); }

Mat3 PrestrainRule::eval(const Vec2& s, const Vec3& y) const {
  switch (kind) {
    case PrestrainKind::ConstantMatrix:
      return constant;
    case PrestrainKind::ScalarIdentity:
      return rho.eval(s, y) * Mat3::Identity();
    case PrestrainKind::LinearInY3: {
      Mat3 b = Mat3::Zero();
      b.topLeftCorner<2, 2>() = y[2] * curvature;
      return b;
    }
  }
  return Mat3::Zero();
}

void PrestrainRule::validate() const {
  if (kind == PrestrainKind::ConstantMatrix &&
      (constant - constant.transpose()).norm() > 1e-14 * (1.0 + constant.norm()))
    throw ValidationError("PrestrainRule: constant prestrain matrix must be symmetric");
  if (kind == PrestrainKind::LinearInY3 &&
      (curvature - curvature.transpose()).norm() > 1e-14 * (1.0 + curvature.norm()))
    throw ValidationError("PrestrainRule: curvature matrix must be symmetric");
}

namespace {

const RegionBox kRveBox{Vec3(0, 0, -0.5), Vec3(1, 1, 0.5)};

// Sample s-points used for validating macro modulation and ellipticity.
const std::array<Vec2, 5> kMacroProbes = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), Vec2(1, 1),
                                          Vec2(0.5, 0.5)};

}  // namespace

void MaterialSpec::validate() const {
  if (regions.empty()) throw ValidationError("MaterialSpec: no regions");
  double vol = 0.0;
  for (const auto& r : regions) {
    r.box.validate();
    r.prestrain.validate();
    if (!kRveBox.contains(r.box.lo) || !kRveBox.contains(r.box.hi))
      throw ValidationError("MaterialSpec: region exceeds the RVE box");
    vol += r.box.volume();
  }
  if (std::abs(vol - 1.0) > 1e-14 * regions.size())
    throw ValidationError("MaterialSpec: regions do not tile the RVE (volume " +
                          std::to_string(vol) + ")");
  // Pairwise disjoint interiors.
  for (size_t i = 0; i < regions.size(); ++i)
    for (size_t j = i + 1; j < regions.size(); ++j) {
      const auto& a = regions[i].box;
      const auto& b = regions[j].box;
      bool overlap = true;
      for (int ax = 0; ax < 3; ++ax)
        if (a.hi[ax] <= b.lo[ax] + 1e-15 || b.hi[ax] <= a.lo[ax] + 1e-15) overlap = false;
      if (overlap) throw ValidationError("MaterialSpec: regions overlap");
    }
  // Lame invariants at probe points (micro oscillation extremes included by
  // sampling the sine at +-1 via quarter-period points).
  for (const auto& r : regions) {
    const Vec3 mid = 0.5 * (r.box.lo + r.box.hi);
    for (const auto& s : kMacroProbes) {
      for (double phase : {0.0, 0.25, 0.5, 0.75}) {
        Vec3 y = mid;
        int ax = r.lambda.micro_sin_axis;
        y[ax] = r.box.lo[ax] + phase * (r.box.hi[ax] - r.box.lo[ax]);
        IsotropicLame lame{r.lambda.eval(s, y), r.mu.eval(s, y)};
        lame.validate();
      }
    }
  }
}

bool MaterialSpec::macro_uniform() const {
  for (const auto& r : regions) {
    if (!r.lambda.uniform_in_s() || !r.mu.uniform_in_s()) return false;
    if (r.prestrain.kind == PrestrainKind::ScalarIdentity && !r.prestrain.rho.uniform_in_s())
      return false;
  }
  return true;
}

bool MaterialSpec::lame_macro_uniform() const {
  for (const auto& r : regions)
    if (!r.lambda.uniform_in_s() || !r.mu.uniform_in_s()) return false;
  return true;
}

std::vector<double> MaterialSpec::region_planes(int axis) const {
  std::vector<double> planes;
  for (const auto& r : regions) {
    for (double c : {r.box.lo[axis], r.box.hi[axis]}) {
      if (std::abs(c - kRveBox.lo[axis]) < 1e-14 || std::abs(c - kRveBox.hi[axis]) < 1e-14)
        continue;
      bool found = false;
      for (double p : planes)
        if (std::abs(p - c) < 1e-14) found = true;
      if (!found) planes.push_back(c);
    }
  }
  std::sort(planes.begin(), planes.end());
  return planes;
}

double MaterialSpec::ellipticity_constant() const {
  double c0 = 0.0;
  for (const auto& r : regions) {
    const Vec3 mid = 0.5 * (r.box.lo + r.box.hi);
    for (const auto& s : kMacroProbes) {
      for (double phase : {0.0, 0.25, 0.5, 0.75}) {
        Vec3 y = mid;
        int ax = r.lambda.micro_sin_axis;
        y[ax] = r.box.lo[ax] + phase * (r.box.hi[ax] - r.box.lo[ax]);
        IsotropicLame lame{r.lambda.eval(s, y), r.mu.eval(s, y)};
        c0 = std::max(c0, materials::ellipticity_constant(lame));
      }
    }
  }
  return c0;
}

int MaterialSpec::region_index(const Vec3& y, std::optional<int> region_hint) const {
  if (!kRveBox.contains(y)) {
    std::ostringstream os;
    os << "MaterialSpec: point (" << y.transpose() << ") outside the RVE box";
    throw std::domain_error(os.str());
  }
  if (region_hint) {
    int i = *region_hint;
    if (i < 0 || i >= static_cast<int>(regions.size()) || !regions[i].box.contains(y))
      throw std::invalid_argument("MaterialSpec: region hint does not contain the point");
    return i;
  }
  int found = -1;
  for (size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].box.strictly_contains(y)) return static_cast<int>(i);
    if (regions[i].box.contains(y)) {
      if (found >= 0)
        throw std::invalid_argument(
            "MaterialSpec: point lies on a region face; supply a region hint");
      found = static_cast<int>(i);
    }
  }
  if (found < 0) throw std::domain_error("MaterialSpec: point not covered by any region");
  return found;
}

MaterialSample MaterialSpec::sample(const Vec2& s, const Vec3& y,
                                    std::optional<int> region_hint) const {
  const auto& r = regions[region_index(y, region_hint)];
  MaterialSample out;
  out.lame = IsotropicLame{r.lambda.eval(s, y), r.mu.eval(s, y)};
  out.prestrain = r.prestrain.eval(s, y);
  return out;
}

MaterialSpec make_homogeneous(const IsotropicLame& lame, const PrestrainRule& prestrain) {
  MaterialSpec spec;
  spec.regions.push_back({kRveBox, constant_field(lame.lambda), constant_field(lame.mu), prestrain});
  return spec;
}

MaterialSpec make_bilayer(const IsotropicLame& top, const PrestrainRule& prestrain_top,
                          const IsotropicLame& bottom, const PrestrainRule& prestrain_bottom) {
  MaterialSpec spec;
  RegionBox lower{Vec3(0, 0, -0.5), Vec3(1, 1, 0.0)};
  RegionBox upper{Vec3(0, 0, 0.0), Vec3(1, 1, 0.5)};
  spec.regions.push_back(
      {lower, constant_field(bottom.lambda), constant_field(bottom.mu), prestrain_bottom});
  spec.regions.push_back({upper, constant_field(top.lambda), constant_field(top.mu), prestrain_top});
  return spec;
}

MaterialSpec make_checkerboard(const IsotropicLame& a, const IsotropicLame& b,
                               const PrestrainRule& prestrain) {
  MaterialSpec spec;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      RegionBox box{Vec3(0.5 * i, 0.5 * j, -0.5), Vec3(0.5 * (i + 1), 0.5 * (j + 1), 0.5)};
      const IsotropicLame& m = ((i + j) % 2 == 0) ? a : b;
      spec.regions.push_back({box, constant_field(m.lambda), constant_field(m.mu), prestrain});
    }
  return spec;
}

}  // namespace microbend::materials
