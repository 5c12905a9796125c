#pragma once

#include <array>
#include <functional>
#include <vector>

#include "microbend/common.hpp"

namespace microbend::plate {

struct Edge {
  int v0, v1;       // v0 < v1
  Vec2 tangent;     // unit, from v0 to v1
  Vec2 normal;      // unit, tangent rotated by +90 degrees
  Vec2 midpoint;
  bool boundary = false;
};

// Conforming triangulation of the polygonal midplane S. Triangles are
// counterclockwise; triangle_edges[t][l] is the edge opposite local vertex l.
struct Triangulation {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> triangle_edges;
  std::vector<double> area;
  std::vector<double> diameter;
  std::vector<Vec2> centroid;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  double max_diameter() const;      // H
  double total_area() const;
  double shape_regularity() const;  // max over T of H_T / inradius(T)
  double min_angle() const;
};

// Builds the edge structure and per-triangle geometry from vertices and
// triangle indices; fixes orientation to counterclockwise.
Triangulation make_triangulation(std::vector<Vec2> vertices,
                                 std::vector<std::array<int, 3>> triangles,
                                 double max_shape_ratio = 20.0);

// Structured mesh of (0,width) x (0,height), each quad split along one diagonal.
Triangulation build_rect_mesh(double width, double height, int nx, int ny);

// Splits every triangle into four congruent children.
Triangulation uniform_refine(const Triangulation& mesh);

// Edge-midpoint quadrature: three points per triangle with weight |T|/3,
// exact on quadratic polynomials.
struct MacroQuadratureRule {
  static constexpr int points_per_triangle = 3;
  // Point q of triangle t is the midpoint of triangle_edges[t][q].
  static Vec2 point(const Triangulation& mesh, int t, int q);
  static double weight(const Triangulation& mesh, int t);
};

double macro_integrate(const Triangulation& mesh, const std::function<double(const Vec2&)>& f);

enum class Side { Left, Right, Bottom, Top };

// Boundary edges whose endpoints both lie on the given sides of the bounding
// box (tolerance-based, so the selection is stable across refinements).
std::vector<int> select_boundary_edges(const Triangulation& mesh, const std::vector<Side>& sides);
std::vector<int> all_boundary_edges(const Triangulation& mesh);

// Mesh nodes at which value and gradient are clamped, sorted ascending.
std::vector<int> nodes_of_edges(const Triangulation& mesh, const std::vector<int>& edge_ids);

// Prescribed affine isometry u_D(s) = R (s1,s2)^T + b with orthonormal columns.
struct DirichletData {
  Mat32 R = (Mat32() << 1, 0, 0, 1, 0, 0).finished();
  Vec3 b = Vec3::Zero();
  std::vector<int> nodes;  // clamped node set

  Vec3 value(const Vec2& s) const { return R * s + b; }
  const Mat32& gradient() const { return R; }
  void validate() const;
};

}  // namespace microbend::plate
