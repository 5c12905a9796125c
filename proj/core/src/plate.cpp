#include "microbend/plate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace microbend::plate {

double Triangulation::max_diameter() const {
  double H = 0;
  for (double d : diameter) H = std::max(H, d);
  return H;
}

double Triangulation::total_area() const {
  double a = 0;
  for (double t : area) a += t;
  return a;
}

double Triangulation::shape_regularity() const {
  double worst = 0;
  for (int t = 0; t < num_triangles(); ++t) {
    double perimeter = 0;
    for (int l = 0; l < 3; ++l) {
      const Vec2 a = vertices[triangles[t][l]];
      const Vec2 b = vertices[triangles[t][(l + 1) % 3]];
      perimeter += (b - a).norm();
    }
    const double inradius = 2.0 * area[t] / perimeter;
    worst = std::max(worst, diameter[t] / inradius);
  }
  return worst;
}

double Triangulation::min_angle() const {
  double worst = std::numeric_limits<double>::max();
  for (int t = 0; t < num_triangles(); ++t)
    for (int l = 0; l < 3; ++l) {
      const Vec2 a = vertices[triangles[t][l]];
      const Vec2 b = vertices[triangles[t][(l + 1) % 3]];
      const Vec2 c = vertices[triangles[t][(l + 2) % 3]];
      const Vec2 u = (b - a).normalized();
      const Vec2 v = (c - a).normalized();
      worst = std::min(worst, std::acos(std::clamp(u.dot(v), -1.0, 1.0)));
    }
  return worst;
}

Triangulation make_triangulation(std::vector<Vec2> vertices,
                                 std::vector<std::array<int, 3>> triangles,
                                 double max_shape_ratio) {
  Triangulation mesh;
  mesh.vertices = std::move(vertices);
  mesh.triangles = std::move(triangles);

  mesh.area.resize(mesh.num_triangles());
  mesh.diameter.resize(mesh.num_triangles());
  mesh.centroid.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    auto& tri = mesh.triangles[t];
    for (int v : tri)
      if (v < 0 || v >= mesh.num_vertices())
        throw ValidationError("Triangulation: vertex index out of range");
    const Vec2 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
    double signed_area = 0.5 * ((b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0]);
    if (signed_area < 0) {  // enforce counterclockwise
      std::swap(tri[1], tri[2]);
      signed_area = -signed_area;
    }
    if (!(signed_area > 0)) throw ValidationError("Triangulation: degenerate triangle");
    mesh.area[t] = signed_area;
    mesh.diameter[t] = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    mesh.centroid[t] = (a + b + c) / 3.0;
  }

  // Edge table; conformity = every edge is shared by at most two triangles and
  // identified by its (sorted) endpoints, so hanging nodes are impossible for
  // meshes produced by the generators here.
  std::map<std::pair<int, int>, int> edge_id;
  std::vector<int> edge_use;
  mesh.triangle_edges.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int l = 0; l < 3; ++l) {
      int p = mesh.triangles[t][(l + 1) % 3];
      int q = mesh.triangles[t][(l + 2) % 3];
      if (p > q) std::swap(p, q);
      auto [it, inserted] = edge_id.try_emplace({p, q}, static_cast<int>(mesh.edges.size()));
      if (inserted) {
        Edge e;
        e.v0 = p;
        e.v1 = q;
        const Vec2 d = mesh.vertices[q] - mesh.vertices[p];
        e.tangent = d.normalized();
        e.normal = Vec2(-e.tangent[1], e.tangent[0]);
        e.midpoint = 0.5 * (mesh.vertices[p] + mesh.vertices[q]);
        mesh.edges.push_back(e);
        edge_use.push_back(0);
      }
      mesh.triangle_edges[t][l] = it->second;
      edge_use[it->second]++;
    }
  for (size_t e = 0; e < mesh.edges.size(); ++e) {
    if (edge_use[e] > 2) throw ValidationError("Triangulation: non-conforming mesh (edge shared by >2 triangles)");
    mesh.edges[e].boundary = (edge_use[e] == 1);
  }

  if (mesh.shape_regularity() > max_shape_ratio)
    throw ValidationError("Triangulation: shape regularity ratio exceeds bound");
  return mesh;
}

Triangulation build_rect_mesh(double width, double height, int nx, int ny) {
  if (nx < 1 || ny < 1) throw ValidationError("build_rect_mesh: nx, ny must be >= 1");
  if (!(width > 0) || !(height > 0))
    throw ValidationError("build_rect_mesh: width and height must be positive");
  std::vector<Vec2> vertices;
  vertices.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      vertices.emplace_back(width * i / nx, height * j / ny);
  auto vid = [nx](int i, int j) { return i + (nx + 1) * j; };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      tris.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      tris.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  return make_triangulation(std::move(vertices), std::move(tris));
}

Triangulation uniform_refine(const Triangulation& mesh) {
  std::vector<Vec2> vertices = mesh.vertices;
  std::vector<int> midpoint_vertex(mesh.edges.size());
  for (size_t e = 0; e < mesh.edges.size(); ++e) {
    midpoint_vertex[e] = static_cast<int>(vertices.size());
    vertices.push_back(mesh.edges[e].midpoint);
  }
  std::vector<std::array<int, 3>> tris;
  tris.reserve(4 * mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    // m[l] is the midpoint opposite vertex l.
    std::array<int, 3> m;
    for (int l = 0; l < 3; ++l) m[l] = midpoint_vertex[mesh.triangle_edges[t][l]];
    tris.push_back({tri[0], m[2], m[1]});
    tris.push_back({tri[1], m[0], m[2]});
    tris.push_back({tri[2], m[1], m[0]});
    tris.push_back({m[0], m[1], m[2]});
  }
  return make_triangulation(std::move(vertices), std::move(tris));
}

Vec2 MacroQuadratureRule::point(const Triangulation& mesh, int t, int q) {
  return mesh.edges[mesh.triangle_edges[t][q]].midpoint;
}

double MacroQuadratureRule::weight(const Triangulation& mesh, int t) {
  return mesh.area[t] / 3.0;
}

double macro_integrate(const Triangulation& mesh, const std::function<double(const Vec2&)>& f) {
  double sum = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double w = MacroQuadratureRule::weight(mesh, t);
    for (int q = 0; q < MacroQuadratureRule::points_per_triangle; ++q)
      sum += w * f(MacroQuadratureRule::point(mesh, t, q));
  }
  return sum;
}

namespace {

std::array<double, 4> bounding_box(const Triangulation& mesh) {
  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& v : mesh.vertices) {
    xmin = std::min(xmin, v[0]);
    xmax = std::max(xmax, v[0]);
    ymin = std::min(ymin, v[1]);
    ymax = std::max(ymax, v[1]);
  }
  return {xmin, xmax, ymin, ymax};
}

}  // namespace

std::vector<int> select_boundary_edges(const Triangulation& mesh, const std::vector<Side>& sides) {
  const auto [xmin, xmax, ymin, ymax] = bounding_box(mesh);
  const double tol = 1e-12 * std::max(xmax - xmin, ymax - ymin);
  std::vector<int> out;
  for (size_t e = 0; e < mesh.edges.size(); ++e) {
    if (!mesh.edges[e].boundary) continue;
    const Vec2 a = mesh.vertices[mesh.edges[e].v0];
    const Vec2 b = mesh.vertices[mesh.edges[e].v1];
    for (Side side : sides) {
      bool on = false;
      switch (side) {
        case Side::Left: on = a[0] <= xmin + tol && b[0] <= xmin + tol; break;
        case Side::Right: on = a[0] >= xmax - tol && b[0] >= xmax - tol; break;
        case Side::Bottom: on = a[1] <= ymin + tol && b[1] <= ymin + tol; break;
        case Side::Top: on = a[1] >= ymax - tol && b[1] >= ymax - tol; break;
      }
      if (on) {
        out.push_back(static_cast<int>(e));
        break;
      }
    }
  }
  return out;
}

std::vector<int> all_boundary_edges(const Triangulation& mesh) {
  std::vector<int> out;
  for (size_t e = 0; e < mesh.edges.size(); ++e)
    if (mesh.edges[e].boundary) out.push_back(static_cast<int>(e));
  return out;
}

std::vector<int> nodes_of_edges(const Triangulation& mesh, const std::vector<int>& edge_ids) {
  std::set<int> nodes;
  for (int e : edge_ids) {
    nodes.insert(mesh.edges[e].v0);
    nodes.insert(mesh.edges[e].v1);
  }
  return {nodes.begin(), nodes.end()};
}

void DirichletData::validate() const {
  if ((R.transpose() * R - Mat2::Identity()).norm() > 1e-12)
    throw ValidationError("DirichletData: R must have orthonormal columns");
}

}  // namespace microbend::plate
