#include "microbend/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace microbend::io {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

plate::Triangulation read_plate_mesh(std::istream& in) {
  int nv = 0;
  if (!(in >> nv) || nv <= 0) throw ValidationError("mesh import: bad vertex count");
  std::vector<Vec2> vertices(nv);
  for (int i = 0; i < nv; ++i)
    if (!(in >> vertices[i][0] >> vertices[i][1]))
      throw ValidationError("mesh import: bad vertex line " + std::to_string(i));
  int nt = 0;
  if (!(in >> nt) || nt <= 0) throw ValidationError("mesh import: bad triangle count");
  std::vector<std::array<int, 3>> tris(nt);
  for (int t = 0; t < nt; ++t)
    if (!(in >> tris[t][0] >> tris[t][1] >> tris[t][2]))
      throw ValidationError("mesh import: bad triangle line " + std::to_string(t));
  return plate::make_triangulation(std::move(vertices), std::move(tris));
}

plate::Triangulation read_plate_mesh_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("mesh import: cannot open " + path.string());
  return read_plate_mesh(in);
}

std::string write_plate_mesh(const plate::Triangulation& mesh) {
  if (mesh.num_triangles() == 0) throw ValidationError("mesh export: empty mesh");
  std::ostringstream os;
  os << mesh.num_vertices() << "\n";
  for (const auto& v : mesh.vertices) os << format_g17(v[0]) << " " << format_g17(v[1]) << "\n";
  os << mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  return os.str();
}

namespace {

void vtk_header(std::ostringstream& os, const std::string& title) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
}

void vtk_triangle_cells(std::ostringstream& os, const plate::Triangulation& mesh) {
  os << "CELLS " << mesh.num_triangles() << " " << 4 * mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "CELL_TYPES " << mesh.num_triangles() << "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t) os << "5\n";
}

}  // namespace

std::string vtk_plate_mesh(const plate::Triangulation& mesh) {
  if (mesh.num_triangles() == 0) throw ValidationError("vtk export: empty mesh");
  std::ostringstream os;
  vtk_header(os, "plate mesh");
  os << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices)
    os << format_g17(v[0]) << " " << format_g17(v[1]) << " 0\n";
  vtk_triangle_cells(os, mesh);
  return os.str();
}

std::string vtk_deformed_surface(const plate::Triangulation& mesh, const dkt::DktDeformation& w) {
  if (mesh.num_triangles() == 0) throw ValidationError("vtk export: empty mesh");
  const auto normals = dkt::discrete_normal(w);
  std::ostringstream os;
  vtk_header(os, "deformed plate surface");
  os << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : w.value)
    os << format_g17(p[0]) << " " << format_g17(p[1]) << " " << format_g17(p[2]) << "\n";
  vtk_triangle_cells(os, mesh);
  os << "POINT_DATA " << mesh.num_vertices() << "\n";
  os << "VECTORS normal double\n";
  for (const auto& n : normals.node_normal)
    os << format_g17(n[0]) << " " << format_g17(n[1]) << " " << format_g17(n[2]) << "\n";
  return os.str();
}

std::string vtk_rve_correctors(const rve::RveMesh& mesh, const rve::CellOutputs& cell) {
  if (mesh.num_elements() == 0) throw ValidationError("vtk export: empty mesh");
  const rve::PeriodicDofMap dofs(mesh);
  std::ostringstream os;
  vtk_header(os, "rve correctors");
  const int nx = mesh.nx(), ny = mesh.ny(), nz = mesh.nz();
  os << "POINTS " << mesh.num_nodes() << " double\n";
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        const Vec3 y = mesh.node(i, j, k);
        os << format_g17(y[0]) << " " << format_g17(y[1]) << " " << format_g17(y[2]) << "\n";
      }
  os << "CELLS " << mesh.num_elements() << " " << 9 * mesh.num_elements() << "\n";
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        os << "8 " << mesh.node_index(i, j, k) << " " << mesh.node_index(i + 1, j, k) << " "
           << mesh.node_index(i + 1, j + 1, k) << " " << mesh.node_index(i, j + 1, k) << " "
           << mesh.node_index(i, j, k + 1) << " " << mesh.node_index(i + 1, j, k + 1) << " "
           << mesh.node_index(i + 1, j + 1, k + 1) << " " << mesh.node_index(i, j + 1, k + 1)
           << "\n";
  os << "CELL_TYPES " << mesh.num_elements() << "\n";
  for (int e = 0; e < mesh.num_elements(); ++e) os << "12\n";
  os << "POINT_DATA " << mesh.num_nodes() << "\n";
  for (int c = 0; c < 3; ++c) {
    os << "VECTORS corrector_" << c + 1 << " double\n";
    const auto& corr = cell.correctors[c];
    for (int k = 0; k <= nz; ++k)
      for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
          // Periodic part plus the affine part iota(M) y.
          const Vec3 y = mesh.node(i, j, k);
          const Vec3 v =
              corr.phi.segment<3>(3 * dofs.scalar_node(i, j, k)) + rve::iota(corr.M) * y;
          os << format_g17(v[0]) << " " << format_g17(v[1]) << " " << format_g17(v[2]) << "\n";
        }
  }
  return os.str();
}

std::string csv_iteration_report(const minimize::IterationReport& report) {
  std::ostringstream os;
  os << "iter,energy,grad_norm,step,max_violation\n";
  for (const auto& r : report.rows)
    os << r.iter << "," << format_g17(r.energy) << "," << format_g17(r.grad_norm) << ","
       << format_g17(r.step) << "," << format_g17(r.max_violation) << "\n";
  return os.str();
}

}  // namespace microbend::io
