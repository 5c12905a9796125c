#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "microbend/dkt.hpp"
#include "microbend/minimize.hpp"
#include "microbend/plate.hpp"
#include "microbend/rve.hpp"

namespace microbend::io {

// %.17g: shortest decimal that is still an exact double round-trip at the
// 17-significant-digit policy used by all text outputs.
std::string format_g17(double v);

// Writes via a temp file in the same directory, then renames.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

// Plate mesh, ASCII: vertex count, "x y" lines, triangle count, "i j k" lines.
plate::Triangulation read_plate_mesh(std::istream& in);
plate::Triangulation read_plate_mesh_file(const std::filesystem::path& path);
std::string write_plate_mesh(const plate::Triangulation& mesh);

// Legacy ASCII VTK unstructured grids.
std::string vtk_plate_mesh(const plate::Triangulation& mesh);
std::string vtk_deformed_surface(const plate::Triangulation& mesh, const dkt::DktDeformation& w);
std::string vtk_rve_correctors(const rve::RveMesh& mesh, const rve::CellOutputs& cell);

// CSV rows (iter, energy, |grad|, step, max_violation) with a header.
std::string csv_iteration_report(const minimize::IterationReport& report);

}  // namespace microbend::io
