#include "microbend/convergence.hpp"

#include <cmath>
#include <sstream>

#include "microbend/io.hpp"

namespace microbend::convergence {

double observed_order(double coarse_error, double fine_error) {
  if (!(coarse_error > 0) || !(fine_error > 0)) return std::numeric_limits<double>::quiet_NaN();
  return std::log2(coarse_error / fine_error);
}

double richardson_limit(double f0, double f1, double f2) {
  const double d0 = f1 - f0;
  const double d1 = f2 - f1;
  if (d1 == 0.0) return f2;
  const double ratio = d0 / d1;
  if (!(ratio > 1.0)) return f2;  // not in the asymptotic regime
  // f_k ~ L + c r^k with r = 1/ratio: L = f2 + d1/(ratio - 1).
  return f2 + d1 / (ratio - 1.0);
}

std::string Table::to_csv() const {
  std::ostringstream os;
  os << "h,H";
  if (!rows.empty())
    for (const auto& [name, value] : rows.front().values) os << "," << name;
  os << ",error,observed_order\n";
  for (const auto& r : rows) {
    os << io::format_g17(r.h) << "," << io::format_g17(r.H);
    for (const auto& [name, value] : r.values) os << "," << io::format_g17(value);
    os << "," << io::format_g17(r.error) << "," << io::format_g17(r.observed_order) << "\n";
  }
  return os.str();
}

nlohmann::json Table::to_json() const {
  nlohmann::json j;
  j["quantity"] = quantity;
  if (reference) {
    j["reference"] = {{"value", reference->value},
                      {"provenance", reference->provenance},
                      {"description", reference->description}};
  }
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row;
    row["h"] = r.h;
    row["H"] = r.H;
    for (const auto& [name, value] : r.values) row[name] = value;
    if (std::isfinite(r.error)) row["error"] = r.error;
    if (std::isfinite(r.observed_order)) row["observed_order"] = r.observed_order;
    j["rows"].push_back(row);
  }
  return j;
}

}  // namespace microbend::convergence
