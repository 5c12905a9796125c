#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "microbend/common.hpp"

namespace microbend::convergence {

// Reference values carry their provenance into exported metadata:
// "analytic" (closed form), "richardson" (extrapolated), "exact" (definition).
struct ReferenceValue {
  double value = 0;
  std::string provenance;
  std::string description;
};

struct Row {
  double h = 0;  // micro mesh size (0 when unused)
  double H = 0;  // macro mesh size (0 when unused)
  std::vector<std::pair<std::string, double>> values;
  double error = std::numeric_limits<double>::quiet_NaN();
  double observed_order = std::numeric_limits<double>::quiet_NaN();
};

struct Table {
  std::string quantity;
  std::vector<Row> rows;
  std::optional<ReferenceValue> reference;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Observed order log2(e0/e1) for halved parameters.
double observed_order(double coarse_error, double fine_error);

// Limit estimate from three values at geometrically refined levels, with the
// order inferred from the value differences. Falls back to the finest value
// when the differences do not behave geometrically.
double richardson_limit(double f0, double f1, double f2);

}  // namespace microbend::convergence
