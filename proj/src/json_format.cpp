#include "depthedge/json_format.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace depthedge {

double round_sig9(double v) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

nlohmann::json rounded(const nlohmann::json& j) {
  if (j.is_number_float()) return round_sig9(j.get<double>());
  if (j.is_array() || j.is_object()) {
    nlohmann::json out = j;
    for (auto& item : out) item = rounded(item);
    return out;
  }
  return j;
}

std::string dump_json(const nlohmann::json& j) { return rounded(j).dump(2) + "\n"; }

std::string format_number(double v) { return nlohmann::json(round_sig9(v)).dump(); }

}  // namespace depthedge
