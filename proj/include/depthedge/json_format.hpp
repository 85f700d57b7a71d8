#pragma once

#include <json.hpp>

#include <string>

namespace depthedge {

/// Rounds to 9 significant digits so the shortest round-trip form has at most 9.
double round_sig9(double v);

/// Recursively applies round_sig9 to every floating-point number.
nlohmann::json rounded(const nlohmann::json& j);

/// Two-space indented dump of rounded(j) with a trailing newline.
std::string dump_json(const nlohmann::json& j);

/// Shortest form of round_sig9(v), as used in CSV output.
std::string format_number(double v);

}  // namespace depthedge
