#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pinnfm {

/// Shortest-roundtrip-safe decimal: 17 significant digits, '.' separator,
/// independent of the global locale.
std::string format_double(double value);

/// Joins fields with ',' (no quoting; callers pass plain tokens).
std::string csv_row(const std::vector<std::string>& fields);

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace pinnfm
