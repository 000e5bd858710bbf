#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cdpr::csv {

/// Six significant digits (printf %.6g); NaN is always written as "nan".
std::string g6(double v);

std::vector<std::string> split(std::string_view line, char sep = ',');

/// Parses a number written by g6 (accepts "nan", "inf", "-inf").
double to_double(const std::string& field);

}  // namespace cdpr::csv
