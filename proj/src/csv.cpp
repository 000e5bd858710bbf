#include "cdpr/csv.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "cdpr/error.hpp"

namespace cdpr::csv {

std::string g6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

double to_double(const std::string& field) {
  if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw ParseError("bad number '" + field + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad number '" + field + "'");
  }
}

}  // namespace cdpr::csv
