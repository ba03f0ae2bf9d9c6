#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace lp::detail {

// Fixed-precision formatting; locale independent and stable across runs.
inline std::string fixed(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("0.", 1) == std::string::npos) s.erase(0, 1);
  return s;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Polyline chart with axes, ticks and a legend.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

std::string xml_escape(const std::string& s);

}  // namespace lp::detail
