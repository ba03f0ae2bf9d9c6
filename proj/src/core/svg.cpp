#include <algorithm>
#include <cmath>
#include <sstream>

#include "text_format.hpp"

namespace lp::detail {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
  constexpr double width = 640, height = 420;
  constexpr double left = 70, right = 170, top = 40, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = y;
        any = true;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return top + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
     << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
     << top + plot_h << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
     << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    os << "<text x=\"" << fixed(px(xv), 2) << "\" y=\"" << fixed(top + plot_h + 16, 2)
       << "\" text-anchor=\"middle\">" << fixed(xv, 3) << "</text>\n";
    os << "<text x=\"" << fixed(left - 6, 2) << "\" y=\"" << fixed(py(yv) + 4, 2) << "\" text-anchor=\"end\">"
       << fixed(yv, 3) << "</text>\n";
  }
  os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 18 << "\" text-anchor=\"middle\">"
     << xml_escape(x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << top + plot_h / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    std::string pts;
    for (const auto& [x, y] : series[i].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!pts.empty()) pts += ' ';
      pts += fixed(px(x), 2) + "," + fixed(py(y), 2);
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
    for (const auto& [x, y] : series[i].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      os << "<circle cx=\"" << fixed(px(x), 2) << "\" cy=\"" << fixed(py(y), 2) << "\" r=\"2.5\" fill=\"" << color
         << "\"/>\n";
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(i);
    os << "<line x1=\"" << left + plot_w + 14 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 34
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + plot_w + 40 << "\" y=\"" << ly + 4 << "\">" << xml_escape(series[i].name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace lp::detail
