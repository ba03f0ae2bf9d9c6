#include "layerpainter/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "layerpainter/errors.hpp"
#include "text_format.hpp"

namespace lp {

namespace {

void check_traces(std::span<const TraceBundle> traces) {
  if (traces.empty()) throw DegenerateInputError("no traces given");
  const std::size_t L = traces.front().states.size();
  if (L == 0) throw DegenerateInputError("trace has no layers");
  const std::size_t d = traces.front().states.front().cols();
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto& states = traces[t].states;
    if (states.size() != L) {
      throw ShapeError("trace " + std::to_string(t) + " has " + std::to_string(states.size()) +
                       " layers, expected " + std::to_string(L));
    }
    for (const Matrix& m : states) {
      if (m.cols() != d || m.rows() != states.front().rows()) {
        throw ShapeError("trace " + std::to_string(t) + " has non-uniform hidden-state shapes");
      }
    }
  }
}

// RGB ramp through dark blue, teal, yellow for t in [0, 1].
std::string ramp_color(double t) {
  static constexpr double stops[][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

}  // namespace

SimilarityMatrix::SimilarityMatrix(std::size_t size, std::vector<double> values)
    : size_(size), values_(std::move(values)) {
  if (values_.size() != size * size) throw ShapeError("similarity matrix needs size^2 values");
}

SimilarityMatrix similarity_matrix(std::span<const TraceBundle> traces) {
  check_traces(traces);
  const std::size_t L = traces.front().states.size();
  SimilarityMatrix sim(L);
  std::size_t samples = 0;
  for (const TraceBundle& tb : traces) samples += tb.states.front().rows();
  for (std::size_t i = 0; i < L; ++i) {
    sim(i, i) = 1.0;
    for (std::size_t j = i + 1; j < L; ++j) {
      double sum = 0.0;
      for (const TraceBundle& tb : traces) {
        const Matrix& a = tb.states[i];
        const Matrix& b = tb.states[j];
        for (std::size_t pos = 0; pos < a.rows(); ++pos) sum += cosine_similarity(a.row(pos), b.row(pos));
      }
      const double mean = sum / static_cast<double>(samples);
      sim(i, j) = mean;
      sim(j, i) = mean;
    }
  }
  return sim;
}

LayerStats variance_profile(std::span<const TraceBundle> traces) {
  check_traces(traces);
  const std::size_t L = traces.front().states.size();
  LayerStats stats;
  stats.means.resize(L);
  stats.variances.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const TraceBundle& tb : traces) {
      for (float v : tb.states[l].data()) sum += v;
      n += tb.states[l].size();
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const TraceBundle& tb : traces) {
      for (float v : tb.states[l].data()) ss += (v - mean) * (v - mean);
    }
    stats.means[l] = mean;
    stats.variances[l] = ss / static_cast<double>(n);
  }
  return stats;
}

LayerGrouping segment_layers(const SimilarityMatrix& sim) {
  const std::size_t L = sim.size();
  if (L < 3) throw DegenerateInputError("segment_layers needs at least 3 layers, got " + std::to_string(L));
  // 2-D prefix sums: P(i, j) = sum of entries with row < i and col < j.
  std::vector<double> prefix((L + 1) * (L + 1), 0.0);
  auto P = [&](std::size_t i, std::size_t j) -> double& { return prefix[i * (L + 1) + j]; };
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) P(i + 1, j + 1) = sim(i, j) + P(i, j + 1) + P(i + 1, j) - P(i, j);
  }
  // Sum of the diagonal block over 0-based rows/cols [a, b).
  auto block = [&](std::size_t a, std::size_t b) { return P(b, b) - P(a, b) - P(b, a) + P(a, a); };

  LayerGrouping best;
  bool have = false;
  for (std::size_t c1 = 1; c1 + 1 < L; ++c1) {
    for (std::size_t c2 = c1 + 1; c2 < L; ++c2) {
      const double s1 = block(0, c1), s2 = block(c1, c2), s3 = block(c2, L);
      const double n1 = static_cast<double>(c1 * c1);
      const double n2 = static_cast<double>((c2 - c1) * (c2 - c1));
      const double n3 = static_cast<double>((L - c2) * (L - c2));
      const double objective = (s1 + s2 + s3) / (n1 + n2 + n3);
      if (!have || objective > best.objective) {
        best.cut1 = c1;
        best.cut2 = c2;
        best.objective = objective;
        best.segment_means = {s1 / n1, s2 / n2, s3 / n3};
        have = true;
      }
    }
  }
  return best;
}

std::string similarity_csv(const SimilarityMatrix& sim) {
  std::string out;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    for (std::size_t j = 0; j < sim.size(); ++j) {
      if (j > 0) out += ',';
      out += detail::fixed(sim(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string similarity_svg(const SimilarityMatrix& sim, const std::string& title) {
  const std::size_t L = sim.size();
  constexpr double cell = 14, margin = 50, legend = 80;
  double lo = 0.0;
  for (double v : sim.values()) lo = std::min(lo, v);
  const double side = cell * static_cast<double>(L);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << margin * 2 + side + legend << "\" height=\""
     << margin * 2 + side << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << margin << "\" y=\"20\" font-size=\"13\">" << detail::xml_escape(title) << "</text>\n";
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      const double t = (sim(i, j) - lo) / (1.0 - lo);
      os << "<rect x=\"" << margin + cell * static_cast<double>(j) << "\" y=\""
         << margin + cell * static_cast<double>(i) << "\" width=\"" << cell << "\" height=\"" << cell
         << "\" fill=\"" << ramp_color(t) << "\"><title>" << i + 1 << "," << j + 1 << ": "
         << detail::fixed(sim(i, j), 4) << "</title></rect>\n";
    }
    if (L <= 40 || (i + 1) % 5 == 0) {
      os << "<text x=\"" << margin - 4 << "\" y=\"" << margin + cell * static_cast<double>(i) + cell * 0.75
         << "\" text-anchor=\"end\">" << i + 1 << "</text>\n";
      os << "<text x=\"" << margin + cell * static_cast<double>(i) + cell / 2 << "\" y=\"" << margin + side + 12
         << "\" text-anchor=\"middle\">" << i + 1 << "</text>\n";
    }
  }
  const double lx = margin + side + 20;
  for (int k = 0; k < 20; ++k) {
    const double t = 1.0 - k / 19.0;
    os << "<rect x=\"" << lx << "\" y=\"" << margin + side * k / 20.0 << "\" width=\"14\" height=\""
       << side / 20.0 + 0.5 << "\" fill=\"" << ramp_color(t) << "\"/>\n";
  }
  os << "<text x=\"" << lx + 18 << "\" y=\"" << margin + 8 << "\">1.00</text>\n";
  os << "<text x=\"" << lx + 18 << "\" y=\"" << margin + side << "\">" << detail::fixed(lo, 2) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string variance_csv(const LayerStats& stats) {
  std::string out = "layer,mean,variance\n";
  for (std::size_t l = 0; l < stats.means.size(); ++l) {
    out += std::to_string(l + 1) + "," + detail::fixed(stats.means[l], 9) + "," +
           detail::fixed(stats.variances[l], 9) + "\n";
  }
  return out;
}

std::string grouping_text(const LayerGrouping& g, std::size_t n_layers) {
  const auto sizes = g.segment_sizes(n_layers);
  std::ostringstream os;
  os << "cut1," << g.cut1 << "\n";
  os << "cut2," << g.cut2 << "\n";
  os << "beginning,1-" << g.cut1 << "," << sizes[0] << "," << detail::fixed(g.segment_means[0]) << "\n";
  os << "middle," << g.cut1 + 1 << "-" << g.cut2 << "," << sizes[1] << "," << detail::fixed(g.segment_means[1])
     << "\n";
  os << "ending," << g.cut2 + 1 << "-" << n_layers << "," << sizes[2] << "," << detail::fixed(g.segment_means[2])
     << "\n";
  os << "objective," << detail::fixed(g.objective) << "\n";
  return os.str();
}

}  // namespace lp
