#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "layerpainter/model.hpp"

namespace lp {

// L x L average cosine similarity between per-layer hidden states. Indices
// are 0-based here; layer l in the plan API is row l - 1.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t size) : size_(size), values_(size * size, 0.0) {}
  SimilarityMatrix(std::size_t size, std::vector<double> values);

  std::size_t size() const noexcept { return size_; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * size_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * size_ + j]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t size_ = 0;
  std::vector<double> values_;
};

struct LayerStats {
  std::vector<double> means;
  std::vector<double> variances;
};

// Beginning = layers 1..cut1, middle = cut1+1..cut2, ending = cut2+1..L.
struct LayerGrouping {
  std::size_t cut1 = 0;
  std::size_t cut2 = 0;
  std::array<double, 3> segment_means{};
  double objective = 0.0;

  std::array<std::size_t, 3> segment_sizes(std::size_t n_layers) const {
    return {cut1, cut2 - cut1, n_layers - cut2};
  }
};

// Entry (i, j) is the mean over traces and token positions of
// cos(h_i[pos], h_j[pos]). Throws DegenerateInputError on empty input.
SimilarityMatrix similarity_matrix(std::span<const TraceBundle> traces);

// Mean and population variance of all hidden-state entries per layer, pooled
// over dimensions, positions and traces.
LayerStats variance_profile(std::span<const TraceBundle> traces);

// Exhaustive search over every pair of cuts for the contiguous three-way
// split maximizing the pooled mean of within-segment entries (sum of each
// segment's diagonal block over sum of squared segment sizes). Ties go to the
// smallest cut1, then cut2.
LayerGrouping segment_layers(const SimilarityMatrix& sim);

std::string similarity_csv(const SimilarityMatrix& sim);
std::string similarity_svg(const SimilarityMatrix& sim, const std::string& title);
std::string variance_csv(const LayerStats& stats);
std::string grouping_text(const LayerGrouping& g, std::size_t n_layers);

}  // namespace lp
