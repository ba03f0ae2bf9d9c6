#include <doctest.h>

#include <cmath>

#include "layerpainter/analysis.hpp"
#include "layerpainter/errors.hpp"
#include "layerpainter/model.hpp"
#include "layerpainter/store.hpp"
#include "segment_oracle.hpp"
#include "test_util.hpp"

using namespace lp;

namespace {

std::vector<TraceBundle> traces_for(const ModelWeights& w, std::size_t samples, std::size_t len, std::uint64_t seed) {
  std::vector<TraceBundle> out;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto tokens = testing::random_tokens(len, w.config.vocab_size, seed + s);
    out.push_back(*execute_plan(w, tokens, baseline_plan(w.config.n_layers), true).trace);
  }
  return out;
}

}  // namespace

TEST_CASE("similarity matrix is symmetric with unit diagonal") {
  const ModelConfig c = testing::small_config(6);
  const ModelWeights w = testing::strong_model(c, 40);
  const SimilarityMatrix s = similarity_matrix(traces_for(w, 3, 7, 41));
  REQUIRE(s.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(s(i, i) == 1.0);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(std::abs(s(i, j) - s(j, i)) <= 1e-6);
      CHECK(s(i, j) <= 1.0);
      CHECK(s(i, j) >= -1.0);
    }
  }
}

TEST_CASE("similarity matrix is scale invariant") {
  const ModelWeights w = testing::strong_model(testing::small_config(5), 42);
  auto traces = traces_for(w, 2, 6, 43);
  const SimilarityMatrix base = similarity_matrix(traces);
  for (auto& t : traces)
    for (auto& m : t.states) {
      std::vector<float> v(m.data().begin(), m.data().end());
      for (auto& x : v) x *= 3.5f;
      m = Matrix(m.rows(), m.cols(), std::move(v));
    }
  const SimilarityMatrix scaled = similarity_matrix(traces);
  for (std::size_t i = 0; i < base.values().size(); ++i) CHECK(std::abs(base.values()[i] - scaled.values()[i]) <= 1e-6);
}

TEST_CASE("zero-weight model gives an all-ones matrix and flat variance") {
  ModelWeights w = testing::strong_model(testing::small_config(5), 44);
  zero_layer_weights(w);
  const auto traces = traces_for(w, 2, 5, 45);
  const SimilarityMatrix sim = similarity_matrix(traces);
  for (double v : sim.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  const LayerStats stats = variance_profile(traces);
  for (double v : stats.variances) CHECK(v == stats.variances[0]);
}

TEST_CASE("single sample single position matches direct pairwise cosines") {
  const ModelWeights w = testing::strong_model(testing::small_config(4), 46);
  const auto traces = traces_for(w, 1, 1, 47);
  const SimilarityMatrix s = similarity_matrix(traces);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == j) continue;
      const auto a = traces[0].states[i].data(), b = traces[0].states[j].data();
      double dot = 0, na = 0, nb = 0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        dot += static_cast<double>(a[k]) * b[k];
        na += static_cast<double>(a[k]) * a[k];
        nb += static_cast<double>(b[k]) * b[k];
      }
      CHECK(std::abs(s(i, j) - dot / std::sqrt(na * nb)) <= 1e-9);
    }
}

TEST_CASE("similarity input errors") {
  CHECK_THROWS_AS(similarity_matrix(std::vector<TraceBundle>{}), DegenerateInputError);
  CHECK_THROWS_AS(variance_profile(std::vector<TraceBundle>{}), DegenerateInputError);
  const ModelWeights w4 = testing::strong_model(testing::small_config(4), 48);
  const ModelWeights w5 = testing::strong_model(testing::small_config(5), 48);
  std::vector<TraceBundle> mixed = traces_for(w4, 1, 3, 1);
  mixed.push_back(traces_for(w5, 1, 3, 1)[0]);
  CHECK_THROWS_AS(similarity_matrix(mixed), ShapeError);
}

TEST_CASE("variance profile matches two-pass oracle") {
  const ModelWeights w = testing::strong_model(testing::small_config(4), 49);
  const auto traces = traces_for(w, 3, 6, 50);
  const LayerStats stats = variance_profile(traces);
  REQUIRE(stats.variances.size() == 4);
  for (std::size_t l = 0; l < 4; ++l) {
    double sum = 0, n = 0;
    for (const auto& t : traces)
      for (float v : t.states[l].data()) {
        sum += v;
        n += 1;
      }
    const double mean = sum / n;
    double ss = 0;
    for (const auto& t : traces)
      for (float v : t.states[l].data()) ss += (v - mean) * (v - mean);
    CHECK(std::abs(stats.means[l] - mean) <= 1e-9 * std::max(1.0, std::abs(mean)));
    CHECK(std::abs(stats.variances[l] - ss / n) <= 1e-6 * (ss / n));
    CHECK(stats.variances[l] >= 0.0);
  }

  TraceBundle constant;
  constant.states.assign(3, Matrix(2, 4, std::vector<float>(8, 2.5f)));
  for (double v : variance_profile(std::vector<TraceBundle>{constant}).variances) CHECK(v == 0.0);
}

TEST_CASE("segment_layers examples") {
  SimilarityMatrix blocks(15);
  for (std::size_t i = 0; i < 15; ++i)
    for (std::size_t j = 0; j < 15; ++j) {
      auto b = [](std::size_t k) { return k < 3 ? 0 : (k < 13 ? 1 : 2); };
      blocks(i, j) = b(i) == b(j) ? 1.0 : 0.0;
    }
  const LayerGrouping g = segment_layers(blocks);
  CHECK(g.cut1 == 3);
  CHECK(g.cut2 == 13);
  CHECK(g.objective == 1.0);
  CHECK(g.segment_sizes(15) == std::array<std::size_t, 3>{3, 10, 2});

  SimilarityMatrix ones(9, std::vector<double>(81, 1.0));
  const LayerGrouping o = segment_layers(ones);
  CHECK(o.cut1 == 1);
  CHECK(o.cut2 == 2);

  const LayerGrouping three = segment_layers(SimilarityMatrix(3, std::vector<double>(9, 0.5)));
  CHECK(three.cut1 == 1);
  CHECK(three.cut2 == 2);

  CHECK_THROWS_AS(segment_layers(SimilarityMatrix(2, {1, 0, 0, 1})), DegenerateInputError);
}

TEST_CASE("segment_layers equals exhaustive oracle on planted instances") {
  Rng rng(2024);
  int recovered = 0;
  constexpr int instances = 150;
  for (int n = 0; n < instances; ++n) {
    const std::array<std::size_t, 3> sizes{1 + rng.uniform_below(8), 1 + rng.uniform_below(12), 1 + rng.uniform_below(6)};
    const double noise = n % 3 == 0 ? 0.6 : 0.2;
    const SimilarityMatrix s = oracle::planted(sizes, rng, noise);
    const LayerGrouping g = segment_layers(s);
    const oracle::Cut o = oracle::segment(s);
    CHECK(g.cut1 == o.cut1);
    CHECK(g.cut2 == o.cut2);
    CHECK(g.objective == doctest::Approx(o.objective).epsilon(1e-12));
    if (noise < 0.5) {
      CHECK(g.cut1 == sizes[0]);
      CHECK(g.cut2 == sizes[0] + sizes[1]);
    }
    recovered += g.cut1 == sizes[0] && g.cut2 == sizes[0] + sizes[1];
  }
  CHECK(recovered >= 100);
}

TEST_CASE("text and svg outputs") {
  SimilarityMatrix s(3, {1, 0.5, -0.25, 0.5, 1, 0, -0.25, 0, 1});
  CHECK(similarity_csv(s) == "1.000000,0.500000,-0.250000\n0.500000,1.000000,0.000000\n-0.250000,0.000000,1.000000\n");
  const std::string svg = similarity_svg(s, "a<b");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a&lt;b") != std::string::npos);
  CHECK(svg == similarity_svg(s, "a<b"));
  const std::string text = grouping_text(segment_layers(s), 3);
  CHECK(text.find("cut1") != std::string::npos);
  LayerStats st{{0.5, 1.0}, {2.0, 3.0}};
  CHECK(variance_csv(st).rfind("layer,mean,variance\n1,", 0) == 0);
}
