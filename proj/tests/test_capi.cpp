#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "layerpainter/layerpainter.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  lp_string_free(s);
  return out;
}

lp_model_config tiny_config() {
  lp_model_config c;
  lp_model_config_default(&c);
  c.n_layers = 6;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 32;
  c.vocab_size = 32;
  c.max_seq_len = 16;
  return c;
}

std::filesystem::path scratch() {
  auto dir = std::filesystem::temp_directory_path() / "lp_test_capi";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("model lifecycle and errors") {
  const lp_model_config c = tiny_config();
  lp_model* m = nullptr;
  REQUIRE(lp_model_generate(&c, 7, &m) == LP_OK);
  const std::string path = (scratch() / "m.lpw").string();
  REQUIRE(lp_model_save(m, path.c_str()) == LP_OK);

  lp_model* back = nullptr;
  REQUIRE(lp_model_load(path.c_str(), &back) == LP_OK);
  lp_model_config got;
  REQUIRE(lp_model_get_config(back, &got) == LP_OK);
  CHECK(got.n_layers == 6);
  CHECK(got.vocab_size == 32);

  lp_model_config bad = c;
  bad.n_heads = 5;
  lp_model* none = nullptr;
  CHECK(lp_model_generate(&bad, 1, &none) == LP_ERR_CONFIG);
  CHECK(std::string(lp_last_error()).size() > 0);
  CHECK(lp_model_load((scratch() / "missing.lpw").string().c_str(), &none) == LP_ERR_IO);
  REQUIRE(lp_write_file(path.c_str(), "XXXX", 4) == LP_OK);
  CHECK(lp_model_load(path.c_str(), &none) == LP_ERR_FORMAT);
  CHECK(lp_model_load(nullptr, &none) == LP_ERR_INVALID_ARGUMENT);
  CHECK(std::string(lp_status_name(LP_ERR_PLAN)) == "plan");

  lp_model_free(m);
  lp_model_free(back);
}

TEST_CASE("plans through the C API") {
  lp_variant_spec spec{"parallel", 8, 1, 0, 0};
  lp_plan* p = nullptr;
  REQUIRE(lp_plan_compile(&spec, 32, &p) == LP_OK);
  uint32_t depth = 0;
  REQUIRE(lp_plan_depth(p, &depth) == LP_OK);
  CHECK(depth == 18);
  char* text = nullptr;
  REQUIRE(lp_plan_text(p, &text) == LP_OK);
  CHECK(take(text).find("mean{9,10,") != std::string::npos);
  lp_plan_free(p);

  spec.kind = "shuffle";
  CHECK(lp_plan_compile(&spec, 32, &p) == LP_ERR_PLAN);
  spec.kind = "skip";
  spec.start_layer = 40;
  CHECK(lp_plan_compile(&spec, 32, &p) == LP_ERR_PLAN);

  uint32_t first = 0, last = 0;
  REQUIRE(lp_middle_block(32, 15, &first, &last) == LP_OK);
  CHECK(first == 16);
  CHECK(last == 16);
  CHECK(lp_center_layer(24) == 12);
}

TEST_CASE("forward and wallclock") {
  const lp_model_config c = tiny_config();
  lp_model* m = nullptr;
  REQUIRE(lp_model_generate(&c, 3, &m) == LP_OK);
  lp_variant_spec base{"baseline", 0, 1, 0, 0};
  lp_variant_spec par{"parallel", 2, 1, 0, 0};
  lp_plan *pb = nullptr, *pp = nullptr;
  REQUIRE(lp_plan_compile(&base, 6, &pb) == LP_OK);
  REQUIRE(lp_plan_compile(&par, 6, &pp) == LP_OK);
  const std::vector<uint32_t> tokens{1, 5, 9, 2};
  std::vector<float> a(4 * 32), b(4 * 32);
  REQUIRE(lp_forward(m, tokens.data(), tokens.size(), pb, 1, a.data()) == LP_OK);
  REQUIRE(lp_forward(m, tokens.data(), tokens.size(), pp, 2, b.data()) == LP_OK);
  CHECK(a == b);  // M = 1 parallel stage is the baseline

  const std::vector<uint32_t> bad{40};
  CHECK(lp_forward(m, bad.data(), 1, pb, 1, a.data()) == LP_ERR_VOCABULARY);
  double secs = -1;
  CHECK(lp_middle_block_wallclock(m, tokens.data(), tokens.size(), pp, 0, &secs) == LP_ERR_CONFIG);
  REQUIRE(lp_middle_block_wallclock(m, tokens.data(), tokens.size(), pp, 1, &secs) == LP_OK);
  CHECK(secs >= 0.0);
  lp_plan_free(pb);
  lp_plan_free(pp);
  lp_model_free(m);
}

TEST_CASE("corpus, analysis and sweep") {
  lp_model_config c = tiny_config();
  lp_model* m = nullptr;
  REQUIRE(lp_model_generate(&c, 5, &m) == LP_OK);
  lp_corpus* corpus = nullptr;
  REQUIRE(lp_corpus_random(32, 30, 3, 10, 9, &corpus) == LP_OK);
  const std::string path = (scratch() / "c.lpc").string();
  REQUIRE(lp_corpus_save(corpus, path.c_str()) == LP_OK);
  lp_corpus* loaded = nullptr;
  REQUIRE(lp_corpus_load(path.c_str(), &loaded) == LP_OK);
  size_t sentences = 0;
  REQUIRE(lp_corpus_info(loaded, nullptr, nullptr, &sentences) == LP_OK);
  CHECK(sentences == 30);

  lp_analysis* a = nullptr;
  REQUIRE(lp_analysis_run(m, loaded, 10, 2, &a) == LP_OK);
  double d = 0;
  REQUIRE(lp_analysis_similarity(a, 3, 3, &d) == LP_OK);
  CHECK(d == 1.0);
  uint32_t cut1 = 0, cut2 = 0;
  REQUIRE(lp_analysis_cuts(a, &cut1, &cut2) == LP_OK);
  CHECK(cut1 >= 1);
  CHECK(cut2 > cut1);
  CHECK(cut2 < 6);
  char* csv = nullptr;
  REQUIRE(lp_analysis_similarity_csv(a, &csv) == LP_OK);
  CHECK(take(csv).find("1.000000") == 0);
  lp_analysis_free(a);

  lp_model_zero_layers(m);
  REQUIRE(lp_analysis_run(m, loaded, 10, 1, &a) == LP_OK);
  REQUIRE(lp_analysis_similarity(a, 0, 5, &d) == LP_OK);
  CHECK(std::abs(d - 1.0) <= 1e-9);
  lp_analysis_free(a);
  lp_model_free(m);

  REQUIRE(lp_model_generate(&c, 5, &m) == LP_OK);
  lp_task_options opt;
  lp_task_options_default(&opt);
  const std::vector<lp_variant_spec> grid{{"skip", 1, 1, 0, 0}, {"random_order", 1, 1, 0, 0}, {"skip", 9, 1, 0, 0}};
  lp_sweep* s = nullptr;
  REQUIRE(lp_sweep_run(m, loaded, &opt, grid.data(), grid.size(), 2, 1, &s) == LP_OK);
  CHECK(lp_sweep_row_count(s) == 4);
  CHECK(lp_sweep_task_count(s) == 3);
  char* err = nullptr;
  REQUIRE(lp_sweep_row_error(s, 1, &err) == LP_OK);
  CHECK(err == nullptr);
  REQUIRE(lp_sweep_row_error(s, 3, &err) == LP_OK);
  CHECK(take(err).find("N = 9") != std::string::npos);
  double med = 0;
  REQUIRE(lp_sweep_normalized_median(s, 0, &med) == LP_OK);
  CHECK(med == 1.0);
  char* out = nullptr;
  REQUIRE(lp_sweep_csv(s, 1, &out) == LP_OK);
  const std::string sweep = take(out);
  REQUIRE(lp_sweep_comparison_svg(s, 1, &out) == LP_OK);
  CHECK(take(out).rfind("<svg", 0) == 0);
  lp_sweep_free(s);

  REQUIRE(lp_sweep_run(m, loaded, &opt, grid.data(), grid.size(), 2, 3, &s) == LP_OK);
  REQUIRE(lp_sweep_csv(s, 1, &out) == LP_OK);
  CHECK(take(out) == sweep);
  lp_sweep_free(s);

  lp_corpus* big = nullptr;
  REQUIRE(lp_corpus_random(64, 5, 3, 4, 1, &big) == LP_OK);
  CHECK(lp_sweep_run(m, big, &opt, grid.data(), grid.size(), 1, 1, &s) == LP_ERR_VOCABULARY);
  lp_corpus_free(big);

  lp_corpus_free(corpus);
  lp_corpus_free(loaded);
  lp_model_free(m);
}
