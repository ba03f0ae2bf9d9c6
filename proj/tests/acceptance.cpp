// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed here.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

#include "layerpainter/analysis.hpp"
#include "layerpainter/eval.hpp"
#include "layerpainter/model.hpp"
#include "layerpainter/plans.hpp"
#include "layerpainter/store.hpp"
#include "layerpainter/thread_pool.hpp"
#include "naive_oracle.hpp"
#include "segment_oracle.hpp"
#include "test_util.hpp"

using namespace lp;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kOracleTol = 1e-4;
constexpr double kOracleBudgetS = 1.0;
constexpr double kLatencyRatio = 0.6;
constexpr double kLatencyBudgetS = 120.0;
constexpr double kSimTol = 1e-6;
constexpr double kPerplexityRelTol = 1e-9;
constexpr double kChance = 0.25;
constexpr double kChanceTol = 0.05;
constexpr std::size_t kChanceItems = 1200;
constexpr int kPlantedInstances = 150;

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s  %-22s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  const ModelConfig c = testing::small_config(4, 16, 2, 64, 8);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ModelWeights w = generate_random_model(c, seed);
    const auto tokens = testing::random_tokens(8, c.vocab_size, seed + 100);
    const Matrix got = execute_plan(w, tokens, baseline_plan(4), false).logits;
    worst = std::max(worst, oracle::max_abs_diff(oracle::forward(w, tokens), got));
  }
  const double secs = seconds_since(t0);
  return {worst <= kOracleTol && secs < kOracleBudgetS,
          fmt("max-abs %.3g", worst) + fmt(" (tol 1e-4), %.3f s", secs)};
}

Outcome plan_equivalence() {
  const std::size_t T = 32;
  const ModelConfig c = testing::small_config(T, 16, 2, 64, 16);
  const ModelWeights w = generate_random_model(c, 7);
  const auto tokens = testing::random_tokens(16, c.vocab_size, 8);
  auto run = [&](VariantKind k, std::size_t n, std::size_t iters = 1, std::uint64_t seed = 0) {
    return execute_plan(w, tokens, compile_variant({k, n, iters, seed, 0}, T), false).logits;
  };
  const Matrix base = execute_plan(w, tokens, baseline_plan(T), false).logits;
  const std::size_t n1 = T / 2 - 1;  // M = 1, middle = center layer
  int checks = 0, ok = 0;
  auto expect = [&](bool b) {
    ++checks;
    ok += b;
  };
  expect(bit_equal(base, forward(w, tokens)));
  expect(bit_equal(run(VariantKind::parallel, n1), base));
  Matrix h = embed(w, tokens);
  for (std::size_t l = 1; l <= T; ++l) {
    const int reps = l == center_layer(T) ? 3 : 1;
    for (int r = 0; r < reps; ++r) h = apply_layer(c, w.layers[l - 1], h);
  }
  expect(bit_equal(run(VariantKind::looped_parallel, n1, 3), logits(w, h)));
  expect(bit_equal(run(VariantKind::reverse, n1), base));
  for (std::uint64_t s = 0; s < 5; ++s) expect(bit_equal(run(VariantKind::random_order, n1, 1, s), base));
  for (std::size_t n : {1u, 4u, 8u, 12u, 15u}) {
    expect(bit_equal(run(VariantKind::looped_parallel, n, 1), run(VariantKind::parallel, n)));
  }
  expect(bit_equal(run(VariantKind::middle_repeat, n1), base));
  return {ok == checks, std::to_string(ok) + "/" + std::to_string(checks) + " bit-exact"};
}

Outcome index_anchors() {
  const auto b15 = middle_block(32, 15);
  const auto b13 = middle_block(32, 13);
  const bool ok = b15.middle == LayerRange{16, 16} && b13.middle.size() == 5 && center_layer(32) == 16 &&
                  center_layer(24) == 12;
  return {ok, "middle(32,15)={" + std::to_string(b15.middle.first) + "}, |middle(32,13)|=" +
                  std::to_string(b13.middle.size()) + ", centers " + std::to_string(center_layer(32)) + "/" +
                  std::to_string(center_layer(24))};
}

Outcome latency() {
  const auto t0 = Clock::now();
  ModelConfig c = testing::small_config(32, 256, 8, 256, 256);
  const ModelWeights w = generate_random_model(c, 11);
  const auto tokens = testing::random_tokens(256, c.vocab_size, 12);
  const ExecutionPlan par = compile_variant({VariantKind::parallel, 8, 1, 0, 0}, 32);
  ExecutionPlan seq = baseline_plan(32);
  seq.source.start_layer = 8;
  const std::size_t depth = plan_depth(par);

  double t_seq = 1e30, t_par = 1e30;
  for (int r = 0; r < 3; ++r) {
    t_seq = std::min(t_seq, middle_block_wallclock(w, tokens, seq, 1).count());
    t_par = std::min(t_par, middle_block_wallclock(w, tokens, par, 8).count());
  }
  const double ratio = t_par / t_seq;
  const double secs = seconds_since(t0);
  const unsigned cores = std::thread::hardware_concurrency();
  return {ratio <= kLatencyRatio && depth == 18 && secs < kLatencyBudgetS,
          fmt("ratio %.3f", ratio) + fmt(" (limit 0.6), seq %.2f s", t_seq) + fmt(", par %.2f s", t_par) +
              ", depth " + std::to_string(depth) + ", " + std::to_string(cores) + " hw threads" +
              fmt(", %.1f s", secs)};
}

Outcome analysis_suite() {
  int checks = 0, ok = 0;
  auto expect = [&](bool b) {
    ++checks;
    ok += b;
  };
  auto traces_for = [](const ModelWeights& w, std::uint64_t seed) {
    std::vector<TraceBundle> out;
    for (std::uint64_t s = 0; s < 4; ++s) {
      const auto tokens = testing::random_tokens(8, w.config.vocab_size, seed + s);
      out.push_back(*execute_plan(w, tokens, baseline_plan(w.config.n_layers), true).trace);
    }
    return out;
  };

  const ModelWeights w = testing::strong_model(testing::small_config(8), 21);
  auto traces = traces_for(w, 30);
  const SimilarityMatrix s = similarity_matrix(traces);
  bool sym = true, diag = true;
  for (std::size_t i = 0; i < s.size(); ++i) {
    diag &= std::abs(s(i, i) - 1.0) <= kSimTol;
    for (std::size_t j = 0; j < s.size(); ++j) sym &= std::abs(s(i, j) - s(j, i)) <= kSimTol;
  }
  expect(sym);
  expect(diag);
  for (auto& t : traces)
    for (auto& m : t.states) {
      std::vector<float> v(m.data().begin(), m.data().end());
      for (auto& x : v) x *= 4.0f;
      m = Matrix(m.rows(), m.cols(), std::move(v));
    }
  const SimilarityMatrix scaled = similarity_matrix(traces);
  bool invariant = true;
  for (std::size_t i = 0; i < s.values().size(); ++i) invariant &= std::abs(s.values()[i] - scaled.values()[i]) <= kSimTol;
  expect(invariant);

  ModelWeights zero = generate_random_model(testing::small_config(8), 22);
  zero_layer_weights(zero);
  const SimilarityMatrix ones = similarity_matrix(traces_for(zero, 40));
  bool all_ones = true;
  for (double v : ones.values()) all_ones &= std::abs(v - 1.0) <= kSimTol;
  expect(all_ones);

  Rng rng(77);
  int agree = 0;
  for (int n = 0; n < kPlantedInstances; ++n) {
    const std::array<std::size_t, 3> sizes{1 + rng.uniform_below(8), 1 + rng.uniform_below(12),
                                           1 + rng.uniform_below(6)};
    const SimilarityMatrix m = oracle::planted(sizes, rng, 0.25);
    const LayerGrouping g = segment_layers(m);
    const oracle::Cut o = oracle::segment(m);
    agree += g.cut1 == o.cut1 && g.cut2 == o.cut2 && g.cut1 == sizes[0] && g.cut2 == sizes[0] + sizes[1];
  }
  expect(agree == kPlantedInstances);
  return {ok == checks, std::to_string(ok) + "/" + std::to_string(checks) + " properties, planted " +
                            std::to_string(agree) + "/" + std::to_string(kPlantedInstances)};
}

Outcome eval_suite() {
  std::string detail;
  bool pass = true;

  const ModelConfig c = testing::small_config(4, 16, 2, 64, 32);
  ModelWeights uniform = generate_random_model(c, 31);
  uniform.unembedding = Matrix(c.d_model, c.vocab_size);
  TaskOptions ppl_opt;
  ppl_opt.cloze = ppl_opt.multiple_choice = false;
  const auto ppl_task = build_tasks(random_corpus(64, 50, 2, 24, 32), ppl_opt);
  const double ppl = run_task(uniform, baseline_plan(4), ppl_task[0]).raw_score;
  const double ppl_err = std::abs(ppl - 64.0) / 64.0;
  pass &= ppl_err <= kPerplexityRelTol;
  detail += fmt("ppl %.12g", ppl) + fmt(" (rel err %.2g)", ppl_err);

  const bool fixed = normalize_score(0.7, 0.25, 0.7) == 1.0 && normalize_score(0.25, 0.25, 0.7) == 0.0 &&
                     normalize_score(30.0, 64.0, 30.0, TaskKind::perplexity) == 1.0 &&
                     normalize_score(64.0, 64.0, 30.0, TaskKind::perplexity) == 0.0;
  pass &= fixed;
  detail += fixed ? ", fixed points ok" : ", fixed points WRONG";

  const ModelWeights w = generate_random_model(c, 33);
  TaskOptions mc_opt;
  mc_opt.perplexity = mc_opt.cloze = false;
  mc_opt.max_items = kChanceItems;
  mc_opt.seed = 34;
  const auto mc = build_tasks(random_corpus(64, kChanceItems, 3, 10, 35), mc_opt);
  ThreadPool pool(default_worker_count());
  const TaskResult r = run_task(w, baseline_plan(4), mc[0], &pool);
  const bool chance = r.n_items >= 1000 && std::abs(r.raw_score - kChance) <= kChanceTol;
  pass &= chance;
  detail += fmt(", 4-choice acc %.4f", r.raw_score) + " over " + std::to_string(r.n_items) + " items";

  std::vector<NormalizedScore> scores{{0, 0, 1}, {0.5, 0, 1}, {1, 0, 1}};
  const double med = aggregate_normalized_median(scores);
  pass &= med == 0.5;
  detail += fmt(", median %.3f", med);
  return {pass, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int sh(const std::string& args) {
  const std::string cmd = std::string(LP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("lp_acceptance_" + std::to_string(getpid()));
  fs::remove_all(root);
  const std::string model = "--layers 8 --d-model 16 --heads 2 --vocab 32 --max-seq 32 --model-seed 5";
  const std::string data = " --sentences 30 --corpus-seed 6";
  const std::vector<std::pair<std::string, std::string>> commands{
      {"gen", "gen-model " + model + " --out {}/m.lpw"},
      {"corpus", "gen-corpus --vocab 32" + data + " --out {}/c.lpc"},
      {"run", "run " + model + data + " --variant random_order -N 2 --seeds 4 --out {}"},
      {"sweep", "sweep " + model + data + " --variants skip,parallel,random_order,looped_parallel --k-max 3 --seeds 3 --out {}"},
      {"similarity", "similarity " + model + data + " --out {}"},
  };
  int identical = 0, files = 0;
  std::string bad;
  for (const auto& [name, tmpl] : commands) {
    for (const char* rep : {"a", "b"}) {
      const fs::path out = root / rep / name;
      fs::create_directories(out);
      std::string cmd = tmpl;
      for (std::size_t p; (p = cmd.find("{}")) != std::string::npos;) cmd.replace(p, 2, out.string());
      // Different worker counts on the two passes.
      cmd += std::string(name == "gen" || name == "corpus" ? "" : (rep[0] == 'a' ? " --workers 1" : " --workers 3"));
      if (sh(cmd) != 0) return {false, "command failed: " + name};
    }
    for (const auto& e : fs::directory_iterator(root / "a" / name)) {
      ++files;
      if (slurp(e.path()) == slurp(root / "b" / name / e.path().filename())) {
        ++identical;
      } else {
        bad += " " + name + "/" + e.path().filename().string();
      }
    }
  }
  fs::remove_all(root);
  return {identical == files && files > 0,
          std::to_string(identical) + "/" + std::to_string(files) + " output files byte-identical" + bad};
}

}  // namespace

int main() {
  report("oracle-equivalence", oracle_equivalence);
  report("plan-equivalence", plan_equivalence);
  report("index-anchors", index_anchors);
  report("latency", latency);
  report("analysis-suite", analysis_suite);
  report("eval-suite", eval_suite);
  report("determinism", determinism);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
