// layerpainter: command-line runner for layer-execution experiments.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "layerpainter/layerpainter.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitPlan = 4;

struct Failure {
  lp_status status;
  std::string message;
};

void check(lp_status s) {
  if (s != LP_OK) throw Failure{s, lp_last_error()};
}

int exit_code_for(lp_status s) {
  switch (s) {
    case LP_ERR_PLAN: return kExitPlan;
    case LP_ERR_CONFIG:
    case LP_ERR_INVALID_ARGUMENT: return kExitUsage;
    case LP_ERR_INTERNAL: return 1;
    default: return kExitData;
  }
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Model = std::unique_ptr<lp_model, Deleter<lp_model, lp_model_free>>;
using Plan = std::unique_ptr<lp_plan, Deleter<lp_plan, lp_plan_free>>;
using Corpus = std::unique_ptr<lp_corpus, Deleter<lp_corpus, lp_corpus_free>>;
using Analysis = std::unique_ptr<lp_analysis, Deleter<lp_analysis, lp_analysis_free>>;
using Sweep = std::unique_ptr<lp_sweep, Deleter<lp_sweep, lp_sweep_free>>;

std::string take(char* s) {
  std::string out = s ? s : "";
  lp_string_free(s);
  return out;
}

template <typename F>
std::string text_of(F&& f) {
  char* out = nullptr;
  check(f(&out));
  return take(out);
}

void write_output(const fs::path& path, const std::string& data) {
  check(lp_write_file(path.string().c_str(), data.data(), data.size()));
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{LP_ERR_IO, "cannot create output directory '" + dir + "': " + ec.message()};
  return fs::path(dir);
}

// ---- shared option groups ----

struct ModelOptions {
  std::string path;
  uint32_t layers = 12;
  uint32_t d_model = 64;
  uint32_t heads = 4;
  uint32_t d_ff = 0;
  uint32_t vocab = 256;
  uint32_t max_seq = 64;
  std::string norm = "rms";
  std::string positional = "rotary";
  std::string ffn = "gated_silu";
  bool linear_bias = false;
  uint64_t seed = 0;

  void add(CLI::App* app, bool with_path) {
    if (with_path) app->add_option("--model", path, "LPW1 weight file (default: seeded random model)");
    app->add_option("--layers", layers, "random model: layer count")->check(CLI::PositiveNumber);
    app->add_option("--d-model", d_model, "random model: hidden size")->check(CLI::PositiveNumber);
    app->add_option("--heads", heads, "random model: attention heads")->check(CLI::PositiveNumber);
    app->add_option("--d-ff", d_ff, "random model: FFN width (default 4 x d-model)");
    app->add_option("--vocab", vocab, "random model: vocabulary size")->check(CLI::PositiveNumber);
    app->add_option("--max-seq", max_seq, "random model: maximum sequence length")->check(CLI::PositiveNumber);
    app->add_option("--norm", norm, "random model: rms or layernorm")->check(CLI::IsMember({"rms", "layernorm"}));
    app->add_option("--positional", positional, "random model: rotary or learned")
        ->check(CLI::IsMember({"rotary", "learned"}));
    app->add_option("--ffn", ffn, "random model: gated_silu or gelu")->check(CLI::IsMember({"gated_silu", "gelu"}));
    app->add_flag("--linear-bias", linear_bias, "random model: biases on linear layers");
    app->add_option("--model-seed", seed, "random model: seed");
  }

  lp_model_config config() const {
    lp_model_config c;
    lp_model_config_default(&c);
    c.n_layers = layers;
    c.d_model = d_model;
    c.n_heads = heads;
    c.d_ff = d_ff == 0 ? 4 * d_model : d_ff;
    c.vocab_size = vocab;
    c.max_seq_len = max_seq;
    c.norm = norm == "rms" ? LP_NORM_RMS : LP_NORM_LAYERNORM;
    c.positional = positional == "rotary" ? LP_POS_ROTARY : LP_POS_LEARNED;
    c.ffn = ffn == "gated_silu" ? LP_FFN_GATED_SILU : LP_FFN_GELU;
    c.linear_bias = linear_bias ? 1 : 0;
    return c;
  }

  Model load() const {
    lp_model* m = nullptr;
    if (!path.empty()) {
      check(lp_model_load(path.c_str(), &m));
    } else {
      const lp_model_config c = config();
      check(lp_model_generate(&c, seed, &m));
    }
    return Model(m);
  }
};

struct CorpusOptions {
  std::string corpus;
  std::string text;
  uint32_t sentences = 100;
  uint32_t min_len = 4;
  uint32_t max_len = 16;
  uint64_t seed = 1;

  void add(CLI::App* app) {
    auto* c = app->add_option("--corpus", corpus, "LPC1 token corpus");
    auto* t = app->add_option("--text", text, "UTF-8 text file, one sentence per line (byte tokens)");
    c->excludes(t);
    app->add_option("--sentences", sentences, "synthetic corpus: sentence count")->check(CLI::PositiveNumber);
    app->add_option("--min-len", min_len, "synthetic corpus: minimum sentence length")->check(CLI::PositiveNumber);
    app->add_option("--max-len", max_len, "synthetic corpus: maximum sentence length")->check(CLI::PositiveNumber);
    app->add_option("--corpus-seed", seed, "synthetic corpus: seed");
  }

  Corpus load(uint32_t vocab) const {
    lp_corpus* c = nullptr;
    if (!corpus.empty()) {
      check(lp_corpus_load(corpus.c_str(), &c));
    } else if (!text.empty()) {
      std::ifstream in(text, std::ios::binary);
      if (!in) throw Failure{LP_ERR_IO, "cannot open text file '" + text + "'"};
      std::ostringstream ss;
      ss << in.rdbuf();
      const std::string body = ss.str();
      check(lp_corpus_from_text(body.data(), body.size(), &c));
    } else {
      check(lp_corpus_random(vocab, sentences, min_len, max_len, seed, &c));
    }
    return Corpus(c);
  }
};

struct TaskFlags {
  std::vector<std::string> kinds{"perplexity", "cloze", "mc"};
  uint32_t max_items = 200;
  uint32_t choices = 4;
  uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--tasks", kinds, "task kinds: perplexity, cloze, mc")
        ->delimiter(',')
        ->check(CLI::IsMember({"perplexity", "cloze", "mc"}));
    app->add_option("--max-items", max_items, "items per task")->check(CLI::PositiveNumber);
    app->add_option("--choices", choices, "choices per multiple-choice item")->check(CLI::Range(2u, 64u));
    app->add_option("--task-seed", seed, "seed for multiple-choice distractors");
  }

  lp_task_options options() const {
    lp_task_options o;
    lp_task_options_default(&o);
    o.max_items = max_items;
    o.n_choices = choices;
    o.seed = seed;
    auto has = [&](const char* k) { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); };
    o.perplexity = has("perplexity");
    o.cloze = has("cloze");
    o.multiple_choice = has("mc");
    return o;
  }
};

struct VariantFlags {
  std::string kind = "baseline";
  uint32_t start_layer = 0;
  uint32_t iterations = 1;
  uint64_t seed = 0;
  uint32_t probe_layer = 0;

  void add(CLI::App* app) {
    app->add_option("--variant", kind, "execution variant");
    app->add_option("--start-layer,-N", start_layer, "N: layers kept before the middle block");
    app->add_option("--iterations,-K", iterations, "K for looped_parallel and full_repeat");
    app->add_option("--seed", seed, "seed for random_order");
    app->add_option("--probe-layer", probe_layer, "layer for skip_single and switch_adjacent");
  }

  lp_variant_spec spec() const { return lp_variant_spec{kind.c_str(), start_layer, iterations, seed, probe_layer}; }
};

uint32_t model_layers(const lp_model* m) {
  lp_model_config c;
  check(lp_model_get_config(m, &c));
  return c.n_layers;
}

uint32_t model_vocab(const lp_model* m) {
  lp_model_config c;
  check(lp_model_get_config(m, &c));
  return c.vocab_size;
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return out;
}

// ---- commands ----

int cmd_run(const ModelOptions& mo, const CorpusOptions& co, const TaskFlags& tf, const VariantFlags& vf,
            uint32_t seeds, uint32_t workers, const std::string& out_dir) {
  Model model = mo.load();
  const lp_variant_spec spec = vf.spec();
  lp_plan* raw_plan = nullptr;
  check(lp_plan_compile(&spec, model_layers(model.get()), &raw_plan));
  Plan plan(raw_plan);
  Corpus corpus = co.load(model_vocab(model.get()));
  const lp_task_options opt = tf.options();
  lp_sweep* raw = nullptr;
  check(lp_sweep_run(model.get(), corpus.get(), &opt, &spec, 1, seeds, workers, &raw));
  Sweep sweep(raw);

  char* err = nullptr;
  check(lp_sweep_row_error(sweep.get(), 1, &err));
  if (err != nullptr) throw Failure{LP_ERR_PLAN, take(err)};

  const fs::path dir = prepare_dir(out_dir);
  write_output(dir / "results.csv", text_of([&](char** o) { return lp_sweep_csv(sweep.get(), 0, o); }));
  write_output(dir / "tasks.csv", text_of([&](char** o) { return lp_sweep_task_csv(sweep.get(), 1, o); }));
  write_output(dir / "plan.txt", text_of([&](char** o) { return lp_plan_text(plan.get(), o); }));

  double median = 0.0;
  check(lp_sweep_normalized_median(sweep.get(), 1, &median));
  uint32_t depth = 0;
  check(lp_plan_depth(plan.get(), &depth));
  std::printf("%s: depth %u, normalized median %.6f\n",
              text_of([&](char** o) { return lp_plan_describe(plan.get(), o); }).c_str(), depth, median);
  return 0;
}

struct SweepFlags {
  std::vector<std::string> variants{"skip", "middle_repeat", "reverse", "random_order", "parallel"};
  uint32_t n_min = 1;
  uint32_t n_max = 0;
  uint32_t k_min = 1;
  uint32_t k_max = 1;
  uint64_t seed = 0;
  std::string x_axis = "fraction";
};

std::vector<lp_variant_spec> expand_grid(const SweepFlags& sf, uint32_t T, std::vector<std::string>& names) {
  // names owns the kind strings referenced by the returned specs.
  names = sf.variants;
  std::vector<lp_variant_spec> grid;
  const uint32_t n_hi = sf.n_max == 0 ? (T >= 2 ? (T - 2) / 2 : 0) : sf.n_max;
  if (sf.k_min == 0 || sf.k_max < sf.k_min) throw Failure{LP_ERR_CONFIG, "--k-min/--k-max must satisfy 1 <= min <= max"};
  if (sf.n_min == 0 || n_hi < sf.n_min) throw Failure{LP_ERR_CONFIG, "empty N range"};
  for (const std::string& v : names) {
    const char* kind = v.c_str();
    if (v == "baseline") {
      grid.push_back({kind, 0, 1, 0, 0});
    } else if (v == "full_repeat") {
      for (uint32_t k = sf.k_min; k <= sf.k_max; ++k) grid.push_back({kind, 0, k, 0, 0});
    } else if (v == "skip_single" || v == "switch_adjacent") {
      const uint32_t hi = v == "skip_single" ? T : T - 1;
      for (uint32_t n = 1; n <= hi; ++n) grid.push_back({kind, 0, 1, 0, n});
    } else if (v == "looped_parallel") {
      for (uint32_t n = sf.n_min; n <= n_hi; ++n)
        for (uint32_t k = sf.k_min; k <= sf.k_max; ++k) grid.push_back({kind, n, k, 0, 0});
    } else {
      for (uint32_t n = sf.n_min; n <= n_hi; ++n) grid.push_back({kind, n, 1, sf.seed, 0});
    }
  }
  return grid;
}

int cmd_sweep(const ModelOptions& mo, const CorpusOptions& co, const TaskFlags& tf, const SweepFlags& sf,
              uint32_t seeds, uint32_t workers, const std::string& out_dir) {
  static const std::vector<std::string> known{"baseline",     "skip",     "middle_repeat",   "reverse",
                                              "random_order", "parallel", "looped_parallel", "full_repeat",
                                              "skip_single",  "switch_adjacent"};
  for (const auto& v : sf.variants) {
    if (std::find(known.begin(), known.end(), v) == known.end()) throw Failure{LP_ERR_PLAN, "unknown variant '" + v + "'"};
  }
  Model model = mo.load();
  std::vector<std::string> names;
  const std::vector<lp_variant_spec> grid = expand_grid(sf, model_layers(model.get()), names);
  Corpus corpus = co.load(model_vocab(model.get()));
  const lp_task_options opt = tf.options();
  lp_sweep* raw = nullptr;
  check(lp_sweep_run(model.get(), corpus.get(), &opt, grid.data(), grid.size(), seeds, workers, &raw));
  Sweep sweep(raw);

  const fs::path dir = prepare_dir(out_dir);
  const int x_fraction = sf.x_axis == "fraction" ? 1 : 0;
  write_output(dir / "sweep.csv", text_of([&](char** o) { return lp_sweep_csv(sweep.get(), 1, o); }));
  for (std::size_t t = 0; t < lp_sweep_task_count(sweep.get()); ++t) {
    const std::string id = text_of([&](char** o) { return lp_sweep_task_id(sweep.get(), t, o); });
    write_output(dir / ("chart_" + safe_name(id) + ".svg"),
                 text_of([&](char** o) { return lp_sweep_task_chart_svg(sweep.get(), t, x_fraction, o); }));
  }
  write_output(dir / "comparison.svg",
               text_of([&](char** o) { return lp_sweep_comparison_svg(sweep.get(), x_fraction, o); }));
  if (std::find(names.begin(), names.end(), "looped_parallel") != names.end()) {
    write_output(dir / "best_k.csv", text_of([&](char** o) { return lp_sweep_best_k_csv(sweep.get(), o); }));
  }

  std::size_t failed = 0;
  for (std::size_t r = 1; r < lp_sweep_row_count(sweep.get()); ++r) {
    char* err = nullptr;
    check(lp_sweep_row_error(sweep.get(), r, &err));
    if (err != nullptr) {
      ++failed;
      std::fprintf(stderr, "warning: row %zu (%s): %s\n", r, grid[r - 1].kind, take(err).c_str());
    }
  }
  std::printf("%zu rows, %zu failed; wrote %s\n", grid.size(), failed, dir.string().c_str());
  return 0;
}

int cmd_similarity(const ModelOptions& mo, const CorpusOptions& co, uint32_t samples, uint32_t workers,
                   bool zero_layers, const std::string& out_dir) {
  Model model = mo.load();
  if (zero_layers) check(lp_model_zero_layers(model.get()));
  Corpus corpus = co.load(model_vocab(model.get()));
  lp_analysis* raw = nullptr;
  check(lp_analysis_run(model.get(), corpus.get(), samples, workers, &raw));
  Analysis a(raw);

  const fs::path dir = prepare_dir(out_dir);
  write_output(dir / "similarity.csv", text_of([&](char** o) { return lp_analysis_similarity_csv(a.get(), o); }));
  write_output(dir / "similarity.svg", text_of([&](char** o) {
                 return lp_analysis_similarity_svg(a.get(), "Average cosine similarity between layer outputs", o);
               }));
  const std::string grouping = text_of([&](char** o) { return lp_analysis_grouping_text(a.get(), o); });
  write_output(dir / "grouping.txt", grouping);
  write_output(dir / "variance.csv", text_of([&](char** o) { return lp_analysis_variance_csv(a.get(), o); }));
  std::fputs(grouping.c_str(), stdout);
  return 0;
}

int cmd_gen_model(const ModelOptions& mo, bool zero_layers, const std::string& out) {
  Model model = mo.load();
  if (zero_layers) check(lp_model_zero_layers(model.get()));
  check(lp_model_save(model.get(), out.c_str()));
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_gen_corpus(const CorpusOptions& co, uint32_t vocab, const std::string& out) {
  Corpus corpus = co.load(vocab);
  check(lp_corpus_save(corpus.get(), out.c_str()));
  size_t tokens = 0, sentences = 0;
  check(lp_corpus_info(corpus.get(), nullptr, &tokens, &sentences));
  std::printf("wrote %s (%zu tokens, %zu sentences)\n", out.c_str(), tokens, sentences);
  return 0;
}

int cmd_info(const ModelOptions& mo, const VariantFlags& vf) {
  Model model = mo.load();
  lp_model_config c;
  check(lp_model_get_config(model.get(), &c));
  std::printf("layers %u, d_model %u, heads %u, d_ff %u, vocab %u, max_seq %u\n", c.n_layers, c.d_model, c.n_heads,
              c.d_ff, c.vocab_size, c.max_seq_len);
  std::printf("norm %s, positional %s, ffn %s, linear_bias %d\n", c.norm == LP_NORM_RMS ? "rms" : "layernorm",
              c.positional == LP_POS_ROTARY ? "rotary" : "learned",
              c.ffn == LP_FFN_GATED_SILU ? "gated_silu" : "gelu", c.linear_bias);
  const lp_variant_spec spec = vf.spec();
  lp_plan* raw = nullptr;
  check(lp_plan_compile(&spec, c.n_layers, &raw));
  Plan plan(raw);
  uint32_t depth = 0;
  check(lp_plan_depth(plan.get(), &depth));
  std::printf("variant %s\n", text_of([&](char** o) { return lp_plan_describe(plan.get(), o); }).c_str());
  if (vf.start_layer > 0) {
    uint32_t first = 0, last = 0;
    check(lp_middle_block(c.n_layers, vf.start_layer, &first, &last));
    std::printf("middle block %u..%u (%u layers)\n", first, last, last >= first ? last - first + 1 : 0);
  }
  std::printf("depth %u\n", depth);
  std::fputs(text_of([&](char** o) { return lp_plan_text(plan.get(), o); }).c_str(), stdout);
  return 0;
}

int cmd_bench(const ModelOptions& mo, uint32_t start_layer, uint32_t seq_len, uint32_t workers, uint32_t repeats) {
  Model model = mo.load();
  const uint32_t T = model_layers(model.get());
  // The baseline plan carries N so that the same middle stages are timed.
  lp_variant_spec base_spec{"baseline", start_layer, 1, 0, 0};
  lp_variant_spec par_spec{"parallel", start_layer, 1, 0, 0};
  lp_plan *pb = nullptr, *pp = nullptr;
  check(lp_plan_compile(&par_spec, T, &pp));
  Plan par(pp);
  check(lp_plan_compile(&base_spec, T, &pb));
  Plan base(pb);
  std::vector<uint32_t> tokens(seq_len);
  const uint32_t vocab = model_vocab(model.get());
  for (uint32_t i = 0; i < seq_len; ++i) tokens[i] = (i * 7919u + 13u) % vocab;
  double best_seq = 1e30, best_par = 1e30;
  for (uint32_t r = 0; r < repeats; ++r) {
    double s = 0, p = 0;
    check(lp_middle_block_wallclock(model.get(), tokens.data(), tokens.size(), base.get(), 1, &s));
    check(lp_middle_block_wallclock(model.get(), tokens.data(), tokens.size(), par.get(), workers, &p));
    best_seq = std::min(best_seq, s);
    best_par = std::min(best_par, p);
  }
  std::printf("sequential %.6f s, parallel %.6f s on %u workers, ratio %.3f\n", best_seq, best_par, workers,
              best_par / best_seq);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run transformer layer-execution experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lp_version()));

  uint32_t workers = 0;
  std::string out_dir = "out";
  auto add_workers = [&](CLI::App* sub) {
    sub->add_option("--workers", workers, "worker threads (default: available cores)")
        ->envname("LAYER_PAINTER_THREADS")
        ->check(CLI::PositiveNumber);
  };

  ModelOptions mo;
  CorpusOptions co;
  TaskFlags tf;
  VariantFlags vf;
  SweepFlags sf;
  uint32_t seeds = 10;
  uint32_t samples = 64;
  bool zero_layers = false;
  std::string out_file;
  uint32_t corpus_vocab = 256;
  uint32_t seq_len = 256;
  uint32_t repeats = 3;

  auto* run = app.add_subcommand("run", "evaluate one variant");
  mo.add(run, true);
  co.add(run);
  tf.add(run);
  vf.add(run);
  run->add_option("--seeds", seeds, "seeds averaged for random_order")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory");
  add_workers(run);

  auto* sweep = app.add_subcommand("sweep", "evaluate a grid of variants over N (and K)");
  mo.add(sweep, true);
  co.add(sweep);
  tf.add(sweep);
  sweep->add_option("--variants", sf.variants, "comma-separated variant list")->delimiter(',');
  sweep->add_option("--n-min", sf.n_min, "smallest N");
  sweep->add_option("--n-max", sf.n_max, "largest N (default: largest with a nonempty middle)");
  sweep->add_option("--k-min", sf.k_min, "smallest K");
  sweep->add_option("--k-max", sf.k_max, "largest K");
  sweep->add_option("--seed", sf.seed, "base seed for random_order");
  sweep->add_option("--seeds", seeds, "seeds averaged per random_order row")->check(CLI::PositiveNumber);
  sweep->add_option("--x-axis", sf.x_axis, "chart x axis: n or fraction")->check(CLI::IsMember({"n", "fraction"}));
  sweep->add_option("--out", out_dir, "output directory");
  add_workers(sweep);

  auto* sim = app.add_subcommand("similarity", "layer similarity matrix, grouping and variance");
  mo.add(sim, true);
  co.add(sim);
  sim->add_option("--samples", samples, "corpus sentences to trace")->check(CLI::PositiveNumber);
  sim->add_flag("--zero-layers", zero_layers, "zero all layer weights first");
  sim->add_option("--out", out_dir, "output directory");
  add_workers(sim);

  auto* gen = app.add_subcommand("gen-model", "write a seeded random model");
  mo.add(gen, false);
  gen->add_flag("--zero-layers", zero_layers, "zero all layer weights");
  gen->add_option("--out", out_file, "output LPW1 file")->required();

  auto* gen_corpus = app.add_subcommand("gen-corpus", "write an LPC1 corpus from text or a seeded generator");
  co.add(gen_corpus);
  gen_corpus->add_option("--vocab", corpus_vocab, "synthetic corpus vocabulary")->check(CLI::PositiveNumber);
  gen_corpus->add_option("--out", out_file, "output LPC1 file")->required();

  auto* info = app.add_subcommand("info", "print model configuration and a compiled plan");
  mo.add(info, true);
  vf.add(info);

  auto* bench = app.add_subcommand("bench", "time the middle block sequentially and as one parallel stage");
  mo.add(bench, true);
  bench->add_option("--start-layer,-N", vf.start_layer, "N")->required();
  bench->add_option("--seq-len", seq_len, "tokens per forward pass")->check(CLI::PositiveNumber);
  bench->add_option("--repeats", repeats, "best-of repetitions")->check(CLI::PositiveNumber);
  add_workers(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(mo, co, tf, vf, seeds, workers, out_dir);
    if (*sweep) return cmd_sweep(mo, co, tf, sf, seeds, workers, out_dir);
    if (*sim) return cmd_similarity(mo, co, samples, workers, zero_layers, out_dir);
    if (*gen) return cmd_gen_model(mo, zero_layers, out_file);
    if (*gen_corpus) return cmd_gen_corpus(co, corpus_vocab, out_file);
    if (*info) return cmd_info(mo, vf);
    if (*bench) return cmd_bench(mo, vf.start_layer, seq_len, workers == 0 ? 1 : workers, repeats);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", lp_status_name(f.status), f.message.c_str());
    return exit_code_for(f.status);
  }
  return kExitUsage;
}
