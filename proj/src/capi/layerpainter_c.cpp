#include "layerpainter/layerpainter.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "layerpainter/analysis.hpp"
#include "layerpainter/errors.hpp"
#include "layerpainter/eval.hpp"
#include "layerpainter/model.hpp"
#include "layerpainter/plans.hpp"
#include "layerpainter/store.hpp"
#include "layerpainter/thread_pool.hpp"

struct lp_model {
  lp::ModelWeights weights;
};
struct lp_plan {
  lp::ExecutionPlan plan;
};
struct lp_corpus {
  lp::TokenizedCorpus corpus;
};
struct lp_analysis {
  lp::SimilarityMatrix similarity;
  lp::LayerStats stats;
  lp::LayerGrouping grouping;
};
struct lp_sweep {
  lp::SweepResult result;
};

namespace {

thread_local std::string last_error;

lp_status status_for(lp::ErrorKind k) {
  switch (k) {
    case lp::ErrorKind::shape: return LP_ERR_SHAPE;
    case lp::ErrorKind::degenerate_input: return LP_ERR_DEGENERATE_INPUT;
    case lp::ErrorKind::plan: return LP_ERR_PLAN;
    case lp::ErrorKind::format: return LP_ERR_FORMAT;
    case lp::ErrorKind::truncated: return LP_ERR_TRUNCATED;
    case lp::ErrorKind::schema: return LP_ERR_SCHEMA;
    case lp::ErrorKind::vocabulary: return LP_ERR_VOCABULARY;
    case lp::ErrorKind::config: return LP_ERR_CONFIG;
    case lp::ErrorKind::io: return LP_ERR_IO;
  }
  return LP_ERR_INTERNAL;
}

struct InvalidArgument {
  const char* what;
};

template <typename F>
lp_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return LP_OK;
  } catch (const InvalidArgument& e) {
    last_error = e.what;
    return LP_ERR_INVALID_ARGUMENT;
  } catch (const lp::Error& e) {
    last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return LP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return LP_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return LP_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw InvalidArgument{what};
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  require(out, "output pointer is NULL");
  *out = dup_string(s);
}

lp::ModelConfig from_c(const lp_model_config& c) {
  lp::ModelConfig m;
  m.n_layers = c.n_layers;
  m.d_model = c.d_model;
  m.n_heads = c.n_heads;
  m.d_ff = c.d_ff;
  m.vocab_size = c.vocab_size;
  m.max_seq_len = c.max_seq_len;
  if (c.norm != LP_NORM_RMS && c.norm != LP_NORM_LAYERNORM) throw lp::ConfigError("unknown norm kind");
  if (c.positional != LP_POS_ROTARY && c.positional != LP_POS_LEARNED) throw lp::ConfigError("unknown positional kind");
  if (c.ffn != LP_FFN_GATED_SILU && c.ffn != LP_FFN_GELU) throw lp::ConfigError("unknown ffn kind");
  m.norm = c.norm == LP_NORM_RMS ? lp::NormKind::rms : lp::NormKind::layernorm;
  m.positional = c.positional == LP_POS_ROTARY ? lp::PositionalKind::rotary : lp::PositionalKind::learned;
  m.ffn = c.ffn == LP_FFN_GATED_SILU ? lp::FfnKind::gated_silu : lp::FfnKind::gelu;
  m.linear_bias = c.linear_bias != 0;
  m.norm_eps = c.norm_eps;
  m.rope_theta = c.rope_theta;
  return m;
}

lp_model_config to_c(const lp::ModelConfig& m) {
  lp_model_config c;
  c.n_layers = static_cast<uint32_t>(m.n_layers);
  c.d_model = static_cast<uint32_t>(m.d_model);
  c.n_heads = static_cast<uint32_t>(m.n_heads);
  c.d_ff = static_cast<uint32_t>(m.d_ff);
  c.vocab_size = static_cast<uint32_t>(m.vocab_size);
  c.max_seq_len = static_cast<uint32_t>(m.max_seq_len);
  c.norm = m.norm == lp::NormKind::rms ? LP_NORM_RMS : LP_NORM_LAYERNORM;
  c.positional = m.positional == lp::PositionalKind::rotary ? LP_POS_ROTARY : LP_POS_LEARNED;
  c.ffn = m.ffn == lp::FfnKind::gated_silu ? LP_FFN_GATED_SILU : LP_FFN_GELU;
  c.linear_bias = m.linear_bias ? 1 : 0;
  c.norm_eps = m.norm_eps;
  c.rope_theta = m.rope_theta;
  return c;
}

lp::VariantSpec from_c(const lp_variant_spec& s) {
  require(s.kind, "variant kind is NULL");
  lp::VariantSpec v;
  v.kind = lp::parse_variant_kind(s.kind);
  v.start_layer = s.start_layer;
  v.iterations = s.iterations;
  v.seed = s.seed;
  v.probe_layer = s.probe_layer;
  return v;
}

std::size_t resolve_workers(uint32_t workers) { return workers == 0 ? lp::default_worker_count() : workers; }

}  // namespace

extern "C" {

const char* lp_last_error(void) { return last_error.c_str(); }

const char* lp_status_name(lp_status status) {
  switch (status) {
    case LP_OK: return "ok";
    case LP_ERR_SHAPE: return "shape";
    case LP_ERR_DEGENERATE_INPUT: return "degenerate_input";
    case LP_ERR_PLAN: return "plan";
    case LP_ERR_FORMAT: return "format";
    case LP_ERR_TRUNCATED: return "truncated";
    case LP_ERR_SCHEMA: return "schema";
    case LP_ERR_VOCABULARY: return "vocabulary";
    case LP_ERR_CONFIG: return "config";
    case LP_ERR_IO: return "io";
    case LP_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case LP_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* lp_version(void) { return "0.1.0"; }

void lp_string_free(char* s) { std::free(s); }

void lp_model_config_default(lp_model_config* out) {
  if (out != nullptr) *out = to_c(lp::ModelConfig{});
}

lp_status lp_model_generate(const lp_model_config* config, uint64_t seed, lp_model** out) {
  return guard([&] {
    require(config, "config is NULL");
    require(out, "output pointer is NULL");
    *out = new lp_model{lp::generate_random_model(from_c(*config), seed)};
  });
}

lp_status lp_model_load(const char* path, lp_model** out) {
  return guard([&] {
    require(path, "path is NULL");
    require(out, "output pointer is NULL");
    *out = new lp_model{lp::load_weights(path)};
  });
}

lp_status lp_model_save(const lp_model* model, const char* path) {
  return guard([&] {
    require(model, "model is NULL");
    require(path, "path is NULL");
    lp::save_weights(model->weights, path);
  });
}

lp_status lp_model_get_config(const lp_model* model, lp_model_config* out) {
  return guard([&] {
    require(model, "model is NULL");
    require(out, "output pointer is NULL");
    *out = to_c(model->weights.config);
  });
}

lp_status lp_model_zero_layers(lp_model* model) {
  return guard([&] {
    require(model, "model is NULL");
    lp::zero_layer_weights(model->weights);
  });
}

void lp_model_free(lp_model* model) { delete model; }

lp_status lp_plan_compile(const lp_variant_spec* spec, uint32_t n_layers, lp_plan** out) {
  return guard([&] {
    require(spec, "spec is NULL");
    require(out, "output pointer is NULL");
    *out = new lp_plan{lp::compile_variant(from_c(*spec), n_layers)};
  });
}

lp_status lp_plan_depth(const lp_plan* plan, uint32_t* out) {
  return guard([&] {
    require(plan, "plan is NULL");
    require(out, "output pointer is NULL");
    *out = static_cast<uint32_t>(lp::plan_depth(plan->plan));
  });
}

lp_status lp_plan_text(const lp_plan* plan, char** out) {
  return guard([&] {
    require(plan, "plan is NULL");
    emit(out, lp::plan_to_text(plan->plan));
  });
}

lp_status lp_plan_describe(const lp_plan* plan, char** out) {
  return guard([&] {
    require(plan, "plan is NULL");
    emit(out, lp::describe(plan->plan.source));
  });
}

void lp_plan_free(lp_plan* plan) { delete plan; }

lp_status lp_middle_block(uint32_t n_layers, uint32_t start_layer, uint32_t* first, uint32_t* last) {
  return guard([&] {
    require(first, "output pointer is NULL");
    require(last, "output pointer is NULL");
    const lp::MiddleBlock b = lp::middle_block(n_layers, start_layer);
    *first = static_cast<uint32_t>(b.middle.first);
    *last = static_cast<uint32_t>(b.middle.last);
  });
}

uint32_t lp_center_layer(uint32_t n_layers) { return static_cast<uint32_t>(lp::center_layer(n_layers)); }

lp_status lp_forward(const lp_model* model, const uint32_t* tokens, size_t n_tokens, const lp_plan* plan,
                     uint32_t workers, float* logits_out) {
  return guard([&] {
    require(model, "model is NULL");
    require(tokens, "tokens is NULL");
    require(plan, "plan is NULL");
    require(logits_out, "output pointer is NULL");
    lp::ThreadPool pool(resolve_workers(workers));
    const lp::ForwardResult r =
        lp::execute_plan(model->weights, std::span<const lp::TokenId>(tokens, n_tokens), plan->plan, false, &pool);
    std::memcpy(logits_out, r.logits.data().data(), r.logits.data().size() * sizeof(float));
  });
}

lp_status lp_middle_block_wallclock(const lp_model* model, const uint32_t* tokens, size_t n_tokens,
                                    const lp_plan* plan, uint32_t workers, double* seconds_out) {
  return guard([&] {
    require(model, "model is NULL");
    require(tokens, "tokens is NULL");
    require(plan, "plan is NULL");
    require(seconds_out, "output pointer is NULL");
    *seconds_out = lp::middle_block_wallclock(model->weights, std::span<const lp::TokenId>(tokens, n_tokens),
                                              plan->plan, workers)
                       .count();
  });
}

lp_status lp_corpus_load(const char* path, lp_corpus** out) {
  return guard([&] {
    require(path, "path is NULL");
    require(out, "output pointer is NULL");
    *out = new lp_corpus{lp::load_corpus(path)};
  });
}

lp_status lp_corpus_from_text(const char* text, size_t length, lp_corpus** out) {
  return guard([&] {
    require(text, "text is NULL");
    require(out, "output pointer is NULL");
    lp::TokenizedCorpus c = lp::corpus_from_text(std::string_view(text, length));
    if (c.ids.empty()) throw lp::DegenerateInputError("text contains no sentences");
    *out = new lp_corpus{std::move(c)};
  });
}

lp_status lp_corpus_random(uint32_t vocab_size, uint32_t sentences, uint32_t min_len, uint32_t max_len,
                           uint64_t seed, lp_corpus** out) {
  return guard([&] {
    require(out, "output pointer is NULL");
    *out = new lp_corpus{lp::random_corpus(vocab_size, sentences, min_len, max_len, seed)};
  });
}

lp_status lp_corpus_save(const lp_corpus* corpus, const char* path) {
  return guard([&] {
    require(corpus, "corpus is NULL");
    require(path, "path is NULL");
    lp::save_corpus(corpus->corpus, path);
  });
}

lp_status lp_corpus_info(const lp_corpus* corpus, uint32_t* vocab_size, size_t* tokens, size_t* sentences) {
  return guard([&] {
    require(corpus, "corpus is NULL");
    if (vocab_size) *vocab_size = corpus->corpus.vocab_size;
    if (tokens) *tokens = corpus->corpus.ids.size();
    if (sentences) *sentences = corpus->corpus.sentence_count();
  });
}

void lp_corpus_free(lp_corpus* corpus) { delete corpus; }

lp_status lp_analysis_run(const lp_model* model, const lp_corpus* corpus, uint32_t max_samples, uint32_t workers,
                          lp_analysis** out) {
  return guard([&] {
    require(model, "model is NULL");
    require(corpus, "corpus is NULL");
    require(out, "output pointer is NULL");
    if (max_samples == 0) throw lp::ConfigError("max_samples must be positive");
    const lp::ModelWeights& w = model->weights;
    if (corpus->corpus.vocab_size > w.config.vocab_size) {
      throw lp::VocabularyError("corpus vocabulary (" + std::to_string(corpus->corpus.vocab_size) +
                                ") exceeds model vocabulary (" + std::to_string(w.config.vocab_size) + ")");
    }
    std::vector<std::span<const lp::TokenId>> samples;
    for (std::size_t k = 0; k < corpus->corpus.sentence_count() && samples.size() < max_samples; ++k) {
      auto s = corpus->corpus.sentence(k);
      if (s.empty()) continue;
      samples.push_back(s.first(std::min(s.size(), w.config.max_seq_len)));
    }
    if (samples.empty()) throw lp::DegenerateInputError("corpus has no sentences");

    lp::ThreadPool pool(resolve_workers(workers));
    std::vector<lp::TraceBundle> traces(samples.size());
    const lp::ExecutionPlan plan = lp::baseline_plan(w.config.n_layers);
    pool.parallel_for(samples.size(), [&](std::size_t i) {
      traces[i] = std::move(*lp::execute_plan(w, samples[i], plan, true).trace);
    });
    auto a = std::make_unique<lp_analysis>();
    a->similarity = lp::similarity_matrix(traces);
    a->stats = lp::variance_profile(traces);
    a->grouping = lp::segment_layers(a->similarity);
    *out = a.release();
  });
}

lp_status lp_analysis_similarity(const lp_analysis* a, size_t i, size_t j, double* out) {
  return guard([&] {
    require(a, "analysis is NULL");
    require(out, "output pointer is NULL");
    if (i >= a->similarity.size() || j >= a->similarity.size()) throw InvalidArgument{"index out of range"};
    *out = a->similarity(i, j);
  });
}

lp_status lp_analysis_cuts(const lp_analysis* a, uint32_t* cut1, uint32_t* cut2) {
  return guard([&] {
    require(a, "analysis is NULL");
    require(cut1, "output pointer is NULL");
    require(cut2, "output pointer is NULL");
    *cut1 = static_cast<uint32_t>(a->grouping.cut1);
    *cut2 = static_cast<uint32_t>(a->grouping.cut2);
  });
}

lp_status lp_analysis_similarity_csv(const lp_analysis* a, char** out) {
  return guard([&] {
    require(a, "analysis is NULL");
    emit(out, lp::similarity_csv(a->similarity));
  });
}

lp_status lp_analysis_similarity_svg(const lp_analysis* a, const char* title, char** out) {
  return guard([&] {
    require(a, "analysis is NULL");
    emit(out, lp::similarity_svg(a->similarity, title ? title : ""));
  });
}

lp_status lp_analysis_grouping_text(const lp_analysis* a, char** out) {
  return guard([&] {
    require(a, "analysis is NULL");
    emit(out, lp::grouping_text(a->grouping, a->similarity.size()));
  });
}

lp_status lp_analysis_variance_csv(const lp_analysis* a, char** out) {
  return guard([&] {
    require(a, "analysis is NULL");
    emit(out, lp::variance_csv(a->stats));
  });
}

void lp_analysis_free(lp_analysis* a) { delete a; }

void lp_task_options_default(lp_task_options* out) {
  if (out == nullptr) return;
  const lp::TaskOptions d;
  out->max_items = static_cast<uint32_t>(d.max_items);
  out->n_choices = static_cast<uint32_t>(d.n_choices);
  out->seed = d.seed;
  out->perplexity = d.perplexity;
  out->cloze = d.cloze;
  out->multiple_choice = d.multiple_choice;
}

lp_status lp_sweep_run(const lp_model* model, const lp_corpus* corpus, const lp_task_options* options,
                       const lp_variant_spec* grid, size_t grid_size, uint32_t seed_count, uint32_t workers,
                       lp_sweep** out) {
  return guard([&] {
    require(model, "model is NULL");
    require(corpus, "corpus is NULL");
    require(out, "output pointer is NULL");
    if (grid_size > 0) require(grid, "grid is NULL");
    if (corpus->corpus.vocab_size > model->weights.config.vocab_size) {
      throw lp::VocabularyError("corpus vocabulary (" + std::to_string(corpus->corpus.vocab_size) +
                                ") exceeds model vocabulary (" + std::to_string(model->weights.config.vocab_size) +
                                ")");
    }
    lp::TaskOptions opt;
    if (options != nullptr) {
      opt.max_items = options->max_items;
      opt.n_choices = options->n_choices;
      opt.seed = options->seed;
      opt.perplexity = options->perplexity != 0;
      opt.cloze = options->cloze != 0;
      opt.multiple_choice = options->multiple_choice != 0;
    }
    const std::vector<lp::Task> tasks = lp::build_tasks(corpus->corpus, opt);
    std::vector<lp::VariantSpec> specs;
    for (std::size_t i = 0; i < grid_size; ++i) specs.push_back(from_c(grid[i]));
    lp::ThreadPool pool(resolve_workers(workers));
    lp::SweepOptions so;
    so.seed_count = seed_count;
    so.pool = &pool;
    *out = new lp_sweep{lp::run_sweep(model->weights, tasks, specs, so)};
  });
}

size_t lp_sweep_row_count(const lp_sweep* s) { return s ? s->result.rows.size() : 0; }

size_t lp_sweep_task_count(const lp_sweep* s) { return s ? s->result.task_ids.size() : 0; }

lp_status lp_sweep_task_id(const lp_sweep* s, size_t task, char** out) {
  return guard([&] {
    require(s, "sweep is NULL");
    if (task >= s->result.task_ids.size()) throw InvalidArgument{"task index out of range"};
    emit(out, s->result.task_ids[task]);
  });
}

lp_status lp_sweep_row_error(const lp_sweep* s, size_t row, char** out) {
  return guard([&] {
    require(s, "sweep is NULL");
    require(out, "output pointer is NULL");
    if (row >= s->result.rows.size()) throw InvalidArgument{"row index out of range"};
    const auto& err = s->result.rows[row].error;
    *out = err ? dup_string(*err) : nullptr;
  });
}

lp_status lp_sweep_normalized_median(const lp_sweep* s, size_t row, double* out) {
  return guard([&] {
    require(s, "sweep is NULL");
    require(out, "output pointer is NULL");
    if (row >= s->result.rows.size()) throw InvalidArgument{"row index out of range"};
    *out = s->result.rows[row].normalized_median;
  });
}

lp_status lp_sweep_csv(const lp_sweep* s, int include_anchor, char** out) {
  return guard([&] {
    require(s, "sweep is NULL");
    emit(out, lp::sweep_csv(s->result, include_anchor != 0));
  });
}

lp_status lp_sweep_task_csv(const lp_sweep* s, size_t row, char** out) {
  return guard([&] {
    require(s, "sweep is NULL");
    if (row >= s->result.rows.size()) throw InvalidArgument{"row index out of range"};
    emit(out, lp::task_results_csv(s->result, row));
  });
}

lp_status lp_sweep_best_k_csv(const lp_sweep* s, char** out) {
  return guard([&] {
    require(s, "sweep is NULL");
    emit(out, lp::best_k_csv(s->result));
  });
}

lp_status lp_sweep_task_chart_svg(const lp_sweep* s, size_t task, int x_fraction, char** out) {
  return guard([&] {
    require(s, "sweep is NULL");
    if (task >= s->result.task_ids.size()) throw InvalidArgument{"task index out of range"};
    emit(out, lp::task_chart_svg(s->result, task, x_fraction != 0));
  });
}

lp_status lp_sweep_comparison_svg(const lp_sweep* s, int x_fraction, char** out) {
  return guard([&] {
    require(s, "sweep is NULL");
    emit(out, lp::comparison_chart_svg(s->result, x_fraction != 0));
  });
}

void lp_sweep_free(lp_sweep* s) { delete s; }

lp_status lp_write_file(const char* path, const char* data, size_t length) {
  return guard([&] {
    require(path, "path is NULL");
    if (length > 0) require(data, "data is NULL");
    lp::write_file_atomic(path, std::string_view(data ? data : "", length));
  });
}

}  // extern "C"
