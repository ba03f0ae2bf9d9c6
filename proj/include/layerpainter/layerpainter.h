#ifndef LAYERPAINTER_H
#define LAYERPAINTER_H

#include <stddef.h>
#include <stdint.h>

#if defined(LP_BUILDING_LIBRARY)
#define LP_API __attribute__((visibility("default")))
#else
#define LP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lp_status {
  LP_OK = 0,
  LP_ERR_SHAPE = 1,
  LP_ERR_DEGENERATE_INPUT = 2,
  LP_ERR_PLAN = 3,
  LP_ERR_FORMAT = 4,
  LP_ERR_TRUNCATED = 5,
  LP_ERR_SCHEMA = 6,
  LP_ERR_VOCABULARY = 7,
  LP_ERR_CONFIG = 8,
  LP_ERR_IO = 9,
  LP_ERR_INVALID_ARGUMENT = 10,
  LP_ERR_INTERNAL = 11
} lp_status;

typedef struct lp_model lp_model;
typedef struct lp_plan lp_plan;
typedef struct lp_corpus lp_corpus;
typedef struct lp_analysis lp_analysis;
typedef struct lp_sweep lp_sweep;

/* Message for the most recent failure on the calling thread. Never NULL. */
LP_API const char* lp_last_error(void);
LP_API const char* lp_status_name(lp_status status);
LP_API const char* lp_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
LP_API void lp_string_free(char* s);

/* ---- model ---- */

typedef enum lp_norm_kind { LP_NORM_RMS = 0, LP_NORM_LAYERNORM = 1 } lp_norm_kind;
typedef enum lp_positional_kind { LP_POS_ROTARY = 0, LP_POS_LEARNED = 1 } lp_positional_kind;
typedef enum lp_ffn_kind { LP_FFN_GATED_SILU = 0, LP_FFN_GELU = 1 } lp_ffn_kind;

typedef struct lp_model_config {
  uint32_t n_layers;
  uint32_t d_model;
  uint32_t n_heads;
  uint32_t d_ff;
  uint32_t vocab_size;
  uint32_t max_seq_len;
  lp_norm_kind norm;
  lp_positional_kind positional;
  lp_ffn_kind ffn;
  int linear_bias;
  float norm_eps;
  float rope_theta;
} lp_model_config;

LP_API void lp_model_config_default(lp_model_config* out);
LP_API lp_status lp_model_generate(const lp_model_config* config, uint64_t seed, lp_model** out);
LP_API lp_status lp_model_load(const char* path, lp_model** out);
LP_API lp_status lp_model_save(const lp_model* model, const char* path);
LP_API lp_status lp_model_get_config(const lp_model* model, lp_model_config* out);
/* Zeroes every per-layer tensor, turning each block into an identity. */
LP_API lp_status lp_model_zero_layers(lp_model* model);
LP_API void lp_model_free(lp_model* model);

/* ---- plans ---- */

/* kind is a variant name such as "parallel" or "looped_parallel". */
typedef struct lp_variant_spec {
  const char* kind;
  uint32_t start_layer;
  uint32_t iterations;
  uint64_t seed;
  uint32_t probe_layer;
} lp_variant_spec;

LP_API lp_status lp_plan_compile(const lp_variant_spec* spec, uint32_t n_layers, lp_plan** out);
LP_API lp_status lp_plan_depth(const lp_plan* plan, uint32_t* out);
LP_API lp_status lp_plan_text(const lp_plan* plan, char** out);
LP_API lp_status lp_plan_describe(const lp_plan* plan, char** out);
LP_API void lp_plan_free(lp_plan* plan);

/* 1-based inclusive bounds of the middle block; last < first when empty. */
LP_API lp_status lp_middle_block(uint32_t n_layers, uint32_t start_layer, uint32_t* first, uint32_t* last);
LP_API uint32_t lp_center_layer(uint32_t n_layers);

/* ---- inference ---- */

/* logits_out holds n_tokens * vocab_size floats, row-major. workers = 0
   picks the default worker count. */
LP_API lp_status lp_forward(const lp_model* model, const uint32_t* tokens, size_t n_tokens, const lp_plan* plan,
                            uint32_t workers, float* logits_out);
LP_API lp_status lp_middle_block_wallclock(const lp_model* model, const uint32_t* tokens, size_t n_tokens,
                                           const lp_plan* plan, uint32_t workers, double* seconds_out);

/* ---- corpora ---- */

LP_API lp_status lp_corpus_load(const char* path, lp_corpus** out);
/* Byte-level tokens, one sentence per non-empty line. */
LP_API lp_status lp_corpus_from_text(const char* text, size_t length, lp_corpus** out);
LP_API lp_status lp_corpus_random(uint32_t vocab_size, uint32_t sentences, uint32_t min_len, uint32_t max_len,
                                  uint64_t seed, lp_corpus** out);
LP_API lp_status lp_corpus_save(const lp_corpus* corpus, const char* path);
LP_API lp_status lp_corpus_info(const lp_corpus* corpus, uint32_t* vocab_size, size_t* tokens, size_t* sentences);
LP_API void lp_corpus_free(lp_corpus* corpus);

/* ---- similarity analysis ---- */

/* Runs the baseline plan over up to max_samples corpus sentences (each cut to
   max_seq_len) and derives the similarity matrix, grouping and variance. */
LP_API lp_status lp_analysis_run(const lp_model* model, const lp_corpus* corpus, uint32_t max_samples,
                                 uint32_t workers, lp_analysis** out);
LP_API lp_status lp_analysis_similarity(const lp_analysis* a, size_t i, size_t j, double* out);
LP_API lp_status lp_analysis_cuts(const lp_analysis* a, uint32_t* cut1, uint32_t* cut2);
LP_API lp_status lp_analysis_similarity_csv(const lp_analysis* a, char** out);
LP_API lp_status lp_analysis_similarity_svg(const lp_analysis* a, const char* title, char** out);
LP_API lp_status lp_analysis_grouping_text(const lp_analysis* a, char** out);
LP_API lp_status lp_analysis_variance_csv(const lp_analysis* a, char** out);
LP_API void lp_analysis_free(lp_analysis* a);

/* ---- evaluation sweeps ---- */

typedef struct lp_task_options {
  uint32_t max_items;
  uint32_t n_choices;
  uint64_t seed;
  int perplexity;
  int cloze;
  int multiple_choice;
} lp_task_options;

LP_API void lp_task_options_default(lp_task_options* out);

/* Row 0 of the result is the full-model anchor; row r+1 is grid[r]. Failing
   variants become error rows instead of failing the call. */
LP_API lp_status lp_sweep_run(const lp_model* model, const lp_corpus* corpus, const lp_task_options* options,
                              const lp_variant_spec* grid, size_t grid_size, uint32_t seed_count, uint32_t workers,
                              lp_sweep** out);
LP_API size_t lp_sweep_row_count(const lp_sweep* s);
LP_API size_t lp_sweep_task_count(const lp_sweep* s);
LP_API lp_status lp_sweep_task_id(const lp_sweep* s, size_t task, char** out);
/* Sets *out to NULL for rows that evaluated successfully. */
LP_API lp_status lp_sweep_row_error(const lp_sweep* s, size_t row, char** out);
LP_API lp_status lp_sweep_normalized_median(const lp_sweep* s, size_t row, double* out);
LP_API lp_status lp_sweep_csv(const lp_sweep* s, int include_anchor, char** out);
LP_API lp_status lp_sweep_task_csv(const lp_sweep* s, size_t row, char** out);
LP_API lp_status lp_sweep_best_k_csv(const lp_sweep* s, char** out);
LP_API lp_status lp_sweep_task_chart_svg(const lp_sweep* s, size_t task, int x_fraction, char** out);
LP_API lp_status lp_sweep_comparison_svg(const lp_sweep* s, int x_fraction, char** out);
LP_API void lp_sweep_free(lp_sweep* s);

/* ---- files ---- */

/* Writes via a temporary file and rename. */
LP_API lp_status lp_write_file(const char* path, const char* data, size_t length);

#ifdef __cplusplus
}
#endif

#endif
