#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "layerpainter/model.hpp"
#include "layerpainter/plans.hpp"
#include "layerpainter/store.hpp"

namespace lp {

class ThreadPool;

enum class TaskKind { perplexity, cloze_last_word, multiple_choice };

std::string_view to_string(TaskKind k);

struct TaskItem {
  std::vector<TokenId> context;
  std::vector<TokenId> target;                // perplexity and cloze
  std::vector<std::vector<TokenId>> choices;  // multiple choice
  std::size_t answer = 0;                     // index into choices
};

struct Task {
  std::string id;
  TaskKind kind = TaskKind::perplexity;
  std::size_t vocab_size = 0;
  std::size_t n_choices = 0;  // multiple choice only
  std::vector<TaskItem> items;

  // Throws DegenerateInputError or VocabularyError.
  void validate() const;
};

struct TaskResult {
  std::string task_id;
  TaskKind kind = TaskKind::perplexity;
  double raw_score = 0.0;  // accuracy in [0, 1], or perplexity >= 1
  std::size_t n_items = 0;
  std::size_t n_skipped = 0;  // items longer than max_seq_len

  bool operator==(const TaskResult&) const = default;
};

struct NormalizedScore {
  double value = 0.0;
  double random_baseline = 0.0;
  double full_model_anchor = 0.0;
};

// Perplexity = exp(mean target NLL); cloze = fraction of items whose every
// target token is the argmax under teacher forcing; multiple choice =
// fraction whose answer has the highest summed log-likelihood (ties go to the
// lowest choice index). Items are spread over the pool when one is given and
// tallied in item order.
TaskResult run_task(const ModelWeights& weights, const ExecutionPlan& plan, const Task& task,
                    ThreadPool* pool = nullptr);

// Accuracy tasks: max(1 / n_choices, majority-class frequency). Perplexity:
// vocab_size, the uniform model's perplexity.
double random_baseline(const Task& task);

// (raw - baseline) / (anchor - baseline). Perplexities are mapped to -log
// first so higher is better. Throws DegenerateInputError when the mapped
// anchor equals the mapped baseline.
double normalize_score(double raw, double baseline, double anchor, TaskKind kind = TaskKind::multiple_choice);
NormalizedScore make_normalized(double raw, double baseline, double anchor, TaskKind kind);

// Median of the values; mean of the central two for even counts.
double aggregate_normalized_median(std::span<const NormalizedScore> scores);
double median(std::vector<double> values);

struct TaskOptions {
  std::size_t max_items = 200;
  std::size_t n_choices = 4;
  std::uint64_t seed = 0;
  bool perplexity = true;
  bool cloze = true;
  bool multiple_choice = true;
};

// Desk-scale tasks from a corpus. Every sentence of length >= 2 yields one
// item: perplexity scores all tokens after the first, cloze predicts the last
// token, multiple choice pits the last token against distractors sampled from
// corpus token positions.
std::vector<Task> build_tasks(const TokenizedCorpus& corpus, const TaskOptions& options);

struct SweepRow {
  VariantSpec spec;
  std::size_t seed_count = 1;
  double fraction_skipped = 0.0;
  std::size_t depth = 0;
  std::vector<double> raw;  // one per task
  std::vector<NormalizedScore> normalized;
  double normalized_median = 0.0;
  std::optional<std::string> error;
};

struct SweepResult {
  std::size_t n_layers = 0;
  std::vector<std::string> task_ids;
  std::vector<TaskKind> task_kinds;
  std::vector<SweepRow> rows;  // rows[0] is the baseline anchor
};

struct SweepOptions {
  std::size_t seed_count = 10;  // random_order rows average this many seeds
  ThreadPool* pool = nullptr;
};

// M / T for middle-block kinds, 1 / T for skip_single, else 0.
double fraction_skipped(const VariantSpec& spec, std::size_t n_layers);

// Evaluates the baseline anchor and then every spec in order. A spec that
// fails to compile or run becomes an error row.
SweepResult run_sweep(const ModelWeights& weights, std::span<const Task> tasks, std::span<const VariantSpec> grid,
                      const SweepOptions& options);

// variant,N,K,seed_count,fraction_skipped,depth,<raw per task>,normalized_median
// N holds the probe layer for skip_single and switch_adjacent.
std::string sweep_csv(const SweepResult& result, bool include_anchor = true);

// task,kind,raw_score,n_items,n_skipped,random_baseline,full_model_anchor,normalized
std::string task_results_csv(const SweepResult& result, std::size_t row);

// N,M,best_K,normalized_median over looped_parallel rows.
std::string best_k_csv(const SweepResult& result);

// One chart per task (raw score vs N or fraction skipped) and the normalized
// median comparison chart.
std::string task_chart_svg(const SweepResult& result, std::size_t task, bool x_fraction);
std::string comparison_chart_svg(const SweepResult& result, bool x_fraction);

}  // namespace lp
