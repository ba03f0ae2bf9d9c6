#include "layerpainter/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "layerpainter/errors.hpp"
#include "layerpainter/random.hpp"
#include "layerpainter/thread_pool.hpp"
#include "text_format.hpp"

namespace lp {

namespace {

struct ItemOutcome {
  bool skipped = false;
  double nll = 0.0;
  std::size_t n_targets = 0;
  bool correct = false;
};

std::vector<TokenId> concat(const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
  std::vector<TokenId> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double log_softmax_at(std::span<const float> row, TokenId target) {
  double mx = row[0];
  for (float v : row) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (float v : row) sum += std::exp(static_cast<double>(v) - mx);
  return static_cast<double>(row[target]) - mx - std::log(sum);
}

std::size_t argmax(std::span<const float> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// Log-likelihood of `continuation` after `context`, plus whether every
// continuation token is the greedy argmax.
std::pair<double, bool> score_continuation(const ModelWeights& w, const ExecutionPlan& plan,
                                           const std::vector<TokenId>& context,
                                           const std::vector<TokenId>& continuation) {
  const std::vector<TokenId> seq = concat(context, continuation);
  const Matrix lg = execute_plan(w, seq, plan, false).logits;
  double ll = 0.0;
  bool all_argmax = true;
  for (std::size_t k = 0; k < continuation.size(); ++k) {
    const auto row = lg.row(context.size() + k - 1);
    ll += log_softmax_at(row, continuation[k]);
    if (argmax(row) != continuation[k]) all_argmax = false;
  }
  return {ll, all_argmax};
}

ItemOutcome score_item(const ModelWeights& w, const ExecutionPlan& plan, const Task& task, const TaskItem& item) {
  ItemOutcome out;
  const std::size_t limit = w.config.max_seq_len;
  if (task.kind == TaskKind::multiple_choice) {
    for (const auto& choice : item.choices) {
      if (item.context.size() + choice.size() > limit) {
        out.skipped = true;
        return out;
      }
    }
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t c = 0; c < item.choices.size(); ++c) {
      const double ll = score_continuation(w, plan, item.context, item.choices[c]).first;
      if (c == 0 || ll > best) {
        best = ll;
        best_idx = c;
      }
    }
    out.correct = best_idx == item.answer;
    return out;
  }
  if (item.context.size() + item.target.size() > limit) {
    out.skipped = true;
    return out;
  }
  const auto [ll, all_argmax] = score_continuation(w, plan, item.context, item.target);
  out.nll = -ll;
  out.n_targets = item.target.size();
  out.correct = all_argmax;
  return out;
}

std::string task_id_for(TaskKind k, std::size_t n_choices) {
  switch (k) {
    case TaskKind::perplexity: return "perplexity";
    case TaskKind::cloze_last_word: return "cloze";
    case TaskKind::multiple_choice: return "mc" + std::to_string(n_choices);
  }
  return "task";
}

std::string n_column(const VariantSpec& s) {
  if (is_middle_block_kind(s.kind)) return std::to_string(s.start_layer);
  if (s.kind == VariantKind::skip_single || s.kind == VariantKind::switch_adjacent) {
    return std::to_string(s.probe_layer);
  }
  return "0";
}

std::size_t k_value(const VariantSpec& s) {
  return s.kind == VariantKind::looped_parallel || s.kind == VariantKind::full_repeat ? s.iterations : 1;
}

std::string series_key(const VariantSpec& s) {
  std::string key(to_string(s.kind));
  if (s.kind == VariantKind::looped_parallel || s.kind == VariantKind::full_repeat) {
    key += " K=" + std::to_string(s.iterations);
  }
  return key;
}

double x_value(const SweepRow& row, bool x_fraction) {
  if (x_fraction) return row.fraction_skipped;
  return std::stod(n_column(row.spec));
}

std::string format_score(double v) { return std::isfinite(v) ? detail::fixed(v) : "nan"; }

}  // namespace

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::perplexity: return "perplexity";
    case TaskKind::cloze_last_word: return "cloze_last_word";
    case TaskKind::multiple_choice: return "multiple_choice";
  }
  return "unknown";
}

void Task::validate() const {
  if (items.empty()) throw DegenerateInputError("task '" + id + "' has no items");
  auto check = [&](const std::vector<TokenId>& ids) {
    for (TokenId t : ids) {
      if (t >= vocab_size) {
        throw VocabularyError("task '" + id + "' uses token " + std::to_string(t) + " outside vocabulary of " +
                              std::to_string(vocab_size));
      }
    }
  };
  for (const TaskItem& item : items) {
    if (item.context.empty()) throw DegenerateInputError("task '" + id + "' has an item with empty context");
    check(item.context);
    if (kind == TaskKind::multiple_choice) {
      if (item.choices.size() != n_choices || item.answer >= item.choices.size()) {
        throw DegenerateInputError("task '" + id + "' has a malformed multiple-choice item");
      }
      for (const auto& c : item.choices) {
        if (c.empty()) throw DegenerateInputError("task '" + id + "' has an empty choice");
        check(c);
      }
    } else {
      if (item.target.empty()) throw DegenerateInputError("task '" + id + "' has an item with empty target");
      check(item.target);
    }
  }
}

TaskResult run_task(const ModelWeights& weights, const ExecutionPlan& plan, const Task& task, ThreadPool* pool) {
  task.validate();
  if (task.vocab_size != weights.config.vocab_size) {
    throw VocabularyError("task '" + task.id + "' was built for vocab " + std::to_string(task.vocab_size) +
                          " but the model has " + std::to_string(weights.config.vocab_size));
  }
  const ExecutionPlan checked = validate_plan(plan, weights.config);
  std::vector<ItemOutcome> outcomes(task.items.size());
  auto one = [&](std::size_t i) { outcomes[i] = score_item(weights, checked, task, task.items[i]); };
  if (pool != nullptr) {
    pool->parallel_for(outcomes.size(), one);
  } else {
    for (std::size_t i = 0; i < outcomes.size(); ++i) one(i);
  }

  TaskResult r;
  r.task_id = task.id;
  r.kind = task.kind;
  double nll = 0.0;
  std::size_t targets = 0, correct = 0;
  for (const ItemOutcome& o : outcomes) {
    if (o.skipped) {
      ++r.n_skipped;
      continue;
    }
    ++r.n_items;
    nll += o.nll;
    targets += o.n_targets;
    correct += o.correct ? 1 : 0;
  }
  if (r.n_items == 0) {
    throw DegenerateInputError("task '" + task.id + "': every item exceeds max_seq_len " +
                               std::to_string(weights.config.max_seq_len));
  }
  if (task.kind == TaskKind::perplexity) {
    r.raw_score = std::exp(nll / static_cast<double>(targets));
  } else {
    r.raw_score = static_cast<double>(correct) / static_cast<double>(r.n_items);
  }
  return r;
}

double random_baseline(const Task& task) {
  task.validate();
  if (task.kind == TaskKind::perplexity) return static_cast<double>(task.vocab_size);
  std::map<std::vector<TokenId>, std::size_t> target_counts;
  std::map<std::size_t, std::size_t> answer_counts;
  std::size_t most = 0;
  for (const TaskItem& item : task.items) {
    const std::size_t c = task.kind == TaskKind::multiple_choice ? ++answer_counts[item.answer]
                                                                  : ++target_counts[item.target];
    most = std::max(most, c);
  }
  const double chance =
      1.0 / static_cast<double>(task.kind == TaskKind::multiple_choice ? task.n_choices : task.vocab_size);
  return std::max(chance, static_cast<double>(most) / static_cast<double>(task.items.size()));
}

double normalize_score(double raw, double baseline, double anchor, TaskKind kind) {
  if (kind == TaskKind::perplexity) {
    if (!(raw > 0.0) || !(baseline > 0.0) || !(anchor > 0.0)) {
      throw DegenerateInputError("perplexity normalization needs positive values");
    }
    raw = -std::log(raw);
    baseline = -std::log(baseline);
    anchor = -std::log(anchor);
  }
  if (anchor == baseline) throw DegenerateInputError("normalize_score: anchor equals random baseline");
  return (raw - baseline) / (anchor - baseline);
}

NormalizedScore make_normalized(double raw, double baseline, double anchor, TaskKind kind) {
  return {normalize_score(raw, baseline, anchor, kind), baseline, anchor};
}

double median(std::vector<double> values) {
  if (values.empty()) throw DegenerateInputError("median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double aggregate_normalized_median(std::span<const NormalizedScore> scores) {
  std::vector<double> values;
  values.reserve(scores.size());
  for (const auto& s : scores) values.push_back(s.value);
  return median(std::move(values));
}

std::vector<Task> build_tasks(const TokenizedCorpus& corpus, const TaskOptions& options) {
  corpus.validate();
  if (options.max_items == 0) throw ConfigError("max_items must be positive");
  if (options.multiple_choice && options.n_choices < 2) throw ConfigError("multiple choice needs >= 2 choices");

  std::vector<std::span<const TokenId>> sentences;
  for (std::size_t k = 0; k < corpus.sentence_count() && sentences.size() < options.max_items; ++k) {
    if (corpus.sentence(k).size() >= 2) sentences.push_back(corpus.sentence(k));
  }
  if (sentences.empty()) throw DegenerateInputError("corpus has no sentence with at least 2 tokens");

  std::vector<Task> tasks;
  auto make = [&](TaskKind kind) {
    Task t;
    t.kind = kind;
    t.vocab_size = corpus.vocab_size;
    t.n_choices = kind == TaskKind::multiple_choice ? options.n_choices : 0;
    t.id = task_id_for(kind, options.n_choices);
    return t;
  };
  if (options.perplexity) {
    Task t = make(TaskKind::perplexity);
    for (auto s : sentences) t.items.push_back({{s[0]}, {s.begin() + 1, s.end()}, {}, 0});
    tasks.push_back(std::move(t));
  }
  if (options.cloze) {
    Task t = make(TaskKind::cloze_last_word);
    for (auto s : sentences) t.items.push_back({{s.begin(), s.end() - 1}, {s.back()}, {}, 0});
    tasks.push_back(std::move(t));
  }
  if (options.multiple_choice) {
    std::set<TokenId> distinct(corpus.ids.begin(), corpus.ids.end());
    if (distinct.size() < options.n_choices) {
      throw DegenerateInputError("corpus has fewer distinct tokens than choices");
    }
    Rng rng(options.seed);
    Task t = make(TaskKind::multiple_choice);
    for (auto s : sentences) {
      const TokenId answer = s.back();
      std::vector<TokenId> picked{answer};
      while (picked.size() < options.n_choices) {
        const TokenId cand = corpus.ids[rng.uniform_below(corpus.ids.size())];
        if (std::find(picked.begin(), picked.end(), cand) == picked.end()) picked.push_back(cand);
      }
      const std::size_t pos = rng.uniform_below(options.n_choices);
      std::swap(picked[0], picked[pos]);
      TaskItem item;
      item.context.assign(s.begin(), s.end() - 1);
      for (TokenId c : picked) item.choices.push_back({c});
      item.answer = pos;
      t.items.push_back(std::move(item));
    }
    tasks.push_back(std::move(t));
  }
  if (tasks.empty()) throw ConfigError("no task kinds selected");
  return tasks;
}

double fraction_skipped(const VariantSpec& spec, std::size_t n_layers) {
  if (is_middle_block_kind(spec.kind)) {
    return static_cast<double>(middle_block(n_layers, spec.start_layer).middle.size()) /
           static_cast<double>(n_layers);
  }
  if (spec.kind == VariantKind::skip_single) return 1.0 / static_cast<double>(n_layers);
  return 0.0;
}

SweepResult run_sweep(const ModelWeights& weights, std::span<const Task> tasks, std::span<const VariantSpec> grid,
                      const SweepOptions& options) {
  if (tasks.empty()) throw DegenerateInputError("sweep needs at least one task");
  if (options.seed_count == 0) throw ConfigError("seed_count must be positive");
  const std::size_t T = weights.config.n_layers;
  SweepResult result;
  result.n_layers = T;
  std::vector<double> baselines;
  for (const Task& t : tasks) {
    result.task_ids.push_back(t.id);
    result.task_kinds.push_back(t.kind);
    baselines.push_back(random_baseline(t));
  }

  // Full-model anchor, computed once.
  std::vector<double> anchors;
  const ExecutionPlan base = baseline_plan(T);
  for (const Task& t : tasks) anchors.push_back(run_task(weights, base, t, options.pool).raw_score);

  auto finish = [&](SweepRow& row) {
    std::vector<double> usable;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      NormalizedScore ns{std::numeric_limits<double>::quiet_NaN(), baselines[i], anchors[i]};
      try {
        ns = make_normalized(row.raw[i], baselines[i], anchors[i], tasks[i].kind);
        usable.push_back(ns.value);
      } catch (const DegenerateInputError&) {
        // anchor == baseline: the task carries no signal and is left out of the median
      }
      row.normalized.push_back(ns);
    }
    row.normalized_median = usable.empty() ? std::numeric_limits<double>::quiet_NaN() : median(usable);
  };

  SweepRow anchor_row;
  anchor_row.depth = T;
  anchor_row.raw = anchors;
  finish(anchor_row);
  result.rows.push_back(std::move(anchor_row));

  for (const VariantSpec& spec : grid) {
    SweepRow row;
    row.spec = spec;
    try {
      const ExecutionPlan plan = validate_plan(compile_variant(spec, T), weights.config);
      row.depth = plan_depth(plan);
      row.fraction_skipped = fraction_skipped(spec, T);
      if (spec.kind == VariantKind::random_order) {
        row.seed_count = options.seed_count;
        row.raw.assign(tasks.size(), 0.0);
        for (std::size_t s = 0; s < options.seed_count; ++s) {
          VariantSpec seeded = spec;
          seeded.seed = spec.seed + s;
          const ExecutionPlan p = validate_plan(compile_variant(seeded, T), weights.config);
          for (std::size_t i = 0; i < tasks.size(); ++i) {
            row.raw[i] += run_task(weights, p, tasks[i], options.pool).raw_score;
          }
        }
        for (double& v : row.raw) v /= static_cast<double>(options.seed_count);
      } else {
        for (const Task& t : tasks) row.raw.push_back(run_task(weights, plan, t, options.pool).raw_score);
      }
      finish(row);
    } catch (const Error& e) {
      row.raw.clear();
      row.normalized.clear();
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string sweep_csv(const SweepResult& result, bool include_anchor) {
  std::string out = "variant,N,K,seed_count,fraction_skipped,depth";
  for (const auto& id : result.task_ids) out += "," + id;
  out += ",normalized_median\n";
  for (std::size_t r = include_anchor ? 0 : 1; r < result.rows.size(); ++r) {
    const SweepRow& row = result.rows[r];
    out += std::string(to_string(row.spec.kind)) + "," + n_column(row.spec) + "," +
           std::to_string(k_value(row.spec)) + "," + std::to_string(row.seed_count) + ",";
    if (row.error) {
      out += ",";
      for (std::size_t i = 0; i < result.task_ids.size(); ++i) out += ",";
      out += ",error\n";
      continue;
    }
    out += detail::fixed(row.fraction_skipped) + "," + std::to_string(row.depth);
    for (double v : row.raw) out += "," + format_score(v);
    out += "," + format_score(row.normalized_median) + "\n";
  }
  return out;
}

std::string task_results_csv(const SweepResult& result, std::size_t r) {
  const SweepRow& row = result.rows.at(r);
  std::string out = "task,kind,raw_score,random_baseline,full_model_anchor,normalized\n";
  if (row.error) return out;
  for (std::size_t i = 0; i < result.task_ids.size(); ++i) {
    const NormalizedScore& ns = row.normalized[i];
    out += result.task_ids[i] + "," + std::string(to_string(result.task_kinds[i])) + "," +
           format_score(row.raw[i]) + "," + format_score(ns.random_baseline) + "," +
           format_score(ns.full_model_anchor) + "," + format_score(ns.value) + "\n";
  }
  return out;
}

std::string best_k_csv(const SweepResult& result) {
  std::map<std::size_t, const SweepRow*> best;
  for (const SweepRow& row : result.rows) {
    if (row.spec.kind != VariantKind::looped_parallel || row.error) continue;
    if (!std::isfinite(row.normalized_median)) continue;
    auto [it, fresh] = best.emplace(row.spec.start_layer, &row);
    if (fresh) continue;
    const SweepRow* cur = it->second;
    if (row.normalized_median > cur->normalized_median ||
        (row.normalized_median == cur->normalized_median && row.spec.iterations < cur->spec.iterations)) {
      it->second = &row;
    }
  }
  std::string out = "N,M,best_K,normalized_median\n";
  for (const auto& [n, row] : best) {
    out += std::to_string(n) + "," + std::to_string(middle_block(result.n_layers, n).middle.size()) + "," +
           std::to_string(row->spec.iterations) + "," + format_score(row->normalized_median) + "\n";
  }
  return out;
}

namespace {

std::vector<detail::Series> build_series(const SweepResult& result, bool x_fraction,
                                         const std::function<double(const SweepRow&)>& y) {
  std::vector<detail::Series> series;
  std::map<std::string, std::size_t> index;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  for (std::size_t r = 1; r < result.rows.size(); ++r) {
    const SweepRow& row = result.rows[r];
    if (row.error) continue;
    const std::string key = series_key(row.spec);
    auto [it, fresh] = index.emplace(key, series.size());
    if (fresh) series.push_back({key, {}});
    const double x = x_value(row, x_fraction);
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    series[it->second].points.emplace_back(x, y(row));
  }
  for (auto& s : series) std::sort(s.points.begin(), s.points.end());
  if (!result.rows.empty() && std::isfinite(xmin)) {
    const double yb = y(result.rows.front());
    series.insert(series.begin(), detail::Series{"full model", {{xmin, yb}, {xmax, yb}}});
  }
  return series;
}

}  // namespace

std::string task_chart_svg(const SweepResult& result, std::size_t task, bool x_fraction) {
  const auto series =
      build_series(result, x_fraction, [task](const SweepRow& row) { return row.raw.at(task); });
  return detail::line_chart_svg(result.task_ids.at(task), x_fraction ? "fraction of layers skipped" : "start layer N",
                                std::string(to_string(result.task_kinds.at(task))), series);
}

std::string comparison_chart_svg(const SweepResult& result, bool x_fraction) {
  const auto series =
      build_series(result, x_fraction, [](const SweepRow& row) { return row.normalized_median; });
  return detail::line_chart_svg("variant comparison", x_fraction ? "fraction of layers skipped" : "start layer N",
                                "normalized median", series);
}

}  // namespace lp
