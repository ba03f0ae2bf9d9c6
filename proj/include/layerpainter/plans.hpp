#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "layerpainter/config.hpp"

namespace lp {

// Layers are numbered 1..T throughout the plan API.

enum class MergeKind { identity, mean };

struct Stage {
  std::vector<std::size_t> layers;  // ascending, distinct
  MergeKind merge = MergeKind::identity;

  bool operator==(const Stage&) const = default;
};

enum class VariantKind {
  baseline,
  skip,
  middle_repeat,
  reverse,
  random_order,
  parallel,
  looped_parallel,
  full_repeat,
  skip_single,
  switch_adjacent,
};

struct VariantSpec {
  VariantKind kind = VariantKind::baseline;
  std::size_t start_layer = 0;   // N for the middle-block kinds
  std::size_t iterations = 1;    // K for looped_parallel and full_repeat
  std::uint64_t seed = 0;        // random_order
  std::size_t probe_layer = 0;   // n for skip_single and switch_adjacent

  bool operator==(const VariantSpec&) const = default;
};

std::string_view to_string(VariantKind k);
VariantKind parse_variant_kind(std::string_view s);

// True for the kinds that rewire the middle block selected by N.
bool is_middle_block_kind(VariantKind k);

struct ExecutionPlan {
  std::vector<Stage> stages;
  VariantSpec source;
  std::size_t n_layers = 0;

  bool operator==(const ExecutionPlan&) const = default;
};

// Inclusive 1-based range; empty when last < first.
struct LayerRange {
  std::size_t first = 1;
  std::size_t last = 0;

  std::size_t size() const { return last >= first ? last - first + 1 : 0; }
  bool operator==(const LayerRange&) const = default;
};

struct MiddleBlock {
  LayerRange first;
  LayerRange middle;
  LayerRange last;
};

// first = 1..N, middle = N+1..T-N-1, last = T-N..T. Throws PlanError when
// T - 2N - 1 < 0.
MiddleBlock middle_block(std::size_t n_layers, std::size_t start_layer);

// Layer reused by middle_repeat: T/2 (16 for T=32, 12 for T=24).
std::size_t center_layer(std::size_t n_layers);

ExecutionPlan baseline_plan(std::size_t n_layers);

// Throws PlanError naming the violated bound.
ExecutionPlan compile_variant(const VariantSpec& spec, std::size_t n_layers);

// Checks bounds, merge arity and layer-count agreement. Returns the plan with
// single-index mean stages rewritten to identity.
ExecutionPlan validate_plan(ExecutionPlan plan, const ModelConfig& config);

// Sequential critical path length: one per stage.
std::size_t plan_depth(const ExecutionPlan& plan);

// Uniform permutation of the range's layers (Fisher-Yates over Rng(seed)).
std::vector<std::size_t> random_permutation(LayerRange range, std::uint64_t seed);

// Number of stages belonging to the first segment and last segment of a
// middle-block plan (or a baseline plan with start_layer set).
struct SegmentSpan {
  std::size_t begin = 0;  // first middle stage
  std::size_t end = 0;    // one past the last middle stage
};
SegmentSpan middle_stage_span(const ExecutionPlan& plan);

// One stage per line: "[i]" for identity, "mean{i,j,...}" for mean.
std::string plan_to_text(const ExecutionPlan& plan);
std::vector<Stage> parse_plan_text(std::string_view text);

std::string describe(const VariantSpec& spec);

}  // namespace lp
