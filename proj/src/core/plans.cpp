#include "layerpainter/plans.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "layerpainter/errors.hpp"
#include "layerpainter/random.hpp"

namespace lp {

namespace {

struct KindName {
  VariantKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {VariantKind::baseline, "baseline"},
    {VariantKind::skip, "skip"},
    {VariantKind::middle_repeat, "middle_repeat"},
    {VariantKind::reverse, "reverse"},
    {VariantKind::random_order, "random_order"},
    {VariantKind::parallel, "parallel"},
    {VariantKind::looped_parallel, "looped_parallel"},
    {VariantKind::full_repeat, "full_repeat"},
    {VariantKind::skip_single, "skip_single"},
    {VariantKind::switch_adjacent, "switch_adjacent"},
};

Stage single(std::size_t layer) { return Stage{{layer}, MergeKind::identity}; }

void append_range(std::vector<Stage>& stages, LayerRange r) {
  for (std::size_t i = r.first; i <= r.last && r.size() > 0; ++i) stages.push_back(single(i));
}

std::string bound_msg(const std::string& what, std::size_t value, const std::string& bound) {
  return what + " = " + std::to_string(value) + " violates " + bound;
}

}  // namespace

std::string_view to_string(VariantKind k) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == k) return kn.name;
  }
  return "unknown";
}

VariantKind parse_variant_kind(std::string_view s) {
  for (const auto& kn : kKindNames) {
    if (kn.name == s) return kn.kind;
  }
  throw PlanError("unknown variant '" + std::string(s) + "'");
}

bool is_middle_block_kind(VariantKind k) {
  switch (k) {
    case VariantKind::skip:
    case VariantKind::middle_repeat:
    case VariantKind::reverse:
    case VariantKind::random_order:
    case VariantKind::parallel:
    case VariantKind::looped_parallel:
      return true;
    default:
      return false;
  }
}

MiddleBlock middle_block(std::size_t n_layers, std::size_t start_layer) {
  if (2 * start_layer + 1 > n_layers) {
    throw PlanError("start layer N = " + std::to_string(start_layer) + " leaves M = T - 2N - 1 < 0 for T = " +
                    std::to_string(n_layers) + " (N must be <= " +
                    std::to_string(n_layers == 0 ? 0 : (n_layers - 1) / 2) + ")");
  }
  MiddleBlock b;
  b.first = {1, start_layer};
  b.middle = {start_layer + 1, n_layers - start_layer - 1};
  b.last = {n_layers - start_layer, n_layers};
  return b;
}

std::size_t center_layer(std::size_t n_layers) { return n_layers / 2; }

ExecutionPlan baseline_plan(std::size_t n_layers) {
  ExecutionPlan plan;
  plan.n_layers = n_layers;
  append_range(plan.stages, {1, n_layers});
  return plan;
}

std::vector<std::size_t> random_permutation(LayerRange range, std::uint64_t seed) {
  std::vector<std::size_t> out;
  for (std::size_t i = range.first; i <= range.last && range.size() > 0; ++i) out.push_back(i);
  Rng rng(seed);
  for (std::size_t i = out.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
    std::swap(out[i - 1], out[j]);
  }
  return out;
}

ExecutionPlan compile_variant(const VariantSpec& spec, std::size_t T) {
  if (T < 2) throw PlanError(bound_msg("T", T, "T >= 2"));
  ExecutionPlan plan;
  plan.n_layers = T;
  plan.source = spec;
  auto& stages = plan.stages;

  if (is_middle_block_kind(spec.kind)) {
    if (spec.start_layer < 1) throw PlanError(bound_msg("start layer N", spec.start_layer, "N >= 1"));
    const MiddleBlock b = middle_block(T, spec.start_layer);
    if (b.middle.size() < 1) {
      throw PlanError(bound_msg("start layer N", spec.start_layer,
                                "M = T - 2N - 1 >= 1 (N <= " + std::to_string((T - 2) / 2) + " for T = " +
                                    std::to_string(T) + ")"));
    }
    if (spec.kind == VariantKind::looped_parallel && spec.iterations < 1) {
      throw PlanError(bound_msg("iterations K", spec.iterations, "K >= 1"));
    }
    append_range(stages, b.first);
    switch (spec.kind) {
      case VariantKind::skip:
        break;
      case VariantKind::middle_repeat:
        for (std::size_t i = 0; i < b.middle.size(); ++i) stages.push_back(single(center_layer(T)));
        break;
      case VariantKind::reverse:
        for (std::size_t i = b.middle.last; i >= b.middle.first; --i) stages.push_back(single(i));
        break;
      case VariantKind::random_order:
        for (std::size_t i : random_permutation(b.middle, spec.seed)) stages.push_back(single(i));
        break;
      case VariantKind::parallel:
      case VariantKind::looped_parallel: {
        Stage par;
        for (std::size_t i = b.middle.first; i <= b.middle.last; ++i) par.layers.push_back(i);
        par.merge = par.layers.size() == 1 ? MergeKind::identity : MergeKind::mean;
        const std::size_t copies = spec.kind == VariantKind::parallel ? 1 : spec.iterations;
        for (std::size_t k = 0; k < copies; ++k) stages.push_back(par);
        break;
      }
      default:
        break;
    }
    append_range(stages, b.last);
    return plan;
  }

  switch (spec.kind) {
    case VariantKind::baseline:
      append_range(stages, {1, T});
      break;
    case VariantKind::full_repeat:
      if (spec.iterations < 1) throw PlanError(bound_msg("iterations K", spec.iterations, "K >= 1"));
      for (std::size_t k = 0; k < spec.iterations; ++k) append_range(stages, {1, T});
      break;
    case VariantKind::skip_single:
      if (spec.probe_layer < 1 || spec.probe_layer > T) {
        throw PlanError(bound_msg("probe layer n", spec.probe_layer, "1 <= n <= " + std::to_string(T)));
      }
      for (std::size_t i = 1; i <= T; ++i) {
        if (i != spec.probe_layer) stages.push_back(single(i));
      }
      break;
    case VariantKind::switch_adjacent:
      if (spec.probe_layer < 1 || spec.probe_layer + 1 > T) {
        throw PlanError(bound_msg("probe layer n", spec.probe_layer, "1 <= n <= " + std::to_string(T - 1)));
      }
      append_range(stages, {1, T});
      std::swap(stages[spec.probe_layer - 1], stages[spec.probe_layer]);
      break;
    default:
      throw PlanError("unhandled variant kind");
  }
  return plan;
}

ExecutionPlan validate_plan(ExecutionPlan plan, const ModelConfig& config) {
  const std::size_t T = config.n_layers;
  if (plan.n_layers != T) {
    throw PlanError("plan built for T = " + std::to_string(plan.n_layers) + " but model has " +
                    std::to_string(T) + " layers");
  }
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    Stage& st = plan.stages[s];
    const std::string where = "stage " + std::to_string(s + 1);
    if (st.layers.empty()) throw PlanError(where + ": no layers");
    for (std::size_t k = 0; k < st.layers.size(); ++k) {
      const std::size_t l = st.layers[k];
      if (l < 1 || l > T) {
        throw PlanError(where + ": layer index " + std::to_string(l) + " outside 1.." + std::to_string(T));
      }
      if (k > 0 && st.layers[k - 1] >= l) throw PlanError(where + ": layer indices not strictly ascending");
    }
    if (st.merge == MergeKind::identity && st.layers.size() != 1) {
      throw PlanError(where + ": identity merge needs exactly one layer, got " + std::to_string(st.layers.size()));
    }
    if (st.merge == MergeKind::mean && st.layers.size() == 1) st.merge = MergeKind::identity;
  }
  return plan;
}

std::size_t plan_depth(const ExecutionPlan& plan) { return plan.stages.size(); }

SegmentSpan middle_stage_span(const ExecutionPlan& plan) {
  const VariantKind k = plan.source.kind;
  if (k != VariantKind::baseline && !is_middle_block_kind(k)) {
    throw PlanError("variant '" + std::string(to_string(k)) + "' has no middle block");
  }
  const MiddleBlock b = middle_block(plan.n_layers, plan.source.start_layer);
  const std::size_t head = b.first.size();
  const std::size_t tail = b.last.size();
  if (plan.stages.size() < head + tail) throw PlanError("plan shorter than its first and last segments");
  return {head, plan.stages.size() - tail};
}

std::string plan_to_text(const ExecutionPlan& plan) {
  std::string out;
  for (const Stage& st : plan.stages) {
    if (st.merge == MergeKind::identity && st.layers.size() == 1) {
      out += "[" + std::to_string(st.layers.front()) + "]\n";
      continue;
    }
    out += "mean{";
    for (std::size_t k = 0; k < st.layers.size(); ++k) {
      if (k > 0) out += ",";
      out += std::to_string(st.layers[k]);
    }
    out += "}\n";
  }
  return out;
}

std::vector<Stage> parse_plan_text(std::string_view text) {
  std::vector<Stage> stages;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    auto fail = [&] { throw FormatError("plan text line " + std::to_string(line_no) + ": '" + std::string(line) + "'"); };
    Stage st;
    std::string_view body;
    if (line.front() == '[' && line.back() == ']') {
      body = line.substr(1, line.size() - 2);
      st.merge = MergeKind::identity;
    } else if (line.starts_with("mean{") && line.back() == '}') {
      body = line.substr(5, line.size() - 6);
      st.merge = MergeKind::mean;
    } else {
      fail();
    }
    while (!body.empty()) {
      const std::size_t comma = body.find(',');
      std::string_view tok = body.substr(0, comma);
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) fail();
      st.layers.push_back(v);
      body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma + 1);
    }
    if (st.layers.empty()) fail();
    stages.push_back(std::move(st));
  }
  return stages;
}

std::string describe(const VariantSpec& spec) {
  std::ostringstream os;
  os << to_string(spec.kind);
  if (is_middle_block_kind(spec.kind)) os << " N=" << spec.start_layer;
  if (spec.kind == VariantKind::looped_parallel || spec.kind == VariantKind::full_repeat) {
    os << " K=" << spec.iterations;
  }
  if (spec.kind == VariantKind::random_order) os << " seed=" << spec.seed;
  if (spec.kind == VariantKind::skip_single || spec.kind == VariantKind::switch_adjacent) {
    os << " n=" << spec.probe_layer;
  }
  return os.str();
}

}  // namespace lp
