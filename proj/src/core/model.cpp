#include "layerpainter/model.hpp"

#include <cmath>
#include <string>
#include <variant>

#include "layerpainter/errors.hpp"
#include "layerpainter/thread_pool.hpp"

namespace lp {

namespace {

std::string layer_prefix(std::size_t l) { return "layers." + std::to_string(l) + "."; }

bool uses_norm_bias(const ModelConfig& c) { return c.norm == NormKind::layernorm; }
bool gated(const ModelConfig& c) { return c.ffn == FfnKind::gated_silu; }

template <typename Fn>
void for_each_tensor(const ModelConfig& c, Fn&& fn) {
  const std::size_t d = c.d_model;
  fn("tok_embedding", std::vector<std::size_t>{c.vocab_size, d});
  if (c.positional == PositionalKind::learned) fn("pos_embedding", std::vector<std::size_t>{c.max_seq_len, d});
  for (std::size_t l = 1; l <= c.n_layers; ++l) {
    const std::string p = layer_prefix(l);
    fn(p + "attn_norm.gain", std::vector<std::size_t>{d});
    if (uses_norm_bias(c)) fn(p + "attn_norm.bias", std::vector<std::size_t>{d});
    for (const char* w : {"wq", "wk", "wv", "wo"}) fn(p + "attn." + w, std::vector<std::size_t>{d, d});
    if (c.linear_bias) {
      for (const char* b : {"bq", "bk", "bv", "bo"}) fn(p + "attn." + b, std::vector<std::size_t>{d});
    }
    fn(p + "ffn_norm.gain", std::vector<std::size_t>{d});
    if (uses_norm_bias(c)) fn(p + "ffn_norm.bias", std::vector<std::size_t>{d});
    fn(p + "ffn.up", std::vector<std::size_t>{d, c.d_ff});
    if (gated(c)) fn(p + "ffn.gate", std::vector<std::size_t>{d, c.d_ff});
    fn(p + "ffn.down", std::vector<std::size_t>{c.d_ff, d});
    if (c.linear_bias) {
      fn(p + "ffn.b_up", std::vector<std::size_t>{c.d_ff});
      fn(p + "ffn.b_down", std::vector<std::size_t>{d});
    }
  }
  fn("final_norm.gain", std::vector<std::size_t>{d});
  if (uses_norm_bias(c)) fn("final_norm.bias", std::vector<std::size_t>{d});
  fn("unembedding", std::vector<std::size_t>{d, c.vocab_size});
}

using Slot = std::variant<Matrix*, std::vector<float>*>;

// Maps a schema name onto the storage it describes.
Slot locate(ModelWeights& w, const std::string& name) {
  if (name == "tok_embedding") return &w.tok_embedding;
  if (name == "pos_embedding") return &w.pos_embedding;
  if (name == "final_norm.gain") return &w.final_norm_gain;
  if (name == "final_norm.bias") return &w.final_norm_bias;
  if (name == "unembedding") return &w.unembedding;

  // layers.<l>.<field>
  const std::size_t dot = name.find('.', 7);
  const std::size_t l = std::stoul(name.substr(7, dot - 7));
  LayerWeights& L = w.layers.at(l - 1);
  const std::string field = name.substr(dot + 1);
  if (field == "attn_norm.gain") return &L.attn_norm_gain;
  if (field == "attn_norm.bias") return &L.attn_norm_bias;
  if (field == "attn.wq") return &L.wq;
  if (field == "attn.wk") return &L.wk;
  if (field == "attn.wv") return &L.wv;
  if (field == "attn.wo") return &L.wo;
  if (field == "attn.bq") return &L.bq;
  if (field == "attn.bk") return &L.bk;
  if (field == "attn.bv") return &L.bv;
  if (field == "attn.bo") return &L.bo;
  if (field == "ffn_norm.gain") return &L.ffn_norm_gain;
  if (field == "ffn_norm.bias") return &L.ffn_norm_bias;
  if (field == "ffn.up") return &L.w_up;
  if (field == "ffn.gate") return &L.w_gate;
  if (field == "ffn.down") return &L.w_down;
  if (field == "ffn.b_up") return &L.b_up;
  if (field == "ffn.b_down") return &L.b_down;
  throw SchemaError("unknown tensor '" + name + "'");
}

bool shape_matches(const Slot& slot, const std::vector<std::size_t>& shape) {
  if (auto* m = std::get_if<Matrix*>(&slot)) {
    return shape.size() == 2 && (*m)->rows() == shape[0] && (*m)->cols() == shape[1];
  }
  return shape.size() == 1 && std::get<std::vector<float>*>(slot)->size() == shape[0];
}

std::span<float> storage_for(ModelWeights& w, const std::string& name, const std::vector<std::size_t>& shape) {
  Slot slot = locate(w, name);
  if (shape.size() != (std::holds_alternative<Matrix*>(slot) ? 2u : 1u)) {
    throw SchemaError("tensor '" + name + "' has the wrong rank");
  }
  if (auto* m = std::get_if<Matrix*>(&slot)) {
    if (!shape_matches(slot, shape)) **m = Matrix(shape[0], shape[1]);
    return (*m)->data();
  }
  auto* v = std::get<std::vector<float>*>(slot);
  if (!shape_matches(slot, shape)) v->assign(shape[0], 0.0f);
  return *v;
}

void normalize_rows(const ModelConfig& c, std::span<const float> gain, std::span<const float> bias,
                    const Matrix& in, Matrix& out) {
  for (std::size_t r = 0; r < in.rows(); ++r) {
    if (c.norm == NormKind::rms) {
      rms_norm_into(in.row(r), gain, c.norm_eps, out.row(r));
    } else {
      layer_norm_into(in.row(r), gain, bias, c.norm_eps, out.row(r));
    }
  }
}

Matrix project(const Matrix& x, const Matrix& w, const std::vector<float>& bias) {
  Matrix y = matmul(x, w);
  if (!bias.empty()) add_row_bias(y, bias);
  return y;
}

// Rotates each (2m, 2m+1) pair of every head by position * theta^(-2m/hd).
void apply_rotary(const ModelConfig& c, Matrix& m) {
  const std::size_t hd = c.head_dim();
  const std::size_t half = hd / 2;
  std::vector<float> cos_t(half), sin_t(half);
  for (std::size_t pos = 0; pos < m.rows(); ++pos) {
    for (std::size_t i = 0; i < half; ++i) {
      const double freq = std::pow(static_cast<double>(c.rope_theta), -2.0 * static_cast<double>(i) / hd);
      const double angle = static_cast<double>(pos) * freq;
      cos_t[i] = static_cast<float>(std::cos(angle));
      sin_t[i] = static_cast<float>(std::sin(angle));
    }
    auto row = m.row(pos);
    for (std::size_t h = 0; h < c.n_heads; ++h) {
      float* base = row.data() + h * hd;
      for (std::size_t i = 0; i < half; ++i) {
        const float x0 = base[2 * i];
        const float x1 = base[2 * i + 1];
        base[2 * i] = x0 * cos_t[i] - x1 * sin_t[i];
        base[2 * i + 1] = x0 * sin_t[i] + x1 * cos_t[i];
      }
    }
  }
}

Matrix causal_attention(const ModelConfig& c, const Matrix& q, const Matrix& k, const Matrix& v) {
  const std::size_t S = q.rows();
  const std::size_t hd = c.head_dim();
  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
  Matrix out(S, c.d_model);
  std::vector<float> scores(S);
  for (std::size_t h = 0; h < c.n_heads; ++h) {
    const std::size_t off = h * hd;
    for (std::size_t i = 0; i < S; ++i) {
      const float* qi = q.row(i).data() + off;
      for (std::size_t j = 0; j <= i; ++j) {
        const float* kj = k.row(j).data() + off;
        float s = 0.0f;
        for (std::size_t t = 0; t < hd; ++t) s += qi[t] * kj[t];
        scores[j] = s * scale;
      }
      std::span<float> active(scores.data(), i + 1);
      softmax_inplace(active);
      float* oi = out.row(i).data() + off;
      for (std::size_t j = 0; j <= i; ++j) {
        const float p = active[j];
        const float* vj = v.row(j).data() + off;
        for (std::size_t t = 0; t < hd; ++t) oi[t] += p * vj[t];
      }
    }
  }
  return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += bd[i];
}

Matrix run_stage(const ModelWeights& w, const Stage& stage, const Matrix& h, ThreadPool* pool) {
  const std::size_t n = stage.layers.size();
  if (n == 1) return apply_layer(w.config, w.layers[stage.layers.front() - 1], h);
  std::vector<Matrix> outs(n);
  auto one = [&](std::size_t i) { outs[i] = apply_layer(w.config, w.layers[stage.layers[i] - 1], h); };
  if (pool != nullptr) {
    pool->parallel_for(n, one);
  } else {
    for (std::size_t i = 0; i < n; ++i) one(i);
  }
  Matrix merged = std::move(outs[0]);
  for (std::size_t i = 1; i < n; ++i) add_inplace(merged, outs[i]);
  const float count = static_cast<float>(n);
  for (float& x : merged.data()) x /= count;
  return merged;
}

}  // namespace

std::vector<TensorSpec> tensor_schema(const ModelConfig& config) {
  std::vector<TensorSpec> out;
  for_each_tensor(config, [&](std::string name, std::vector<std::size_t> shape) {
    out.push_back({std::move(name), std::move(shape)});
  });
  return out;
}

std::vector<TensorView> tensor_views(ModelWeights& weights) {
  weights.layers.resize(weights.config.n_layers);
  std::vector<TensorView> out;
  for_each_tensor(weights.config, [&](std::string name, std::vector<std::size_t> shape) {
    std::span<float> values = storage_for(weights, name, shape);
    out.push_back({std::move(name), std::move(shape), values});
  });
  return out;
}

ModelWeights allocate_weights(const ModelConfig& config) {
  config.validate();
  ModelWeights w;
  w.config = config;
  tensor_views(w);
  return w;
}

void check_weights(const ModelWeights& w) {
  const ModelConfig& c = w.config;
  c.validate();
  if (w.layers.size() != c.n_layers) {
    throw SchemaError("model has " + std::to_string(w.layers.size()) + " layers, config says " +
                      std::to_string(c.n_layers));
  }
  auto& mut = const_cast<ModelWeights&>(w);  // locate() only takes addresses
  for (const TensorSpec& spec : tensor_schema(c)) {
    if (!shape_matches(locate(mut, spec.name), spec.shape)) {
      throw SchemaError("tensor '" + spec.name + "' does not match its schema shape");
    }
  }
}

void check_tokens(const ModelConfig& config, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw ShapeError("token sequence is empty");
  if (tokens.size() > config.max_seq_len) {
    throw ShapeError("token sequence of length " + std::to_string(tokens.size()) + " exceeds max_seq_len " +
                     std::to_string(config.max_seq_len));
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= config.vocab_size) {
      throw VocabularyError("token id " + std::to_string(tokens[i]) + " at position " + std::to_string(i) +
                            " is outside vocabulary of " + std::to_string(config.vocab_size));
    }
  }
}

Matrix embed(const ModelWeights& w, std::span<const TokenId> tokens) {
  check_tokens(w.config, tokens);
  const std::size_t d = w.config.d_model;
  Matrix h(tokens.size(), d);
  const bool learned = w.config.positional == PositionalKind::learned;
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    auto src = w.tok_embedding.row(tokens[p]);
    auto dst = h.row(p);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    if (learned) {
      auto pos = w.pos_embedding.row(p);
      for (std::size_t j = 0; j < d; ++j) dst[j] += pos[j];
    }
  }
  return h;
}

Matrix apply_layer(const ModelConfig& c, const LayerWeights& L, const Matrix& h) {
  if (h.cols() != c.d_model) {
    throw ShapeError("apply_layer: hidden state has " + std::to_string(h.cols()) + " columns, expected " +
                     std::to_string(c.d_model));
  }
  const std::size_t S = h.rows();
  Matrix x(S, c.d_model);
  normalize_rows(c, L.attn_norm_gain, L.attn_norm_bias, h, x);
  Matrix q = project(x, L.wq, L.bq);
  Matrix k = project(x, L.wk, L.bk);
  Matrix v = project(x, L.wv, L.bv);
  if (c.positional == PositionalKind::rotary) {
    apply_rotary(c, q);
    apply_rotary(c, k);
  }
  Matrix attn = project(causal_attention(c, q, k, v), L.wo, L.bo);
  Matrix out = h;
  add_inplace(out, attn);

  normalize_rows(c, L.ffn_norm_gain, L.ffn_norm_bias, out, x);
  Matrix up = project(x, L.w_up, L.b_up);
  if (c.ffn == FfnKind::gated_silu) {
    Matrix gate = matmul(x, L.w_gate);
    auto u = up.data();
    auto g = gate.data();
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= silu(g[i]);
  } else {
    for (float& u : up.data()) u = gelu(u);
  }
  add_inplace(out, project(up, L.w_down, L.b_down));
  return out;
}

Matrix logits(const ModelWeights& w, const Matrix& h) {
  if (h.cols() != w.config.d_model) {
    throw ShapeError("logits: hidden state has " + std::to_string(h.cols()) + " columns, expected " +
                     std::to_string(w.config.d_model));
  }
  Matrix x(h.rows(), h.cols());
  normalize_rows(w.config, w.final_norm_gain, w.final_norm_bias, h, x);
  return matmul(x, w.unembedding);
}

Matrix forward(const ModelWeights& w, std::span<const TokenId> tokens) {
  Matrix h = embed(w, tokens);
  for (const LayerWeights& L : w.layers) h = apply_layer(w.config, L, h);
  return logits(w, h);
}

ForwardResult execute_plan(const ModelWeights& w, std::span<const TokenId> tokens, const ExecutionPlan& plan,
                           bool capture, ThreadPool* pool) {
  const ExecutionPlan checked = validate_plan(plan, w.config);
  ForwardResult result;
  if (capture) result.trace.emplace();
  Matrix h = embed(w, tokens);
  for (const Stage& stage : checked.stages) {
    h = run_stage(w, stage, h, pool);
    if (capture) result.trace->states.push_back(h);
  }
  result.logits = logits(w, h);
  return result;
}

std::chrono::duration<double> middle_block_wallclock(const ModelWeights& w, std::span<const TokenId> tokens,
                                                     const ExecutionPlan& plan, std::size_t workers) {
  if (workers == 0) throw ConfigError("middle_block_wallclock: workers must be >= 1");
  const ExecutionPlan checked = validate_plan(plan, w.config);
  const SegmentSpan span = middle_stage_span(checked);
  ThreadPool pool(workers);
  Matrix h = embed(w, tokens);
  for (std::size_t s = 0; s < span.begin; ++s) h = run_stage(w, checked.stages[s], h, &pool);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t s = span.begin; s < span.end; ++s) h = run_stage(w, checked.stages[s], h, &pool);
  const auto stop = std::chrono::steady_clock::now();
  return stop - start;
}

}  // namespace lp
