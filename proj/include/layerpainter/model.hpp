#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "layerpainter/config.hpp"
#include "layerpainter/numerics.hpp"
#include "layerpainter/plans.hpp"

namespace lp {

class ThreadPool;

// Linear weights are stored [in x out] so that activations (seq x in) times
// weight gives (seq x out). Bias and norm-bias vectors are empty when the
// config does not use them.
struct LayerWeights {
  std::vector<float> attn_norm_gain;
  std::vector<float> attn_norm_bias;
  Matrix wq, wk, wv, wo;
  std::vector<float> bq, bk, bv, bo;
  std::vector<float> ffn_norm_gain;
  std::vector<float> ffn_norm_bias;
  Matrix w_up;
  Matrix w_gate;  // empty unless FfnKind::gated_silu
  Matrix w_down;
  std::vector<float> b_up, b_down;
};

struct ModelWeights {
  ModelConfig config;
  Matrix tok_embedding;  // vocab x d_model
  Matrix pos_embedding;  // max_seq_len x d_model, learned positions only
  std::vector<LayerWeights> layers;
  std::vector<float> final_norm_gain;
  std::vector<float> final_norm_bias;
  Matrix unembedding;  // d_model x vocab
};

// Named view of one parameter tensor. The list returned by tensor_views() is
// the canonical schema: its order is the on-disk order.
struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<float> values;
};
struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
};

std::vector<TensorSpec> tensor_schema(const ModelConfig& config);
std::vector<TensorView> tensor_views(ModelWeights& weights);

// All tensors allocated to their schema shapes and zero filled.
ModelWeights allocate_weights(const ModelConfig& config);

// Checks every tensor shape against config. Throws SchemaError.
void check_weights(const ModelWeights& weights);

using TokenId = std::uint32_t;

// Captured post-layer hidden states (residual stream, before final norm), one
// matrix per executed stage. A baseline plan yields exactly T entries.
struct TraceBundle {
  std::vector<Matrix> states;
};

struct ForwardResult {
  Matrix logits;
  std::optional<TraceBundle> trace;
};

void check_tokens(const ModelConfig& config, std::span<const TokenId> tokens);

Matrix embed(const ModelWeights& weights, std::span<const TokenId> tokens);

// One transformer block on the residual stream. Row r of h is the token at
// absolute position r.
Matrix apply_layer(const ModelConfig& config, const LayerWeights& layer, const Matrix& h);

Matrix logits(const ModelWeights& weights, const Matrix& h);

// Plain sequential forward over layers 1..T, no plan involved.
Matrix forward(const ModelWeights& weights, std::span<const TokenId> tokens);

// Runs the plan. Layers of a multi-layer stage all see the same stage input;
// with a pool they run concurrently, and the mean is always reduced in
// ascending layer order.
ForwardResult execute_plan(const ModelWeights& weights, std::span<const TokenId> tokens,
                           const ExecutionPlan& plan, bool capture, ThreadPool* pool = nullptr);

// Wall time of the plan's middle stages (between its first and last segments)
// on `workers` threads. Embedding and the first segment run untimed.
std::chrono::duration<double> middle_block_wallclock(const ModelWeights& weights,
                                                     std::span<const TokenId> tokens,
                                                     const ExecutionPlan& plan, std::size_t workers);

}  // namespace lp
