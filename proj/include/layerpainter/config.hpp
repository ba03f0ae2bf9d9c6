#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace lp {

enum class NormKind { rms, layernorm };
enum class PositionalKind { rotary, learned };
// gated_silu: down(silu(gate(x)) * up(x)), Llama style. gelu: down(gelu(up(x))), GPT-2 style.
enum class FfnKind { gated_silu, gelu };

struct ModelConfig {
  std::size_t n_layers = 4;
  std::size_t d_model = 16;
  std::size_t n_heads = 2;
  std::size_t d_ff = 64;
  std::size_t vocab_size = 64;
  std::size_t max_seq_len = 64;
  NormKind norm = NormKind::rms;
  PositionalKind positional = PositionalKind::rotary;
  FfnKind ffn = FfnKind::gated_silu;
  bool linear_bias = false;
  float norm_eps = 1e-5f;
  float rope_theta = 10000.0f;

  std::size_t head_dim() const { return d_model / n_heads; }

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

std::string_view to_string(NormKind k);
std::string_view to_string(PositionalKind k);
std::string_view to_string(FfnKind k);
NormKind parse_norm_kind(std::string_view s);
PositionalKind parse_positional_kind(std::string_view s);
FfnKind parse_ffn_kind(std::string_view s);

}  // namespace lp
