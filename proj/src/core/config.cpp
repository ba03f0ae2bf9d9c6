#include "layerpainter/config.hpp"

#include <cmath>

#include "layerpainter/errors.hpp"

namespace lp {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (n_layers < 2) fail("n_layers must be >= 2");
  if (vocab_size < 2) fail("vocab_size must be >= 2");
  if (d_model == 0) fail("d_model must be positive");
  if (n_heads == 0) fail("n_heads must be positive");
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (positional == PositionalKind::rotary && head_dim() % 2 != 0) {
    fail("rotary positions need an even head dimension");
  }
  if (d_ff == 0) fail("d_ff must be positive");
  if (max_seq_len == 0) fail("max_seq_len must be positive");
  if (!(norm_eps > 0.0f) || !std::isfinite(norm_eps)) fail("norm_eps must be positive");
  if (!(rope_theta > 0.0f) || !std::isfinite(rope_theta)) fail("rope_theta must be positive");
}

std::string_view to_string(NormKind k) { return k == NormKind::rms ? "rms" : "layernorm"; }
std::string_view to_string(PositionalKind k) {
  return k == PositionalKind::rotary ? "rotary" : "learned";
}
std::string_view to_string(FfnKind k) { return k == FfnKind::gated_silu ? "gated_silu" : "gelu"; }

NormKind parse_norm_kind(std::string_view s) {
  if (s == "rms") return NormKind::rms;
  if (s == "layernorm") return NormKind::layernorm;
  throw ConfigError("unknown norm kind '" + std::string(s) + "'");
}

PositionalKind parse_positional_kind(std::string_view s) {
  if (s == "rotary") return PositionalKind::rotary;
  if (s == "learned") return PositionalKind::learned;
  throw ConfigError("unknown positional kind '" + std::string(s) + "'");
}

FfnKind parse_ffn_kind(std::string_view s) {
  if (s == "gated_silu") return FfnKind::gated_silu;
  if (s == "gelu") return FfnKind::gelu;
  throw ConfigError("unknown ffn kind '" + std::string(s) + "'");
}

}  // namespace lp
