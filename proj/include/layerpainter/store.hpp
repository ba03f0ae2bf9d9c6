#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layerpainter/model.hpp"

namespace lp {

// LPW1 weight file:
//   "LPW1" | u32 header_length | header JSON (UTF-8) | payload
// The header holds {"config": {...}, "tensors": [{"name", "shape", "offset"}]}
// with byte offsets relative to the payload start. The payload is
// little-endian float32 tensors, row-major.
inline constexpr std::string_view kWeightMagic = "LPW1";

// LPC1 corpus file (all integers u32 little-endian):
//   "LPC1" | vocab_size | token_count | token ids... | sentence_count | sentence start offsets...
// The first offset is 0 and offsets are strictly ascending; sentence k spans
// [offset[k], offset[k+1]) and the last one runs to token_count.
inline constexpr std::string_view kCorpusMagic = "LPC1";

inline constexpr std::uint32_t kByteVocabSize = 256;

struct TokenizedCorpus {
  std::uint32_t vocab_size = 0;
  std::vector<TokenId> ids;
  std::vector<std::uint32_t> sentence_offsets;

  std::size_t sentence_count() const { return sentence_offsets.size(); }
  std::span<const TokenId> sentence(std::size_t k) const;

  // Throws DegenerateInputError, VocabularyError or FormatError.
  void validate() const;
};

std::string encode_weights(const ModelWeights& weights);
ModelWeights decode_weights(std::string_view bytes);
void save_weights(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);

std::string encode_corpus(const TokenizedCorpus& corpus);
TokenizedCorpus decode_corpus(std::string_view bytes);
void save_corpus(const TokenizedCorpus& corpus, const std::filesystem::path& path);
TokenizedCorpus load_corpus(const std::filesystem::path& path);

// Byte-level fallback tokenizer: one token per byte, vocabulary of 256.
std::vector<TokenId> byte_tokenize(std::string_view text);
std::string byte_detokenize(std::span<const TokenId> ids);

// One sentence per non-empty line, byte tokenized.
TokenizedCorpus corpus_from_text(std::string_view text);

// Uniform random token sentences, lengths drawn from [min_len, max_len].
TokenizedCorpus random_corpus(std::uint32_t vocab_size, std::size_t sentences, std::size_t min_len,
                              std::size_t max_len, std::uint64_t seed);

// Normal(0, 0.02) embeddings and projections, unit norm gains, zero biases.
ModelWeights generate_random_model(const ModelConfig& config, std::uint64_t seed);

// Zeroes every per-layer tensor, turning each block into an exact identity.
void zero_layer_weights(ModelWeights& weights);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace lp
