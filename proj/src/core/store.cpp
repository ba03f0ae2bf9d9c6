#include "layerpainter/store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "layerpainter/errors.hpp"
#include "layerpainter/random.hpp"

namespace lp {

namespace {

using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  Reader(std::string_view bytes, const char* what) : bytes_(bytes), what_(what) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw TruncationError(std::string(what_) + ": truncated at byte " + std::to_string(pos_) + " (need " +
                            std::to_string(n) + " more, have " + std::to_string(bytes_.size() - pos_) + ")");
    }
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32() {
    std::string_view s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

float get_f32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(v);
}

json config_to_json(const ModelConfig& c) {
  return json{
      {"n_layers", c.n_layers},
      {"d_model", c.d_model},
      {"n_heads", c.n_heads},
      {"d_ff", c.d_ff},
      {"vocab_size", c.vocab_size},
      {"max_seq_len", c.max_seq_len},
      {"norm_kind", std::string(to_string(c.norm))},
      {"positional_kind", std::string(to_string(c.positional))},
      {"ffn_kind", std::string(to_string(c.ffn))},
      {"linear_bias", c.linear_bias},
      {"norm_eps", static_cast<double>(c.norm_eps)},
      {"rope_theta", static_cast<double>(c.rope_theta)},
  };
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.n_layers = j.at("n_layers").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.n_heads = j.at("n_heads").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
    c.norm = parse_norm_kind(j.at("norm_kind").get<std::string>());
    c.positional = parse_positional_kind(j.at("positional_kind").get<std::string>());
    c.ffn = parse_ffn_kind(j.value("ffn_kind", std::string(to_string(FfnKind::gated_silu))));
    c.linear_bias = j.value("linear_bias", false);
    c.norm_eps = static_cast<float>(j.value("norm_eps", static_cast<double>(kDefaultNormEps)));
    c.rope_theta = static_cast<float>(j.value("rope_theta", 10000.0));
  } catch (const json::exception& e) {
    throw FormatError(std::string("weight header config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace

std::span<const TokenId> TokenizedCorpus::sentence(std::size_t k) const {
  const std::size_t begin = sentence_offsets.at(k);
  const std::size_t end = k + 1 < sentence_offsets.size() ? sentence_offsets[k + 1] : ids.size();
  return std::span<const TokenId>(ids).subspan(begin, end - begin);
}

void TokenizedCorpus::validate() const {
  if (ids.empty()) throw DegenerateInputError("corpus has no tokens");
  if (vocab_size < 2) throw FormatError("corpus vocab_size must be >= 2");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab_size) {
      throw VocabularyError("corpus token " + std::to_string(i) + " has id " + std::to_string(ids[i]) +
                            " >= vocab_size " + std::to_string(vocab_size));
    }
  }
  if (sentence_offsets.empty() || sentence_offsets.front() != 0) {
    throw FormatError("corpus sentence table must start at offset 0");
  }
  for (std::size_t k = 1; k < sentence_offsets.size(); ++k) {
    if (sentence_offsets[k] <= sentence_offsets[k - 1]) {
      throw FormatError("corpus sentence offsets not strictly ascending at entry " + std::to_string(k));
    }
  }
  if (sentence_offsets.back() >= ids.size()) throw FormatError("corpus sentence offset past end of tokens");
}

std::string encode_weights(const ModelWeights& weights) {
  check_weights(weights);
  ModelWeights copy = weights;
  json tensors = json::array();
  std::string payload;
  for (const TensorView& t : tensor_views(copy)) {
    tensors.push_back(json{{"name", t.name}, {"shape", t.shape}, {"offset", payload.size()}});
    payload.reserve(payload.size() + 4 * t.values.size());
    for (float f : t.values) put_f32(payload, f);
  }
  const std::string header = json{{"config", config_to_json(weights.config)}, {"tensors", tensors}}.dump();
  std::string out(kWeightMagic);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  out += payload;
  return out;
}

ModelWeights decode_weights(std::string_view bytes) {
  Reader r(bytes, "weight file");
  if (bytes.size() < 4 || r.take(4) != kWeightMagic) throw FormatError("weight file: bad magic (expected LPW1)");
  const std::uint32_t header_len = r.u32();
  const std::string_view header_text = r.take(header_len);
  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("weight file: header is not valid JSON: ") + e.what());
  }
  if (!header.contains("config") || !header.contains("tensors") || !header["tensors"].is_array()) {
    throw FormatError("weight file: header needs 'config' and 'tensors'");
  }
  ModelWeights w = allocate_weights(config_from_json(header["config"]));
  const std::string_view payload = bytes.substr(r.position());

  struct Entry {
    std::vector<std::size_t> shape;
    std::size_t offset;
  };
  std::map<std::string, Entry> index;
  for (const json& t : header["tensors"]) {
    Entry e;
    std::string name;
    try {
      name = t.at("name").get<std::string>();
      e.shape = t.at("shape").get<std::vector<std::size_t>>();
      e.offset = t.at("offset").get<std::size_t>();
    } catch (const json::exception& ex) {
      throw FormatError(std::string("weight file: bad tensor entry: ") + ex.what());
    }
    if (!index.emplace(name, std::move(e)).second) {
      throw SchemaError("weight file: tensor '" + name + "' listed more than once");
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> extents;
  std::set<std::string> used;
  for (TensorView& view : tensor_views(w)) {
    auto it = index.find(view.name);
    if (it == index.end()) throw SchemaError("weight file: missing tensor '" + view.name + "'");
    if (it->second.shape != view.shape) {
      std::ostringstream os;
      os << "weight file: tensor '" << view.name << "' has shape [";
      for (std::size_t i = 0; i < it->second.shape.size(); ++i) os << (i ? "," : "") << it->second.shape[i];
      os << "], expected [";
      for (std::size_t i = 0; i < view.shape.size(); ++i) os << (i ? "," : "") << view.shape[i];
      os << "]";
      throw ShapeError(os.str());
    }
    const std::size_t nbytes = view.values.size() * 4;
    const std::size_t off = it->second.offset;
    if (off > payload.size() || payload.size() - off < nbytes) {
      throw TruncationError("weight file: tensor '" + view.name + "' runs past end of payload");
    }
    const char* p = payload.data() + off;
    for (std::size_t i = 0; i < view.values.size(); ++i) {
      const float f = get_f32(p + 4 * i);
      if (!std::isfinite(f)) throw FormatError("weight file: tensor '" + view.name + "' has a non-finite value");
      view.values[i] = f;
    }
    extents.emplace_back(off, off + nbytes);
    used.insert(view.name);
  }
  for (const auto& [name, entry] : index) {
    if (!used.contains(name)) throw SchemaError("weight file: unexpected tensor '" + name + "'");
  }
  std::sort(extents.begin(), extents.end());
  for (std::size_t i = 1; i < extents.size(); ++i) {
    if (extents[i].first < extents[i - 1].second) throw FormatError("weight file: tensor byte ranges overlap");
  }
  return w;
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
  write_file_atomic(path, encode_weights(weights));
}

ModelWeights load_weights(const std::filesystem::path& path) { return decode_weights(read_file(path)); }

std::string encode_corpus(const TokenizedCorpus& corpus) {
  corpus.validate();
  std::string out(kCorpusMagic);
  put_u32(out, corpus.vocab_size);
  put_u32(out, static_cast<std::uint32_t>(corpus.ids.size()));
  for (TokenId id : corpus.ids) put_u32(out, id);
  put_u32(out, static_cast<std::uint32_t>(corpus.sentence_offsets.size()));
  for (std::uint32_t off : corpus.sentence_offsets) put_u32(out, off);
  return out;
}

TokenizedCorpus decode_corpus(std::string_view bytes) {
  Reader r(bytes, "corpus file");
  if (bytes.size() < 4 || r.take(4) != kCorpusMagic) throw FormatError("corpus file: bad magic (expected LPC1)");
  TokenizedCorpus c;
  c.vocab_size = r.u32();
  const std::uint32_t count = r.u32();
  if (count == 0) throw DegenerateInputError("corpus file: empty token payload");
  if (r.remaining() / 4 < count) throw TruncationError("corpus file: token payload truncated");
  c.ids.resize(count);
  for (auto& id : c.ids) id = r.u32();
  const std::uint32_t n_sentences = r.u32();
  if (r.remaining() / 4 < n_sentences) throw TruncationError("corpus file: sentence table truncated");
  c.sentence_offsets.resize(n_sentences);
  for (auto& off : c.sentence_offsets) off = r.u32();
  if (r.remaining() != 0) throw FormatError("corpus file: trailing bytes after sentence table");
  c.validate();
  return c;
}

void save_corpus(const TokenizedCorpus& corpus, const std::filesystem::path& path) {
  write_file_atomic(path, encode_corpus(corpus));
}

TokenizedCorpus load_corpus(const std::filesystem::path& path) { return decode_corpus(read_file(path)); }

std::vector<TokenId> byte_tokenize(std::string_view text) {
  std::vector<TokenId> ids;
  ids.reserve(text.size());
  for (char ch : text) ids.push_back(static_cast<unsigned char>(ch));
  return ids;
}

std::string byte_detokenize(std::span<const TokenId> ids) {
  std::string out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    if (id >= kByteVocabSize) throw VocabularyError("byte token id " + std::to_string(id) + " >= 256");
    out.push_back(static_cast<char>(id));
  }
  return out;
}

TokenizedCorpus corpus_from_text(std::string_view text) {
  TokenizedCorpus c;
  c.vocab_size = kByteVocabSize;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    c.sentence_offsets.push_back(static_cast<std::uint32_t>(c.ids.size()));
    for (TokenId id : byte_tokenize(line)) c.ids.push_back(id);
  }
  c.validate();
  return c;
}

TokenizedCorpus random_corpus(std::uint32_t vocab_size, std::size_t sentences, std::size_t min_len,
                              std::size_t max_len, std::uint64_t seed) {
  if (sentences == 0 || min_len == 0 || max_len < min_len) {
    throw ConfigError("random_corpus: need sentences >= 1 and 1 <= min_len <= max_len");
  }
  Rng rng(seed);
  TokenizedCorpus c;
  c.vocab_size = vocab_size;
  for (std::size_t s = 0; s < sentences; ++s) {
    c.sentence_offsets.push_back(static_cast<std::uint32_t>(c.ids.size()));
    const std::size_t len = min_len + rng.uniform_below(max_len - min_len + 1);
    for (std::size_t i = 0; i < len; ++i) c.ids.push_back(static_cast<TokenId>(rng.uniform_below(vocab_size)));
  }
  c.validate();
  return c;
}

ModelWeights generate_random_model(const ModelConfig& config, std::uint64_t seed) {
  ModelWeights w = allocate_weights(config);
  Rng rng(seed);
  for (TensorView& t : tensor_views(w)) {
    const std::string leaf = t.name.substr(t.name.rfind('.') + 1);
    const bool gain = leaf == "gain";
    const bool bias = leaf == "bias" || leaf == "bq" || leaf == "bk" || leaf == "bv" || leaf == "bo" ||
                      leaf == "b_up" || leaf == "b_down";
    for (float& v : t.values) {
      if (gain) {
        v = 1.0f;
      } else if (bias) {
        v = 0.0f;
      } else {
        v = static_cast<float>(0.02 * rng.normal());
      }
    }
  }
  return w;
}

void zero_layer_weights(ModelWeights& weights) {
  for (TensorView& t : tensor_views(weights)) {
    if (t.name.starts_with("layers.")) std::fill(t.values.begin(), t.values.end(), 0.0f);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return std::move(os).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace lp
