#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "mutner/corpus_io.hpp"

namespace mutner {

// Per-token feature rows of a sentence, stored row-compressed so hashed
// binary features and dense embeddings share one representation.
class RepresentationMatrix {
 public:
  struct RowView {
    std::span<const std::uint32_t> indices;
    std::span<const double> values;
  };

  explicit RepresentationMatrix(std::size_t dim = 0) : dim_(dim), row_ptr_{0} {}

  static RepresentationMatrix from_dense(const std::vector<std::vector<double>>& rows, std::size_t dim);

  // Indices must be strictly increasing and < dim; values finite.
  void add_row(std::span<const std::uint32_t> indices, std::span<const double> values);
  void add_dense_row(std::span<const double> values);

  std::size_t rows() const { return row_ptr_.size() - 1; }
  std::size_t dim() const { return dim_; }
  RowView row(std::size_t i) const;
  std::vector<double> dense_row(std::size_t i) const;

  friend bool operator==(const RepresentationMatrix&, const RepresentationMatrix&) = default;

 private:
  std::size_t dim_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

// Renumbers the features that occur in a set of matrices onto [0, active)
// so training can work on a compact parameter block. Features outside the
// active set are dropped by apply(); their weights are zero anyway.
class FeatureRemap {
 public:
  FeatureRemap() = default;
  explicit FeatureRemap(const std::vector<RepresentationMatrix>& matrices);

  std::size_t full_dim() const { return full_dim_; }
  std::size_t compact_dim() const { return active_.size(); }
  // active()[compact index] = full index, increasing.
  const std::vector<std::uint32_t>& active() const { return active_; }
  RepresentationMatrix apply(const RepresentationMatrix& m) const;

 private:
  std::size_t full_dim_ = 0;
  std::vector<std::uint32_t> active_;
  std::vector<std::int64_t> position_;
};

// Zeroes each entry with probability `rate` and rescales survivors by
// 1 / (1 - rate).
RepresentationMatrix drop_features(const RepresentationMatrix& h, double rate, std::mt19937_64& rng);

enum class EncoderKind { Orthographic, EmbeddingFile };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::Orthographic;
  unsigned hash_bits = 18;     // orthographic only; dimension = 2^hash_bits
  std::string sidecar_path;    // embedding_file only
  std::uint64_t seed = 0;      // XORed into every feature hash
  // Orthographic only, off by default: also describe the whitespace-delimited
  // chunk around each token (its shape and its letter tokens), so e.g. the
  // leading "c" of "c.76_78del" sees the "del" further right.
  bool chunk_features = false;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);
// Hex FNV-1a digest of the canonical JSON form.
std::string digest(const EncoderConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::size_t dimension() const = 0;
  virtual RepresentationMatrix encode(const TokenizedSentence& sentence) const = 0;
  virtual const EncoderConfig& config() const = 0;
};

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config);

// Hashed binary orthographic features; no corpus-level state.
class OrthographicEncoder final : public Encoder {
 public:
  explicit OrthographicEncoder(EncoderConfig config);

  std::size_t dimension() const override { return std::size_t{1} << config_.hash_bits; }
  RepresentationMatrix encode(const TokenizedSentence& sentence) const override;
  const EncoderConfig& config() const override { return config_; }

  // Template strings of the token at `position`, before hashing.
  static std::vector<std::string> feature_strings(const std::vector<Token>& tokens, std::size_t position,
                                                  bool chunk_features = false);
  static std::string word_shape(std::string_view surface);
  std::uint32_t hash_feature(std::string_view feature) const;

 private:
  EncoderConfig config_;
};

struct EmbeddingKey {
  std::string doc_id;
  std::size_t sentence_index = 0;
  std::size_t token_index = 0;
  friend auto operator<=>(const EmbeddingKey&, const EmbeddingKey&) = default;
};

// Precomputed per-token vectors, e.g. exported from an external encoder.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  void insert(EmbeddingKey key, std::vector<double> vec);
  // Throws when absent.
  const std::vector<double>& lookup(const EmbeddingKey& key) const;
  bool contains(const EmbeddingKey& key) const { return vectors_.count(key) > 0; }
  const std::map<EmbeddingKey, std::vector<double>>& entries() const { return vectors_; }

 private:
  std::size_t dim_;
  std::map<EmbeddingKey, std::vector<double>> vectors_;
};

// Header `dim=<d>`, then `doc_id<TAB>sent_idx<TAB>tok_idx<TAB>v1 v2 ... vd`.
EmbeddingStore read_embedding_sidecar(std::istream& in);
EmbeddingStore read_embedding_sidecar(const std::string& path);
void write_embedding_sidecar(std::ostream& out, const EmbeddingStore& store);

class EmbeddingFileEncoder final : public Encoder {
 public:
  explicit EmbeddingFileEncoder(EncoderConfig config);
  EmbeddingFileEncoder(EncoderConfig config, std::shared_ptr<const EmbeddingStore> store);

  std::size_t dimension() const override { return store_->dim(); }
  RepresentationMatrix encode(const TokenizedSentence& sentence) const override;
  const EncoderConfig& config() const override { return config_; }

 private:
  EncoderConfig config_;
  std::shared_ptr<const EmbeddingStore> store_;
};

}  // namespace mutner
