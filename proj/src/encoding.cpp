#include "mutner/encoding.hpp"

#include "mutner/optim.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mutner {

RepresentationMatrix RepresentationMatrix::from_dense(const std::vector<std::vector<double>>& rows,
                                                      std::size_t dim) {
  RepresentationMatrix m(dim);
  for (const auto& r : rows) m.add_dense_row(r);
  return m;
}

void RepresentationMatrix::add_row(std::span<const std::uint32_t> indices, std::span<const double> values) {
  if (indices.size() != values.size()) throw Error("row index/value length mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= dim_) throw Error("feature index exceeds dimension");
    if (k > 0 && indices[k] <= indices[k - 1]) throw Error("row indices must be strictly increasing");
    if (!std::isfinite(values[k])) throw Error("non-finite representation value");
  }
  indices_.insert(indices_.end(), indices.begin(), indices.end());
  values_.insert(values_.end(), values.begin(), values.end());
  row_ptr_.push_back(indices_.size());
}

void RepresentationMatrix::add_dense_row(std::span<const double> values) {
  if (values.size() != dim_) {
    throw Error("dimension mismatch: row has " + std::to_string(values.size()) + " values, expected " +
                std::to_string(dim_));
  }
  std::vector<std::uint32_t> idx(dim_);
  for (std::size_t k = 0; k < dim_; ++k) idx[k] = static_cast<std::uint32_t>(k);
  add_row(idx, values);
}

RepresentationMatrix::RowView RepresentationMatrix::row(std::size_t i) const {
  std::size_t b = row_ptr_.at(i);
  std::size_t e = row_ptr_.at(i + 1);
  return {std::span<const std::uint32_t>(indices_).subspan(b, e - b),
          std::span<const double>(values_).subspan(b, e - b)};
}

std::vector<double> RepresentationMatrix::dense_row(std::size_t i) const {
  std::vector<double> out(dim_, 0.0);
  auto r = row(i);
  for (std::size_t k = 0; k < r.indices.size(); ++k) out[r.indices[k]] = r.values[k];
  return out;
}

FeatureRemap::FeatureRemap(const std::vector<RepresentationMatrix>& matrices) {
  if (matrices.empty()) return;
  full_dim_ = matrices.front().dim();
  std::vector<bool> seen(full_dim_, false);
  for (const auto& m : matrices) {
    if (m.dim() != full_dim_) throw Error("dimension mismatch between representation matrices");
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::uint32_t f : m.row(i).indices) seen[f] = true;
    }
  }
  position_.assign(full_dim_, -1);
  for (std::size_t f = 0; f < full_dim_; ++f) {
    if (seen[f]) {
      position_[f] = static_cast<std::int64_t>(active_.size());
      active_.push_back(static_cast<std::uint32_t>(f));
    }
  }
}

RepresentationMatrix FeatureRemap::apply(const RepresentationMatrix& m) const {
  if (m.dim() != full_dim_) throw Error("dimension mismatch in feature remap");
  RepresentationMatrix out(compact_dim());
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    idx.clear();
    val.clear();
    auto r = m.row(i);
    for (std::size_t k = 0; k < r.indices.size(); ++k) {
      std::int64_t p = position_[r.indices[k]];
      if (p < 0) continue;
      idx.push_back(static_cast<std::uint32_t>(p));
      val.push_back(r.values[k]);
    }
    out.add_row(idx, val);
  }
  return out;
}

RepresentationMatrix drop_features(const RepresentationMatrix& h, double rate, std::mt19937_64& rng) {
  RepresentationMatrix out(h.dim());
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    idx.clear();
    val.clear();
    auto r = h.row(i);
    for (std::size_t k = 0; k < r.indices.size(); ++k) {
      if (uniform01(rng) < rate) continue;
      idx.push_back(r.indices[k]);
      val.push_back(r.values[k] * keep_scale);
    }
    out.add_row(idx, val);
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

nlohmann::json to_json(const EncoderConfig& config) {
  nlohmann::json j;
  if (config.kind == EncoderKind::Orthographic) {
    j["kind"] = "orthographic";
    j["hash_bits"] = config.hash_bits;
    // Omitted when off so default configs keep their digest.
    if (config.chunk_features) j["chunk_features"] = true;
  } else {
    j["kind"] = "embedding_file";
    j["sidecar"] = config.sidecar_path;
  }
  j["seed"] = config.seed;
  return j;
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key != "kind" && key != "hash_bits" && key != "sidecar" && key != "seed" &&
        key != "chunk_features") {
      throw Error("unknown encoder config key '" + key + "'");
    }
  }
  std::string kind = j.value("kind", std::string("orthographic"));
  if (kind == "orthographic") {
    c.kind = EncoderKind::Orthographic;
  } else if (kind == "embedding_file") {
    c.kind = EncoderKind::EmbeddingFile;
  } else {
    throw Error("unknown encoder kind '" + kind + "'");
  }
  c.hash_bits = j.value("hash_bits", 18u);
  c.sidecar_path = j.value("sidecar", std::string());
  c.seed = j.value("seed", std::uint64_t{0});
  c.chunk_features = j.value("chunk_features", false);
  if (c.kind == EncoderKind::EmbeddingFile && c.chunk_features) {
    throw Error("chunk_features applies to the orthographic encoder only");
  }
  if (c.kind == EncoderKind::Orthographic && (c.hash_bits < 1 || c.hash_bits > 30)) {
    throw Error("hash_bits must be in [1, 30]");
  }
  if (c.kind == EncoderKind::EmbeddingFile && c.sidecar_path.empty()) {
    throw Error("embedding_file encoder needs a sidecar path");
  }
  return c;
}

std::string digest(const EncoderConfig& config) {
  std::uint64_t h = fnv1a64(to_json(config).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config) {
  if (config.kind == EncoderKind::Orthographic) return std::make_unique<OrthographicEncoder>(config);
  return std::make_unique<EmbeddingFileEncoder>(config);
}

// ---------------------------------------------------------------------------
// Orthographic

OrthographicEncoder::OrthographicEncoder(EncoderConfig config) : config_(std::move(config)) {
  if (config_.hash_bits < 1 || config_.hash_bits > 30) throw Error("hash_bits must be in [1, 30]");
}

std::string OrthographicEncoder::word_shape(std::string_view surface) {
  std::string shape;
  for (char ch : surface) {
    auto c = static_cast<unsigned char>(ch);
    char s;
    if (c >= 'A' && c <= 'Z') {
      s = 'A';
    } else if ((c >= 'a' && c <= 'z') || c >= 0x80) {
      s = 'a';
    } else if (c >= '0' && c <= '9') {
      s = '0';
    } else {
      s = ch;
    }
    if (shape.empty() || shape.back() != s) shape.push_back(s);
  }
  return shape;
}

std::vector<std::string> OrthographicEncoder::feature_strings(const std::vector<Token>& tokens,
                                                              std::size_t position, bool chunk_features) {
  const std::string& surface = tokens.at(position).surface;
  std::string lower = surface;
  for (char& c : lower) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  const std::string shape = word_shape(surface);

  std::vector<std::string> f;
  f.push_back("lower=" + lower);
  f.push_back("shape=" + shape);
  for (std::size_t k = 1; k <= 3 && k <= surface.size(); ++k) {
    f.push_back("pre" + std::to_string(k) + "=" + surface.substr(0, k));
    f.push_back("suf" + std::to_string(k) + "=" + surface.substr(surface.size() - k));
  }
  bool all_digits = !surface.empty() &&
                    std::all_of(surface.begin(), surface.end(), [](char c) { return c >= '0' && c <= '9'; });
  bool has_digit = std::any_of(surface.begin(), surface.end(), [](char c) { return c >= '0' && c <= '9'; });
  bool has_letter = std::any_of(surface.begin(), surface.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
  });
  f.push_back(all_digits ? "alldigits=1" : "alldigits=0");
  f.push_back(has_digit && has_letter ? "digitletter=1" : "digitletter=0");

  const auto n = static_cast<long>(tokens.size());
  for (long rel = -2; rel <= 2; ++rel) {
    long j = static_cast<long>(position) + rel;
    std::string ctx = j < 0 ? "<s>" : j >= n ? "</s>" : tokens[static_cast<std::size_t>(j)].surface;
    f.push_back("w[" + std::to_string(rel) + "]=" + ctx);
  }
  std::string prev_shape = position == 0 ? "<s>" : word_shape(tokens[position - 1].surface);
  f.push_back("shape[-1,0]=" + prev_shape + "|" + shape);

  if (chunk_features) {
    std::size_t a = position, b = position;
    while (a > 0 && tokens[a - 1].end == tokens[a].start) --a;
    while (b + 1 < tokens.size() && tokens[b].end == tokens[b + 1].start) ++b;
    std::string chunk;
    for (std::size_t k = a; k <= b; ++k) chunk += tokens[k].surface;
    f.push_back("chunkshape=" + word_shape(chunk));
    for (std::size_t k = a; k <= b; ++k) {
      std::string w = tokens[k].surface;
      bool letters = std::all_of(w.begin(), w.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
      });
      if (!letters) continue;
      for (char& c : w) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      }
      f.push_back("chunkword=" + w);
    }
  }
  return f;
}

std::uint32_t OrthographicEncoder::hash_feature(std::string_view feature) const {
  std::uint64_t h = fnv1a64(feature) ^ config_.seed;
  std::uint64_t mask = (std::uint64_t{1} << config_.hash_bits) - 1;
  return static_cast<std::uint32_t>(h & mask);
}

RepresentationMatrix OrthographicEncoder::encode(const TokenizedSentence& sentence) const {
  RepresentationMatrix m(dimension());
  std::vector<std::uint32_t> idx;
  std::vector<double> ones;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    idx.clear();
    for (const auto& f : feature_strings(sentence.tokens, i, config_.chunk_features)) idx.push_back(hash_feature(f));
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    ones.assign(idx.size(), 1.0);
    m.add_row(idx, ones);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Embedding sidecar

void EmbeddingStore::insert(EmbeddingKey key, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw Error("dimension mismatch: vector has " + std::to_string(vec.size()) + " values, header says " +
                std::to_string(dim_));
  }
  auto [it, inserted] = vectors_.emplace(std::move(key), std::move(vec));
  if (!inserted) {
    throw Error("duplicate embedding key (" + it->first.doc_id + ", " + std::to_string(it->first.sentence_index) +
                ", " + std::to_string(it->first.token_index) + ")");
  }
}

const std::vector<double>& EmbeddingStore::lookup(const EmbeddingKey& key) const {
  auto it = vectors_.find(key);
  if (it == vectors_.end()) {
    throw Error("no embedding for (doc " + key.doc_id + ", sentence " + std::to_string(key.sentence_index) +
                ", token " + std::to_string(key.token_index) + ")");
  }
  return it->second;
}

namespace {

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line_no, std::string("non-numeric ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

EmbeddingStore read_embedding_sidecar(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing dim=<d> header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("dim=", 0) != 0) throw ParseError(1, "missing dim=<d> header");
  auto dim = parse_number<std::size_t>(std::string_view(line).substr(4), 1, "dimension");
  if (dim == 0) throw ParseError(1, "dimension must be positive");
  EmbeddingStore store(dim);

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view view(line);
    std::array<std::string_view, 4> fields;
    for (std::size_t k = 0; k < 3; ++k) {
      std::size_t tab = view.find('\t');
      if (tab == std::string_view::npos) throw ParseError(line_no, "expected 4 tab-separated fields");
      fields[k] = view.substr(0, tab);
      view.remove_prefix(tab + 1);
    }
    fields[3] = view;
    EmbeddingKey key{std::string(fields[0]), parse_number<std::size_t>(fields[1], line_no, "sentence index"),
                     parse_number<std::size_t>(fields[2], line_no, "token index")};
    std::vector<double> vec;
    std::string_view values = fields[3];
    while (!values.empty()) {
      std::size_t sp = values.find(' ');
      std::string_view item = values.substr(0, sp);
      if (!item.empty()) vec.push_back(parse_number<double>(item, line_no, "vector component"));
      if (sp == std::string_view::npos) break;
      values.remove_prefix(sp + 1);
    }
    if (vec.size() != dim) {
      throw ParseError(line_no, "dimension mismatch: " + std::to_string(vec.size()) + " values, header says " +
                                    std::to_string(dim));
    }
    if (store.contains(key)) throw ParseError(line_no, "duplicate key");
    store.insert(std::move(key), std::move(vec));
  }
  return store;
}

EmbeddingStore read_embedding_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding sidecar " + path);
  return read_embedding_sidecar(in);
}

void write_embedding_sidecar(std::ostream& out, const EmbeddingStore& store) {
  out << "dim=" << store.dim() << '\n';
  char buf[64];
  for (const auto& [key, vec] : store.entries()) {
    out << key.doc_id << '\t' << key.sentence_index << '\t' << key.token_index << '\t';
    for (std::size_t k = 0; k < vec.size(); ++k) {
      auto res = std::to_chars(buf, buf + sizeof buf, vec[k]);
      if (k > 0) out << ' ';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

EmbeddingFileEncoder::EmbeddingFileEncoder(EncoderConfig config)
    : config_(std::move(config)),
      store_(std::make_shared<EmbeddingStore>(read_embedding_sidecar(config_.sidecar_path))) {}

EmbeddingFileEncoder::EmbeddingFileEncoder(EncoderConfig config, std::shared_ptr<const EmbeddingStore> store)
    : config_(std::move(config)), store_(std::move(store)) {}

RepresentationMatrix EmbeddingFileEncoder::encode(const TokenizedSentence& sentence) const {
  RepresentationMatrix m(store_->dim());
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    m.add_dense_row(store_->lookup({sentence.doc_id, sentence.sentence_index, i}));
  }
  return m;
}

}  // namespace mutner
