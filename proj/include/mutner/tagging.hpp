#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mutner/corpus_io.hpp"
#include "mutner/mutation_type.hpp"

namespace mutner {

// BMEO is also spelled BEMO; both name the same B/M/E/O scheme.
enum class TagScheme { BIO, BMEO };

std::string_view to_string(TagScheme s);
TagScheme parse_tag_scheme(std::string_view name);

enum class TagPrefix { O, B, I, M, E };

struct Tag {
  TagPrefix prefix = TagPrefix::O;
  MutationType mtype = MutationType::Substitution;  // ignored when prefix is O

  static Tag outside() { return {}; }
  bool is_outside() const { return prefix == TagPrefix::O; }

  friend bool operator==(const Tag& a, const Tag& b) {
    if (a.prefix != b.prefix) return false;
    return a.prefix == TagPrefix::O || a.mtype == b.mtype;
  }
};

// "O", "B-Sub", "I-FS", ...
std::string to_string(const Tag& tag);
Tag parse_tag(std::string_view text);

// Label inventory per scheme. Index 0 is O; then, for each type in
// declaration order, B,I (BIO) or B,M,E (BMEO).
std::size_t num_labels(TagScheme scheme);
std::size_t label_index(TagScheme scheme, const Tag& tag);
Tag label_at(TagScheme scheme, std::size_t index);
bool scheme_allows(TagScheme scheme, TagPrefix prefix);

struct TagSequence {
  TagScheme scheme = TagScheme::BIO;
  std::vector<Tag> labels;

  std::size_t size() const { return labels.size(); }
  friend bool operator==(const TagSequence&, const TagSequence&) = default;
};

// BIO: every I-t follows B-t or I-t.
// BMEO: every M-t/E-t follows B-t or M-t, and every M-t is followed by M-t or
// E-t; a B-t not continued by M-t/E-t is a one-token mention.
bool is_valid(const TagSequence& tags);

// Spans must be sorted and non-overlapping; throws otherwise.
TagSequence spans_to_tags(const std::vector<TokenSpan>& spans, std::size_t num_tokens, TagScheme scheme);
TagSequence spans_to_tags(const TokenizedSentence& sentence, TagScheme scheme);

// Repairs first, then decodes left to right.
std::vector<TokenSpan> tags_to_spans(const TagSequence& tags);

TagSequence bmeo_to_bio(const TagSequence& tags);

// Single left-to-right pass. A continuation tag (I, M, E) with no compatible
// predecessor becomes B of its type; in BMEO an M-t that is not continued
// becomes E-t. Valid input is returned unchanged.
TagSequence repair(const TagSequence& tags);

}  // namespace mutner
