#include "mutner/tagging.hpp"

namespace mutner {

namespace {

std::size_t prefixes_per_type(TagScheme scheme) { return scheme == TagScheme::BIO ? 2 : 3; }

bool continues(const Tag& prev, const Tag& cur) {
  if (prev.is_outside() || prev.mtype != cur.mtype) return false;
  return prev.prefix == TagPrefix::B || prev.prefix == TagPrefix::I || prev.prefix == TagPrefix::M;
}

bool is_continuation(TagPrefix p) { return p == TagPrefix::I || p == TagPrefix::M || p == TagPrefix::E; }

}  // namespace

std::string_view to_string(TagScheme s) { return s == TagScheme::BIO ? "BIO" : "BMEO"; }

TagScheme parse_tag_scheme(std::string_view name) {
  if (name == "BIO" || name == "bio") return TagScheme::BIO;
  if (name == "BMEO" || name == "bmeo" || name == "BEMO" || name == "bemo") return TagScheme::BMEO;
  throw Error("unknown tag scheme '" + std::string(name) + "'");
}

std::string to_string(const Tag& tag) {
  char p = 'O';
  switch (tag.prefix) {
    case TagPrefix::O: return "O";
    case TagPrefix::B: p = 'B'; break;
    case TagPrefix::I: p = 'I'; break;
    case TagPrefix::M: p = 'M'; break;
    case TagPrefix::E: p = 'E'; break;
  }
  std::string out(1, p);
  out += '-';
  out += short_name(tag.mtype);
  return out;
}

Tag parse_tag(std::string_view text) {
  if (text == "O") return Tag::outside();
  if (text.size() < 3 || text[1] != '-') throw Error("malformed tag '" + std::string(text) + "'");
  Tag tag;
  switch (text[0]) {
    case 'B': tag.prefix = TagPrefix::B; break;
    case 'I': tag.prefix = TagPrefix::I; break;
    case 'M': tag.prefix = TagPrefix::M; break;
    case 'E': tag.prefix = TagPrefix::E; break;
    default: throw Error("malformed tag '" + std::string(text) + "'");
  }
  auto type = parse_mutation_type(text.substr(2));
  if (!type) throw Error("unknown mutation type in tag '" + std::string(text) + "'");
  tag.mtype = *type;
  return tag;
}

std::size_t num_labels(TagScheme scheme) { return 1 + kNumMutationTypes * prefixes_per_type(scheme); }

bool scheme_allows(TagScheme scheme, TagPrefix prefix) {
  switch (prefix) {
    case TagPrefix::O:
    case TagPrefix::B: return true;
    case TagPrefix::I: return scheme == TagScheme::BIO;
    case TagPrefix::M:
    case TagPrefix::E: return scheme == TagScheme::BMEO;
  }
  return false;
}

std::size_t label_index(TagScheme scheme, const Tag& tag) {
  if (tag.is_outside()) return 0;
  if (!scheme_allows(scheme, tag.prefix)) {
    throw Error("tag " + to_string(tag) + " is not part of the " + std::string(to_string(scheme)) + " scheme");
  }
  std::size_t offset = 0;
  switch (tag.prefix) {
    case TagPrefix::B: offset = 0; break;
    case TagPrefix::I:
    case TagPrefix::M: offset = 1; break;
    case TagPrefix::E: offset = 2; break;
    case TagPrefix::O: break;
  }
  return 1 + index_of(tag.mtype) * prefixes_per_type(scheme) + offset;
}

Tag label_at(TagScheme scheme, std::size_t index) {
  if (index == 0) return Tag::outside();
  if (index >= num_labels(scheme)) throw Error("label index out of range");
  std::size_t per = prefixes_per_type(scheme);
  std::size_t type = (index - 1) / per;
  std::size_t offset = (index - 1) % per;
  Tag tag;
  tag.mtype = kAllMutationTypes[type];
  if (offset == 0) {
    tag.prefix = TagPrefix::B;
  } else if (scheme == TagScheme::BIO) {
    tag.prefix = TagPrefix::I;
  } else {
    tag.prefix = offset == 1 ? TagPrefix::M : TagPrefix::E;
  }
  return tag;
}

bool is_valid(const TagSequence& tags) {
  const auto& l = tags.labels;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (!scheme_allows(tags.scheme, l[i].prefix)) return false;
    if (is_continuation(l[i].prefix) && (i == 0 || !continues(l[i - 1], l[i]))) return false;
    if (l[i].prefix == TagPrefix::M) {
      if (i + 1 == l.size()) return false;
      const Tag& next = l[i + 1];
      if ((next.prefix != TagPrefix::M && next.prefix != TagPrefix::E) || next.mtype != l[i].mtype) return false;
    }
  }
  return true;
}

TagSequence spans_to_tags(const std::vector<TokenSpan>& spans, std::size_t num_tokens, TagScheme scheme) {
  TagSequence out{scheme, std::vector<Tag>(num_tokens, Tag::outside())};
  std::size_t next_free = 0;
  for (const auto& span : spans) {
    if (span.first > span.last || span.last >= num_tokens) throw Error("span exceeds sentence length");
    if (span.first < next_free) throw Error("spans overlap or are unsorted");
    next_free = span.last + 1;
    out.labels[span.first] = {TagPrefix::B, span.mtype};
    for (std::size_t i = span.first + 1; i <= span.last; ++i) {
      if (scheme == TagScheme::BIO) {
        out.labels[i] = {TagPrefix::I, span.mtype};
      } else {
        out.labels[i] = {i == span.last ? TagPrefix::E : TagPrefix::M, span.mtype};
      }
    }
  }
  return out;
}

TagSequence spans_to_tags(const TokenizedSentence& sentence, TagScheme scheme) {
  return spans_to_tags(sentence.gold_spans, sentence.tokens.size(), scheme);
}

std::vector<TokenSpan> tags_to_spans(const TagSequence& raw) {
  TagSequence tags = repair(raw);
  const auto& l = tags.labels;
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  while (i < l.size()) {
    if (l[i].prefix != TagPrefix::B) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < l.size() && is_continuation(l[j + 1].prefix) && continues(l[j], l[j + 1])) ++j;
    spans.push_back({i, j, l[i].mtype});
    i = j + 1;
  }
  return spans;
}

TagSequence bmeo_to_bio(const TagSequence& tags) {
  if (tags.scheme != TagScheme::BMEO) throw Error("bmeo_to_bio expects a BMEO sequence");
  TagSequence out{TagScheme::BIO, tags.labels};
  for (auto& t : out.labels) {
    if (t.prefix == TagPrefix::M || t.prefix == TagPrefix::E) t.prefix = TagPrefix::I;
  }
  return out;
}

TagSequence repair(const TagSequence& tags) {
  TagSequence out = tags;
  auto& l = out.labels;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (!scheme_allows(out.scheme, l[i].prefix)) {
      // Foreign prefix (e.g. M in a BIO sequence): treat as continuation.
      l[i].prefix = out.scheme == TagScheme::BIO ? TagPrefix::I : TagPrefix::M;
    }
    if (is_continuation(l[i].prefix) && (i == 0 || !continues(l[i - 1], l[i]))) {
      l[i].prefix = TagPrefix::B;
    }
    if (l[i].prefix == TagPrefix::M) {
      bool continued = i + 1 < l.size() &&
                       (l[i + 1].prefix == TagPrefix::M || l[i + 1].prefix == TagPrefix::E) &&
                       l[i + 1].mtype == l[i].mtype;
      if (!continued) l[i].prefix = TagPrefix::E;
    }
  }
  return out;
}

}  // namespace mutner
