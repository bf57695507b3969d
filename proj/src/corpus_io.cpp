#include "mutner/corpus_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace mutner {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_letter(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}
bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }

std::string fold(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return fields;
}

bool parse_offset(std::string_view field, std::size_t& out) {
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

struct PendingAnnotation {
  std::size_t line;
  std::size_t start;
  std::size_t end;
  std::string surface;
  std::string type_name;
};

struct PendingDocument {
  std::string id;
  std::size_t line = 0;
  std::string title;
  std::string abstract_text;
  bool has_abstract = false;
  std::vector<PendingAnnotation> annotations;
};

// Keeps the longest of any overlapping group; ties go to the earlier start.
std::vector<std::size_t> resolve_overlaps(const std::vector<std::pair<std::size_t, std::size_t>>& ranges) {
  std::vector<std::size_t> order(ranges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    std::size_t la = ranges[a].second - ranges[a].first;
    std::size_t lb = ranges[b].second - ranges[b].first;
    if (la != lb) return la > lb;
    return ranges[a].first < ranges[b].first;
  });
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    bool clash = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return ranges[idx].first < ranges[k].second && ranges[k].first < ranges[idx].second;
    });
    if (!clash) kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

Document finish_document(PendingDocument&& pending, const AliasTable& aliases,
                         std::vector<Diagnostic>& diagnostics) {
  Document doc;
  doc.id = std::move(pending.id);
  doc.text = pending.title + "\n" + pending.abstract_text;

  std::vector<Mention> candidates;
  std::vector<std::size_t> candidate_lines;
  for (auto& ann : pending.annotations) {
    auto reject = [&](std::string msg) {
      diagnostics.push_back({Diagnostic::Severity::Rejection, ann.line, doc.id, std::move(msg)});
    };
    if (ann.start >= ann.end || ann.end > doc.text.size()) {
      reject("offsets " + std::to_string(ann.start) + "-" + std::to_string(ann.end) +
             " out of range for text of length " + std::to_string(doc.text.size()));
      continue;
    }
    std::string_view actual(doc.text.data() + ann.start, ann.end - ann.start);
    if (actual != ann.surface) {
      reject("surface '" + ann.surface + "' does not match text '" + std::string(actual) + "'");
      continue;
    }
    auto type = aliases.lookup(ann.type_name);
    if (!type) {
      reject("unknown mutation type '" + ann.type_name + "'");
      continue;
    }
    candidates.push_back({ann.start, ann.end, std::move(ann.surface), *type});
    candidate_lines.push_back(ann.line);
  }

  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(candidates.size());
  for (const auto& m : candidates) ranges.emplace_back(m.start, m.end);
  std::vector<std::size_t> kept = resolve_overlaps(ranges);
  std::vector<bool> is_kept(candidates.size(), false);
  for (std::size_t k : kept) is_kept[k] = true;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!is_kept[i]) {
      diagnostics.push_back({Diagnostic::Severity::Warning, candidate_lines[i], doc.id,
                             "overlapping mention '" + candidates[i].surface +
                                 "' dropped in favour of a longer one"});
    }
  }
  for (std::size_t k : kept) doc.mentions.push_back(std::move(candidates[k]));
  std::stable_sort(doc.mentions.begin(), doc.mentions.end(),
                   [](const Mention& a, const Mention& b) { return a.start < b.start; });
  return doc;
}

const std::set<std::string, std::less<>>& abbreviations() {
  static const std::set<std::string, std::less<>> kAbbrev = {
      "e.g", "i.e", "al",   "fig", "figs", "vs",  "approx", "ca",  "no",
      "dr",  "mr",  "mrs",  "ms",  "etc",  "cf",  "resp",   "ref", "refs",
      "eq",  "eqs", "tab",  "vol", "nos",  "st",  "inc",    "ltd", "co"};
  return kAbbrev;
}

// Lowercased whitespace-delimited chunk ending at `dot` with the dot removed.
std::string chunk_before(std::string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !is_space(static_cast<unsigned char>(text[begin - 1]))) --begin;
  std::string chunk = fold(text.substr(begin, dot - begin));
  while (!chunk.empty() && (chunk.front() == '(' || chunk.front() == '[')) chunk.erase(0, 1);
  return chunk;
}

bool inside_mention(const Document& doc, std::size_t boundary) {
  return std::any_of(doc.mentions.begin(), doc.mentions.end(), [&](const Mention& m) {
    return m.start < boundary && boundary < m.end;
  });
}

}  // namespace

std::string to_string(const Diagnostic& d) {
  std::ostringstream os;
  os << (d.severity == Diagnostic::Severity::Warning ? "warning" : "rejected");
  if (d.line > 0) os << " line " << d.line;
  if (!d.doc_id.empty()) os << " doc " << d.doc_id;
  os << ": " << d.message;
  return os.str();
}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

AliasTable AliasTable::defaults() {
  AliasTable table;
  for (MutationType t : kAllMutationTypes) {
    table.add(std::string(canonical_name(t)), t);
    table.add(std::string(short_name(t)), t);
  }
  table.add("Frame Shift", MutationType::FrameShift);
  table.add("Frameshift", MutationType::FrameShift);
  table.add("Indel", MutationType::InDel);
  return table;
}

AliasTable AliasTable::load(std::istream& in) {
  AliasTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty()) {
      throw ParseError(line_no, "alias table expects 'alias<TAB>canonical'");
    }
    auto type = parse_mutation_type(fields[1]);
    if (!type) {
      throw ParseError(line_no, "unknown canonical type '" + std::string(fields[1]) + "'");
    }
    table.add(std::string(fields[0]), *type);
  }
  return table;
}

AliasTable AliasTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open alias table " + path);
  return load(in);
}

void AliasTable::add(std::string alias, MutationType t) {
  folded_[fold(alias)] = t;
  exact_[std::move(alias)] = t;
}

std::optional<MutationType> AliasTable::lookup(std::string_view name) const {
  if (auto it = exact_.find(name); it != exact_.end()) return it->second;
  if (auto it = folded_.find(fold(name)); it != folded_.end()) return it->second;
  return std::nullopt;
}

ParseResult parse_pubtator(std::istream& in, const AliasTable& aliases) {
  ParseResult result;
  std::optional<PendingDocument> current;
  auto flush = [&] {
    if (current) {
      result.documents.push_back(finish_document(std::move(*current), aliases, result.diagnostics));
      current.reset();
    }
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(), [](char c) { return is_space(static_cast<unsigned char>(c)); })) {
      flush();
      continue;
    }

    std::size_t bar = line.find('|');
    std::size_t tab = line.find('\t');
    if (bar != std::string::npos && (tab == std::string::npos || bar < tab) &&
        line.compare(bar, 3, "|t|") == 0) {
      std::string id = line.substr(0, bar);
      if (id.empty()) throw ParseError(line_no, "empty document id");
      flush();
      current.emplace();
      current->id = std::move(id);
      current->line = line_no;
      current->title = line.substr(bar + 3);
      continue;
    }
    if (bar != std::string::npos && (tab == std::string::npos || bar < tab) &&
        line.compare(bar, 3, "|a|") == 0) {
      std::string id = line.substr(0, bar);
      if (!current || current->id != id) {
        throw ParseError(line_no, "abstract line for '" + id + "' without a matching title line");
      }
      if (current->has_abstract) throw ParseError(line_no, "duplicate abstract line for '" + id + "'");
      current->abstract_text = line.substr(bar + 3);
      current->has_abstract = true;
      continue;
    }
    if (tab != std::string::npos) {
      auto fields = split_tabs(line);
      if (fields.size() != 5 && fields.size() != 6) {
        throw ParseError(line_no, "annotation line needs 5 or 6 tab-separated fields, got " +
                                      std::to_string(fields.size()));
      }
      if (!current || current->id != fields[0]) {
        throw ParseError(line_no, "annotation for '" + std::string(fields[0]) +
                                      "' outside its document block");
      }
      PendingAnnotation ann;
      ann.line = line_no;
      if (!parse_offset(fields[1], ann.start) || !parse_offset(fields[2], ann.end)) {
        throw ParseError(line_no, "non-numeric annotation offsets");
      }
      ann.surface = std::string(fields[3]);
      ann.type_name = std::string(fields[4]);
      current->annotations.push_back(std::move(ann));
      continue;
    }
    throw ParseError(line_no, "unrecognized line");
  }
  flush();
  return result;
}

ParseResult parse_pubtator_file(const std::string& path, const AliasTable& aliases) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path);
  return parse_pubtator(in, aliases);
}

void write_pubtator(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& doc : docs) {
    std::size_t nl = doc.text.find('\n');
    if (nl == std::string::npos) throw Error("document " + doc.id + " has no title/abstract separator");
    out << doc.id << "|t|" << std::string_view(doc.text).substr(0, nl) << '\n';
    out << doc.id << "|a|" << std::string_view(doc.text).substr(nl + 1) << '\n';
    for (const auto& m : doc.mentions) {
      out << doc.id << '\t' << m.start << '\t' << m.end << '\t' << m.surface << '\t'
          << canonical_name(m.mtype) << '\n';
    }
    out << '\n';
  }
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (is_letter(c)) {
      while (j < n && is_letter(static_cast<unsigned char>(text[j]))) ++j;
    } else if (is_digit(c)) {
      while (j < n && is_digit(static_cast<unsigned char>(text[j]))) ++j;
    }
    tokens.push_back({std::string(text.substr(i, j - i)), i, j});
    i = j;
  }
  return tokens;
}

std::vector<TokenizedSentence> split_sentences(const Document& doc, std::vector<Diagnostic>* diagnostics) {
  const std::string_view text = doc.text;
  // Boundaries are offsets where a new sentence may begin.
  std::vector<std::size_t> boundaries;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    std::size_t boundary = 0;
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      if (j >= text.size() || !is_space(static_cast<unsigned char>(text[j]))) continue;
      while (j < text.size() && is_space(static_cast<unsigned char>(text[j]))) ++j;
      if (j >= text.size()) continue;
      auto next = static_cast<unsigned char>(text[j]);
      if (!is_upper(next) && !is_digit(next)) continue;
      if (c == '.' && abbreviations().count(chunk_before(text, i)) > 0) continue;
      boundary = i + 1;
    } else {
      continue;
    }
    if (inside_mention(doc, boundary)) continue;
    boundaries.push_back(boundary);
  }

  std::vector<Token> tokens = tokenize(text);
  std::vector<TokenizedSentence> sentences;
  std::size_t b = 0;
  TokenizedSentence current;
  current.doc_id = doc.id;
  for (auto& tok : tokens) {
    bool crossed = false;
    while (b < boundaries.size() && boundaries[b] <= tok.start) {
      crossed = true;
      ++b;
    }
    if (crossed && !current.tokens.empty()) {
      current.sentence_index = sentences.size();
      sentences.push_back(std::move(current));
      current = TokenizedSentence{};
      current.doc_id = doc.id;
    }
    current.tokens.push_back(std::move(tok));
  }
  if (!current.tokens.empty()) {
    current.sentence_index = sentences.size();
    sentences.push_back(std::move(current));
  }
  align_mentions(doc, sentences, diagnostics);
  return sentences;
}

void align_mentions(const Document& doc, std::vector<TokenizedSentence>& sentences,
                    std::vector<Diagnostic>* diagnostics) {
  auto report = [&](Diagnostic::Severity sev, std::string msg) {
    if (diagnostics) diagnostics->push_back({sev, 0, doc.id, std::move(msg)});
  };
  for (auto& s : sentences) s.gold_spans.clear();

  struct Candidate {
    std::size_t sentence;
    TokenSpan span;
    std::string surface;
  };
  std::vector<Candidate> candidates;
  for (const auto& m : doc.mentions) {
    bool placed = false;
    for (std::size_t si = 0; si < sentences.size() && !placed; ++si) {
      const auto& toks = sentences[si].tokens;
      std::optional<std::size_t> first;
      std::size_t last = 0;
      for (std::size_t ti = 0; ti < toks.size(); ++ti) {
        if (toks[ti].start < m.end && m.start < toks[ti].end) {
          if (!first) first = ti;
          last = ti;
        }
      }
      if (!first) continue;
      placed = true;
      if (m.start < toks.front().start || m.end > toks.back().end) {
        report(Diagnostic::Severity::Rejection,
               "mention '" + m.surface + "' crosses a sentence boundary");
        break;
      }
      if (toks[*first].start != m.start || toks[last].end != m.end) {
        report(Diagnostic::Severity::Warning,
               "mention '" + m.surface + "' expanded to covering tokens");
      }
      candidates.push_back({si, TokenSpan{*first, last, m.mtype}, m.surface});
    }
    if (!placed) {
      report(Diagnostic::Severity::Rejection, "mention '" + m.surface + "' covers no tokens");
    }
  }

  // Expansion can make distinct mentions share a token.
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const auto& c : candidates) {
    std::size_t base = c.sentence << 32;
    ranges.emplace_back(base + c.span.first, base + c.span.last + 1);
  }
  std::vector<std::size_t> kept = resolve_overlaps(ranges);
  std::vector<bool> is_kept(candidates.size(), false);
  for (std::size_t k : kept) is_kept[k] = true;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!is_kept[i]) {
      report(Diagnostic::Severity::Warning,
             "mention '" + candidates[i].surface + "' shares tokens with a longer mention; dropped");
      continue;
    }
    sentences[candidates[i].sentence].gold_spans.push_back(candidates[i].span);
  }
  for (auto& s : sentences) std::sort(s.gold_spans.begin(), s.gold_spans.end());
}

std::string span_text(const Document& doc, const TokenizedSentence& s, const TokenSpan& span) {
  std::size_t begin = s.tokens.at(span.first).start;
  std::size_t end = s.tokens.at(span.last).end;
  return doc.text.substr(begin, end - begin);
}

}  // namespace mutner
