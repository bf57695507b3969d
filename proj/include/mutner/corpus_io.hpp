#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mutner/mutation_type.hpp"

namespace mutner {

// Character offsets are byte offsets into Document::text.
struct Mention {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::string surface;
  MutationType mtype = MutationType::Substitution;

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct Document {
  std::string id;
  std::string text;               // title + "\n" + abstract
  std::vector<Mention> mentions;  // sorted by start, non-overlapping

  friend bool operator==(const Document&, const Document&) = default;
};

struct Token {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

// Inclusive token range with a type.
struct TokenSpan {
  std::size_t first = 0;
  std::size_t last = 0;
  MutationType mtype = MutationType::Substitution;

  std::size_t length() const { return last - first + 1; }
  friend auto operator<=>(const TokenSpan&, const TokenSpan&) = default;
};

struct TokenizedSentence {
  std::string doc_id;
  std::size_t sentence_index = 0;
  std::vector<Token> tokens;
  std::vector<TokenSpan> gold_spans;

  bool is_positive() const { return !gold_spans.empty(); }
  friend bool operator==(const TokenizedSentence&, const TokenizedSentence&) = default;
};

// A recoverable problem found while loading; the offending record is skipped
// (or, for warnings, adjusted) and loading continues.
struct Diagnostic {
  enum class Severity { Warning, Rejection };
  Severity severity = Severity::Rejection;
  std::size_t line = 0;  // 0 when not tied to an input line
  std::string doc_id;
  std::string message;
};

std::string to_string(const Diagnostic& d);

// Unrecoverable syntax error in an input file.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Maps corpus-specific type names onto MutationType.
class AliasTable {
 public:
  // Canonical and short names of every type, plus a few common spellings.
  static AliasTable defaults();
  // One `alias<TAB>canonical` pair per line; `#` starts a comment line.
  static AliasTable load(std::istream& in);
  static AliasTable load_file(const std::string& path);

  void add(std::string alias, MutationType t);
  // Exact match first, then case-insensitive.
  std::optional<MutationType> lookup(std::string_view name) const;

 private:
  std::map<std::string, MutationType, std::less<>> exact_;
  std::map<std::string, MutationType, std::less<>> folded_;
};

struct ParseResult {
  std::vector<Document> documents;
  std::vector<Diagnostic> diagnostics;
};

// Parses PubTator-style blocks: `ID|t|title`, `ID|a|abstract`, annotation
// lines `ID<TAB>start<TAB>end<TAB>surface<TAB>type[<TAB>normID]`, blank line
// between documents. Throws ParseError on malformed lines.
ParseResult parse_pubtator(std::istream& in, const AliasTable& aliases = AliasTable::defaults());
ParseResult parse_pubtator_file(const std::string& path,
                                const AliasTable& aliases = AliasTable::defaults());

// Inverse of parse_pubtator for documents whose text contains a newline
// separating title from abstract. Types are written by canonical name.
void write_pubtator(std::ostream& out, const std::vector<Document>& docs);

// Maximal runs of letters, maximal runs of digits, and every other
// non-whitespace byte on its own. Bytes >= 0x80 count as letters so UTF-8
// sequences stay inside words.
std::vector<Token> tokenize(std::string_view text);

// Splits on `.`, `!` or `?` followed by whitespace and an uppercase letter or
// digit, and on newlines, unless the boundary would fall strictly inside a
// mention or follows a known abbreviation. Gold spans are filled by
// align_mentions.
std::vector<TokenizedSentence> split_sentences(const Document& doc,
                                               std::vector<Diagnostic>* diagnostics = nullptr);

// Maps each mention to the minimal covering token range of the sentence that
// contains it. Boundaries inside a token expand to the covering token with a
// warning.
void align_mentions(const Document& doc, std::vector<TokenizedSentence>& sentences,
                    std::vector<Diagnostic>* diagnostics = nullptr);

// Text of tokens [first, last] including the original gaps between them.
std::string span_text(const Document& doc, const TokenizedSentence& s, const TokenSpan& span);

}  // namespace mutner
