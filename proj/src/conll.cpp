#include "mutner/conll.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace mutner {

void write_conll(std::ostream& out, const std::vector<ConllSentence>& sentences) {
  const std::string* current_doc = nullptr;
  for (const auto& row : sentences) {
    const auto& s = row.sentence;
    if (current_doc == nullptr || *current_doc != s.doc_id) {
      out << "# doc " << s.doc_id << '\n';
      current_doc = &s.doc_id;
    }
    out << "# sent " << s.sentence_index << '\n';
    TagSequence gold = spans_to_tags(s, TagScheme::BIO);
    if (row.predicted && row.predicted->size() != s.tokens.size()) {
      throw Error("prediction length does not match sentence length");
    }
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const Token& t = s.tokens[i];
      out << t.surface << '\t' << t.start << '\t' << t.end << '\t' << to_string(gold.labels[i]);
      if (row.predicted) out << '\t' << to_string(row.predicted->labels[i]);
      out << '\n';
    }
    out << '\n';
  }
}

void write_conll(std::ostream& out, const std::vector<TokenizedSentence>& sentences) {
  std::vector<ConllSentence> rows;
  rows.reserve(sentences.size());
  for (const auto& s : sentences) rows.push_back({s, std::nullopt});
  write_conll(out, rows);
}

namespace {

std::size_t parse_size(std::string_view field, std::size_t line_no) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line_no, "expected a non-negative integer, got '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<ConllSentence> read_conll(std::istream& in) {
  std::vector<ConllSentence> out;
  std::string doc_id;
  bool have_doc = false;
  std::optional<std::size_t> pending_index;
  std::size_t next_index = 0;

  ConllSentence current;
  std::vector<Tag> gold;
  std::vector<Tag> pred;
  std::optional<std::size_t> columns;
  std::size_t sentence_line = 0;

  auto flush = [&] {
    if (current.sentence.tokens.empty()) return;
    current.sentence.doc_id = doc_id;
    current.sentence.sentence_index = pending_index.value_or(next_index);
    next_index = current.sentence.sentence_index + 1;
    pending_index.reset();
    TagSequence gold_seq{TagScheme::BIO, gold};
    if (!is_valid(gold_seq)) {
      throw ParseError(sentence_line, "gold tags of the sentence starting here are not valid BIO");
    }
    current.sentence.gold_spans = tags_to_spans(gold_seq);
    if (*columns == 5) current.predicted = TagSequence{TagScheme::BIO, pred};
    out.push_back(std::move(current));
    current = ConllSentence{};
    gold.clear();
    pred.clear();
    columns.reset();
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.rfind("# ", 0) == 0) {
      flush();
      std::string_view rest = std::string_view(line).substr(2);
      if (rest.rfind("doc ", 0) == 0) {
        std::string id(rest.substr(4));
        if (!have_doc || id != doc_id) next_index = 0;
        doc_id = std::move(id);
        have_doc = true;
      } else if (rest.rfind("sent ", 0) == 0) {
        pending_index = parse_size(rest.substr(5), line_no);
      }
      continue;
    }
    if (!have_doc) throw ParseError(line_no, "token line before any '# doc' header");

    std::vector<std::string_view> fields;
    std::string_view view(line);
    while (true) {
      std::size_t tab = view.find('\t');
      fields.push_back(view.substr(0, tab));
      if (tab == std::string_view::npos) break;
      view.remove_prefix(tab + 1);
    }
    if (fields.size() != 4 && fields.size() != 5) {
      throw ParseError(line_no, "expected 4 or 5 tab-separated columns, got " + std::to_string(fields.size()));
    }
    if (columns && *columns != fields.size()) throw ParseError(line_no, "column count changes within a sentence");
    if (!columns) sentence_line = line_no;
    columns = fields.size();
    if (fields[0].empty()) throw ParseError(line_no, "empty token");
    Token tok{std::string(fields[0]), parse_size(fields[1], line_no), parse_size(fields[2], line_no)};
    if (tok.end <= tok.start) throw ParseError(line_no, "token end must exceed start");
    if (!current.sentence.tokens.empty() && tok.start < current.sentence.tokens.back().end) {
      throw ParseError(line_no, "token offsets must increase");
    }
    current.sentence.tokens.push_back(std::move(tok));
    try {
      gold.push_back(parse_tag(fields[3]));
      if (fields.size() == 5) pred.push_back(parse_tag(fields[4]));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
    if (!scheme_allows(TagScheme::BIO, gold.back().prefix) ||
        (fields.size() == 5 && !scheme_allows(TagScheme::BIO, pred.back().prefix))) {
      throw ParseError(line_no, "token/tag files carry BIO tags only");
    }
  }
  flush();
  return out;
}

std::vector<ConllSentence> read_conll_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_conll(in);
}

std::vector<TokenizedSentence> sentences_of(const std::vector<ConllSentence>& rows) {
  std::vector<TokenizedSentence> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.sentence);
  return out;
}

}  // namespace mutner
