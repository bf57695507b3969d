#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mutner/corpus_io.hpp"
#include "mutner/tagging.hpp"

namespace mutner {

// One sentence of a token/tag file. Gold and predicted tags are BIO.
struct ConllSentence {
  TokenizedSentence sentence;  // gold_spans decoded from the gold column
  std::optional<TagSequence> predicted;
};

// Layout:
//   # doc <id>            when the document changes
//   # sent <index>        before every sentence
//   token<TAB>char_start<TAB>char_end<TAB>gold_tag[<TAB>pred_tag]
// with a blank line after each sentence.
void write_conll(std::ostream& out, const std::vector<ConllSentence>& sentences);
void write_conll(std::ostream& out, const std::vector<TokenizedSentence>& sentences);

// `# sent` is optional on input; without it sentences are numbered in order
// within their document. Throws ParseError with the line number.
std::vector<ConllSentence> read_conll(std::istream& in);
std::vector<ConllSentence> read_conll_file(const std::string& path);

std::vector<TokenizedSentence> sentences_of(const std::vector<ConllSentence>& rows);

}  // namespace mutner
