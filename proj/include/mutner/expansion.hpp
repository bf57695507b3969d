#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mutner/corpus_io.hpp"

namespace mutner {

struct Corpus {
  std::string name;
  std::vector<TokenizedSentence> sentences;
};

// Case-folded tokens of every gold mention across corpora. The count of a
// token is the number of corpora whose mentions contain it.
class MentionDictionary {
 public:
  bool empty() const { return counts_.empty(); }
  std::size_t size() const { return counts_.size(); }
  // Exact lookup on an already normalized token.
  bool contains(std::string_view normalized) const { return counts_.find(normalized) != counts_.end(); }
  std::size_t count(std::string_view normalized) const;
  void add(std::string normalized, std::size_t count = 1);
  const std::map<std::string, std::size_t, std::less<>>& entries() const { return counts_; }

  // One `token<TAB>count` line per entry, sorted by token.
  void write(std::ostream& out) const;
  static MentionDictionary read(std::istream& in);

 private:
  std::map<std::string, std::size_t, std::less<>> counts_;
};

std::string normalize_token(std::string_view surface);

MentionDictionary build_dictionary(const std::vector<Corpus>& corpora);

struct ExpansionStats {
  std::size_t positives_kept = 0;
  std::size_t negatives_kept = 0;
  std::size_t negatives_dropped = 0;
};

struct SourcedSentence {
  std::string source;
  TokenizedSentence sentence;
};

struct ExpandedDataset {
  std::vector<SourcedSentence> sentences;
  std::vector<std::pair<std::string, ExpansionStats>> stats;  // corpus order

  ExpansionStats totals() const;
  // Regroups by source, preserving corpus and sentence order.
  std::vector<Corpus> as_corpora() const;
};

// Keeps every positive sentence and the negatives with at least one
// dictionary token. Output order: corpus order, then sentence order.
ExpandedDataset expand(const std::vector<Corpus>& corpora, const MentionDictionary& dict);

nlohmann::json stats_to_json(const ExpandedDataset& data, const MentionDictionary& dict);

}  // namespace mutner
