#include "mutner/expansion.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>

namespace mutner {

std::string normalize_token(std::string_view surface) {
  std::string out(surface);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::size_t MentionDictionary::count(std::string_view normalized) const {
  auto it = counts_.find(normalized);
  return it == counts_.end() ? 0 : it->second;
}

void MentionDictionary::add(std::string normalized, std::size_t count) { counts_[std::move(normalized)] += count; }

void MentionDictionary::write(std::ostream& out) const {
  for (const auto& [token, count] : counts_) out << token << '\t' << count << '\n';
}

MentionDictionary MentionDictionary::read(std::istream& in) {
  MentionDictionary dict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError(line_no, "expected token<TAB>count");
    std::size_t count = 0;
    const char* b = line.data() + tab + 1;
    const char* e = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(b, e, count);
    if (ec != std::errc() || ptr != e || b == e) throw ParseError(line_no, "non-numeric dictionary count");
    std::string token = line.substr(0, tab);
    if (dict.contains(token)) throw ParseError(line_no, "duplicate dictionary token '" + token + "'");
    dict.add(std::move(token), count);
  }
  return dict;
}

MentionDictionary build_dictionary(const std::vector<Corpus>& corpora) {
  MentionDictionary dict;
  for (const auto& corpus : corpora) {
    std::set<std::string> seen;
    for (const auto& s : corpus.sentences) {
      for (const auto& span : s.gold_spans) {
        for (std::size_t t = span.first; t <= span.last; ++t) seen.insert(normalize_token(s.tokens.at(t).surface));
      }
    }
    for (const auto& token : seen) dict.add(token);
  }
  return dict;
}

ExpansionStats ExpandedDataset::totals() const {
  ExpansionStats t;
  for (const auto& [name, s] : stats) {
    t.positives_kept += s.positives_kept;
    t.negatives_kept += s.negatives_kept;
    t.negatives_dropped += s.negatives_dropped;
  }
  return t;
}

std::vector<Corpus> ExpandedDataset::as_corpora() const {
  std::vector<Corpus> out;
  for (const auto& [name, s] : stats) out.push_back({name, {}});
  for (const auto& ss : sentences) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Corpus& c) { return c.name == ss.source; });
    if (it == out.end()) {
      out.push_back({ss.source, {}});
      it = std::prev(out.end());
    }
    it->sentences.push_back(ss.sentence);
  }
  return out;
}

ExpandedDataset expand(const std::vector<Corpus>& corpora, const MentionDictionary& dict) {
  ExpandedDataset out;
  for (const auto& corpus : corpora) {
    ExpansionStats st;
    for (const auto& s : corpus.sentences) {
      if (s.is_positive()) {
        ++st.positives_kept;
        out.sentences.push_back({corpus.name, s});
        continue;
      }
      bool hit = std::any_of(s.tokens.begin(), s.tokens.end(),
                             [&](const Token& t) { return dict.contains(normalize_token(t.surface)); });
      if (hit) {
        ++st.negatives_kept;
        out.sentences.push_back({corpus.name, s});
      } else {
        ++st.negatives_dropped;
      }
    }
    out.stats.emplace_back(corpus.name, st);
  }
  return out;
}

nlohmann::json stats_to_json(const ExpandedDataset& data, const MentionDictionary& dict) {
  auto row = [](const ExpansionStats& s) {
    return nlohmann::json{{"positives_kept", s.positives_kept},
                          {"negatives_kept", s.negatives_kept},
                          {"negatives_dropped", s.negatives_dropped}};
  };
  nlohmann::json corpora = nlohmann::json::array();
  for (const auto& [name, s] : data.stats) {
    auto r = row(s);
    r["corpus"] = name;
    corpora.push_back(r);
  }
  nlohmann::json j;
  j["corpora"] = corpora;
  j["total"] = row(data.totals());
  j["expanded_sentences"] = data.sentences.size();
  j["dictionary_size"] = dict.size();
  return j;
}

}  // namespace mutner
