#include <sstream>

#include "doctest.h"
#include "mutner/expansion.hpp"
#include "support/oracles.hpp"

using namespace mutner;

namespace {

TokenizedSentence sentence(const std::string& doc, const std::string& text, std::vector<TokenSpan> spans = {}) {
  TokenizedSentence s;
  s.doc_id = doc;
  s.tokens = tokenize(text);
  s.gold_spans = std::move(spans);
  return s;
}

Corpus v600e_corpus(const std::string& name) {
  return {name,
          {sentence(name + "1", "BRAF V600E was detected", {{1, 3, MutationType::Substitution}}),
           sentence(name + "2", "The V600E cohort was large"),
           sentence(name + "3", "Patients were enrolled in 1999")}};
}

}  // namespace

TEST_CASE("dictionary") {
  CHECK(build_dictionary({{"empty", {sentence("d", "nothing to see")}}}).empty());

  auto one = build_dictionary({v600e_corpus("a")});
  CHECK(one.size() == 3);
  CHECK(one.contains("v"));
  CHECK(one.contains("600"));
  CHECK(one.contains("e"));
  CHECK(one.count("600") == 1);

  auto two = build_dictionary({v600e_corpus("a"), v600e_corpus("b")});
  CHECK(two.size() == 3);
  CHECK(two.count("v") == 2);

  std::ostringstream out;
  two.write(out);
  CHECK(out.str() == "600\t2\ne\t2\nv\t2\n");
  std::istringstream in(out.str());
  CHECK(MentionDictionary::read(in).entries() == two.entries());
  std::istringstream bad("v\tmany\n");
  CHECK_THROWS(MentionDictionary::read(bad));
}

TEST_CASE("expansion keeps positives and dictionary-hit negatives") {
  std::vector<Corpus> corpora{v600e_corpus("a")};
  auto dict = build_dictionary(corpora);
  auto out = expand(corpora, dict);
  REQUIRE(out.sentences.size() == 2);
  CHECK(out.sentences[0].sentence.doc_id == "a1");
  CHECK(out.sentences[1].sentence.doc_id == "a2");
  CHECK(out.sentences[1].source == "a");
  auto t = out.totals();
  CHECK(t.positives_kept == 1);
  CHECK(t.negatives_kept == 1);
  CHECK(t.negatives_dropped == 1);

  // Adding "1999" to the dictionary brings the last sentence back.
  MentionDictionary bigger = dict;
  bigger.add("1999");
  CHECK(expand(corpora, bigger).totals().negatives_kept == 2);
}

TEST_CASE("expansion properties") {
  auto synthetic = testing::make_synthetic_corpus(200, 12, 0.5);
  std::vector<Corpus> corpora{{"x", {}}, {"y", {}}};
  for (std::size_t i = 0; i < synthetic.sentences.size(); ++i) {
    corpora[i % 2].sentences.push_back(synthetic.sentences[i]);
  }
  auto dict = build_dictionary(corpora);
  auto out = expand(corpora, dict);

  std::size_t positives = 0;
  for (const auto& c : corpora) {
    for (const auto& s : c.sentences) positives += s.is_positive();
  }
  auto t = out.totals();
  CHECK(t.positives_kept == positives);
  CHECK(out.sentences.size() == t.positives_kept + t.negatives_kept);
  CHECK(t.positives_kept + t.negatives_kept + t.negatives_dropped == synthetic.sentences.size());

  // Idempotence.
  auto again = expand(out.as_corpora(), dict);
  REQUIRE(again.sentences.size() == out.sentences.size());
  for (std::size_t i = 0; i < out.sentences.size(); ++i) {
    CHECK(again.sentences[i].source == out.sentences[i].source);
    CHECK(again.sentences[i].sentence.doc_id == out.sentences[i].sentence.doc_id);
  }
  CHECK(again.totals().negatives_dropped == 0);

  // Monotonicity in the dictionary.
  MentionDictionary smaller;
  std::size_t k = 0;
  for (const auto& [tok, n] : dict.entries()) {
    if (k++ % 2 == 0) smaller.add(tok, n);
  }
  CHECK(expand(corpora, smaller).totals().negatives_kept <= t.negatives_kept);
  CHECK(expand(corpora, MentionDictionary{}).totals().negatives_kept == 0);

  auto js = stats_to_json(out, dict);
  CHECK(js.dump().find("negatives_dropped") != std::string::npos);
}
