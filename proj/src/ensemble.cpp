#include "mutner/ensemble.hpp"

namespace mutner {

VoteInput make_vote_input(const TagSequence& crf_bio, const TagSequence& crf_bmeo,
                          const std::vector<TokenSpan>& span_spans) {
  if (crf_bio.scheme != TagScheme::BIO) throw Error("crf_bio vote must be a BIO sequence");
  return {crf_bio, bmeo_to_bio(crf_bmeo), spans_to_bio(span_spans, crf_bio.size())};
}

TagSequence vote_tokens(const VoteInput& v) {
  if (v.crf_bio.scheme != TagScheme::BIO || v.crf_bmeo.scheme != TagScheme::BIO ||
      v.span.scheme != TagScheme::BIO) {
    throw Error("all votes must be BIO sequences");
  }
  const std::size_t n = v.crf_bio.size();
  if (v.crf_bmeo.size() != n || v.span.size() != n) throw Error("vote sequences differ in length");
  TagSequence out{TagScheme::BIO, std::vector<Tag>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const Tag& a = v.crf_bio.labels[i];
    const Tag& b = v.crf_bmeo.labels[i];
    const Tag& c = v.span.labels[i];
    out.labels[i] = (b == c && !(a == b)) ? b : a;
  }
  return out;
}

TagSequence majority_vote(const VoteInput& v) { return repair(vote_tokens(v)); }

}  // namespace mutner
