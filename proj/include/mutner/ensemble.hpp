#pragma once

#include "mutner/span.hpp"
#include "mutner/tagging.hpp"

namespace mutner {

enum class VoteSource { CrfBio, CrfBmeo, Span };

// Three BIO predictions over the same sentence.
struct VoteInput {
  TagSequence crf_bio;
  TagSequence crf_bmeo;  // already converted to BIO
  TagSequence span;
};

// Converts raw pattern outputs into a VoteInput.
VoteInput make_vote_input(const TagSequence& crf_bio, const TagSequence& crf_bmeo,
                          const std::vector<TokenSpan>& span_spans);

// Per-token vote before repair: a label with at least two votes wins,
// otherwise the crf_bio label.
TagSequence vote_tokens(const VoteInput& v);

// vote_tokens followed by repair; always valid BIO.
TagSequence majority_vote(const VoteInput& v);

}  // namespace mutner
