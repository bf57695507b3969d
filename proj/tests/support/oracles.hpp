#pragma once

// Test-only reference implementations. None of these call the code paths
// they are used to check.

#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mutner/corpus_io.hpp"
#include "mutner/crf.hpp"
#include "mutner/encoding.hpp"
#include "mutner/tagging.hpp"

namespace mutner::testing {

// Dense H (n x d) and its matrix form.
struct DenseInstance {
  std::vector<std::vector<double>> h;
  RepresentationMatrix matrix() const;
};

DenseInstance random_dense(std::mt19937_64& rng, std::size_t n, std::size_t d, double scale = 1.0);
double normal(std::mt19937_64& rng);
std::size_t pick(std::mt19937_64& rng, std::size_t n);

// Fills every CRF weight (including forbidden transitions, which must stay
// ignored) with N(0, scale^2).
void randomize(CrfModel& model, std::mt19937_64& rng, double scale = 1.0);

// Score by direct summation from the dense rows; -inf for forbidden bigrams.
double brute_score(const CrfModel& model, const DenseInstance& inst, const std::vector<std::size_t>& labels);

struct Enumeration {
  double log_z = 0;
  std::vector<std::size_t> argmax;  // lexicographically first maximiser
  bool any_legal = false;
  std::vector<std::vector<std::size_t>> sequences;
  std::vector<double> scores;
};

// Visits all L^n sequences in lexicographic order.
Enumeration enumerate(const CrfModel& model, const DenseInstance& inst);

// Central differences of f at x, coordinate by coordinate.
std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h);

// max over coordinates of |a - n| / max(|a|, |n|, floor).
double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                          double floor = 1e-7);

// Greedy one-to-one matching by linear search over pairs.
struct BruteCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
};
BruteCounts brute_match(const std::vector<std::vector<TokenSpan>>& gold,
                        const std::vector<std::vector<TokenSpan>>& pred,
                        std::optional<MutationType> only = std::nullopt);

// Random sorted non-overlapping spans over n tokens, each at most max_len long.
std::vector<TokenSpan> random_spans(std::mt19937_64& rng, std::size_t n, std::size_t max_len = 6);

// Arbitrary (possibly invalid) tag sequence using the scheme's prefixes.
TagSequence random_tags(std::mt19937_64& rng, std::size_t n, TagScheme scheme);

// Synthetic mutation corpus: carrier sentences with mentions drawn from
// type-specific templates, one document per sentence, run through the real
// sentence splitter so gold spans come from alignment.
struct SyntheticCorpus {
  std::vector<Document> documents;
  std::vector<TokenizedSentence> sentences;
};
SyntheticCorpus make_synthetic_corpus(std::size_t num_sentences, std::uint64_t seed, double negative_rate = 0.25);

}  // namespace mutner::testing
