#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "mutner/crf.hpp"
#include "mutner/encoding.hpp"
#include "mutner/optim.hpp"
#include "mutner/tagging.hpp"

namespace mutner {

// Per-token start/end class: a mutation type, or none (nullopt).
using SpanLabel = std::optional<MutationType>;

// Column 0 is none, column k+1 is the k-th MutationType.
inline constexpr std::size_t kNumSpanClasses = kNumMutationTypes + 1;

inline std::size_t span_class_index(const SpanLabel& label) { return label ? index_of(*label) + 1 : 0; }
inline SpanLabel span_class_at(std::size_t index) {
  return index == 0 ? SpanLabel{} : SpanLabel{kAllMutationTypes.at(index - 1)};
}

// Two independent linear softmax layers over token representations: one
// predicts where a mention starts (and its type), the other where it ends.
// Weights are feature-major: start_weights[f * 8 + c].
struct SpanModel {
  explicit SpanModel(std::size_t dim = 0)
      : dim(dim), start_weights(dim * kNumSpanClasses, 0.0), end_weights(dim * kNumSpanClasses, 0.0) {}

  std::size_t dim;
  std::vector<double> start_weights;
  std::vector<double> end_weights;
  EncoderConfig encoder;

  friend bool operator==(const SpanModel&, const SpanModel&) = default;
};

struct SpanLogits {
  std::vector<double> start;  // n x 8
  std::vector<double> end;    // n x 8
};

SpanLogits span_logits(const SpanModel& model, const RepresentationMatrix& h);

struct TokenLabels {
  std::vector<SpanLabel> start;
  std::vector<SpanLabel> end;
};

// Softmax argmax per token and layer; ties resolve to the lower class index
// (none first, then MutationType order).
TokenLabels predict_token_labels(const SpanModel& model, const RepresentationMatrix& h);

struct SpanDecodeConfig {
  std::size_t max_span_length = 20;
};

// Left-to-right scan: at a start label Y, take the nearest t' in
// [t, t + max_len - 1] whose end label is Y, emit (t, t', Y) and resume after
// t'; with no such t', resume at t + 1.
std::vector<TokenSpan> decode_spans(const std::vector<SpanLabel>& start, const std::vector<SpanLabel>& end,
                                    const SpanDecodeConfig& config = {});

// Token t gets start label Y iff a gold span of type Y begins at t; end labels
// likewise at span ends.
TokenLabels gold_token_labels(const TokenizedSentence& sentence);
TokenLabels gold_token_labels(const std::vector<TokenSpan>& spans, std::size_t num_tokens);

struct SpanExample {
  const RepresentationMatrix* h = nullptr;
  TokenLabels gold;
};

struct SpanLossAndGradient {
  double loss = 0;
  std::vector<double> start_grad;
  std::vector<double> end_grad;
};

// Mean over the batch of the summed per-token cross-entropy of both layers,
// plus weight_decay/2 * ||weights||^2.
SpanLossAndGradient span_loss_and_gradient(const SpanModel& model, std::span<const SpanExample> batch,
                                           double weight_decay);

SpanModel train_span(const std::vector<TokenizedSentence>& train, const Encoder& encoder, const TrainConfig& config,
                     const std::vector<TokenizedSentence>* dev = nullptr, TrainReport* report = nullptr);

// Plain BIO encoding of non-overlapping spans over n tokens.
TagSequence spans_to_bio(const std::vector<TokenSpan>& spans, std::size_t n);

nlohmann::json to_json(const SpanModel& model, const SpanDecodeConfig& decode = {});
SpanModel span_model_from_json(const nlohmann::json& j, SpanDecodeConfig* decode = nullptr);

}  // namespace mutner
