#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mutner/encoding.hpp"
#include "mutner/optim.hpp"
#include "mutner/tagging.hpp"

namespace mutner {

// Linear-chain CRF over label indices. Scores decompose into emissions
// (representation row times the label's weight column) and label-bigram
// transitions, including the virtual START and STOP states.
//
// Emission weights are stored feature-major: emission[f * L + l].
// Transitions are (L+2)x(L+2), row = from, column = to; START = L, STOP = L+1.
// Forbidden transitions are excluded from every sum, never updated and score
// as -infinity.
class CrfModel {
 public:
  // Unconstrained model: every label may follow every label.
  CrfModel(std::size_t num_labels, std::size_t dim);
  // Model over a tag scheme's labels, with the scheme's structural mask.
  static CrfModel for_scheme(TagScheme scheme, std::size_t dim);

  std::size_t num_labels() const { return num_labels_; }
  std::size_t dim() const { return dim_; }
  std::size_t num_states() const { return num_labels_ + 2; }
  std::size_t start_state() const { return num_labels_; }
  std::size_t stop_state() const { return num_labels_ + 1; }
  const std::optional<TagScheme>& scheme() const { return scheme_; }

  double& emission(std::size_t feature, std::size_t label) { return emission_[feature * num_labels_ + label]; }
  double emission(std::size_t feature, std::size_t label) const {
    return emission_[feature * num_labels_ + label];
  }
  double& transition(std::size_t from, std::size_t to) { return transition_[from * num_states() + to]; }
  double transition(std::size_t from, std::size_t to) const { return transition_[from * num_states() + to]; }
  bool allowed(std::size_t from, std::size_t to) const { return allowed_[from * num_states() + to] != 0; }
  void set_allowed(std::size_t from, std::size_t to, bool ok);

  std::vector<double>& emission_weights() { return emission_; }
  const std::vector<double>& emission_weights() const { return emission_; }
  std::vector<double>& transition_weights() { return transition_; }
  const std::vector<double>& transition_weights() const { return transition_; }
  const std::vector<unsigned char>& mask() const { return allowed_; }

  EncoderConfig encoder;

  friend bool operator==(const CrfModel&, const CrfModel&) = default;

 private:
  std::optional<TagScheme> scheme_;
  std::size_t num_labels_;
  std::size_t dim_;
  std::vector<double> emission_;
  std::vector<double> transition_;
  std::vector<unsigned char> allowed_;
};

// n x L emission scores, row-major.
std::vector<double> emission_scores(const CrfModel& model, const RepresentationMatrix& h);

// -infinity when the sequence uses a forbidden transition.
double sequence_score(const CrfModel& model, const RepresentationMatrix& h, std::span<const std::size_t> labels);
double sequence_score(const CrfModel& model, const RepresentationMatrix& h, const TagSequence& tags);

// Log-sum-exp over all legal label sequences (forward algorithm).
double log_partition(const CrfModel& model, const RepresentationMatrix& h);

// Per-token label marginals P(y_j = l | H), n x L row-major.
std::vector<double> label_marginals(const CrfModel& model, const RepresentationMatrix& h);

struct CrfExample {
  const RepresentationMatrix* h = nullptr;
  std::vector<std::size_t> labels;
  std::string id;  // used in diagnostics
};

struct CrfGradient {
  std::vector<double> emission;    // same layout as CrfModel emission weights
  std::vector<double> transition;  // same layout as CrfModel transitions; zero where forbidden
};

struct LossAndGradient {
  double loss = 0;
  CrfGradient gradient;
};

// Mean negative log-likelihood over the batch plus weight_decay/2 * ||params||^2
// over emission weights and allowed transitions, with its exact gradient.
LossAndGradient nll_and_gradient(const CrfModel& model, std::span<const CrfExample> batch, double weight_decay);

// Exact argmax over legal sequences. Among equal-scoring sequences the one
// that is lexicographically smallest by label index wins.
std::vector<std::size_t> viterbi_labels(const CrfModel& model, const RepresentationMatrix& h);
// Requires a scheme model.
TagSequence viterbi_decode(const CrfModel& model, const RepresentationMatrix& h);

struct TrainReport {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double final_train_loss = 0;
  std::optional<double> best_dev_loss;
};

// Adam over shuffled mini-batches, W and T starting at zero. With dev data the
// model from the epoch with the lowest dev loss is returned.
CrfModel train_crf(const std::vector<TokenizedSentence>& train, const Encoder& encoder, const TrainConfig& config,
                   TagScheme scheme, const std::vector<TokenizedSentence>* dev = nullptr,
                   TrainReport* report = nullptr);

nlohmann::json to_json(const CrfModel& model);
CrfModel crf_model_from_json(const nlohmann::json& j);

}  // namespace mutner
