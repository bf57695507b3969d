#include "mutner/span.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mutner {

namespace {

constexpr std::size_t C = kNumSpanClasses;

void project(const std::vector<double>& w, const RepresentationMatrix& h, std::vector<double>& out) {
  out.assign(h.rows() * C, 0.0);
  for (std::size_t j = 0; j < h.rows(); ++j) {
    auto row = h.row(j);
    for (std::size_t k = 0; k < row.indices.size(); ++k) {
      const double x = row.values[k];
      const double* wr = &w[static_cast<std::size_t>(row.indices[k]) * C];
      for (std::size_t c = 0; c < C; ++c) out[j * C + c] += x * wr[c];
    }
  }
}

std::size_t argmax_lowest(const double* logits) {
  std::size_t arg = 0;
  for (std::size_t c = 1; c < C; ++c) {
    if (logits[c] > logits[arg]) arg = c;
  }
  return arg;
}

// Softmax in place; returns log normalizer.
double softmax(double* v) {
  double mx = *std::max_element(v, v + C);
  double sum = 0;
  for (std::size_t c = 0; c < C; ++c) {
    v[c] = std::exp(v[c] - mx);
    sum += v[c];
  }
  for (std::size_t c = 0; c < C; ++c) v[c] /= sum;
  return mx + std::log(sum);
}

}  // namespace

SpanLogits span_logits(const SpanModel& model, const RepresentationMatrix& h) {
  if (h.dim() != model.dim) {
    throw Error("representation dimension " + std::to_string(h.dim()) + " does not match span model dimension " +
                std::to_string(model.dim));
  }
  SpanLogits out;
  project(model.start_weights, h, out.start);
  project(model.end_weights, h, out.end);
  return out;
}

TokenLabels predict_token_labels(const SpanModel& model, const RepresentationMatrix& h) {
  SpanLogits logits = span_logits(model, h);
  TokenLabels out;
  for (std::size_t j = 0; j < h.rows(); ++j) {
    out.start.push_back(span_class_at(argmax_lowest(&logits.start[j * C])));
    out.end.push_back(span_class_at(argmax_lowest(&logits.end[j * C])));
  }
  return out;
}

std::vector<TokenSpan> decode_spans(const std::vector<SpanLabel>& start, const std::vector<SpanLabel>& end,
                                    const SpanDecodeConfig& config) {
  if (start.size() != end.size()) throw Error("start and end label lists differ in length");
  if (config.max_span_length == 0) throw Error("max span length must be at least 1");
  std::vector<TokenSpan> spans;
  const std::size_t n = start.size();
  std::size_t t = 0;
  while (t < n) {
    if (!start[t]) {
      ++t;
      continue;
    }
    const std::size_t limit = std::min(n, t + config.max_span_length);
    std::optional<std::size_t> match;
    for (std::size_t u = t; u < limit; ++u) {
      if (end[u] == start[t]) {
        match = u;
        break;
      }
    }
    if (match) {
      spans.push_back({t, *match, *start[t]});
      t = *match + 1;
    } else {
      ++t;
    }
  }
  return spans;
}

TokenLabels gold_token_labels(const std::vector<TokenSpan>& spans, std::size_t num_tokens) {
  TokenLabels out{std::vector<SpanLabel>(num_tokens), std::vector<SpanLabel>(num_tokens)};
  for (const auto& s : spans) {
    if (s.last >= num_tokens || s.first > s.last) throw Error("gold span exceeds sentence length");
    out.start[s.first] = s.mtype;
    out.end[s.last] = s.mtype;
  }
  return out;
}

TokenLabels gold_token_labels(const TokenizedSentence& sentence) {
  return gold_token_labels(sentence.gold_spans, sentence.tokens.size());
}

SpanLossAndGradient span_loss_and_gradient(const SpanModel& model, std::span<const SpanExample> batch,
                                           double weight_decay) {
  if (batch.empty()) throw Error("span_loss_and_gradient needs a non-empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  SpanLossAndGradient out;
  out.start_grad.assign(model.start_weights.size(), 0.0);
  out.end_grad.assign(model.end_weights.size(), 0.0);

  for (const auto& ex : batch) {
    if (ex.h == nullptr) throw Error("span example has no representation");
    const RepresentationMatrix& h = *ex.h;
    if (ex.gold.start.size() != h.rows() || ex.gold.end.size() != h.rows()) {
      throw Error("gold label count does not match token count");
    }
    SpanLogits logits = span_logits(model, h);
    auto layer = [&](std::vector<double>& probs, const std::vector<SpanLabel>& gold, std::vector<double>& grad) {
      for (std::size_t j = 0; j < h.rows(); ++j) {
        double* p = &probs[j * C];
        const std::size_t g = span_class_index(gold[j]);
        const double gold_logit = p[g];
        const double log_z = softmax(p);
        out.loss += (log_z - gold_logit) * inv_b;
        p[g] -= 1.0;
        auto row = h.row(j);
        for (std::size_t k = 0; k < row.indices.size(); ++k) {
          const double x = row.values[k] * inv_b;
          double* gr = &grad[static_cast<std::size_t>(row.indices[k]) * C];
          for (std::size_t c = 0; c < C; ++c) gr[c] += x * p[c];
        }
      }
    };
    layer(logits.start, ex.gold.start, out.start_grad);
    layer(logits.end, ex.gold.end, out.end_grad);
  }

  if (weight_decay > 0) {
    double sq = 0;
    for (std::size_t i = 0; i < model.start_weights.size(); ++i) {
      sq += model.start_weights[i] * model.start_weights[i] + model.end_weights[i] * model.end_weights[i];
      out.start_grad[i] += weight_decay * model.start_weights[i];
      out.end_grad[i] += weight_decay * model.end_weights[i];
    }
    out.loss += 0.5 * weight_decay * sq;
  }
  return out;
}

SpanModel train_span(const std::vector<TokenizedSentence>& train_in, const Encoder& encoder,
                     const TrainConfig& config, const std::vector<TokenizedSentence>* dev_in, TrainReport* report) {
  config.validate();
  std::vector<TokenizedSentence> train;
  std::copy_if(train_in.begin(), train_in.end(), std::back_inserter(train),
               [](const auto& s) { return !s.tokens.empty(); });
  if (train.empty()) throw Error("cannot train the span pattern on an empty dataset");

  std::vector<RepresentationMatrix> full;
  for (const auto& s : train) full.push_back(encoder.encode(s));
  FeatureRemap remap(full);
  std::vector<RepresentationMatrix> compact;
  for (const auto& h : full) compact.push_back(remap.apply(h));
  full.clear();
  std::vector<SpanExample> examples;
  for (std::size_t i = 0; i < train.size(); ++i) examples.push_back({&compact[i], gold_token_labels(train[i])});

  std::vector<RepresentationMatrix> dev_compact;
  std::vector<SpanExample> dev_examples;
  if (dev_in != nullptr) {
    std::vector<const TokenizedSentence*> dev;
    for (const auto& s : *dev_in) {
      if (!s.tokens.empty()) dev.push_back(&s);
    }
    for (const auto* s : dev) dev_compact.push_back(remap.apply(encoder.encode(*s)));
    for (std::size_t i = 0; i < dev.size(); ++i) dev_examples.push_back({&dev_compact[i], gold_token_labels(*dev[i])});
  }

  SpanModel model(remap.compact_dim());
  Adam adam_s(model.start_weights.size(), config.learning_rate);
  Adam adam_e(model.end_weights.size(), config.learning_rate);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  SpanModel best = model;
  double best_dev = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  TrainReport rep;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    deterministic_shuffle(order, rng);
    double epoch_loss = 0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<SpanExample> batch;
      std::vector<RepresentationMatrix> dropped;
      dropped.reserve(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        batch.push_back(examples[order[k]]);
        if (config.dropout > 0) {
          dropped.push_back(drop_features(*batch.back().h, config.dropout, rng));
          batch.back().h = &dropped.back();
        }
      }
      SpanLossAndGradient lg = span_loss_and_gradient(model, batch, config.weight_decay);
      adam_s.step(model.start_weights, lg.start_grad);
      adam_e.step(model.end_weights, lg.end_grad);
      epoch_loss += lg.loss;
      ++batches;
    }
    rep.epochs_run = epoch;
    rep.final_train_loss = epoch_loss / static_cast<double>(batches);
    if (!dev_examples.empty()) {
      double d = span_loss_and_gradient(model, dev_examples, 0.0).loss;
      if (d < best_dev) {
        best_dev = d;
        best = model;
        rep.best_epoch = epoch;
        rep.best_dev_loss = d;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    }
  }
  if (dev_examples.empty()) {
    best = std::move(model);
    rep.best_epoch = rep.epochs_run;
  }

  SpanModel out(remap.full_dim());
  const auto& active = remap.active();
  for (std::size_t c = 0; c < active.size(); ++c) {
    for (std::size_t k = 0; k < C; ++k) {
      out.start_weights[active[c] * C + k] = best.start_weights[c * C + k];
      out.end_weights[active[c] * C + k] = best.end_weights[c * C + k];
    }
  }
  out.encoder = encoder.config();
  if (report != nullptr) *report = rep;
  return out;
}

TagSequence spans_to_bio(const std::vector<TokenSpan>& spans, std::size_t n) {
  for (const auto& s : spans) {
    if (s.last >= n) throw Error("span exceeds sequence length");
  }
  return spans_to_tags(spans, n, TagScheme::BIO);
}

nlohmann::json to_json(const SpanModel& model, const SpanDecodeConfig& decode) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "span";
  std::vector<std::string> classes{"none"};
  for (MutationType t : kAllMutationTypes) classes.emplace_back(short_name(t));
  j["labels"] = classes;
  j["d"] = model.dim;
  j["W_start"] = model.start_weights;
  j["W_end"] = model.end_weights;
  j["max_span_length"] = decode.max_span_length;
  j["encoder"] = to_json(model.encoder);
  j["encoder_digest"] = digest(model.encoder);
  return j;
}

SpanModel span_model_from_json(const nlohmann::json& j, SpanDecodeConfig* decode) {
  if (j.value("format_version", 0) != 1) throw Error("unsupported span model format version");
  if (j.value("kind", std::string()) != "span") throw Error("model file is not a span model");
  SpanModel m(j.at("d").get<std::size_t>());
  auto ws = j.at("W_start").get<std::vector<double>>();
  auto we = j.at("W_end").get<std::vector<double>>();
  if (ws.size() != m.start_weights.size() || we.size() != m.end_weights.size()) {
    throw Error("span model weight array sizes do not match its dimension");
  }
  m.start_weights = std::move(ws);
  m.end_weights = std::move(we);
  if (j.contains("encoder")) m.encoder = encoder_config_from_json(j.at("encoder"));
  if (decode != nullptr) decode->max_span_length = j.value("max_span_length", std::size_t{20});
  return m;
}

}  // namespace mutner
