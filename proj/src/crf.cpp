#include "mutner/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mutner {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> xs) {
  double mx = kNegInf;
  for (double x : xs) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double sum = 0;
  for (double x : xs) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

bool is_continuation(TagPrefix p) { return p == TagPrefix::I || p == TagPrefix::M || p == TagPrefix::E; }

bool scheme_transition_ok(const Tag& from, const Tag& to) {
  if (from.prefix == TagPrefix::M) {
    return (to.prefix == TagPrefix::M || to.prefix == TagPrefix::E) && to.mtype == from.mtype;
  }
  if (is_continuation(to.prefix)) {
    return from.mtype == to.mtype &&
           (from.prefix == TagPrefix::B || from.prefix == TagPrefix::I || from.prefix == TagPrefix::M);
  }
  return true;
}

struct Lattice {
  std::size_t n = 0;
  std::size_t labels = 0;
  std::vector<double> emit;   // n x L
  std::vector<double> alpha;  // n x L
  std::vector<double> beta;   // n x L
  double log_z = kNegInf;
};

void forward(const CrfModel& m, Lattice& lat) {
  const std::size_t L = lat.labels;
  lat.alpha.assign(lat.n * L, kNegInf);
  std::vector<double> terms(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (m.allowed(m.start_state(), l)) lat.alpha[l] = m.transition(m.start_state(), l) + lat.emit[l];
  }
  for (std::size_t j = 1; j < lat.n; ++j) {
    for (std::size_t b = 0; b < L; ++b) {
      for (std::size_t a = 0; a < L; ++a) {
        terms[a] = m.allowed(a, b) ? lat.alpha[(j - 1) * L + a] + m.transition(a, b) : kNegInf;
      }
      double s = log_sum_exp(terms);
      lat.alpha[j * L + b] = s == kNegInf ? kNegInf : s + lat.emit[j * L + b];
    }
  }
  for (std::size_t a = 0; a < L; ++a) {
    terms[a] = m.allowed(a, m.stop_state()) ? lat.alpha[(lat.n - 1) * L + a] + m.transition(a, m.stop_state())
                                            : kNegInf;
  }
  lat.log_z = log_sum_exp(terms);
}

void backward(const CrfModel& m, Lattice& lat) {
  const std::size_t L = lat.labels;
  lat.beta.assign(lat.n * L, kNegInf);
  std::vector<double> terms(L);
  for (std::size_t a = 0; a < L; ++a) {
    if (m.allowed(a, m.stop_state())) lat.beta[(lat.n - 1) * L + a] = m.transition(a, m.stop_state());
  }
  for (std::size_t j = lat.n - 1; j-- > 0;) {
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) {
        terms[b] = m.allowed(a, b)
                       ? m.transition(a, b) + lat.emit[(j + 1) * L + b] + lat.beta[(j + 1) * L + b]
                       : kNegInf;
      }
      lat.beta[j * L + a] = log_sum_exp(terms);
    }
  }
}

Lattice build_lattice(const CrfModel& m, const RepresentationMatrix& h, bool with_backward) {
  if (h.dim() != m.dim()) {
    throw Error("representation dimension " + std::to_string(h.dim()) + " does not match model dimension " +
                std::to_string(m.dim()));
  }
  if (h.rows() == 0) throw Error("CRF inference needs at least one token");
  Lattice lat;
  lat.n = h.rows();
  lat.labels = m.num_labels();
  lat.emit = emission_scores(m, h);
  forward(m, lat);
  if (with_backward) backward(m, lat);
  return lat;
}

std::string example_name(const CrfExample& ex, std::size_t index) {
  return ex.id.empty() ? "#" + std::to_string(index) : ex.id;
}

}  // namespace

CrfModel::CrfModel(std::size_t num_labels, std::size_t dim)
    : num_labels_(num_labels),
      dim_(dim),
      emission_(dim * num_labels, 0.0),
      transition_((num_labels + 2) * (num_labels + 2), 0.0),
      allowed_((num_labels + 2) * (num_labels + 2), 0) {
  if (num_labels == 0) throw Error("CRF needs at least one label");
  const std::size_t S = num_states();
  for (std::size_t from = 0; from < S; ++from) {
    for (std::size_t to = 0; to < S; ++to) {
      bool ok = from != stop_state() && to != start_state() && !(from == start_state() && to == stop_state());
      allowed_[from * S + to] = ok ? 1 : 0;
    }
  }
}

CrfModel CrfModel::for_scheme(TagScheme scheme, std::size_t dim) {
  const std::size_t L = mutner::num_labels(scheme);
  CrfModel m(L, dim);
  m.scheme_ = scheme;
  for (std::size_t to = 0; to < L; ++to) {
    m.set_allowed(m.start_state(), to, !is_continuation(label_at(scheme, to).prefix));
  }
  for (std::size_t from = 0; from < L; ++from) {
    Tag f = label_at(scheme, from);
    for (std::size_t to = 0; to < L; ++to) m.set_allowed(from, to, scheme_transition_ok(f, label_at(scheme, to)));
    m.set_allowed(from, m.stop_state(), f.prefix != TagPrefix::M);
  }
  return m;
}

void CrfModel::set_allowed(std::size_t from, std::size_t to, bool ok) {
  allowed_.at(from * num_states() + to) = ok ? 1 : 0;
  if (!ok) transition_[from * num_states() + to] = 0.0;
}

std::vector<double> emission_scores(const CrfModel& model, const RepresentationMatrix& h) {
  if (h.dim() != model.dim()) throw Error("representation dimension does not match model dimension");
  const std::size_t L = model.num_labels();
  const auto& w = model.emission_weights();
  std::vector<double> scores(h.rows() * L, 0.0);
  for (std::size_t j = 0; j < h.rows(); ++j) {
    auto row = h.row(j);
    double* out = &scores[j * L];
    for (std::size_t k = 0; k < row.indices.size(); ++k) {
      const double x = row.values[k];
      const double* wr = &w[static_cast<std::size_t>(row.indices[k]) * L];
      for (std::size_t l = 0; l < L; ++l) out[l] += x * wr[l];
    }
  }
  return scores;
}

double sequence_score(const CrfModel& model, const RepresentationMatrix& h, std::span<const std::size_t> labels) {
  if (labels.size() != h.rows()) throw Error("tag count does not match token count");
  if (labels.empty()) throw Error("cannot score an empty sequence");
  const std::size_t L = model.num_labels();
  for (std::size_t y : labels) {
    if (y >= L) throw Error("label index out of range");
  }
  std::vector<double> emit = emission_scores(model, h);
  std::size_t prev = model.start_state();
  double score = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (!model.allowed(prev, labels[j])) return kNegInf;
    score += model.transition(prev, labels[j]) + emit[j * L + labels[j]];
    prev = labels[j];
  }
  if (!model.allowed(prev, model.stop_state())) return kNegInf;
  return score + model.transition(prev, model.stop_state());
}

double sequence_score(const CrfModel& model, const RepresentationMatrix& h, const TagSequence& tags) {
  if (!model.scheme() || *model.scheme() != tags.scheme) throw Error("tag scheme does not match CRF model");
  std::vector<std::size_t> labels;
  labels.reserve(tags.size());
  for (const Tag& t : tags.labels) labels.push_back(label_index(tags.scheme, t));
  return sequence_score(model, h, labels);
}

double log_partition(const CrfModel& model, const RepresentationMatrix& h) {
  return build_lattice(model, h, false).log_z;
}

std::vector<double> label_marginals(const CrfModel& model, const RepresentationMatrix& h) {
  Lattice lat = build_lattice(model, h, true);
  std::vector<double> p(lat.n * lat.labels, 0.0);
  if (lat.log_z == kNegInf) return p;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(lat.alpha[i] + lat.beta[i] - lat.log_z);
  return p;
}

LossAndGradient nll_and_gradient(const CrfModel& model, std::span<const CrfExample> batch, double weight_decay) {
  if (batch.empty()) throw Error("nll_and_gradient needs a non-empty batch");
  const std::size_t L = model.num_labels();
  const std::size_t S = model.num_states();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  LossAndGradient out;
  out.gradient.emission.assign(model.emission_weights().size(), 0.0);
  out.gradient.transition.assign(model.transition_weights().size(), 0.0);
  auto& ge = out.gradient.emission;
  auto& gt = out.gradient.transition;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const CrfExample& ex = batch[b];
    if (ex.h == nullptr) throw Error("example " + example_name(ex, b) + " has no representation");
    const RepresentationMatrix& h = *ex.h;
    if (ex.labels.size() != h.rows()) {
      throw Error("example " + example_name(ex, b) + ": tag count does not match token count");
    }
    double gold = sequence_score(model, h, ex.labels);
    if (gold == kNegInf) {
      throw Error("gold tags of sentence " + example_name(ex, b) + " use a forbidden transition");
    }
    Lattice lat = build_lattice(model, h, true);
    out.loss += (lat.log_z - gold) * inv_b;

    const std::size_t n = lat.n;
    std::vector<double> marg(n * L);
    for (std::size_t i = 0; i < marg.size(); ++i) marg[i] = std::exp(lat.alpha[i] + lat.beta[i] - lat.log_z);
    for (std::size_t j = 0; j < n; ++j) marg[j * L + ex.labels[j]] -= 1.0;

    for (std::size_t j = 0; j < n; ++j) {
      auto row = h.row(j);
      const double* d = &marg[j * L];
      for (std::size_t k = 0; k < row.indices.size(); ++k) {
        const double x = row.values[k] * inv_b;
        double* g = &ge[static_cast<std::size_t>(row.indices[k]) * L];
        for (std::size_t l = 0; l < L; ++l) g[l] += x * d[l];
      }
    }

    // Expected minus observed transition counts.
    for (std::size_t l = 0; l < L; ++l) {
      if (model.allowed(model.start_state(), l)) {
        gt[model.start_state() * S + l] += std::exp(lat.alpha[l] + lat.beta[l] - lat.log_z) * inv_b;
      }
      if (model.allowed(l, model.stop_state())) {
        gt[l * S + model.stop_state()] +=
            std::exp(lat.alpha[(n - 1) * L + l] + lat.beta[(n - 1) * L + l] - lat.log_z) * inv_b;
      }
    }
    for (std::size_t j = 1; j < n; ++j) {
      for (std::size_t a = 0; a < L; ++a) {
        const double left = lat.alpha[(j - 1) * L + a];
        if (left == kNegInf) continue;
        for (std::size_t c = 0; c < L; ++c) {
          if (!model.allowed(a, c)) continue;
          double lp = left + model.transition(a, c) + lat.emit[j * L + c] + lat.beta[j * L + c] - lat.log_z;
          gt[a * S + c] += std::exp(lp) * inv_b;
        }
      }
    }
    std::size_t prev = model.start_state();
    for (std::size_t y : ex.labels) {
      gt[prev * S + y] -= inv_b;
      prev = y;
    }
    gt[prev * S + model.stop_state()] -= inv_b;
  }

  if (weight_decay > 0) {
    double sq = 0;
    const auto& w = model.emission_weights();
    for (std::size_t i = 0; i < w.size(); ++i) {
      sq += w[i] * w[i];
      ge[i] += weight_decay * w[i];
    }
    const auto& t = model.transition_weights();
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!model.mask()[i]) continue;
      sq += t[i] * t[i];
      gt[i] += weight_decay * t[i];
    }
    out.loss += 0.5 * weight_decay * sq;
  }
  return out;
}

std::vector<std::size_t> viterbi_labels(const CrfModel& model, const RepresentationMatrix& h) {
  if (h.dim() != model.dim()) throw Error("representation dimension does not match model dimension");
  const std::size_t n = h.rows();
  const std::size_t L = model.num_labels();
  if (n == 0) return {};
  std::vector<double> emit = emission_scores(model, h);

  // best[j][a]: best score of positions j..n-1 plus STOP given y_j = a.
  // Decoding forwards over these keeps the tie-break lexicographic.
  std::vector<double> best(n * L, kNegInf);
  for (std::size_t a = 0; a < L; ++a) {
    if (model.allowed(a, model.stop_state())) {
      best[(n - 1) * L + a] = emit[(n - 1) * L + a] + model.transition(a, model.stop_state());
    }
  }
  for (std::size_t j = n - 1; j-- > 0;) {
    for (std::size_t a = 0; a < L; ++a) {
      double mx = kNegInf;
      for (std::size_t c = 0; c < L; ++c) {
        if (!model.allowed(a, c)) continue;
        mx = std::max(mx, model.transition(a, c) + best[(j + 1) * L + c]);
      }
      if (mx != kNegInf) best[j * L + a] = emit[j * L + a] + mx;
    }
  }

  std::vector<std::size_t> labels(n);
  std::size_t prev = model.start_state();
  for (std::size_t j = 0; j < n; ++j) {
    double mx = kNegInf;
    std::size_t arg = L;
    for (std::size_t c = 0; c < L; ++c) {
      if (!model.allowed(prev, c)) continue;
      double v = model.transition(prev, c) + best[j * L + c];
      if (v > mx) {
        mx = v;
        arg = c;
      }
    }
    if (arg == L) throw Error("no legal label sequence under the transition mask");
    labels[j] = arg;
    prev = arg;
  }
  return labels;
}

TagSequence viterbi_decode(const CrfModel& model, const RepresentationMatrix& h) {
  if (!model.scheme()) throw Error("viterbi_decode needs a CRF built over a tag scheme");
  TagSequence out{*model.scheme(), {}};
  for (std::size_t y : viterbi_labels(model, h)) out.labels.push_back(label_at(*model.scheme(), y));
  return out;
}

namespace {

double mean_nll(const CrfModel& model, const std::vector<CrfExample>& examples) {
  if (examples.empty()) return 0;
  return nll_and_gradient(model, examples, 0.0).loss;
}

std::vector<CrfExample> make_examples(const std::vector<TokenizedSentence>& sentences,
                                      const std::vector<RepresentationMatrix>& matrices, TagScheme scheme) {
  std::vector<CrfExample> out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    CrfExample ex;
    ex.h = &matrices[i];
    ex.id = sentences[i].doc_id + ":" + std::to_string(sentences[i].sentence_index);
    for (const Tag& t : spans_to_tags(sentences[i], scheme).labels) ex.labels.push_back(label_index(scheme, t));
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<TokenizedSentence> non_empty(const std::vector<TokenizedSentence>& s) {
  std::vector<TokenizedSentence> out;
  std::copy_if(s.begin(), s.end(), std::back_inserter(out), [](const auto& x) { return !x.tokens.empty(); });
  return out;
}

}  // namespace

CrfModel train_crf(const std::vector<TokenizedSentence>& train_in, const Encoder& encoder,
                   const TrainConfig& config, TagScheme scheme, const std::vector<TokenizedSentence>* dev_in,
                   TrainReport* report) {
  config.validate();
  std::vector<TokenizedSentence> train = non_empty(train_in);
  if (train.empty()) throw Error("cannot train a CRF on an empty dataset");

  std::vector<RepresentationMatrix> full;
  full.reserve(train.size());
  for (const auto& s : train) full.push_back(encoder.encode(s));
  FeatureRemap remap(full);
  std::vector<RepresentationMatrix> compact;
  compact.reserve(full.size());
  for (const auto& h : full) compact.push_back(remap.apply(h));
  full.clear();
  std::vector<CrfExample> examples = make_examples(train, compact, scheme);

  std::vector<TokenizedSentence> dev;
  std::vector<RepresentationMatrix> dev_compact;
  std::vector<CrfExample> dev_examples;
  if (dev_in != nullptr) {
    dev = non_empty(*dev_in);
    for (const auto& s : dev) dev_compact.push_back(remap.apply(encoder.encode(s)));
    dev_examples = make_examples(dev, dev_compact, scheme);
  }

  CrfModel model = CrfModel::for_scheme(scheme, remap.compact_dim());
  for (const auto& ex : examples) {
    if (sequence_score(model, *ex.h, ex.labels) == -std::numeric_limits<double>::infinity()) {
      throw Error("gold tags of sentence " + ex.id + " use a forbidden transition");
    }
  }

  Adam adam_w(model.emission_weights().size(), config.learning_rate);
  Adam adam_t(model.transition_weights().size(), config.learning_rate);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  CrfModel best = model;
  double best_dev = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  TrainReport rep;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    deterministic_shuffle(order, rng);
    double epoch_loss = 0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<CrfExample> batch;
      std::vector<RepresentationMatrix> dropped;
      batch.reserve(end - begin);
      dropped.reserve(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        batch.push_back(examples[order[k]]);
        if (config.dropout > 0) {
          dropped.push_back(drop_features(*batch.back().h, config.dropout, rng));
          batch.back().h = &dropped.back();
        }
      }
      LossAndGradient lg = nll_and_gradient(model, batch, config.weight_decay);
      adam_w.step(model.emission_weights(), lg.gradient.emission);
      adam_t.step(model.transition_weights(), lg.gradient.transition);
      epoch_loss += lg.loss;
      ++batches;
    }
    rep.epochs_run = epoch;
    rep.final_train_loss = epoch_loss / static_cast<double>(batches);

    if (!dev_examples.empty()) {
      double d = mean_nll(model, dev_examples);
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

  CrfModel out = CrfModel::for_scheme(scheme, remap.full_dim());
  const std::size_t L = out.num_labels();
  const auto& active = remap.active();
  for (std::size_t c = 0; c < active.size(); ++c) {
    for (std::size_t l = 0; l < L; ++l) out.emission(active[c], l) = best.emission(c, l);
  }
  out.transition_weights() = best.transition_weights();
  out.encoder = encoder.config();
  if (report != nullptr) *report = rep;
  return out;
}

nlohmann::json to_json(const CrfModel& model) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "crf";
  if (model.scheme()) {
    j["scheme"] = std::string(to_string(*model.scheme()));
    std::vector<std::string> labels;
    for (std::size_t l = 0; l < model.num_labels(); ++l) labels.push_back(to_string(label_at(*model.scheme(), l)));
    j["labels"] = labels;
  } else {
    j["scheme"] = nullptr;
    std::vector<std::string> labels;
    for (std::size_t l = 0; l < model.num_labels(); ++l) labels.push_back(std::to_string(l));
    j["labels"] = labels;
  }
  j["d"] = model.dim();
  j["W"] = model.emission_weights();
  j["T"] = model.transition_weights();
  std::vector<int> mask(model.mask().begin(), model.mask().end());
  j["mask"] = mask;
  j["encoder"] = to_json(model.encoder);
  j["encoder_digest"] = digest(model.encoder);
  return j;
}

CrfModel crf_model_from_json(const nlohmann::json& j) {
  if (j.value("format_version", 0) != 1) throw Error("unsupported CRF model format version");
  if (j.value("kind", std::string()) != "crf") throw Error("model file is not a CRF model");
  const auto labels = j.at("labels").get<std::vector<std::string>>();
  const auto dim = j.at("d").get<std::size_t>();
  std::optional<CrfModel> model;
  if (j.at("scheme").is_null()) {
    model.emplace(labels.size(), dim);
  } else {
    TagScheme scheme = parse_tag_scheme(j.at("scheme").get<std::string>());
    model.emplace(CrfModel::for_scheme(scheme, dim));
    for (std::size_t l = 0; l < labels.size(); ++l) {
      if (l >= model->num_labels() || labels[l] != to_string(label_at(scheme, l))) {
        throw Error("model label order does not match the " + std::string(to_string(scheme)) + " scheme");
      }
    }
  }
  if (labels.size() != model->num_labels()) throw Error("model label count mismatch");
  auto w = j.at("W").get<std::vector<double>>();
  auto t = j.at("T").get<std::vector<double>>();
  auto mask = j.at("mask").get<std::vector<int>>();
  if (w.size() != model->emission_weights().size() || t.size() != model->transition_weights().size() ||
      mask.size() != model->mask().size()) {
    throw Error("model weight array sizes do not match its dimensions");
  }
  const std::size_t S = model->num_states();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if ((mask[i] != 0) != (model->mask()[i] != 0)) {
      if (j.at("scheme").is_null()) {
        model->set_allowed(i / S, i % S, mask[i] != 0);
      } else {
        throw Error("model transition mask does not match its scheme");
      }
    }
  }
  model->emission_weights() = std::move(w);
  for (std::size_t i = 0; i < t.size(); ++i) model->transition_weights()[i] = model->mask()[i] ? t[i] : 0.0;
  if (j.contains("encoder")) model->encoder = encoder_config_from_json(j.at("encoder"));
  return std::move(*model);
}

}  // namespace mutner
