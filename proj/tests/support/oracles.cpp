#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mutner::testing {

RepresentationMatrix DenseInstance::matrix() const {
  std::size_t d = h.empty() ? 0 : h.front().size();
  return RepresentationMatrix::from_dense(h, d);
}

double normal(std::mt19937_64& rng) {
  // Box-Muller from raw engine output, independent of library distributions.
  double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

DenseInstance random_dense(std::mt19937_64& rng, std::size_t n, std::size_t d, double scale) {
  DenseInstance inst;
  inst.h.assign(n, std::vector<double>(d));
  for (auto& row : inst.h) {
    for (double& x : row) x = scale * normal(rng);
  }
  return inst;
}

void randomize(CrfModel& model, std::mt19937_64& rng, double scale) {
  for (double& w : model.emission_weights()) w = scale * normal(rng);
  for (double& t : model.transition_weights()) t = scale * normal(rng);
}

double brute_score(const CrfModel& model, const DenseInstance& inst, const std::vector<std::size_t>& labels) {
  double score = 0;
  std::size_t prev = model.start_state();
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (!model.allowed(prev, labels[j])) return -std::numeric_limits<double>::infinity();
    double e = 0;
    for (std::size_t f = 0; f < inst.h[j].size(); ++f) e += inst.h[j][f] * model.emission(f, labels[j]);
    score += e + model.transition(prev, labels[j]);
    prev = labels[j];
  }
  if (!model.allowed(prev, model.stop_state())) return -std::numeric_limits<double>::infinity();
  return score + model.transition(prev, model.stop_state());
}

Enumeration enumerate(const CrfModel& model, const DenseInstance& inst) {
  const std::size_t n = inst.h.size();
  const std::size_t L = model.num_labels();
  Enumeration e;
  std::vector<std::size_t> seq(n, 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    double s = brute_score(model, inst, seq);
    e.sequences.push_back(seq);
    e.scores.push_back(s);
    if (s > best) {
      best = s;
      e.argmax = seq;
      e.any_legal = true;
    }
    // Odometer with the last position fastest gives lexicographic order.
    bool done = true;
    for (std::size_t pos = n; pos-- > 0;) {
      if (++seq[pos] < L) {
        done = false;
        break;
      }
      seq[pos] = 0;
    }
    if (done) break;
  }
  if (!e.any_legal) {
    e.log_z = -std::numeric_limits<double>::infinity();
    return e;
  }
  double sum = 0;
  for (double s : e.scores) {
    if (s != -std::numeric_limits<double>::infinity()) sum += std::exp(s - best);
  }
  e.log_z = best + std::log(sum);
  return e;
}

std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric, double floor) {
  double worst = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

BruteCounts brute_match(const std::vector<std::vector<TokenSpan>>& gold,
                        const std::vector<std::vector<TokenSpan>>& pred, std::optional<MutationType> only) {
  BruteCounts c;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    std::vector<bool> used(gold[s].size(), false);
    for (const auto& p : pred[s]) {
      if (only && p.mtype != *only) continue;
      bool hit = false;
      for (std::size_t g = 0; g < gold[s].size(); ++g) {
        const auto& gs = gold[s][g];
        if (!used[g] && gs.first == p.first && gs.last == p.last && gs.mtype == p.mtype) {
          used[g] = true;
          hit = true;
          break;
        }
      }
      hit ? ++c.tp : ++c.fp;
    }
    for (std::size_t g = 0; g < gold[s].size(); ++g) {
      if (only && gold[s][g].mtype != *only) continue;
      if (!used[g]) ++c.fn;
    }
  }
  return c;
}

std::vector<TokenSpan> random_spans(std::mt19937_64& rng, std::size_t n, std::size_t max_len) {
  std::vector<TokenSpan> spans;
  std::size_t t = 0;
  while (t < n) {
    if (pick(rng, 3) != 0) {
      ++t;
      continue;
    }
    std::size_t len = 1 + pick(rng, max_len);
    if (t + len > n) len = n - t;
    spans.push_back({t, t + len - 1, kAllMutationTypes[pick(rng, kNumMutationTypes)]});
    t += len + pick(rng, 2);
  }
  return spans;
}

TagSequence random_tags(std::mt19937_64& rng, std::size_t n, TagScheme scheme) {
  TagSequence seq{scheme, {}};
  for (std::size_t i = 0; i < n; ++i) seq.labels.push_back(label_at(scheme, pick(rng, num_labels(scheme))));
  return seq;
}

namespace {

const char* choose(std::mt19937_64& rng, const std::vector<const char*>& options) {
  return options[pick(rng, options.size())];
}

std::string number(std::mt19937_64& rng, int lo, int hi) {
  return std::to_string(lo + static_cast<int>(pick(rng, static_cast<std::size_t>(hi - lo + 1))));
}

std::string mention_for(MutationType t, std::mt19937_64& rng) {
  static const std::vector<const char*> aa = {"A", "R", "N", "D", "C", "Q", "E", "G", "H", "I",
                                              "L", "K", "M", "F", "P", "S", "T", "W", "Y", "V"};
  static const std::vector<const char*> nt = {"A", "C", "G", "T"};
  switch (t) {
    case MutationType::Substitution:
      if (pick(rng, 2) == 0) return std::string(choose(rng, aa)) + number(rng, 10, 999) + choose(rng, aa);
      return "c." + number(rng, 10, 3999) + choose(rng, nt) + ">" + choose(rng, nt);
    case MutationType::Deletion:
      if (pick(rng, 2) == 0) {
        int a = 10 + static_cast<int>(pick(rng, 900));
        return "c." + std::to_string(a) + "_" + std::to_string(a + 1 + static_cast<int>(pick(rng, 9))) + "del";
      }
      return "c." + number(rng, 10, 3999) + "del" + choose(rng, nt);
    case MutationType::Insertion: {
      int a = 10 + static_cast<int>(pick(rng, 900));
      return "c." + std::to_string(a) + "_" + std::to_string(a + 1) + "ins" + choose(rng, nt) + choose(rng, nt);
    }
    case MutationType::Duplication:
      if (pick(rng, 2) == 0) return "c." + number(rng, 10, 3999) + "dup" + choose(rng, nt);
      return "c." + number(rng, 10, 999) + "_" + number(rng, 1000, 1999) + "dup";
    case MutationType::InDel: {
      int a = 10 + static_cast<int>(pick(rng, 900));
      return "c." + std::to_string(a) + "_" + std::to_string(a + 2) + "delins" + choose(rng, nt) + choose(rng, nt);
    }
    case MutationType::SNP:
      return "rs" + number(rng, 1000, 99999999);
    case MutationType::FrameShift:
      return "p." + std::string(choose(rng, aa)) + number(rng, 10, 999) + "fs";
  }
  return "V600E";
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(std::size_t num_sentences, std::uint64_t seed, double negative_rate) {
  std::mt19937_64 rng(seed);
  static const std::vector<const char*> subjects = {"We", "The authors", "Our group", "This study", "Sequencing"};
  static const std::vector<const char*> verbs = {"identified", "detected", "observed", "reported", "found"};
  static const std::vector<const char*> tails = {"in the tumor samples", "in two unrelated families",
                                                 "in the kinase domain", "among the screened patients",
                                                 "with high frequency", "in exon " };
  static const std::vector<const char*> negatives = {
      "Patients were enrolled between 1999 and 2004",
      "The cohort included adults with advanced melanoma",
      "Overall survival was analysed with Cox regression",
      "Samples were sequenced on an Illumina platform",
      "Expression levels were normalised to GAPDH",
      "The median follow up was 36 months",
      "No association with age or sex was observed",
      "Tumours were graded according to WHO criteria"};

  SyntheticCorpus corpus;
  for (std::size_t i = 0; i < num_sentences; ++i) {
    Document doc;
    doc.id = "syn" + std::to_string(i);
    std::string title = "Synthetic record " + std::to_string(i) + ".";
    std::string body;
    std::vector<Mention> mentions;
    const std::size_t base = title.size() + 1;
    if (static_cast<double>(rng() >> 11) * 0x1.0p-53 < negative_rate) {
      body = std::string(choose(rng, negatives)) + " in " + number(rng, 12, 480) + " cases.";
    } else {
      body = std::string(choose(rng, subjects)) + " " + choose(rng, verbs) + " ";
      std::size_t count = 1 + pick(rng, 2);
      for (std::size_t k = 0; k < count; ++k) {
        if (k > 0) body += pick(rng, 2) == 0 ? " and " : " as well as ";
        MutationType t = kAllMutationTypes[pick(rng, kNumMutationTypes)];
        std::string m = mention_for(t, rng);
        if (pick(rng, 3) == 0) body += "the ";
        std::size_t start = base + body.size();
        body += m;
        mentions.push_back({start, start + m.size(), m, t});
        if (pick(rng, 2) == 0) body += std::string(" ") + choose(rng, {"mutation", "variant", "alteration"});
      }
      std::string tail = choose(rng, tails);
      if (tail == std::string("in exon ")) tail += number(rng, 1, 30);
      body += " " + tail + ".";
    }
    doc.text = title + "\n" + body;
    doc.mentions = std::move(mentions);
    for (auto& s : split_sentences(doc)) {
      if (s.tokens.front().start >= base) corpus.sentences.push_back(std::move(s));
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace mutner::testing
