#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "mutner/crf.hpp"
#include "support/oracles.hpp"

using namespace mutner;
using namespace mutner::testing;

namespace {

std::vector<double> flatten(const CrfModel& m) {
  std::vector<double> x = m.emission_weights();
  x.insert(x.end(), m.transition_weights().begin(), m.transition_weights().end());
  return x;
}

void unflatten(CrfModel& m, const std::vector<double>& x) {
  std::size_t ne = m.emission_weights().size();
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(ne), m.emission_weights().begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(ne), x.end(), m.transition_weights().begin());
}

std::vector<double> flatten(const CrfGradient& g) {
  std::vector<double> x = g.emission;
  x.insert(x.end(), g.transition.begin(), g.transition.end());
  return x;
}

// Random gold sequence that respects the mask, found by enumeration.
std::vector<std::size_t> random_legal(const CrfModel& m, const DenseInstance& inst, std::mt19937_64& rng) {
  Enumeration e = enumerate(m, inst);
  std::vector<std::size_t> legal;
  for (std::size_t k = 0; k < e.scores.size(); ++k) {
    if (std::isfinite(e.scores[k])) legal.push_back(k);
  }
  return e.sequences[legal[pick(rng, legal.size())]];
}

TokenizedSentence plain_sentence(const std::string& id, const std::string& text) {
  TokenizedSentence s;
  s.doc_id = id;
  s.tokens = tokenize(text);
  return s;
}

}  // namespace

TEST_CASE("sequence score") {
  SUBCASE("zeros") {
    CrfModel m = CrfModel::for_scheme(TagScheme::BIO, 3);
    DenseInstance inst{{{0.0, 0.0, 0.0}}};
    for (std::size_t l = 0; l < m.num_labels(); ++l) {
      std::vector<std::size_t> y{l};
      double s = sequence_score(m, inst.matrix(), y);
      if (m.allowed(m.start_state(), l)) CHECK(s == 0.0);
    }
  }
  SUBCASE("hand-built two tokens") {
    CrfModel m(2, 2);
    m.emission(0, 0) = 1;
    m.emission(0, 1) = 2;
    m.emission(1, 0) = -1;
    m.emission(1, 1) = 3;
    m.transition(2, 0) = 1;
    m.transition(2, 1) = 0;
    m.transition(0, 1) = 2;
    m.transition(1, 0) = -2;
    m.transition(1, 1) = 1;
    m.transition(0, 3) = 3;
    m.transition(1, 3) = -1;
    DenseInstance inst{{{1, 2}, {0, 1}}};
    std::vector<std::size_t> a{0, 1}, b{1, 0};
    // (1 - 2) + (0 + 3) + 1 + 2 - 1
    CHECK(sequence_score(m, inst.matrix(), a) == doctest::Approx(4.0));
    // (2 + 6) + (0 - 1) + 0 - 2 + 3
    CHECK(sequence_score(m, inst.matrix(), b) == doctest::Approx(8.0));
  }
  SUBCASE("masked transition scores minus infinity") {
    CrfModel m = CrfModel::for_scheme(TagScheme::BIO, 1);
    DenseInstance inst{{{1.0}, {1.0}}};
    TagSequence tags{TagScheme::BIO, {parse_tag("O"), parse_tag("I-Sub")}};
    CHECK(sequence_score(m, inst.matrix(), tags) == -std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("log partition") {
  std::mt19937_64 rng(5);
  SUBCASE("one token closed form") {
    CrfModel m(4, 3);
    randomize(m, rng);
    DenseInstance inst = random_dense(rng, 1, 3);
    double acc = 0;
    for (std::size_t l = 0; l < 4; ++l) {
      double e = 0;
      for (std::size_t f = 0; f < 3; ++f) e += inst.h[0][f] * m.emission(f, l);
      acc += std::exp(e + m.transition(m.start_state(), l) + m.transition(l, m.stop_state()));
    }
    CHECK(log_partition(m, inst.matrix()) == doctest::Approx(std::log(acc)).epsilon(1e-12));
  }
  SUBCASE("three by three enumeration") {
    for (int trial = 0; trial < 20; ++trial) {
      CrfModel m(3, 4);
      randomize(m, rng);
      DenseInstance inst = random_dense(rng, 3, 4);
      Enumeration e = enumerate(m, inst);
      CHECK(e.sequences.size() == 27);
      CHECK(std::abs(log_partition(m, inst.matrix()) - e.log_z) <= 1e-10 * std::abs(e.log_z));
    }
  }
  SUBCASE("masked enumeration") {
    for (int trial = 0; trial < 20; ++trial) {
      CrfModel m(3, 4);
      randomize(m, rng);
      m.set_allowed(1, 2, false);
      m.set_allowed(m.start_state(), 0, false);
      DenseInstance inst = random_dense(rng, 3, 4);
      Enumeration e = enumerate(m, inst);
      CHECK(std::abs(log_partition(m, inst.matrix()) - e.log_z) <= 1e-10 * std::abs(e.log_z));
    }
  }
  SUBCASE("large emissions stay finite") {
    CrfModel m = CrfModel::for_scheme(TagScheme::BMEO, 2);
    randomize(m, rng, 500.0);
    DenseInstance inst = random_dense(rng, 6, 2, 2.0);
    double z = log_partition(m, inst.matrix());
    CHECK(std::isfinite(z));
    auto y = viterbi_labels(m, inst.matrix());
    double best = sequence_score(m, inst.matrix(), y);
    CHECK(z >= best - 1e-12 * std::abs(best));
  }
}

TEST_CASE("marginals sum to one per token") {
  std::mt19937_64 rng(9);
  CrfModel m = CrfModel::for_scheme(TagScheme::BIO, 3);
  randomize(m, rng);
  DenseInstance inst = random_dense(rng, 4, 3);
  auto p = label_marginals(m, inst.matrix());
  for (std::size_t j = 0; j < 4; ++j) {
    double s = 0;
    for (std::size_t l = 0; l < m.num_labels(); ++l) s += p[j * m.num_labels() + l];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("negative log-likelihood") {
  std::mt19937_64 rng(17);
  SUBCASE("saturated single label") {
    CrfModel m(1, 2);
    m.emission(0, 0) = 5;
    m.emission(1, 0) = -3;
    m.transition(m.start_state(), 0) = 0.5;
    m.transition(0, 0) = 2;
    m.transition(0, m.stop_state()) = -1;
    DenseInstance inst{{{1, 0}, {0, 1}, {1, 1}}};
    RepresentationMatrix h = inst.matrix();
    CrfExample ex{&h, {0, 0, 0}, "s"};
    double wd = 0.01;
    auto r = nll_and_gradient(m, std::span<const CrfExample>(&ex, 1), wd);
    double norm = 25 + 9 + 0.25 + 4 + 1;
    CHECK(r.loss == doctest::Approx(wd / 2 * norm).epsilon(1e-9));
    CHECK(r.gradient.emission[0] == doctest::Approx(wd * 5).epsilon(1e-9));
    CHECK(r.gradient.emission[1] == doctest::Approx(wd * -3).epsilon(1e-9));
  }
  SUBCASE("finite differences for both schemes") {
    for (TagScheme scheme : {TagScheme::BIO, TagScheme::BMEO}) {
      CrfModel m = CrfModel::for_scheme(scheme, 2);
      randomize(m, rng, 0.5);
      std::vector<DenseInstance> insts;
      std::vector<RepresentationMatrix> hs;
      std::vector<CrfExample> batch;
      for (std::size_t k = 0; k < 2; ++k) insts.push_back(random_dense(rng, 3, 2));
      for (auto& inst : insts) hs.push_back(inst.matrix());
      for (std::size_t k = 0; k < 2; ++k) {
        // Gold from a brute-force legal draw keeps the check independent of the decoder.
        CrfModel small = m;
        batch.push_back({&hs[k], random_legal(small, insts[k], rng), "fd"});
      }
      double wd = 0.03;
      auto r = nll_and_gradient(m, batch, wd);
      auto numeric = central_differences(
          [&](const std::vector<double>& x) {
            CrfModel probe = m;
            unflatten(probe, x);
            return nll_and_gradient(probe, batch, wd).loss;
          },
          flatten(m), 1e-5);
      CHECK(max_relative_error(flatten(r.gradient), numeric) <= 1e-4);
      for (std::size_t a = 0; a < m.num_states(); ++a) {
        for (std::size_t b = 0; b < m.num_states(); ++b) {
          if (!m.allowed(a, b)) CHECK(r.gradient.transition[a * m.num_states() + b] == 0.0);
        }
      }
    }
  }
  SUBCASE("duplicating the batch leaves loss and gradient unchanged") {
    CrfModel m = CrfModel::for_scheme(TagScheme::BIO, 3);
    randomize(m, rng);
    auto ia = random_dense(rng, 3, 3), ib = random_dense(rng, 2, 3);
    auto ha = ia.matrix(), hb = ib.matrix();
    CrfExample a{&ha, {0, 1, 2}, "a"}, b{&hb, {3, 0}, "b"};
    std::vector<CrfExample> once{a, b}, twice{a, a, b, b};
    auto r1 = nll_and_gradient(m, once, 0.01);
    auto r2 = nll_and_gradient(m, twice, 0.01);
    CHECK(r1.loss == doctest::Approx(r2.loss).epsilon(1e-12));
    CHECK(max_relative_error(flatten(r1.gradient), flatten(r2.gradient), 1e-12) <= 1e-10);
  }
  SUBCASE("gold violating the mask names the sentence") {
    CrfModel m = CrfModel::for_scheme(TagScheme::BIO, 1);
    DenseInstance inst{{{1.0}, {1.0}}};
    auto h = inst.matrix();
    CrfExample ex{&h, {0, 2}, "doc9:4"};
    try {
      nll_and_gradient(m, std::span<const CrfExample>(&ex, 1), 0.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("doc9:4") != std::string::npos);
    }
    CHECK_THROWS(nll_and_gradient(m, std::span<const CrfExample>(), 0.0));
  }
}

TEST_CASE("viterbi") {
  std::mt19937_64 rng(23);
  SUBCASE("matches enumeration and stays valid") {
    for (int trial = 0; trial < 30; ++trial) {
      TagScheme scheme = trial % 2 ? TagScheme::BIO : TagScheme::BMEO;
      CrfModel m = CrfModel::for_scheme(scheme, 2);
      randomize(m, rng);
      DenseInstance inst = random_dense(rng, 1 + trial % 3, 2);
      // Label sets of 15/22 make enumeration costly beyond 3 tokens.
      Enumeration e = enumerate(m, inst);
      CHECK(viterbi_labels(m, inst.matrix()) == e.argmax);
      CHECK(is_valid(viterbi_decode(m, inst.matrix())));
    }
  }
  SUBCASE("three by three") {
    CrfModel m(3, 3);
    randomize(m, rng);
    DenseInstance inst = random_dense(rng, 3, 3);
    CHECK(viterbi_labels(m, inst.matrix()) == enumerate(m, inst).argmax);
  }
  SUBCASE("strong O emissions give all O") {
    CrfModel m = CrfModel::for_scheme(TagScheme::BMEO, 1);
    m.emission(0, 0) = 10;
    DenseInstance inst{{{1}, {1}, {1}, {1}}};
    auto tags = viterbi_decode(m, inst.matrix());
    for (const auto& t : tags.labels) CHECK(t.is_outside());
  }
  SUBCASE("ties go to the lowest label index") {
    CrfModel m(3, 1);
    m.emission(0, 1) = 1;
    m.emission(0, 2) = 1;
    DenseInstance inst{{{1}, {1}}};
    CHECK(viterbi_labels(m, inst.matrix()) == std::vector<std::size_t>{1, 1});
    CrfModel zero = CrfModel::for_scheme(TagScheme::BIO, 1);
    DenseInstance one{{{0}, {0}, {0}}};
    CHECK(viterbi_labels(zero, one.matrix()) == std::vector<std::size_t>{0, 0, 0});
  }
}

TEST_CASE("training") {
  EncoderConfig ec;
  ec.hash_bits = 10;
  OrthographicEncoder enc(ec);
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 2;

  SUBCASE("all-O data decodes as all O") {
    std::vector<TokenizedSentence> data{plain_sentence("a", "no variants were found here"),
                                        plain_sentence("b", "the cohort was small"),
                                        plain_sentence("c", "patients were enrolled in 2019")};
    CrfModel m = train_crf(data, enc, tc, TagScheme::BIO);
    for (const auto& s : data) {
      auto tags = viterbi_decode(m, enc.encode(s));
      for (const auto& t : tags.labels) CHECK(t.is_outside());
    }
  }
  SUBCASE("deterministic and serializable") {
    auto corpus = make_synthetic_corpus(40, 3);
    CrfModel a = train_crf(corpus.sentences, enc, tc, TagScheme::BMEO);
    CrfModel b = train_crf(corpus.sentences, enc, tc, TagScheme::BMEO);
    CHECK(to_json(a).dump() == to_json(b).dump());
    CHECK(a.encoder == ec);
    CrfModel back = crf_model_from_json(nlohmann::json::parse(to_json(a).dump()));
    CHECK(back == a);
  }
  SUBCASE("dev split returns a report") {
    auto corpus = make_synthetic_corpus(30, 4);
    std::vector<TokenizedSentence> train(corpus.sentences.begin(), corpus.sentences.begin() + 20);
    std::vector<TokenizedSentence> dev(corpus.sentences.begin() + 20, corpus.sentences.end());
    TrainReport report;
    train_crf(train, enc, tc, TagScheme::BIO, &dev, &report);
    CHECK(report.best_dev_loss.has_value());
    CHECK(report.epochs_run >= 1);
  }
  SUBCASE("empty dataset is an error") {
    CHECK_THROWS_AS(train_crf({}, enc, tc, TagScheme::BIO), Error);
  }
}
