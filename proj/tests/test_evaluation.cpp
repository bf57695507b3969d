#include <random>

#include "doctest.h"
#include "json.hpp"
#include "mutner/evaluation.hpp"
#include "support/oracles.hpp"

using namespace mutner;
using namespace mutner::testing;

TEST_CASE("hand-counted report") {
  std::vector<std::vector<TokenSpan>> gold{{{0, 2, MutationType::Substitution}, {5, 5, MutationType::SNP}}};
  std::vector<std::vector<TokenSpan>> pred{{{0, 2, MutationType::Substitution}, {5, 5, MutationType::Deletion}}};
  EvalReport r = exact_match_prf(gold, pred);
  r.dataset_id = "toy";
  r.model_id = "hand";
  CHECK(r.micro == PrfCounts{1, 1, 1});
  CHECK(r.micro.precision() == 0.5);
  CHECK(r.micro.recall() == 0.5);
  CHECK(r.micro.f1() == 0.5);
  CHECK(r.of(MutationType::Substitution).f1() == 1.0);
  CHECK(r.of(MutationType::SNP).f1() == 0.0);
  CHECK(r.of(MutationType::Deletion).f1() == 0.0);

  CHECK(emit_report(r, "tsv") ==
        "# dataset\ttoy\n"
        "# model\thand\n"
        "type\tprecision\trecall\tf1\ttp\tfp\tfn\n"
        "Substitution\t100.0%\t100.0%\t100.0%\t1\t0\t0\n"
        "Deletion\t0.0%\t0.0%\t0.0%\t0\t1\t0\n"
        "Insertion\t0.0%\t0.0%\t0.0%\t0\t0\t0\n"
        "Duplication\t0.0%\t0.0%\t0.0%\t0\t0\t0\n"
        "InDel\t0.0%\t0.0%\t0.0%\t0\t0\t0\n"
        "SNP\t0.0%\t0.0%\t0.0%\t0\t0\t1\n"
        "Frame Shift\t0.0%\t0.0%\t0.0%\t0\t0\t0\n"
        "micro\t50.0%\t50.0%\t50.0%\t1\t1\t1\n");

  auto j = nlohmann::json::parse(emit_report(r, "json"));
  CHECK(j["micro"]["f1"] == 50.0);
  CHECK(j["per_type"][0]["type"] == "Substitution");
  CHECK(j["per_type"][6]["type"] == "Frame Shift");
  CHECK(emit_report(r, ReportFormat::Json) == emit_report(r, ReportFormat::Json));
  CHECK_THROWS(emit_report(r, "xml"));
}

TEST_CASE("degenerate cases") {
  EvalReport empty = exact_match_prf({{}, {}}, {{}, {}});
  CHECK(empty.micro.f1() == 0.0);
  CHECK(emit_report(empty, "tsv").find("micro\t0.0%\t0.0%\t0.0%\t0\t0\t0") != std::string::npos);

  EvalReport missed = exact_match_prf({{{1, 1, MutationType::SNP}}}, {{}});
  CHECK(missed.micro.precision() == 0.0);
  CHECK(missed.micro.recall() == 0.0);

  std::vector<std::vector<TokenSpan>> g{{{0, 1, MutationType::InDel}}, {{2, 2, MutationType::FrameShift}}};
  CHECK(exact_match_prf(g, g).micro.f1() == 1.0);
  CHECK_THROWS(exact_match_prf(g, {{}}));
}

TEST_CASE("random cross-check against brute matcher") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t sentences = 1 + pick(rng, 5);
    std::vector<std::vector<TokenSpan>> gold, pred;
    for (std::size_t s = 0; s < sentences; ++s) {
      std::size_t n = 1 + pick(rng, 15);
      gold.push_back(random_spans(rng, n, 3));
      // Predictions: some gold spans kept, plus fresh random ones.
      std::vector<TokenSpan> p;
      for (const auto& sp : gold.back()) {
        if (pick(rng, 2)) p.push_back(sp);
      }
      if (p.empty()) p = random_spans(rng, n, 3);
      pred.push_back(p);
    }
    EvalReport r = exact_match_prf(gold, pred);
    BruteCounts b = brute_match(gold, pred);
    CHECK(r.micro == PrfCounts{b.tp, b.fp, b.fn});
    PrfCounts sum;
    for (MutationType t : kAllMutationTypes) {
      BruteCounts bt = brute_match(gold, pred, t);
      CHECK(r.of(t) == PrfCounts{bt.tp, bt.fp, bt.fn});
      sum.tp += r.of(t).tp;
      sum.fp += r.of(t).fp;
      sum.fn += r.of(t).fn;
    }
    CHECK(sum == r.micro);

    EvalReport swapped = exact_match_prf(pred, gold);
    CHECK(swapped.micro.precision() == r.micro.recall());
    CHECK(swapped.micro.recall() == r.micro.precision());

    std::reverse(gold.begin(), gold.end());
    std::reverse(pred.begin(), pred.end());
    CHECK(exact_match_prf(gold, pred).micro.f1() == r.micro.f1());
  }
}
