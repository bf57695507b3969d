#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mutner/corpus_io.hpp"

namespace mutner {

struct PrfCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  // 0/0 is reported as 0.
  double precision() const;
  double recall() const;
  double f1() const;

  friend bool operator==(const PrfCounts&, const PrfCounts&) = default;
};

struct EvalReport {
  std::string dataset_id;
  std::string model_id;
  PrfCounts micro;
  std::array<PrfCounts, kNumMutationTypes> per_type{};  // MutationType order

  const PrfCounts& of(MutationType t) const { return per_type[index_of(t)]; }
};

// Spans are grouped per sentence; gold and pred must have the same number of
// sentences. A prediction is a true positive iff an unconsumed gold span in
// the same sentence has identical boundaries and type.
EvalReport exact_match_prf(const std::vector<std::vector<TokenSpan>>& gold,
                           const std::vector<std::vector<TokenSpan>>& pred);

enum class ReportFormat { Json, Tsv };

ReportFormat parse_report_format(std::string_view name);

// Percentages carry one decimal. Row order follows MutationType order with
// the micro row last.
std::string emit_report(const EvalReport& report, ReportFormat format);
std::string emit_report(const EvalReport& report, std::string_view format);

}  // namespace mutner
