#include "mutner/evaluation.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"

namespace mutner {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string percent_text(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

double percent_value(double fraction) { return std::stod(percent_text(fraction)); }

nlohmann::json counts_json(const PrfCounts& c) {
  return nlohmann::json{{"precision", percent_value(c.precision())},
                        {"recall", percent_value(c.recall())},
                        {"f1", percent_value(c.f1())},
                        {"tp", c.tp},
                        {"fp", c.fp},
                        {"fn", c.fn}};
}

}  // namespace

double PrfCounts::precision() const { return ratio(tp, tp + fp); }
double PrfCounts::recall() const { return ratio(tp, tp + fn); }
double PrfCounts::f1() const {
  double p = precision();
  double r = recall();
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

EvalReport exact_match_prf(const std::vector<std::vector<TokenSpan>>& gold,
                           const std::vector<std::vector<TokenSpan>>& pred) {
  if (gold.size() != pred.size()) throw Error("gold and prediction sentence counts differ");
  EvalReport report;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    std::map<TokenSpan, std::size_t> remaining;
    for (const auto& g : gold[s]) ++remaining[g];
    for (const auto& p : pred[s]) {
      auto it = remaining.find(p);
      if (it != remaining.end() && it->second > 0) {
        --it->second;
        ++report.per_type[index_of(p.mtype)].tp;
      } else {
        ++report.per_type[index_of(p.mtype)].fp;
      }
    }
    for (const auto& [span, left] : remaining) report.per_type[index_of(span.mtype)].fn += left;
  }
  for (const auto& c : report.per_type) {
    report.micro.tp += c.tp;
    report.micro.fp += c.fp;
    report.micro.fn += c.fn;
  }
  return report;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "tsv") return ReportFormat::Tsv;
  throw Error("unknown report format '" + std::string(name) + "'");
}

std::string emit_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) {
    nlohmann::json j;
    j["dataset"] = report.dataset_id;
    j["model"] = report.model_id;
    j["micro"] = counts_json(report.micro);
    nlohmann::json rows = nlohmann::json::array();
    for (MutationType t : kAllMutationTypes) {
      auto r = counts_json(report.of(t));
      r["type"] = std::string(display_name(t));
      rows.push_back(r);
    }
    j["per_type"] = rows;
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "# dataset\t" << report.dataset_id << '\n';
  os << "# model\t" << report.model_id << '\n';
  os << "type\tprecision\trecall\tf1\ttp\tfp\tfn\n";
  auto row = [&](std::string_view name, const PrfCounts& c) {
    os << name << '\t' << percent_text(c.precision()) << "%\t" << percent_text(c.recall()) << "%\t"
       << percent_text(c.f1()) << "%\t" << c.tp << '\t' << c.fp << '\t' << c.fn << '\n';
  };
  for (MutationType t : kAllMutationTypes) row(display_name(t), report.of(t));
  row("micro", report.micro);
  return os.str();
}

std::string emit_report(const EvalReport& report, std::string_view format) {
  return emit_report(report, parse_report_format(format));
}

}  // namespace mutner
