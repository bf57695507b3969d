#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "mutner/encoding.hpp"
#include "mutner/expansion.hpp"
#include "mutner/optim.hpp"

namespace mutner {

// Experiment modes: raw and ensemble differ at prediction time (one model
// vs. a three-way vote); the expanded variants train on the cross-corpus
// expanded set.
enum class RunMode { Raw, Ensemble, Expanded, ExpandedEnsemble };

std::string_view to_string(RunMode m);
RunMode parse_run_mode(std::string_view s);
inline bool uses_ensemble(RunMode m) { return m == RunMode::Ensemble || m == RunMode::ExpandedEnsemble; }
inline bool uses_expansion(RunMode m) { return m == RunMode::Expanded || m == RunMode::ExpandedEnsemble; }

struct RunConfig {
  std::vector<std::string> inputs;
  std::string output;
  std::vector<std::string> models;
  std::string gold;
  std::string predictions;
  std::string dictionary;  // expand: defaults to <output>.dict.tsv
  std::string stats;       // expand: defaults to <output>.stats.json
  std::string alias_table;
  std::string dev;
  std::string pattern;  // crf-bio | crf-bmeo | span
  RunMode mode = RunMode::Raw;
  std::string format = "tsv";
  std::string dataset_id;
  std::string model_id;
  std::string sidecar;  // overrides the model's embedding sidecar at prediction time
  EncoderConfig encoder;
  TrainConfig train;  // train.seed always equals seed
  std::size_t max_span_length = 20;
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

nlohmann::json to_json(const RunConfig& c);
// Rejects unknown keys at every level.
RunConfig run_config_from_json(const nlohmann::json& j);

// Layers, in order: defaults, the JSON config file (if any), then each
// `key=value` override. Keys may be dotted (`train.epochs=5`); values parse as
// JSON when they can and as strings otherwise. With the embedding_file
// encoder the learning rate defaults to 3e-5 unless a layer sets it.
nlohmann::json merge_config(const std::string& config_path, const std::vector<std::string>& overrides,
                            const nlohmann::json& flags);

// Subcommands. Each returns the process exit code and reports problems on `err`.
int cmd_convert(const RunConfig& c, std::ostream& err);
int cmd_expand(const RunConfig& c, std::ostream& err);
int cmd_train(const RunConfig& c, std::ostream& err);
int cmd_predict(const RunConfig& c, std::ostream& err);
int cmd_evaluate(const RunConfig& c, std::ostream& err);
int cmd_ensemble_check(const RunConfig& c, std::ostream& err);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Loads a PubTator or token/tag file (detected from the first line) into a
// corpus named after the file stem.
Corpus load_corpus(const std::string& path, const std::string& alias_table, std::ostream& err, bool& had_errors);

}  // namespace mutner
