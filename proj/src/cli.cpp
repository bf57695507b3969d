#include "mutner/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "mutner/conll.hpp"
#include "mutner/crf.hpp"
#include "mutner/ensemble.hpp"
#include "mutner/evaluation.hpp"
#include "mutner/span.hpp"

namespace mutner {

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::Raw: return "raw";
    case RunMode::Ensemble: return "ensemble";
    case RunMode::Expanded: return "expanded";
    case RunMode::ExpandedEnsemble: return "expanded+ensemble";
  }
  return "raw";
}

RunMode parse_run_mode(std::string_view s) {
  if (s == "raw") return RunMode::Raw;
  if (s == "ensemble") return RunMode::Ensemble;
  if (s == "expanded") return RunMode::Expanded;
  if (s == "expanded+ensemble") return RunMode::ExpandedEnsemble;
  throw Error("unknown mode '" + std::string(s) + "'");
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["inputs"] = c.inputs;
  j["output"] = c.output;
  j["models"] = c.models;
  j["gold"] = c.gold;
  j["predictions"] = c.predictions;
  j["dictionary"] = c.dictionary;
  j["stats"] = c.stats;
  j["alias_table"] = c.alias_table;
  j["dev"] = c.dev;
  j["pattern"] = c.pattern;
  j["mode"] = std::string(to_string(c.mode));
  j["format"] = c.format;
  j["dataset_id"] = c.dataset_id;
  j["model_id"] = c.model_id;
  j["sidecar"] = c.sidecar;
  j["encoder"] = {{"kind", c.encoder.kind == EncoderKind::Orthographic ? "orthographic" : "embedding_file"},
                  {"hash_bits", c.encoder.hash_bits},
                  {"sidecar", c.encoder.sidecar_path},
                  {"seed", c.encoder.seed},
                  {"chunk_features", c.encoder.chunk_features}};
  nlohmann::json train = to_json(c.train);
  train.erase("seed");
  j["train"] = train;
  j["max_span_length"] = c.max_span_length;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("run configuration must be a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "inputs") c.inputs = v.get<std::vector<std::string>>();
    else if (key == "output") c.output = v.get<std::string>();
    else if (key == "models") c.models = v.get<std::vector<std::string>>();
    else if (key == "gold") c.gold = v.get<std::string>();
    else if (key == "predictions") c.predictions = v.get<std::string>();
    else if (key == "dictionary") c.dictionary = v.get<std::string>();
    else if (key == "stats") c.stats = v.get<std::string>();
    else if (key == "alias_table") c.alias_table = v.get<std::string>();
    else if (key == "dev") c.dev = v.get<std::string>();
    else if (key == "pattern") c.pattern = v.get<std::string>();
    else if (key == "mode") c.mode = parse_run_mode(v.get<std::string>());
    else if (key == "format") c.format = v.get<std::string>();
    else if (key == "dataset_id") c.dataset_id = v.get<std::string>();
    else if (key == "model_id") c.model_id = v.get<std::string>();
    else if (key == "sidecar") c.sidecar = v.get<std::string>();
    else if (key == "encoder") {
      nlohmann::json e = v;
      if (e.value("kind", std::string("orthographic")) == "orthographic") e.erase("sidecar");
      c.encoder = encoder_config_from_json(e);
    } else if (key == "train") {
      if (v.contains("seed")) throw Error("train.seed is not configurable; set the top-level seed");
      c.train = train_config_from_json(v);
    } else if (key == "max_span_length") c.max_span_length = v.get<std::size_t>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "threads") c.threads = v.get<unsigned>();
    else throw Error("unknown config key '" + key + "'");
  }
  c.train.seed = c.seed;
  if (c.max_span_length == 0) throw Error("max_span_length must be at least 1");
  if (c.threads == 0) c.threads = 1;
  return c;
}

namespace {

void check_known(const nlohmann::json& defaults, const nlohmann::json& patch, const std::string& prefix) {
  for (const auto& [key, value] : patch.items()) {
    if (!defaults.contains(key)) throw Error("unknown config key '" + prefix + key + "'");
    if (defaults.at(key).is_object()) {
      if (!value.is_object()) throw Error("config key '" + prefix + key + "' must be an object");
      check_known(defaults.at(key), value, prefix + key + ".");
    }
  }
}

void apply_patch(nlohmann::json& base, const nlohmann::json& patch) {
  check_known(base, patch, "");
  for (const auto& [key, value] : patch.items()) {
    if (base[key].is_object() && value.is_object()) {
      for (const auto& [k2, v2] : value.items()) base[key][k2] = v2;
    } else {
      base[key] = value;
    }
  }
}

}  // namespace

nlohmann::json merge_config(const std::string& config_path, const std::vector<std::string>& overrides,
                            const nlohmann::json& flags) {
  nlohmann::json merged = to_json(RunConfig{});
  bool lr_set = false;
  auto touches_lr = [](const nlohmann::json& patch) {
    return patch.contains("train") && patch["train"].is_object() && patch["train"].contains("learning_rate");
  };
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error("cannot open config " + config_path);
    nlohmann::json file;
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("config " + config_path + ": " + e.what());
    }
    if (!file.is_object()) throw Error("config " + config_path + " must hold a JSON object");
    apply_patch(merged, file);
    lr_set = lr_set || touches_lr(file);
  }
  apply_patch(merged, flags);
  lr_set = lr_set || touches_lr(flags);
  for (const auto& item : overrides) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--set expects key=value, got '" + item + "'");
    std::string key = item.substr(0, eq);
    std::string raw = item.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
      value = raw;
    }
    nlohmann::json patch;
    auto dot = key.find('.');
    if (dot == std::string::npos) {
      patch[key] = value;
    } else {
      patch[key.substr(0, dot)][key.substr(dot + 1)] = value;
    }
    apply_patch(merged, patch);
    lr_set = lr_set || touches_lr(patch);
  }
  // Dense external embeddings get the fine-tuning rate unless one is given.
  if (!lr_set && merged["encoder"]["kind"] == "embedding_file") merged["train"]["learning_rate"] = 3e-5;
  return merged;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out) throw Error("failed writing " + path);
}

void echo_config(const RunConfig& c, const std::string& output) {
  write_file(output + ".config.json", to_json(c).dump(2) + "\n");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(message);
}

bool looks_like_conll(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    return line.rfind("# ", 0) == 0;
  }
  return false;
}

struct LoadedModels {
  std::optional<CrfModel> crf_bio;
  std::optional<CrfModel> crf_bmeo;
  std::optional<SpanModel> span;
  SpanDecodeConfig decode;
  std::map<std::string, std::shared_ptr<const Encoder>> encoders;  // by encoder digest

  const Encoder& encoder_for(const EncoderConfig& c) const { return *encoders.at(digest(c)); }
  std::size_t count() const { return (crf_bio ? 1 : 0) + (crf_bmeo ? 1 : 0) + (span ? 1 : 0); }
};

LoadedModels load_models(const RunConfig& c) {
  LoadedModels m;
  auto add_encoder = [&](EncoderConfig cfg) -> EncoderConfig {
    if (cfg.kind == EncoderKind::EmbeddingFile && !c.sidecar.empty()) cfg.sidecar_path = c.sidecar;
    std::string key = digest(cfg);
    if (!m.encoders.count(key)) m.encoders[key] = make_encoder(cfg);
    return cfg;
  };
  for (const auto& path : c.models) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("model " + path + ": " + e.what());
    }
    std::string kind = j.value("kind", std::string());
    if (kind == "crf") {
      CrfModel model = crf_model_from_json(j);
      model.encoder = add_encoder(model.encoder);
      auto& slot = *model.scheme() == TagScheme::BIO ? m.crf_bio : m.crf_bmeo;
      if (slot) throw Error("two CRF models with the same scheme given");
      slot = std::move(model);
    } else if (kind == "span") {
      if (m.span) throw Error("two span models given");
      SpanModel model = span_model_from_json(j, &m.decode);
      model.encoder = add_encoder(model.encoder);
      m.span = std::move(model);
    } else {
      throw Error("model " + path + " has unknown kind '" + kind + "'");
    }
  }
  return m;
}

struct SentencePrediction {
  std::optional<TagSequence> crf_bio;
  std::optional<TagSequence> crf_bmeo;  // converted to BIO
  std::optional<TagSequence> span;
  TagSequence final_tags;
};

SentencePrediction predict_sentence(const LoadedModels& m, const TokenizedSentence& s, bool ensemble) {
  SentencePrediction p;
  const std::size_t n = s.tokens.size();
  if (m.crf_bio) p.crf_bio = viterbi_decode(*m.crf_bio, m.encoder_for(m.crf_bio->encoder).encode(s));
  if (m.crf_bmeo) p.crf_bmeo = bmeo_to_bio(viterbi_decode(*m.crf_bmeo, m.encoder_for(m.crf_bmeo->encoder).encode(s)));
  if (m.span) {
    TokenLabels labels = predict_token_labels(*m.span, m.encoder_for(m.span->encoder).encode(s));
    p.span = spans_to_bio(decode_spans(labels.start, labels.end, m.decode), n);
  }
  if (ensemble) {
    p.final_tags = majority_vote({*p.crf_bio, *p.crf_bmeo, *p.span});
  } else {
    p.final_tags = p.crf_bio ? *p.crf_bio : p.crf_bmeo ? *p.crf_bmeo : *p.span;
  }
  return p;
}

std::vector<SentencePrediction> predict_all(const LoadedModels& m, const std::vector<TokenizedSentence>& sentences,
                                            bool ensemble, unsigned threads) {
  std::vector<SentencePrediction> out(sentences.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, sentences.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < sentences.size(); ++i) out[i] = predict_sentence(m, sentences[i], ensemble);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < sentences.size(); i += workers) out[i] = predict_sentence(m, sentences[i], ensemble);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<Corpus> load_inputs(const RunConfig& c, std::ostream& err, bool& had_errors) {
  std::vector<Corpus> corpora;
  for (const auto& path : c.inputs) corpora.push_back(load_corpus(path, c.alias_table, err, had_errors));
  return corpora;
}

std::vector<TokenizedSentence> training_sentences(const RunConfig& c, std::ostream& err, bool& had_errors) {
  std::vector<Corpus> corpora = load_inputs(c, err, had_errors);
  std::vector<TokenizedSentence> out;
  if (uses_expansion(c.mode)) {
    MentionDictionary dict = build_dictionary(corpora);
    ExpandedDataset expanded = expand(corpora, dict);
    for (auto& s : expanded.sentences) out.push_back(std::move(s.sentence));
  } else {
    for (auto& corpus : corpora) {
      for (auto& s : corpus.sentences) out.push_back(std::move(s));
    }
  }
  return out;
}

std::string stem_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

}  // namespace

Corpus load_corpus(const std::string& path, const std::string& alias_table, std::ostream& err, bool& had_errors) {
  Corpus corpus;
  corpus.name = stem_of(path);
  if (looks_like_conll(path)) {
    corpus.sentences = sentences_of(read_conll_file(path));
    return corpus;
  }
  AliasTable aliases = alias_table.empty() ? AliasTable::defaults() : AliasTable::load_file(alias_table);
  ParseResult parsed = parse_pubtator_file(path, aliases);
  std::vector<Diagnostic> diags = std::move(parsed.diagnostics);
  for (const auto& doc : parsed.documents) {
    for (auto& s : split_sentences(doc, &diags)) corpus.sentences.push_back(std::move(s));
  }
  for (const auto& d : diags) {
    err << path << ": " << to_string(d) << '\n';
    if (d.severity == Diagnostic::Severity::Rejection) had_errors = true;
  }
  return corpus;
}

int cmd_convert(const RunConfig& c, std::ostream& err) {
  require(c.inputs.size() == 1, "convert takes exactly one input file");
  require(!c.output.empty(), "convert needs --out");
  bool had_errors = false;
  AliasTable aliases = c.alias_table.empty() ? AliasTable::defaults() : AliasTable::load_file(c.alias_table);
  ParseResult parsed = parse_pubtator_file(c.inputs.front(), aliases);
  std::vector<Diagnostic> diags = std::move(parsed.diagnostics);
  std::vector<TokenizedSentence> sentences;
  for (const auto& doc : parsed.documents) {
    for (auto& s : split_sentences(doc, &diags)) sentences.push_back(std::move(s));
  }
  for (const auto& d : diags) {
    err << c.inputs.front() << ": " << to_string(d) << '\n';
    if (d.severity == Diagnostic::Severity::Rejection) had_errors = true;
  }
  std::ostringstream os;
  write_conll(os, sentences);
  write_file(c.output, os.str());
  echo_config(c, c.output);
  return had_errors ? 1 : 0;
}

int cmd_expand(const RunConfig& c, std::ostream& err) {
  require(!c.inputs.empty(), "expand needs at least one corpus");
  require(!c.output.empty(), "expand needs --out");
  bool had_errors = false;
  std::vector<Corpus> corpora = load_inputs(c, err, had_errors);
  MentionDictionary dict = build_dictionary(corpora);
  ExpandedDataset expanded = expand(corpora, dict);

  std::vector<TokenizedSentence> sentences;
  for (const auto& s : expanded.sentences) sentences.push_back(s.sentence);
  std::ostringstream conll;
  write_conll(conll, sentences);
  write_file(c.output, conll.str());
  std::ostringstream dict_text;
  dict.write(dict_text);
  write_file(c.dictionary.empty() ? c.output + ".dict.tsv" : c.dictionary, dict_text.str());
  write_file(c.stats.empty() ? c.output + ".stats.json" : c.stats, stats_to_json(expanded, dict).dump(2) + "\n");
  echo_config(c, c.output);
  return had_errors ? 1 : 0;
}

int cmd_train(const RunConfig& c, std::ostream& err) {
  require(c.pattern == "crf-bio" || c.pattern == "crf-bmeo" || c.pattern == "span",
          "train needs --pattern crf-bio, crf-bmeo or span");
  require(!c.inputs.empty(), "train needs training data");
  require(!c.output.empty(), "train needs --out");
  bool had_errors = false;
  std::vector<TokenizedSentence> train = training_sentences(c, err, had_errors);
  std::optional<std::vector<TokenizedSentence>> dev;
  if (!c.dev.empty()) dev = load_corpus(c.dev, c.alias_table, err, had_errors).sentences;
  std::unique_ptr<Encoder> encoder = make_encoder(c.encoder);

  TrainReport report;
  nlohmann::json model_json;
  if (c.pattern == "span") {
    SpanModel model = train_span(train, *encoder, c.train, dev ? &*dev : nullptr, &report);
    model_json = to_json(model, SpanDecodeConfig{c.max_span_length});
  } else {
    TagScheme scheme = c.pattern == "crf-bio" ? TagScheme::BIO : TagScheme::BMEO;
    CrfModel model = train_crf(train, *encoder, c.train, scheme, dev ? &*dev : nullptr, &report);
    model_json = to_json(model);
  }
  write_file(c.output, model_json.dump() + "\n");
  echo_config(c, c.output);
  return had_errors ? 1 : 0;
}

int cmd_predict(const RunConfig& c, std::ostream& err) {
  require(c.inputs.size() == 1, "predict takes exactly one data file");
  require(!c.output.empty(), "predict needs --out");
  LoadedModels models = load_models(c);
  const bool ensemble = uses_ensemble(c.mode);
  if (ensemble) {
    require(c.models.size() == 3 && models.crf_bio && models.crf_bmeo && models.span,
            "ensemble mode needs exactly three models: crf-bio, crf-bmeo and span");
  } else {
    require(c.models.size() == 1, "mode " + std::string(to_string(c.mode)) + " takes exactly one model");
  }
  bool had_errors = false;
  Corpus data = load_corpus(c.inputs.front(), c.alias_table, err, had_errors);
  std::vector<SentencePrediction> preds = predict_all(models, data.sentences, ensemble, c.threads);
  std::vector<ConllSentence> rows;
  rows.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) rows.push_back({data.sentences[i], preds[i].final_tags});
  std::ostringstream os;
  write_conll(os, rows);
  write_file(c.output, os.str());
  echo_config(c, c.output);
  return had_errors ? 1 : 0;
}

int cmd_evaluate(const RunConfig& c, std::ostream& err) {
  require(!c.gold.empty() && !c.predictions.empty(), "evaluate needs --gold and --pred");
  require(!c.output.empty(), "evaluate needs --out");
  ReportFormat format = parse_report_format(c.format);
  std::vector<ConllSentence> gold = read_conll_file(c.gold);
  std::vector<ConllSentence> pred = read_conll_file(c.predictions);
  if (gold.size() != pred.size()) {
    err << "sentence count mismatch: gold has " << gold.size() << ", predictions have " << pred.size() << '\n';
    return 1;
  }
  std::vector<std::vector<TokenSpan>> g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& gs = gold[i].sentence;
    const auto& ps = pred[i].sentence;
    if (gs.tokens.size() != ps.tokens.size()) {
      err << "token count mismatch in sentence " << i << " (doc " << gs.doc_id << "): gold " << gs.tokens.size()
          << ", predictions " << ps.tokens.size() << '\n';
      return 1;
    }
    if (gs.tokens != ps.tokens || gs.doc_id != ps.doc_id) {
      err << "token mismatch in sentence " << i << " (doc " << gs.doc_id << ")\n";
      return 1;
    }
    if (!pred[i].predicted) {
      err << "prediction file has no predicted-tag column (sentence " << i << ")\n";
      return 1;
    }
    g.push_back(gs.gold_spans);
    p.push_back(tags_to_spans(*pred[i].predicted));
  }
  EvalReport report = exact_match_prf(g, p);
  report.dataset_id = c.dataset_id.empty() ? stem_of(c.gold) : c.dataset_id;
  report.model_id = c.model_id.empty() ? stem_of(c.predictions) : c.model_id;
  write_file(c.output, emit_report(report, format));
  echo_config(c, c.output);
  return 0;
}

int cmd_ensemble_check(const RunConfig& c, std::ostream& err) {
  require(c.inputs.size() == 1, "ensemble-check takes exactly one data file");
  require(!c.output.empty(), "ensemble-check needs --out");
  LoadedModels models = load_models(c);
  require(c.models.size() == 3 && models.crf_bio && models.crf_bmeo && models.span,
          "ensemble-check needs exactly three models: crf-bio, crf-bmeo and span");
  bool had_errors = false;
  Corpus data = load_corpus(c.inputs.front(), c.alias_table, err, had_errors);
  std::vector<SentencePrediction> preds = predict_all(models, data.sentences, true, c.threads);

  // Recompute the vote from independently decoded single-model outputs.
  LoadedModels single = load_models(c);
  std::size_t mismatches = 0;
  std::size_t invalid = 0;
  std::size_t three_way = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& s = data.sentences[i];
    TagSequence bio = viterbi_decode(*single.crf_bio, single.encoder_for(single.crf_bio->encoder).encode(s));
    TagSequence bmeo = viterbi_decode(*single.crf_bmeo, single.encoder_for(single.crf_bmeo->encoder).encode(s));
    TokenLabels labels = predict_token_labels(*single.span, single.encoder_for(single.span->encoder).encode(s));
    VoteInput votes = make_vote_input(bio, bmeo, decode_spans(labels.start, labels.end, single.decode));
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      const Tag& a = votes.crf_bio.labels[t];
      const Tag& b = votes.crf_bmeo.labels[t];
      const Tag& d = votes.span.labels[t];
      if (!(a == b) && !(a == d) && !(b == d)) ++three_way;
    }
    if (!(majority_vote(votes) == preds[i].final_tags)) {
      ++mismatches;
      err << "ensemble mismatch in doc " << s.doc_id << " sentence " << s.sentence_index << '\n';
    }
    if (!is_valid(preds[i].final_tags)) ++invalid;
  }
  nlohmann::json summary{{"sentences", preds.size()},
                         {"mismatches", mismatches},
                         {"invalid_outputs", invalid},
                         {"three_way_disagreements", three_way}};
  write_file(c.output, summary.dump(2) + "\n");
  echo_config(c, c.output);
  return (mismatches == 0 && invalid == 0 && !had_errors) ? 0 : 1;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mutation mention recognition: CRF and span taggers with majority voting", "mutner"};
  app.require_subcommand(1);

  struct Common {
    std::string config;
    std::vector<std::string> sets;
    nlohmann::json flags = nlohmann::json::object();
  };
  std::map<std::string, Common> common;

  auto add_common = [&](CLI::App* sub) {
    Common& c = common[sub->get_name()];
    sub->add_option("--config", c.config, "JSON run configuration");
    sub->add_option("--set", c.sets, "override, key=value (repeatable)");
    return &c;
  };

  std::string in_path, out_path, aliases, dict_path, stats_path, pattern, mode, dev, gold, pred, format, sidecar;
  std::vector<std::string> inputs, models;

  auto* convert = app.add_subcommand("convert", "PubTator corpus to token/tag file");
  add_common(convert);
  convert->add_option("input", inputs, "PubTator file");
  convert->add_option("--out", out_path);
  convert->add_option("--aliases", aliases, "type alias table");

  auto* expand_cmd = app.add_subcommand("expand", "merge corpora, keeping dictionary-matching negatives");
  add_common(expand_cmd);
  expand_cmd->add_option("inputs", inputs, "corpora (PubTator or token/tag)");
  expand_cmd->add_option("--out", out_path);
  expand_cmd->add_option("--dict", dict_path);
  expand_cmd->add_option("--stats", stats_path);
  expand_cmd->add_option("--aliases", aliases);

  auto* train = app.add_subcommand("train", "train one recognition pattern");
  add_common(train);
  train->add_option("data", inputs, "training corpora");
  train->add_option("--pattern", pattern, "crf-bio | crf-bmeo | span");
  train->add_option("--out", out_path);
  train->add_option("--mode", mode, "raw | ensemble | expanded | expanded+ensemble");
  train->add_option("--dev", dev);
  train->add_option("--aliases", aliases);

  auto* predict = app.add_subcommand("predict", "tag a corpus");
  add_common(predict);
  predict->add_option("data", inputs);
  predict->add_option("--model", models, "model file (repeatable)");
  predict->add_option("--mode", mode);
  predict->add_option("--out", out_path);
  predict->add_option("--sidecar", sidecar);
  predict->add_option("--aliases", aliases);

  auto* evaluate = app.add_subcommand("evaluate", "exact-match precision/recall/F1");
  add_common(evaluate);
  evaluate->add_option("--gold", gold);
  evaluate->add_option("--pred", pred);
  evaluate->add_option("--format", format, "json | tsv");
  evaluate->add_option("--out", out_path);

  auto* check = app.add_subcommand("ensemble-check", "cross-check ensemble output against the three single models");
  add_common(check);
  check->add_option("data", inputs);
  check->add_option("--model", models);
  check->add_option("--out", out_path);
  check->add_option("--sidecar", sidecar);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  CLI::App* sub = app.get_subcommands().front();
  Common& cm = common[sub->get_name()];
  auto& f = cm.flags;
  if (!inputs.empty()) f["inputs"] = inputs;
  if (!out_path.empty()) f["output"] = out_path;
  if (!aliases.empty()) f["alias_table"] = aliases;
  if (!dict_path.empty()) f["dictionary"] = dict_path;
  if (!stats_path.empty()) f["stats"] = stats_path;
  if (!pattern.empty()) f["pattern"] = pattern;
  if (!mode.empty()) f["mode"] = mode;
  if (!dev.empty()) f["dev"] = dev;
  if (!gold.empty()) f["gold"] = gold;
  if (!pred.empty()) f["predictions"] = pred;
  if (!format.empty()) f["format"] = format;
  if (!models.empty()) f["models"] = models;
  if (!sidecar.empty()) f["sidecar"] = sidecar;

  try {
    RunConfig config = run_config_from_json(merge_config(cm.config, cm.sets, f));
    const std::string name = sub->get_name();
    if (name == "convert") return cmd_convert(config, err);
    if (name == "expand") return cmd_expand(config, err);
    if (name == "train") return cmd_train(config, err);
    if (name == "predict") return cmd_predict(config, err);
    if (name == "evaluate") return cmd_evaluate(config, err);
    return cmd_ensemble_check(config, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace mutner
