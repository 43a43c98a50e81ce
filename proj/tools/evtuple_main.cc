// evtuple: train, predict, score and synth commands.
//
// Exit codes: 0 success, 1 usage/config error, 2 data or format error,
// 3 runtime failure.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evtuple/corpus.h"
#include "evtuple/errors.h"
#include "evtuple/evaluator.h"
#include "evtuple/inferencer.h"
#include "evtuple/model.h"
#include "evtuple/trainer.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evtuple;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

const std::vector<std::string> kRunKeys = {"train_path", "dev_path",  "schema_path",
                                           "output_dir", "device",    "encoder",
                                           "decoder",    "train",     "inference"};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

// "a.b.c=value"; the value is parsed as JSON when possible, else kept as a
// string.
void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  json* node = &config;
  size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    node = &child;
    start = dot + 1;
  }
}

std::string need_string(const json& config, const std::string& key) {
  if (!config.contains(key) || !config.at(key).is_string()) {
    throw ConfigError("config key '" + key + "' is required");
  }
  return config.at(key).get<std::string>();
}

void need_file(const std::string& path, const std::string& key) {
  if (!fs::is_regular_file(path)) {
    throw ConfigError("config key '" + key + "': no such file '" + path + "'");
  }
}

void print_summary(std::ostream& out, const EvalReport& report) {
  out << report.to_table();
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
  json config = read_json_file(config_path);
  for (const auto& o : overrides) apply_override(config, o);
  for (const auto& [key, value] : config.items()) {
    if (std::find(kRunKeys.begin(), kRunKeys.end(), key) == kRunKeys.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  const std::string train_path = need_string(config, "train_path");
  const std::string schema_path = need_string(config, "schema_path");
  const std::string output_dir = need_string(config, "output_dir");
  need_file(train_path, "train_path");
  need_file(schema_path, "schema_path");
  std::string dev_path;
  if (config.contains("dev_path") && !config.at("dev_path").is_null()) {
    dev_path = need_string(config, "dev_path");
    need_file(dev_path, "dev_path");
  }
  const std::string device = config.value("device", std::string("cpu"));
  if (device != "cpu") throw ConfigError("device '" + device + "' is not available in this build");

  const EncoderConfig enc = EncoderConfig::from_json(config.value("encoder", json::object()));
  enc.validate();
  const DecoderConfig dec = DecoderConfig::from_json(config.value("decoder", json::object()));
  dec.validate();
  const TrainConfig tc = TrainConfig::from_json(config.value("train", json::object()));
  const InferenceConfig inf = InferenceConfig::from_json(config.value("inference", json::object()));

  const LabelSchema schema = LabelSchema::load(schema_path);
  const auto train_set = load_corpus(train_path, schema);
  if (train_set.empty()) throw FormatError("training corpus '" + train_path + "' is empty");
  std::vector<CorpusExample> dev_set;
  if (!dev_path.empty()) dev_set = load_corpus(dev_path, schema);

  fs::create_directories(output_dir);
  json resolved = config;
  resolved["encoder"] = enc.to_json();
  resolved["decoder"] = dec.to_json();
  resolved["train"] = tc.to_json();
  resolved["inference"] = inf.to_json();
  write_json_file(fs::path(output_dir) / "config.json", resolved);

  std::ofstream log(fs::path(output_dir) / "train_log.jsonl");
  log << json{{"config", resolved}}.dump() << '\n';
  Model model = Model::create(schema, build_vocab(train_set), train_set, enc, dec, tc.seed);
  std::cerr << "parameters: " << model.params().scalar_count() << ", d_h " << enc.width()
            << ", train " << train_set.size() << ", dev " << dev_set.size() << '\n';
  const TrainResult result = train(model, train_set, dev_set, tc, inf, [&](const EpochLog& e) {
    log << e.to_json().dump() << '\n';
    log.flush();
    std::cerr << "epoch " << e.epoch << " loss " << e.loss;
    if (e.has_dev) std::cerr << " dev ARC F1 " << e.dev_f1[3];
    std::cerr << " (" << e.seconds << " s)\n";
  });

  json provenance = {{"config", resolved},
                     {"max_tuples", result.max_tuples},
                     {"best_epoch", result.best_epoch}};
  if (!dev_set.empty()) provenance["best_dev_arc_f1"] = result.best_dev_arc_f1;
  model.save((fs::path(output_dir) / "model.ckpt").string(), provenance);

  if (!dev_set.empty()) {
    const EvalReport report = evaluate_model(model, dev_set, result.max_tuples, inf);
    json j = report.to_json();
    j["config"] = resolved;
    j["best_epoch"] = result.best_epoch;
    write_json_file(fs::path(output_dir) / "dev_report.json", j);
    std::cout << "best epoch " << result.best_epoch << '\n';
    print_summary(std::cout, report);
  }
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& input, const std::string& output,
                int max_steps, const std::vector<std::string>& overrides) {
  need_file(checkpoint, "checkpoint");
  need_file(input, "input");
  const Model model = Model::load(checkpoint);
  const json provenance = Model::read_provenance(checkpoint);
  json inf_json = provenance.contains("config")
                      ? provenance["config"].value("inference", json::object())
                      : json::object();
  for (const auto& o : overrides) apply_override(inf_json, o);
  const InferenceConfig inf = InferenceConfig::from_json(inf_json);
  if (max_steps <= 0) max_steps = provenance.value("max_tuples", 0);
  if (max_steps <= 0) throw ConfigError("--max-steps is required for this checkpoint");

  const auto examples = load_corpus(input, model.schema());
  const auto predictions = predict_corpus(model, examples, max_steps, inf);
  std::ofstream out(output);
  if (!out) throw Error("cannot write '" + output + "'");
  for (size_t i = 0; i < examples.size(); ++i) {
    out << json{{"id", examples[i].id}, {"events", events_to_json(predictions[i])}}.dump()
        << '\n';
  }
  write_json_file(output + ".meta.json", {{"checkpoint", checkpoint},
                                          {"input", input},
                                          {"max_steps", max_steps},
                                          {"inference", inf.to_json()},
                                          {"training", provenance}});
  std::cerr << "wrote " << examples.size() << " predictions to " << output << '\n';
  return 0;
}

int cmd_score(const std::string& pred_path, const std::string& gold_path,
              const std::vector<std::string>& breakdowns, bool span_only_ai,
              const std::string& json_out, const std::string& table_out) {
  need_file(pred_path, "pred");
  need_file(gold_path, "gold");
  for (const auto& rule : breakdowns) {
    if (std::find(kBreakdownRules.begin(), kBreakdownRules.end(), rule) == kBreakdownRules.end()) {
      throw ConfigError("unknown breakdown '" + rule + "'");
    }
  }
  const auto pred = load_events_file(pred_path);
  const auto gold = load_events_file(gold_path);
  const auto aligned = align_predictions(pred, gold);
  std::vector<std::vector<EventRecord>> gold_events;
  for (const auto& g : gold) gold_events.push_back(g.events);
  ScoreOptions options;
  options.span_only_ai = span_only_ai;
  const EvalReport report = score(aligned, gold_events, breakdowns, options);
  json j = report.to_json();
  j["config"] = {{"pred", pred_path},
                 {"gold", gold_path},
                 {"breakdowns", breakdowns},
                 {"span_only_ai", span_only_ai}};
  if (!json_out.empty()) write_json_file(json_out, j);
  if (!table_out.empty()) {
    std::ofstream out(table_out);
    if (!out) throw Error("cannot write '" + table_out + "'");
    out << report.to_table();
  }
  print_summary(std::cout, report);
  return 0;
}

int cmd_synth(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& out_dir) {
  json config = config_path.empty() ? json::object() : read_json_file(config_path);
  for (const auto& o : overrides) apply_override(config, o);
  const SyntheticConfig sc = SyntheticConfig::from_json(config);
  if (sc.num_sentences <= 0) throw ConfigError("num_sentences must be positive");
  const SyntheticCorpus corpus = generate_synthetic(sc);

  // Split in the 529/30/40 document proportions of the standard ACE split.
  const size_t n = corpus.examples.size();
  const auto n_train = static_cast<size_t>(std::lround(static_cast<double>(n) * 529.0 / 599.0));
  const auto n_dev = std::min(
      n - n_train, static_cast<size_t>(std::lround(static_cast<double>(n) * 30.0 / 599.0)));
  const std::span<const CorpusExample> all(corpus.examples);

  fs::create_directories(out_dir);
  save_corpus((fs::path(out_dir) / "train.jsonl").string(), all.subspan(0, n_train));
  save_corpus((fs::path(out_dir) / "dev.jsonl").string(), all.subspan(n_train, n_dev));
  save_corpus((fs::path(out_dir) / "test.jsonl").string(), all.subspan(n_train + n_dev));
  corpus.schema.save((fs::path(out_dir) / "schema.json").string());
  json flags = json::array();
  for (size_t i = 0; i < n; ++i) {
    const auto& f = corpus.flags[i];
    flags.push_back({{"id", corpus.examples[i].id},
                     {"multi_event", f.multi_event},
                     {"shared_argument", f.shared_argument},
                     {"overlapping_arguments", f.overlapping_arguments}});
  }
  write_json_file(fs::path(out_dir) / "synth.json",
                  {{"config", sc.to_json()},
                   {"splits", {{"train", n_train}, {"dev", n_dev}, {"test", n - n_train - n_dev}}},
                   {"flags", flags}});
  std::cerr << "wrote " << n_train << "/" << n_dev << "/" << n - n_train - n_dev
            << " sentences to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence-to-tuple event extraction"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto* train_cmd = app.add_subcommand("train", "train a model from a run config");
  train_cmd->add_option("-c,--config", config_path, "run config (JSON)")->required();
  train_cmd->add_option("--set", overrides, "override a config key, e.g. train.epochs=5");

  std::string checkpoint, input, output;
  int max_steps = 0;
  auto* predict_cmd = app.add_subcommand("predict", "extract events from a corpus");
  predict_cmd->add_option("-m,--checkpoint", checkpoint, "model checkpoint")->required();
  predict_cmd->add_option("-i,--input", input, "corpus JSONL")->required();
  predict_cmd->add_option("-o,--output", output, "prediction JSONL")->required();
  predict_cmd->add_option("--max-steps", max_steps, "decoding steps (default: from training)");
  predict_cmd->add_option("--set", overrides, "override an inference key, e.g. max_trigger_len=7");

  std::string pred_path, gold_path, json_out, table_out;
  std::vector<std::string> breakdowns;
  bool span_only_ai = false;
  auto* score_cmd = app.add_subcommand("score", "score predictions against gold");
  score_cmd->add_option("-p,--pred", pred_path, "prediction JSONL")->required();
  score_cmd->add_option("-g,--gold", gold_path, "gold corpus JSONL")->required();
  score_cmd->add_option("-b,--breakdown", breakdowns,
                        "event-count, argument-count, overlap or roles-per-argument");
  score_cmd->add_flag("--span-only-ai", span_only_ai, "credit argument spans regardless of type");
  score_cmd->add_option("--json", json_out, "write the report as JSON");
  score_cmd->add_option("--table", table_out, "write the report as a text table");

  std::string synth_config, out_dir;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus");
  synth_cmd->add_option("-c,--config", synth_config, "generator config (JSON)");
  synth_cmd->add_option("--set", overrides, "override a generator key, e.g. seed=3");
  synth_cmd->add_option("-o,--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(config_path, overrides);
    if (*predict_cmd) return cmd_predict(checkpoint, input, output, max_steps, overrides);
    if (*score_cmd) {
      return cmd_score(pred_path, gold_path, breakdowns, span_only_ai, json_out, table_out);
    }
    if (*synth_cmd) return cmd_synth(synth_config, overrides, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const SchemaError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const InvalidInputError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const AlignmentError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
