// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evtuple/evaluator.h"
#include "evtuple/inferencer.h"
#include "evtuple/model.h"
#include "evtuple/trainer.h"
#include "test_support.h"

namespace fs = std::filesystem;
using namespace evtuple;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "; failed: ";
      else detail << ", ";
      detail << what;
      pass = false;
    }
  }
};

// ------------------------------------------------------------------ 1

Outcome codec_round_trip() {
  Outcome o;
  const auto t0 = Clock::now();
  const LabelSchema schema = LabelSchema::load(testing::fixture("table1_schema.json"));
  const auto table1 = load_corpus(testing::fixture("table1.jsonl"), schema);
  o.expect(format_tuples(table1[0].gold).find("7 7 Movement:Transport 8 11 Artifact") !=
               std::string::npos,
           "deploy tuple");
  o.expect(format_tuples(table1[1].gold) == "8 8 Conflict:Attack 1 1 NA", "invasion tuple");

  std::mt19937_64 rng(101);
  const LabelSchema toy = testing::toy_schema(5, 6);
  int failures = 0;
  for (int i = 0; i < 500; ++i) {
    const int raw = 1 + static_cast<int>(rng() % 20);
    const CorpusExample ex = testing::random_example(rng, raw, toy, 3, 3);
    const auto records = decode_frames(ex.gold, ex.sentence);
    const bool ok = encode_frames(ex.sentence, records, toy) == ex.gold &&
                    parse_tuples(format_tuples(ex.gold)) == ex.gold &&
                    canonicalize(records) == records;
    bool valid = true;
    for (const auto& t : ex.gold) valid = valid && is_valid_tuple(t, ex.sentence.size());
    failures += !(ok && valid);
  }
  for (const auto& ex : table1) {
    failures += encode_frames(ex.sentence, decode_frames(ex.gold, ex.sentence), schema) != ex.gold;
  }
  const double secs = seconds_since(t0);
  o.expect(failures == 0, std::to_string(failures) + " round-trip mismatches");
  o.expect(secs < 1.0, "took " + std::to_string(secs) + " s");
  o.detail << " (" << secs << " s)";
  return o;
}

// ------------------------------------------------------------------ 2

Outcome decoding_matches_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  const LabelSchema schema = testing::toy_schema(4, 5);
  int span_mismatch = 0, tuple_mismatch = 0;
  for (int it = 0; it < 1000; ++it) {
    const int n = 3 + static_cast<int>(rng() % 10);  // 3..12
    const Vector s = testing::random_distribution(rng, n, 0.1);
    const Vector e = testing::random_distribution(rng, n, 0.1);
    const SpanRegion region = SpanRegion::with_sentinel(n, static_cast<int>(rng() % 2));
    std::vector<int> forbidden;
    std::set<int> forbidden_set;
    for (int i = 2; i < n; ++i) {
      if (rng() % 5 == 0) {
        forbidden.push_back(i);
        forbidden_set.insert(i);
      }
    }
    const auto got = best_span(testing::to_std(s), testing::to_std(e), forbidden, region);
    const auto want = testing::oracle_best_span(testing::to_std(s), testing::to_std(e),
                                                forbidden_set, region.allowed, region.singletons,
                                                0);
    if (got.has_value() != want.has_value() ||
        (got && (got->start != want->b || got->end != want->e || got->score != want->score))) {
      ++span_mismatch;
    }
    const StepOutput step = testing::random_step(rng, n, 5, 6, 0.2);
    if (infer_tuple(step, schema) != testing::oracle_infer_tuple(step, schema)) ++tuple_mismatch;
  }
  const double secs = seconds_since(t0);
  o.expect(span_mismatch == 0, std::to_string(span_mismatch) + " best_span mismatches");
  o.expect(tuple_mismatch == 0, std::to_string(tuple_mismatch) + " infer_tuple mismatches");
  o.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
  o.detail << " (" << secs << " s)";
  return o;
}

// ------------------------------------------------------------------ 3

Outcome loss_values() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst_closed = 0.0;
  for (int n : {3, 7, 12, 40}) {
    for (int p : {1, 5, 33}) {
      for (int r : {1, 6, 22}) {
        const LabelSchema schema = testing::toy_schema(p, r);
        const StepOutput s{Vector::Constant(n, 1.0 / n),       Vector::Constant(n, 1.0 / n),
                           Vector::Constant(n, 1.0 / n),       Vector::Constant(n, 1.0 / n),
                           Vector::Constant(p + 1, 1.0 / (p + 1)),
                           Vector::Constant(r + 1, 1.0 / (r + 1)), {}, {}};
        const double closed = 4 * std::log(n) + std::log(p + 1) + std::log(r + 1);
        const EventTuple real{2, std::min(n - 1, 3), "Type0", 1, 1, "NA"};
        for (const EventTuple& gold : {EventTuple::null_tuple(), real}) {
          worst_closed = std::max(worst_closed, std::abs(tuple_loss(s, gold, schema) - closed));
        }
      }
    }
  }
  o.expect(worst_closed <= 1e-9, "closed form off by " + std::to_string(worst_closed));

  std::mt19937_64 rng(303);
  const LabelSchema schema = testing::toy_schema(4, 5);
  double worst_batch = 0.0;
  for (int it = 0; it < 100; ++it) {
    const int b = 1 + static_cast<int>(rng() % 6);
    const int et = 1 + static_cast<int>(rng() % 4);
    const bool pad = it % 2 == 0;
    Graph g(false);
    auto row = [&](const Vector& v) { return g.constant(Matrix(v.transpose())); };
    std::vector<std::vector<StepVars>> outputs;
    std::vector<std::vector<StepOutput>> plain;
    std::vector<std::vector<EventTuple>> gold;
    Eigen::MatrixXi mask = Eigen::MatrixXi::Zero(b, et);
    for (int i = 0; i < b; ++i) {
      const int raw = 3 + static_cast<int>(rng() % 8);
      auto ex = testing::random_example(rng, raw, schema, 2, 2);
      if (static_cast<int>(ex.gold.size()) > et) ex.gold.resize(static_cast<size_t>(et));
      for (size_t t = 0; t < ex.gold.size(); ++t) mask(i, static_cast<int>(t)) = 1;
      ex.gold.resize(static_cast<size_t>(et), EventTuple::null_tuple());
      gold.push_back(ex.gold);
      std::vector<StepOutput> ps;
      std::vector<StepVars> vs;
      for (int t = 0; t < et; ++t) {
        const StepOutput s = testing::random_step(rng, raw + 2, 5, 6, 0.1);
        ps.push_back(s);
        vs.push_back({row(s.s_tr), row(s.e_tr), row(s.s_ar), row(s.e_ar), row(s.event_type),
                      row(s.role), {}, {}});
      }
      plain.push_back(ps);
      outputs.push_back(vs);
    }
    const double got = batch_loss(g, outputs, gold, mask, pad, schema).scalar();
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < b; ++i) {
      for (int t = 0; t < et; ++t) {
        if (!pad && mask(i, t) == 0) continue;
        sum += testing::oracle_tuple_loss(plain[static_cast<size_t>(i)][static_cast<size_t>(t)],
                                          gold[static_cast<size_t>(i)][static_cast<size_t>(t)],
                                          schema);
        ++count;
      }
    }
    const double want = count == 0 ? 0.0 : sum / count;
    worst_batch = std::max(worst_batch, std::abs(got - want));
  }
  const double secs = seconds_since(t0);
  o.expect(worst_batch <= 1e-6, "batch loss off by " + std::to_string(worst_batch));
  o.expect(secs < 5.0, "took " + std::to_string(secs) + " s");
  o.detail << " (closed-form err " << worst_closed << ", batch err " << worst_batch << ", "
           << secs << " s)";
  return o;
}

// ------------------------------------------------------------------ 4

Outcome gradient_check() {
  Outcome o;
  const auto t0 = Clock::now();
  const LabelSchema schema = testing::toy_schema(3, 4);
  std::mt19937_64 rng(404);
  // Two sentences of five tokens (n = 7 with the sentinels), padded to a
  // common tuple count.
  std::vector<CorpusExample> batch;
  while (batch.size() < 2) {
    CorpusExample ex = testing::random_example(rng, 5, schema, 2, 2);
    if (ex.gold.size() >= 2 && !ex.gold[0].is_null()) batch.push_back(std::move(ex));
  }
  Model model = testing::toy_model(schema, batch, testing::toy_encoder(8, 4),
                                   testing::toy_decoder(6), 7);
  // The contextual encoder is a fixed random table.
  for (Parameter* p : model.params().all()) {
    if (p->name.rfind("contextual.", 0) == 0) p->trainable = false;
  }
  const int steps = static_cast<int>(std::max(batch[0].gold.size(), batch[1].gold.size())) + 1;
  Eigen::MatrixXi mask = Eigen::MatrixXi::Zero(2, steps);
  std::vector<std::vector<EventTuple>> gold;
  for (size_t b = 0; b < batch.size(); ++b) {
    auto g = batch[b].gold;
    for (size_t t = 0; t < g.size(); ++t) mask(static_cast<int>(b), static_cast<int>(t)) = 1;
    g.resize(static_cast<size_t>(steps), EventTuple::null_tuple());
    gold.push_back(g);
  }
  auto loss = [&](bool grad) {
    Graph g(grad);
    std::vector<std::vector<StepVars>> outputs;
    for (const auto& ex : batch) outputs.push_back(model.forward(g, ex.sentence, steps));
    Var l = batch_loss(g, outputs, gold, mask, true, schema);
    const double v = l.scalar();
    if (grad) {
      g.backward(l);
      g.accumulate_gradients();
    }
    return v;
  };
  model.params().zero_grad();
  loss(true);

  struct Entry {
    Parameter* p;
    Eigen::Index k;
  };
  std::vector<Entry> candidates;
  for (Parameter* p : model.params().all()) {
    if (!p->trainable) continue;
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      if (std::abs(p->grad.data()[k]) >= 1e-7) candidates.push_back({p, k});
    }
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  if (candidates.size() > 50) candidates.resize(50);
  o.expect(candidates.size() == 50, "only " + std::to_string(candidates.size()) + " entries");

  const double h = 1e-5;
  double worst = 0.0;
  std::string worst_name;
  for (const Entry& c : candidates) {
    double& x = c.p->value.data()[c.k];
    const double orig = x;
    x = orig + h;
    const double up = loss(false);
    x = orig - h;
    const double down = loss(false);
    x = orig;
    const double numeric = (up - down) / (2 * h);
    const double analytic = c.p->grad.data()[c.k];
    const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric));
    if (rel > worst) {
      worst = rel;
      worst_name = c.p->name + "[" + std::to_string(c.k) + "]";
    }
  }
  const double secs = seconds_since(t0);
  o.expect(worst < 1e-3, "max relative error " + std::to_string(worst) + " at " + worst_name);
  o.expect(secs < 60.0, "took " + std::to_string(secs) + " s");
  o.detail << " (50 entries, max rel err " << worst << ", " << secs << " s)";
  return o;
}

// ------------------------------------------------------------------ 5

Outcome synthetic_overfit() {
  Outcome o;
  const auto t0 = Clock::now();
  SyntheticConfig sc;
  sc.num_sentences = 280;
  sc.num_event_types = 5;
  sc.num_roles = 6;
  sc.multi_event_rate = 0.3;
  sc.shared_arg_rate = 0.2;
  sc.seed = 7;
  const SyntheticCorpus data = generate_synthetic(sc);
  const std::span<const CorpusExample> all(data.examples);
  const auto train_set = all.subspan(0, 200);
  const auto dev_set = all.subspan(200, 30);
  const auto test_set = all.subspan(230, 50);

  // Paper optimisation settings; widths reduced for CPU.
  EncoderConfig enc;
  enc.d_ctx = 64;
  enc.d_pos = enc.d_dep = enc.d_ent = enc.d_char = enc.d_c = 16;
  enc.contextual.layers = 1;
  enc.contextual.heads = 2;
  enc.contextual.ffn_dim = 128;
  enc.contextual.max_positions = 64;
  DecoderConfig dec;
  dec.d_p = 128;
  TrainConfig tc;  // epochs 40, batch 32, lr 1e-3, L2 1e-5, dropout 0.5 in the encoder
  Model model = Model::create(data.schema, build_vocab(train_set), train_set, enc, dec, 1);
  const TrainResult r = train(model, train_set, dev_set, tc, {}, [](const EpochLog& e) {
    std::cerr << "  epoch " << e.epoch << " loss " << e.loss << " dev ARC " << e.dev_f1[3]
              << '\n';
  });
  const double train_arc = evaluate_model(model, train_set, r.max_tuples).overall[Level::kARC].f1();
  const double test_arc = evaluate_model(model, test_set, r.max_tuples).overall[Level::kARC].f1();
  const double ratio = r.log.size() >= 5 ? r.log[4].loss / r.log[0].loss : 1.0;
  const double secs = seconds_since(t0);
  o.expect(static_cast<int>(r.log.size()) <= 40, "more than 40 epochs");
  o.expect(train_arc >= 0.95, "train ARC F1 " + std::to_string(train_arc));
  o.expect(test_arc >= 0.80, "held-out ARC F1 " + std::to_string(test_arc));
  o.expect(ratio < 0.5, "epoch-5/epoch-1 loss ratio " + std::to_string(ratio));
  o.expect(secs < 7200.0, "took " + std::to_string(secs) + " s");
  o.detail << " (train ARC " << train_arc << ", held-out ARC " << test_arc << ", loss ratio "
           << ratio << ", best epoch " << r.best_epoch << ", " << secs << " s)";
  return o;
}

// ------------------------------------------------------------------ 6

std::vector<std::vector<EventRecord>> events_of(const std::vector<IdentifiedEvents>& f) {
  std::vector<std::vector<EventRecord>> out;
  for (const auto& x : f) out.push_back(x.events);
  return out;
}

Outcome scorer() {
  Outcome o;
  const auto gold_file = load_events_file(testing::fixture("scorer_gold.jsonl"));
  const auto pred_file = load_events_file(testing::fixture("scorer_pred.jsonl"));
  const auto gold = events_of(gold_file);
  const auto pred = align_predictions(pred_file, gold_file);
  const EvalReport r = score(pred, gold);
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  const auto& ti = r.overall[Level::kTI];
  const auto& tc = r.overall[Level::kTC];
  o.expect(near(ti.precision(), 2.0 / 3) && near(ti.recall(), 0.5) && near(ti.f1(), 4.0 / 7),
           "TI");
  o.expect(near(tc.precision(), 1.0 / 3) && near(tc.recall(), 0.25) && near(tc.f1(), 2.0 / 7),
           "TC");

  // Identity and monotonicity on random data.
  std::mt19937_64 rng(606);
  const LabelSchema schema = testing::toy_schema(3, 3);
  int bad_identity = 0, bad_monotone = 0, bad_order = 0;
  // Classification levels never score above their identification levels.
  auto ordered = [](const Scores& x) {
    auto le = [](const LevelCounts& a, const LevelCounts& b) {
      return a.correct <= b.correct && a.precision() <= b.precision() &&
             a.recall() <= b.recall() && a.f1() <= b.f1();
    };
    return le(x[Level::kTC], x[Level::kTI]) && le(x[Level::kARC], x[Level::kAI]);
  };
  bad_order += !ordered(r.overall);
  for (int it = 0; it < 200; ++it) {
    const auto g = testing::random_example(rng, 7, schema, 3, 2);
    const auto p = testing::random_example(rng, 7, schema, 3, 2);
    const std::vector<std::vector<EventRecord>> gs = {decode_frames(g.gold, g.sentence)};
    std::vector<std::vector<EventRecord>> ps = {decode_frames(p.gold, p.sentence)};
    const Scores self = score(gs, gs).overall;
    for (Level l : kLevels) {
      if (self[l].gold > 0 &&
          (self[l].precision() != 1.0 || self[l].recall() != 1.0 || self[l].f1() != 1.0)) {
        ++bad_identity;
      }
    }
    const Scores before = score(ps, gs).overall;
    bad_order += !ordered(before);
    for (const auto& e : gs[0]) {
      ps[0].push_back(e);
      const Scores after = score(ps, gs).overall;
      for (Level l : kLevels) bad_monotone += after[l].correct < before[l].correct ||
                                              after[l].recall() < before[l].recall();
    }
  }
  o.expect(bad_identity == 0, "score(x, x) not all ones");
  o.expect(bad_order == 0, std::to_string(bad_order) + " corpora with TC > TI or ARC > AI");
  o.expect(bad_monotone == 0, "adding correct predictions lowered recall");
  return o;
}

// ------------------------------------------------------------------ 7

Outcome breakdowns() {
  Outcome o;
  SyntheticConfig sc;
  sc.num_sentences = 400;
  sc.overlap_arg_rate = 0.2;
  sc.seed = 77;
  const SyntheticCorpus data = generate_synthetic(sc);
  const auto gold = gold_records(data.examples);
  // Predictions: gold with some sentences dropped and some arguments removed.
  auto pred = gold;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (i % 4 == 0) pred[i].clear();
    if (i % 4 == 1) {
      for (auto& e : pred[i]) {
        if (!e.arguments.empty()) e.arguments.pop_back();
      }
    }
  }
  const std::vector<std::string> rules(kBreakdownRules.begin(), kBreakdownRules.end());
  const EvalReport r = score(pred, gold, rules);

  for (const std::string rule : {"event-count", "argument-count", "overlap"}) {
    // Each sentence falls in exactly one cell, and the cells add up.
    std::map<std::string, int64_t> per_cell;
    for (const auto& g : gold) ++per_cell[sentence_cell(rule, g)];
    int64_t total = 0;
    Scores sum;
    for (const auto& [cell, bc] : r.breakdowns.at(rule)) {
      total += bc.units;
      sum += bc.scores;
      o.expect(per_cell[cell] == bc.units, rule + ":" + cell + " size");
    }
    o.expect(total == static_cast<int64_t>(gold.size()), rule + " not exhaustive");
    for (Level l : kLevels) {
      o.expect(sum[l].gold == r.overall[l].gold && sum[l].predicted == r.overall[l].predicted &&
                   sum[l].correct == r.overall[l].correct,
               rule + " counts do not sum");
    }
  }
  int64_t flagged = 0;
  bool agree = true;
  for (size_t i = 0; i < gold.size(); ++i) {
    flagged += data.flags[i].multi_event;
    agree = agree && ((sentence_cell("event-count", gold[i]) == ">1") == data.flags[i].multi_event);
  }
  o.expect(agree, "multi-event cell disagrees with generator flags per sentence");
  o.expect(r.breakdowns.at("event-count").at(">1").units == flagged, "multi-event cell size");

  // Argument-span partition: every distinct gold or predicted argument span
  // is counted once.
  int64_t spans = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::set<Span> s;
    for (const std::vector<EventRecord>* side : {&gold[i], &std::as_const(pred[i])}) {
      for (const auto& e : *side) {
        for (const auto& a : e.arguments) s.insert(a.span);
      }
    }
    spans += static_cast<int64_t>(s.size());
  }
  int64_t units = 0;
  Scores arg_sum;
  for (const auto& [cell, bc] : r.breakdowns.at("roles-per-argument")) {
    units += bc.units;
    arg_sum += bc.scores;
  }
  o.expect(units == spans, "roles-per-argument not exhaustive");
  o.expect(arg_sum[Level::kARC].gold == r.overall[Level::kARC].gold &&
               arg_sum[Level::kARC].correct == r.overall[Level::kARC].correct,
           "roles-per-argument ARC counts do not sum");
  o.detail << " (" << gold.size() << " sentences, " << flagged << " multi-event)";
  return o;
}

// ------------------------------------------------------------------ 8

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(EVTUPLE_CLI) + " " + args + " >> " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome features_and_cli() {
  Outcome o;
  const LabelSchema schema = LabelSchema::load(testing::fixture("table1_schema.json"));
  const auto corpus = load_corpus(testing::fixture("table1.jsonl"), schema);
  EncoderConfig base = testing::toy_encoder(16, 4);
  base.d_pos = 3;
  base.d_dep = 5;
  base.d_ent = 7;
  base.d_c = 9;
  auto width = [&](const EncoderConfig& c) {
    const Model m = testing::toy_model(schema, corpus, c, testing::toy_decoder());
    Graph g(false);
    return static_cast<int>(m.encoder().encode(g, corpus[0].sentence).rows.cols());
  };
  const int full = width(base);
  o.expect(full == base.width(), "full width");
  const std::vector<std::pair<std::string, std::pair<bool EncoderConfig::*, int>>> toggles = {
      {"pos", {&EncoderConfig::use_pos, base.d_pos}},
      {"dep", {&EncoderConfig::use_dep, base.d_dep}},
      {"ent", {&EncoderConfig::use_ent, base.d_ent}},
      {"char", {&EncoderConfig::use_char, base.d_c}}};
  for (const auto& [name, toggle] : toggles) {
    EncoderConfig c = base;
    c.*(toggle.first) = false;
    o.expect(full - width(c) == toggle.second, "disabling " + name);
  }

  const auto t0 = Clock::now();
  const fs::path dir = fs::temp_directory_path() / ("evtuple_acceptance_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "cli.log";
  const nlohmann::json config = {
      {"train_path", (dir / "data/train.jsonl").string()},
      {"dev_path", (dir / "data/dev.jsonl").string()},
      {"schema_path", (dir / "data/schema.json").string()},
      {"output_dir", (dir / "run").string()},
      {"encoder",
       {{"d_ctx", 32}, {"d_pos", 8}, {"d_dep", 8}, {"d_ent", 8}, {"d_char", 8}, {"d_c", 8},
        {"contextual", {{"layers", 1}, {"heads", 2}, {"ffn_dim", 64}, {"max_positions", 64}}}}},
      {"decoder", {{"d_p", 32}}},
      {"train", {{"epochs", 3}, {"batch_size", 8}}}};
  std::ofstream(dir / "config.json") << config.dump(2);
  const fs::path data_dir = dir / "data";
  const fs::path pred_path = dir / "pred.jsonl";
  const int synth_rc =
      run_cli("synth --set num_sentences=20 --set seed=3 -o " + data_dir.string(), log);
  const int train_rc = run_cli("train -c " + (dir / "config.json").string(), log);
  const int predict_rc = run_cli("predict -m " + (dir / "run/model.ckpt").string() + " -i " +
                                     (data_dir / "test.jsonl").string() + " -o " +
                                     pred_path.string(),
                                 log);
  const int score_rc = run_cli("score -p " + pred_path.string() + " -g " +
                                   (data_dir / "test.jsonl").string() + " -b event-count",
                               log);
  const double secs = seconds_since(t0);
  o.expect(synth_rc == 0 && train_rc == 0 && predict_rc == 0 && score_rc == 0,
           "cli exit codes " + std::to_string(synth_rc) + "/" + std::to_string(train_rc) + "/" +
               std::to_string(predict_rc) + "/" + std::to_string(score_rc) + " (see " +
               log.string() + ")");
  o.expect(fs::exists(dir / "run/train_log.jsonl") && fs::exists(pred_path), "missing outputs");
  o.expect(secs < 300.0, "cli smoke took " + std::to_string(secs) + " s");
  if (o.pass) fs::remove_all(dir);
  o.detail << " (widths " << full << " -" << base.d_pos << "/-" << base.d_dep << "/-"
           << base.d_ent << "/-" << base.d_c << ", cli " << secs << " s)";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional criterion numbers restrict the run, e.g. "acceptance 1 2 6".
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"codec round trip", codec_round_trip},
      {"span decoding vs exhaustive oracle", decoding_matches_oracle},
      {"loss closed form and batch reference", loss_values},
      {"finite-difference gradient check", gradient_check},
      {"synthetic overfit", synthetic_overfit},
      {"scorer fixture, monotonicity, identity", scorer},
      {"breakdown partitions", breakdowns},
      {"feature toggles and cli smoke", features_and_cli},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "; exception: " << e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << number << "] " << criteria[i].first
              << o.detail.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
