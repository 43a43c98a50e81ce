#include "evtuple/evaluator.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "evtuple/corpus.h"
#include "evtuple/errors.h"

namespace evtuple {

using nlohmann::json;

std::string_view level_name(Level level) {
  switch (level) {
    case Level::kTI: return "TI";
    case Level::kTC: return "TC";
    case Level::kAI: return "AI";
    case Level::kARC: return "ARC";
  }
  return "?";
}

double LevelCounts::precision() const {
  return predicted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(predicted);
}

double LevelCounts::recall() const {
  return gold == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(gold);
}

double LevelCounts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

LevelCounts& LevelCounts::operator+=(const LevelCounts& o) {
  predicted += o.predicted;
  gold += o.gold;
  correct += o.correct;
  return *this;
}

Scores& Scores::operator+=(const Scores& o) {
  for (size_t i = 0; i < levels.size(); ++i) levels[i] += o.levels[i];
  return *this;
}

namespace {

struct TriggerUnit {
  Span span;
  std::string type;
  auto key() const { return std::tie(span, type); }
  bool operator<(const TriggerUnit& o) const { return key() < o.key(); }
};

struct ArgUnit {
  Span trigger;
  std::string type;
  Span span;
  std::string role;
  auto key() const { return std::tie(trigger, type, span, role); }
  bool operator<(const ArgUnit& o) const { return key() < o.key(); }
};

struct Units {
  std::vector<TriggerUnit> triggers;
  std::vector<ArgUnit> args;
};

Units units_of(std::span<const EventRecord> records) {
  std::set<TriggerUnit> triggers;
  std::set<ArgUnit> args;
  for (const EventRecord& e : records) {
    triggers.insert({e.trigger, e.type});
    for (const Argument& a : e.arguments) args.insert({e.trigger, e.type, a.span, a.role});
  }
  return {{triggers.begin(), triggers.end()}, {args.begin(), args.end()}};
}

// One-to-one matching under `key`: each key value pairs min(pred, gold) items.
template <class T, class KeyFn>
LevelCounts match(const std::vector<T>& pred, const std::vector<T>& gold, KeyFn key) {
  using K = decltype(key(pred.front()));
  std::map<K, std::pair<int64_t, int64_t>> counts;
  for (const T& u : pred) ++counts[key(u)].first;
  for (const T& u : gold) ++counts[key(u)].second;
  LevelCounts c;
  c.predicted = static_cast<int64_t>(pred.size());
  c.gold = static_cast<int64_t>(gold.size());
  for (const auto& [k, pg] : counts) c.correct += std::min(pg.first, pg.second);
  return c;
}

void score_args(const std::vector<ArgUnit>& pred, const std::vector<ArgUnit>& gold,
                const ScoreOptions& options, Scores& s) {
  if (options.span_only_ai) {
    s[Level::kAI] = match(pred, gold, [](const ArgUnit& u) { return u.span; });
  } else {
    s[Level::kAI] = match(pred, gold, [](const ArgUnit& u) { return std::make_pair(u.type, u.span); });
  }
  s[Level::kARC] = match(pred, gold, [](const ArgUnit& u) {
    return std::make_tuple(u.type, u.span, u.role);
  });
}

Scores score_units(const Units& pred, const Units& gold, const ScoreOptions& options) {
  Scores s;
  s[Level::kTI] = match(pred.triggers, gold.triggers, [](const TriggerUnit& u) { return u.span; });
  s[Level::kTC] = match(pred.triggers, gold.triggers,
                        [](const TriggerUnit& u) { return std::make_pair(u.span, u.type); });
  score_args(pred.args, gold.args, options, s);
  return s;
}

std::string count_cell(size_t n) { return n == 0 ? "0" : n == 1 ? "1" : ">1"; }

bool is_sentence_rule(std::string_view rule) {
  return rule == "event-count" || rule == "argument-count" || rule == "overlap";
}

void check_rule(std::string_view rule) {
  if (std::find(kBreakdownRules.begin(), kBreakdownRules.end(), rule) == kBreakdownRules.end()) {
    throw ConfigError("unknown breakdown rule '" + std::string(rule) + "'");
  }
}

// Argument spans are binned by how many gold (event, role) pairs they take
// part in; predicted spans absent from gold use their predicted count.
void add_role_cells(const Units& pred, const Units& gold, const ScoreOptions& options,
                    std::map<std::string, BreakdownCell>& cells) {
  std::map<Span, size_t> gold_count, pred_count;
  for (const ArgUnit& u : gold.args) ++gold_count[u.span];
  for (const ArgUnit& u : pred.args) ++pred_count[u.span];
  auto cell_of = [&](const Span& s) {
    const auto it = gold_count.find(s);
    return count_cell(it != gold_count.end() ? it->second : pred_count[s]);
  };
  std::map<std::string, std::pair<std::vector<ArgUnit>, std::vector<ArgUnit>>> split;
  for (const ArgUnit& u : pred.args) split[cell_of(u.span)].first.push_back(u);
  for (const ArgUnit& u : gold.args) split[cell_of(u.span)].second.push_back(u);
  for (const auto& [span, n] : gold_count) {
    BreakdownCell& c = cells[count_cell(n)];
    c.trigger_levels = false;
    ++c.units;
  }
  for (const auto& [label, pg] : split) {
    Scores s;
    score_args(pg.first, pg.second, options, s);
    BreakdownCell& c = cells[label];
    c.trigger_levels = false;
    c.scores += s;
  }
}

json counts_json(const LevelCounts& c) {
  return {{"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()},
          {"predicted", c.predicted},   {"gold", c.gold},       {"correct", c.correct}};
}

json scores_json(const Scores& s, bool trigger_levels) {
  json j = json::object();
  for (Level l : kLevels) {
    if (!trigger_levels && (l == Level::kTI || l == Level::kTC)) continue;
    j[std::string(level_name(l))] = counts_json(s[l]);
  }
  return j;
}

}  // namespace

Scores score_sentence(std::span<const EventRecord> predicted, std::span<const EventRecord> gold,
                      const ScoreOptions& options) {
  return score_units(units_of(predicted), units_of(gold), options);
}

std::string sentence_cell(std::string_view rule, std::span<const EventRecord> gold) {
  check_rule(rule);
  const Units u = units_of(gold);
  if (rule == "event-count") return count_cell(u.triggers.size());
  if (rule == "argument-count") {
    std::map<TriggerUnit, size_t> per_event;
    for (const ArgUnit& a : u.args) ++per_event[{a.trigger, a.type}];
    size_t most = 0;
    for (const auto& [e, n] : per_event) most = std::max(most, n);
    return count_cell(most);
  }
  if (rule == "overlap") {
    std::set<Span> spans;
    for (const ArgUnit& a : u.args) spans.insert(a.span);
    for (auto i = spans.begin(); i != spans.end(); ++i) {
      for (auto j = std::next(i); j != spans.end(); ++j) {
        if (i->overlaps(*j)) return "overlap";
      }
    }
    return "no-overlap";
  }
  throw ConfigError("breakdown rule '" + std::string(rule) + "' is not sentence-level");
}

EvalReport score(std::span<const std::vector<EventRecord>> predictions,
                 std::span<const std::vector<EventRecord>> gold,
                 std::span<const std::string> breakdowns, const ScoreOptions& options) {
  if (predictions.size() != gold.size()) {
    throw AlignmentError(std::to_string(predictions.size()) + " predicted sentences vs " +
                         std::to_string(gold.size()) + " gold sentences");
  }
  for (const std::string& rule : breakdowns) check_rule(rule);
  EvalReport report;
  report.sentences = static_cast<int64_t>(gold.size());
  for (size_t i = 0; i < gold.size(); ++i) {
    const Units p = units_of(predictions[i]);
    const Units g = units_of(gold[i]);
    const Scores s = score_units(p, g, options);
    report.overall += s;
    for (const std::string& rule : breakdowns) {
      auto& cells = report.breakdowns[rule];
      if (is_sentence_rule(rule)) {
        BreakdownCell& c = cells[sentence_cell(rule, gold[i])];
        c.scores += s;
        ++c.units;
      } else {
        add_role_cells(p, g, options, cells);
      }
    }
  }
  return report;
}

json EvalReport::to_json() const {
  json j;
  j["sentences"] = sentences;
  j["levels"] = scores_json(overall, true);
  json b = json::object();
  for (const auto& [rule, cells] : breakdowns) {
    json r = json::object();
    for (const auto& [label, cell] : cells) {
      r[label] = {{"units", cell.units}, {"levels", scores_json(cell.scores, cell.trigger_levels)}};
    }
    b[rule] = std::move(r);
  }
  j["breakdowns"] = std::move(b);
  return j;
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  auto header = [&](const std::string& title) {
    out << std::left << std::setw(28) << title << std::right << std::setw(8) << "P"
        << std::setw(8) << "R" << std::setw(8) << "F1" << std::setw(8) << "pred"
        << std::setw(8) << "gold" << std::setw(8) << "correct" << '\n';
  };
  auto row = [&](const std::string& label, const LevelCounts& c) {
    out << std::left << std::setw(28) << label << std::right << std::setw(8) << c.precision()
        << std::setw(8) << c.recall() << std::setw(8) << c.f1() << std::setw(8) << c.predicted
        << std::setw(8) << c.gold << std::setw(8) << c.correct << '\n';
  };
  header("overall (" + std::to_string(sentences) + " sentences)");
  for (Level l : kLevels) row("  " + std::string(level_name(l)), overall[l]);
  for (const auto& [rule, cells] : breakdowns) {
    for (const auto& [label, cell] : cells) {
      out << '\n';
      header(rule + " " + label + " (" + std::to_string(cell.units) + ")");
      for (Level l : kLevels) {
        if (!cell.trigger_levels && (l == Level::kTI || l == Level::kTC)) continue;
        row("  " + std::string(level_name(l)), cell.scores[l]);
      }
    }
  }
  return out.str();
}

std::vector<IdentifiedEvents> load_events_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::vector<IdentifiedEvents> out;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json record = json::parse(text);
      IdentifiedEvents item;
      item.id = record.contains("id") ? record.at("id").get<std::string>() : std::to_string(line);
      item.events = parse_events(record.contains("events") ? record.at("events") : json::array());
      out.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw FormatError(path + ": " + e.what(), line);
    } catch (const FormatError& e) {
      throw FormatError(path + ": " + e.what(), line);
    }
  }
  return out;
}

std::vector<std::vector<EventRecord>> align_predictions(
    std::span<const IdentifiedEvents> predictions, std::span<const IdentifiedEvents> gold) {
  std::unordered_map<std::string, const IdentifiedEvents*> by_id;
  std::vector<std::string> duplicate;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) duplicate.push_back(p.id);
  }
  std::vector<std::vector<EventRecord>> out;
  std::vector<std::string> missing;
  std::set<std::string> gold_ids;
  for (const auto& g : gold) {
    gold_ids.insert(g.id);
    const auto it = by_id.find(g.id);
    if (it == by_id.end()) {
      missing.push_back(g.id);
    } else {
      out.push_back(it->second->events);
    }
  }
  std::vector<std::string> extra;
  for (const auto& p : predictions) {
    if (!gold_ids.contains(p.id)) extra.push_back(p.id);
  }
  if (missing.empty() && extra.empty() && duplicate.empty()) return out;
  auto list = [](const std::vector<std::string>& ids) {
    std::string s;
    for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
    return s;
  };
  std::string msg = "prediction and gold files do not align";
  if (!missing.empty()) msg += "; no prediction for: " + list(missing);
  if (!extra.empty()) msg += "; not in gold: " + list(extra);
  if (!duplicate.empty()) msg += "; duplicate predictions for: " + list(duplicate);
  throw AlignmentError(msg);
}

}  // namespace evtuple
