// Trigger/argument scoring at the TI, TC, AI and ARC levels, with
// gold-derived partitions of the test set.
#ifndef EVTUPLE_EVALUATOR_H_
#define EVTUPLE_EVALUATOR_H_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evtuple/frame_codec.h"

namespace evtuple {

enum class Level { kTI = 0, kTC = 1, kAI = 2, kARC = 3 };
inline constexpr std::array<Level, 4> kLevels = {Level::kTI, Level::kTC, Level::kAI,
                                                 Level::kARC};
std::string_view level_name(Level level);

struct LevelCounts {
  int64_t predicted = 0;
  int64_t gold = 0;
  int64_t correct = 0;

  double precision() const;
  double recall() const;
  double f1() const;
  LevelCounts& operator+=(const LevelCounts& o);
};

struct Scores {
  std::array<LevelCounts, 4> levels;

  LevelCounts& operator[](Level l) { return levels[static_cast<size_t>(l)]; }
  const LevelCounts& operator[](Level l) const { return levels[static_cast<size_t>(l)]; }
  Scores& operator+=(const Scores& o);
};

struct ScoreOptions {
  // Credit argument spans regardless of the predicted event type.
  bool span_only_ai = false;
};

// Counts for one sentence. Both sides are deduplicated first.
Scores score_sentence(std::span<const EventRecord> predicted, std::span<const EventRecord> gold,
                      const ScoreOptions& options = {});

inline constexpr std::array<std::string_view, 4> kBreakdownRules = {
    "event-count", "argument-count", "overlap", "roles-per-argument"};

struct BreakdownCell {
  Scores scores;
  int64_t units = 0;  // sentences, or argument spans for roles-per-argument
  bool trigger_levels = true;  // false when TI/TC are not defined for the cell
};

struct EvalReport {
  Scores overall;
  int64_t sentences = 0;
  // rule -> cell label -> cell. Cells without units are absent.
  std::map<std::string, std::map<std::string, BreakdownCell>> breakdowns;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

// Sentence-level cell of `gold` under a sentence rule (every rule except
// roles-per-argument). Throws ConfigError for unknown rules.
std::string sentence_cell(std::string_view rule, std::span<const EventRecord> gold);

EvalReport score(std::span<const std::vector<EventRecord>> predictions,
                 std::span<const std::vector<EventRecord>> gold,
                 std::span<const std::string> breakdowns = {},
                 const ScoreOptions& options = {});

struct IdentifiedEvents {
  std::string id;
  std::vector<EventRecord> events;
};

// Reads "id" and "events" from each JSON line; works for corpus and
// prediction files alike. Missing ids become the 1-based line number.
std::vector<IdentifiedEvents> load_events_file(const std::string& path);

// Reorders predictions to follow gold. Throws AlignmentError listing every
// unmatched identifier on either side.
std::vector<std::vector<EventRecord>> align_predictions(
    std::span<const IdentifiedEvents> predictions, std::span<const IdentifiedEvents> gold);

}  // namespace evtuple

#endif  // EVTUPLE_EVALUATOR_H_
