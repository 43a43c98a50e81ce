// Discrete decoding: constrained span maximisation over the pointer
// distributions, trigger-first / argument-first order selection, and greedy
// tuple generation until the null tuple.
#ifndef EVTUPLE_INFERENCER_H_
#define EVTUPLE_INFERENCER_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evtuple/decoder.h"
#include "evtuple/frame_codec.h"

namespace evtuple {

class Model;

// Token positions a span may cover. `allowed` positions may form spans of any
// length; `singletons` may only appear as one-token spans.
struct SpanRegion {
  std::vector<char> allowed;
  std::vector<int> singletons;

  // Real tokens [2, n-1] plus a sentinel usable only on its own.
  static SpanRegion with_sentinel(int n, int sentinel);
};

struct SpanChoice {
  int start = 0;
  int end = 0;
  double score = 0.0;
  bool operator==(const SpanChoice&) const = default;
};

// argmax over start <= end of start_prob[start] * end_prob[end] with the span
// inside `region`, disjoint from `forbidden`, and no longer than max_len
// (0 = unbounded). Ties go to the smaller start, then the smaller end.
// Returns nullopt when no span is feasible.
std::optional<SpanChoice> best_span(std::span<const double> start_prob,
                                    std::span<const double> end_prob,
                                    std::span<const int> forbidden,
                                    const SpanRegion& region, int max_len = 0);

struct InferenceConfig {
  int max_trigger_len = 0;   // 0 = no cap
  int max_argument_len = 0;  // 0 = no cap

  nlohmann::json to_json() const;
  static InferenceConfig from_json(const nlohmann::json& j);
};

enum class SpanOrder { kTriggerFirst, kArgumentFirst };

struct InferredTuple {
  EventTuple tuple;
  SpanOrder order = SpanOrder::kTriggerFirst;
  double span_score = 0.0;  // product of the four position probabilities
};

// Picks trigger and argument spans under both orders, keeps the order with
// the larger four-way product (trigger-first on ties), then labels the tuple
// by argmax with the schema repairs applied.
InferredTuple infer_tuple_detailed(const StepOutput& step, const LabelSchema& schema,
                                   const InferenceConfig& config = {});
EventTuple infer_tuple(const StepOutput& step, const LabelSchema& schema,
                       const InferenceConfig& config = {});

// Greedy generation: one tuple per step until the null tuple or max_steps.
// Duplicates and null tuples are dropped from the result.
std::vector<EventTuple> extract_events(const Model& model, const Sentence& sentence,
                                       int max_steps, const InferenceConfig& config = {});

}  // namespace evtuple

#endif  // EVTUPLE_INFERENCER_H_
