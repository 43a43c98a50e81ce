#include "evtuple/inferencer.h"

#include <algorithm>
#include <deque>
#include <set>

#include <nlohmann/json.hpp>

#include "evtuple/errors.h"
#include "evtuple/model.h"

namespace evtuple {

SpanRegion SpanRegion::with_sentinel(int n, int sentinel) {
  SpanRegion r;
  r.allowed.assign(static_cast<size_t>(n), 0);
  for (int i = kSentinelCount; i < n; ++i) r.allowed[static_cast<size_t>(i)] = 1;
  r.singletons = {sentinel};
  return r;
}

namespace {

bool better(const SpanChoice& cand, const std::optional<SpanChoice>& best) {
  if (!best) return true;
  if (cand.score != best->score) return cand.score > best->score;
  return std::tie(cand.start, cand.end) < std::tie(best->start, best->end);
}

size_t argmax(const Vector& v, size_t from = 0) {
  size_t best = from;
  for (size_t i = from + 1; i < static_cast<size_t>(v.size()); ++i) {
    if (v(static_cast<Eigen::Index>(i)) > v(static_cast<Eigen::Index>(best))) best = i;
  }
  return best;
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

struct SpanPair {
  SpanChoice trigger;
  SpanChoice argument;
  double score() const { return trigger.score * argument.score; }
};

std::vector<int> tokens_of(const SpanChoice& s, int sentinel) {
  std::vector<int> out;
  if (s.start == sentinel && s.end == sentinel) return out;
  for (int i = s.start; i <= s.end; ++i) out.push_back(i);
  return out;
}

SpanChoice or_sentinel(const std::optional<SpanChoice>& choice, std::span<const double> start,
                       std::span<const double> end, int sentinel) {
  if (choice) return *choice;
  const auto k = static_cast<size_t>(sentinel);
  return SpanChoice{sentinel, sentinel, start[k] * end[k]};
}

}  // namespace

std::optional<SpanChoice> best_span(std::span<const double> start_prob,
                                    std::span<const double> end_prob,
                                    std::span<const int> forbidden, const SpanRegion& region,
                                    int max_len) {
  const int n = static_cast<int>(start_prob.size());
  std::vector<char> usable(static_cast<size_t>(n), 0);
  for (int i = 0; i < n && i < static_cast<int>(region.allowed.size()); ++i) {
    usable[static_cast<size_t>(i)] = region.allowed[static_cast<size_t>(i)];
  }
  std::vector<char> blocked(static_cast<size_t>(n), 0);
  for (int f : forbidden) {
    if (f >= 0 && f < n) {
      usable[static_cast<size_t>(f)] = 0;
      blocked[static_cast<size_t>(f)] = 1;
    }
  }

  std::optional<SpanChoice> best;
  for (int k : region.singletons) {
    if (k < 0 || k >= n || blocked[static_cast<size_t>(k)]) continue;
    const SpanChoice c{k, k, start_prob[static_cast<size_t>(k)] * end_prob[static_cast<size_t>(k)]};
    if (better(c, best)) best = c;
  }

  // Within each run of usable positions, slide over end positions keeping a
  // deque of candidate starts with non-increasing start probability; the
  // front is the earliest maximal start inside the length window.
  int seg_begin = -1;
  std::deque<int> starts;
  for (int e = 0; e < n; ++e) {
    if (!usable[static_cast<size_t>(e)]) {
      seg_begin = -1;
      starts.clear();
      continue;
    }
    if (seg_begin < 0) seg_begin = e;
    while (!starts.empty() &&
           start_prob[static_cast<size_t>(starts.back())] < start_prob[static_cast<size_t>(e)]) {
      starts.pop_back();
    }
    starts.push_back(e);
    const int window_begin = max_len > 0 ? std::max(seg_begin, e - max_len + 1) : seg_begin;
    while (starts.front() < window_begin) starts.pop_front();

    const double x = end_prob[static_cast<size_t>(e)];
    const double top = start_prob[static_cast<size_t>(starts.front())] * x;
    // Rounding can make a smaller start reach the same product.
    int b = window_begin;
    while (b < starts.front() && start_prob[static_cast<size_t>(b)] * x != top) ++b;
    const SpanChoice c{b, e, top};
    if (better(c, best)) best = c;
  }
  return best;
}

nlohmann::json InferenceConfig::to_json() const {
  return {{"max_trigger_len", max_trigger_len}, {"max_argument_len", max_argument_len}};
}

InferenceConfig InferenceConfig::from_json(const nlohmann::json& j) {
  InferenceConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "max_trigger_len") {
        c.max_trigger_len = value.get<int>();
      } else if (key == "max_argument_len") {
        c.max_argument_len = value.get<int>();
      } else {
        throw ConfigError("unknown inference config key '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("bad value for inference config key '" + key + "'");
    }
  }
  if (c.max_trigger_len < 0 || c.max_argument_len < 0) {
    throw ConfigError("span length caps must be >= 0");
  }
  return c;
}

InferredTuple infer_tuple_detailed(const StepOutput& step, const LabelSchema& schema,
                                   const InferenceConfig& config) {
  const int n = step.length();
  const SpanRegion trig_region = SpanRegion::with_sentinel(n, kNullTriggerIndex);
  const SpanRegion arg_region = SpanRegion::with_sentinel(n, kNullArgumentIndex);
  const auto s_tr = as_span(step.s_tr), e_tr = as_span(step.e_tr);
  const auto s_ar = as_span(step.s_ar), e_ar = as_span(step.e_ar);

  SpanPair a;
  a.trigger = or_sentinel(best_span(s_tr, e_tr, {}, trig_region, config.max_trigger_len), s_tr,
                          e_tr, kNullTriggerIndex);
  a.argument = or_sentinel(best_span(s_ar, e_ar, tokens_of(a.trigger, kNullTriggerIndex),
                                     arg_region, config.max_argument_len),
                           s_ar, e_ar, kNullArgumentIndex);

  SpanPair b;
  b.argument = or_sentinel(best_span(s_ar, e_ar, {}, arg_region, config.max_argument_len), s_ar,
                           e_ar, kNullArgumentIndex);
  b.trigger = or_sentinel(best_span(s_tr, e_tr, tokens_of(b.argument, kNullArgumentIndex),
                                    trig_region, config.max_trigger_len),
                          s_tr, e_tr, kNullTriggerIndex);

  const bool use_b = b.score() > a.score();
  const SpanPair& win = use_b ? b : a;
  InferredTuple out;
  out.order = use_b ? SpanOrder::kArgumentFirst : SpanOrder::kTriggerFirst;
  out.span_score = win.score();

  const bool null_trigger =
      win.trigger.start == kNullTriggerIndex && win.trigger.end == kNullTriggerIndex;
  const size_t type = argmax(step.event_type);
  if (null_trigger || type == 0) {
    out.tuple = EventTuple::null_tuple();
    return out;
  }
  EventTuple& t = out.tuple;
  t.s_tr = win.trigger.start;
  t.e_tr = win.trigger.end;
  t.event_type = schema.event_types()[type];
  if (schema.num_role_classes() > 1) {
    t.s_ar = win.argument.start;
    t.e_ar = win.argument.end;
  }
  // A real argument never takes the NA role.
  t.role = t.has_argument() ? schema.role_types()[argmax(step.role, 1)] : std::string(kNoRole);
  return out;
}

EventTuple infer_tuple(const StepOutput& step, const LabelSchema& schema,
                       const InferenceConfig& config) {
  return infer_tuple_detailed(step, schema, config).tuple;
}

std::vector<EventTuple> extract_events(const Model& model, const Sentence& sentence,
                                       int max_steps, const InferenceConfig& config) {
  Graph g(/*grad_enabled=*/false);
  const TokenEncodings enc = model.encoder().encode(g, sentence);
  const Var keys = model.decoder().attention_keys(g, enc);
  DecoderState state = model.decoder().initial_state(g);
  std::vector<EventTuple> out;
  std::set<EventTuple> seen;
  for (int t = 0; t < max_steps; ++t) {
    const StepVars vars = model.decoder().step(g, enc, keys, state);
    const EventTuple tuple = infer_tuple(StepOutput::from(vars), model.schema(), config);
    if (tuple.is_null()) break;
    if (seen.insert(tuple).second) out.push_back(tuple);
  }
  return out;
}

}  // namespace evtuple
