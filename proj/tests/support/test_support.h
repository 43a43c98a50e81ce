// Reference implementations and fixtures shared by the unit and acceptance
// tests. The oracles are deliberately naive: plain loops, no Eigen, no graph.
#ifndef EVTUPLE_TESTS_TEST_SUPPORT_H_
#define EVTUPLE_TESTS_TEST_SUPPORT_H_

#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "evtuple/corpus.h"
#include "evtuple/decoder.h"
#include "evtuple/encoder.h"
#include "evtuple/frame_codec.h"
#include "evtuple/inferencer.h"
#include "evtuple/model.h"

namespace evtuple::testing {

#ifndef EVTUPLE_FIXTURES
#define EVTUPLE_FIXTURES "tests/fixtures"
#endif

inline std::string fixture(const std::string& name) {
  return std::string(EVTUPLE_FIXTURES) + "/" + name;
}

// ---------------------------------------------------------------- spans

struct OracleSpan {
  int b = 0, e = 0;
  double score = 0.0;
};

// Every (b, e) pair is visited in (b, e) order and only a strictly larger
// product replaces the incumbent.
inline std::optional<OracleSpan> oracle_best_span(const std::vector<double>& start,
                                                  const std::vector<double>& end,
                                                  const std::set<int>& forbidden,
                                                  const std::vector<char>& allowed,
                                                  const std::vector<int>& singletons,
                                                  int max_len) {
  const int n = static_cast<int>(start.size());
  std::optional<OracleSpan> best;
  for (int b = 0; b < n; ++b) {
    for (int e = b; e < n; ++e) {
      bool ok = true;
      if (b == e && std::find(singletons.begin(), singletons.end(), b) != singletons.end()) {
        ok = !forbidden.count(b);
      } else {
        for (int k = b; k <= e; ++k) {
          if (!allowed[static_cast<size_t>(k)] || forbidden.count(k)) ok = false;
        }
        if (max_len > 0 && e - b + 1 > max_len) ok = false;
      }
      if (!ok) continue;
      const double s = start[static_cast<size_t>(b)] * end[static_cast<size_t>(e)];
      if (!best || s > best->score) best = OracleSpan{b, e, s};
    }
  }
  return best;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// Both greedy orders by brute force, the larger four-way product kept
// (trigger-first on ties), labels by first-maximum argmax.
inline EventTuple oracle_infer_tuple(const StepOutput& step, const LabelSchema& schema,
                                     int max_trigger_len = 0, int max_argument_len = 0) {
  const int n = step.length();
  std::vector<char> real(static_cast<size_t>(n), 0);
  for (int i = 2; i < n; ++i) real[static_cast<size_t>(i)] = 1;
  const auto str = to_std(step.s_tr), etr = to_std(step.e_tr);
  const auto sar = to_std(step.s_ar), ear = to_std(step.e_ar);
  auto span_set = [](const OracleSpan& s, int sentinel) {
    std::set<int> out;
    if (s.b == sentinel && s.e == sentinel) return out;
    for (int k = s.b; k <= s.e; ++k) out.insert(k);
    return out;
  };
  auto pick = [&](const std::vector<double>& s, const std::vector<double>& e,
                  const std::set<int>& forbid, int sentinel, int cap) {
    auto r = oracle_best_span(s, e, forbid, real, {sentinel}, cap);
    if (!r) {
      r = OracleSpan{sentinel, sentinel,
                     s[static_cast<size_t>(sentinel)] * e[static_cast<size_t>(sentinel)]};
    }
    return *r;
  };
  const OracleSpan a_tr = pick(str, etr, {}, 0, max_trigger_len);
  const OracleSpan a_ar = pick(sar, ear, span_set(a_tr, 0), 1, max_argument_len);
  const OracleSpan b_ar = pick(sar, ear, {}, 1, max_argument_len);
  const OracleSpan b_tr = pick(str, etr, span_set(b_ar, 1), 0, max_trigger_len);
  const bool use_b = b_tr.score * b_ar.score > a_tr.score * a_ar.score;
  const OracleSpan tr = use_b ? b_tr : a_tr;
  const OracleSpan ar = use_b ? b_ar : a_ar;

  auto first_max = [](const Vector& v, int from) {
    int best = from;
    for (int i = from; i < v.size(); ++i) {
      if (v(i) > v(best)) best = i;
    }
    return best;
  };
  const int type = first_max(step.event_type, 0);
  if ((tr.b == 0 && tr.e == 0) || type == 0) return EventTuple::null_tuple();
  EventTuple t;
  t.s_tr = tr.b;
  t.e_tr = tr.e;
  t.event_type = schema.event_types()[static_cast<size_t>(type)];
  if (!(ar.b == 1 && ar.e == 1) && schema.num_role_classes() > 1) {
    t.s_ar = ar.b;
    t.e_ar = ar.e;
    t.role = schema.role_types()[static_cast<size_t>(first_max(step.role, 1))];
  }
  return t;
}

// ---------------------------------------------------------------- loss

inline double oracle_tuple_loss(const StepOutput& step, const EventTuple& gold,
                                const LabelSchema& schema) {
  auto term = [](const Vector& p, int i) {
    double v = p(i);
    if (v < 1e-12) v = 1e-12;
    return -std::log(v);
  };
  int type = 0, role = 0;
  for (size_t i = 0; i < schema.event_types().size(); ++i) {
    if (schema.event_types()[i] == gold.event_type) type = static_cast<int>(i);
  }
  for (size_t i = 0; i < schema.role_types().size(); ++i) {
    if (schema.role_types()[i] == gold.role) role = static_cast<int>(i);
  }
  return term(step.s_tr, gold.s_tr) + term(step.e_tr, gold.e_tr) + term(step.s_ar, gold.s_ar) +
         term(step.e_ar, gold.e_ar) + term(step.event_type, type) + term(step.role, role);
}

// ---------------------------------------------------------------- data

inline Vector random_distribution(std::mt19937_64& rng, int n, double zero_rate = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng) < zero_rate ? 0.0 : u(rng) + 1e-3;
  if (v.sum() == 0.0) v(static_cast<int>(rng() % static_cast<uint64_t>(n))) = 1.0;
  return v / v.sum();
}

inline StepOutput random_step(std::mt19937_64& rng, int n, int types, int roles,
                              double zero_rate = 0.0) {
  StepOutput s;
  s.s_tr = random_distribution(rng, n, zero_rate);
  s.e_tr = random_distribution(rng, n, zero_rate);
  s.s_ar = random_distribution(rng, n, zero_rate);
  s.e_ar = random_distribution(rng, n, zero_rate);
  s.event_type = random_distribution(rng, types);
  s.role = random_distribution(rng, roles);
  return s;
}

inline LabelSchema toy_schema(int p, int r) {
  std::vector<std::string> types, roles;
  for (int i = 0; i < p; ++i) types.push_back("Type" + std::to_string(i));
  for (int i = 0; i < r; ++i) roles.push_back("Role" + std::to_string(i));
  return LabelSchema(types, roles);
}

// A sentence of `raw_len` random words with random events that respect the
// trigger/argument non-overlap rule.
inline CorpusExample random_example(std::mt19937_64& rng, int raw_len, const LabelSchema& schema,
                                    int max_events = 2, int max_args = 3,
                                    const std::string& id = "x") {
  static const std::vector<std::string> words = {"the", "army", "moved", "troops", "to",
                                                 "city", "attack", "on", "Friday", "rebels",
                                                 "fired", "at", "police", "in", "Basra"};
  static const std::vector<std::string> pos = {"DT", "NN", "VBD", "IN", "NNP"};
  static const std::vector<std::string> dep = {"det", "nsubj", "ROOT", "prep", "pobj"};
  static const std::vector<std::string> ent = {"O", "B-PER", "I-PER", "B-LOC"};
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<size_t>(0, v.size() - 1)(rng)];
  };
  std::vector<std::string> t, p, d, e;
  for (int i = 0; i < raw_len; ++i) {
    t.push_back(pick(words));
    p.push_back(pick(pos));
    d.push_back(pick(dep));
    e.push_back(pick(ent));
  }
  std::uniform_int_distribution<int> pos_dist(0, raw_len - 1);
  std::vector<EventRecord> events;
  const int n_events = std::uniform_int_distribution<int>(0, max_events)(rng);
  for (int k = 0; k < n_events; ++k) {
    EventRecord rec;
    const int s = pos_dist(rng);
    const int len = std::uniform_int_distribution<int>(1, 2)(rng);
    rec.trigger = Span{s, std::min(raw_len - 1, s + len - 1)};
    rec.type = schema.event_types()[std::uniform_int_distribution<size_t>(
        1, schema.event_types().size() - 1)(rng)];
    const int n_args = std::uniform_int_distribution<int>(0, max_args)(rng);
    for (int a = 0; a < n_args && schema.num_role_classes() > 1; ++a) {
      const int as = pos_dist(rng);
      const int ae = std::min(raw_len - 1, as + std::uniform_int_distribution<int>(0, 2)(rng));
      const Span span{as, ae};
      if (span.overlaps(rec.trigger)) continue;
      rec.arguments.push_back(
          Argument{span,
                   schema.role_types()[std::uniform_int_distribution<size_t>(
                       1, schema.role_types().size() - 1)(rng)],
                   {}});
    }
    events.push_back(std::move(rec));
  }
  CorpusExample ex;
  ex.id = id;
  ex.sentence = augment_sentence(t, p, d, e);
  ex.gold = encode_frames(ex.sentence, events, schema);
  return ex;
}

// Small model with a plain (layers = 0) contextual table.
inline EncoderConfig toy_encoder(int d_ctx = 8, int feature = 4) {
  EncoderConfig c;
  c.d_ctx = d_ctx;
  c.d_pos = c.d_dep = c.d_ent = feature;
  c.d_char = feature;
  c.d_c = feature;
  c.dropout = 0.0;
  c.contextual.layers = 0;
  return c;
}

inline DecoderConfig toy_decoder(int d_p = 6) {
  DecoderConfig c;
  c.d_p = d_p;
  return c;
}

inline Model toy_model(const LabelSchema& schema, std::span<const CorpusExample> corpus,
                       const EncoderConfig& enc, const DecoderConfig& dec, uint64_t seed = 3) {
  return Model::create(schema, build_vocab(corpus), corpus, enc, dec, seed);
}

}  // namespace evtuple::testing

namespace evtuple {
// Readable gtest failure messages.
inline void PrintTo(const EventTuple& t, std::ostream* os) {
  *os << format_tuples(std::span<const EventTuple>(&t, 1));
}
}  // namespace evtuple

#endif  // EVTUPLE_TESTS_TEST_SUPPORT_H_
