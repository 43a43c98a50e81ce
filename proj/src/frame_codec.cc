#include "evtuple/frame_codec.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evtuple/errors.h"

namespace evtuple {
namespace {

std::vector<std::string> pin_null_label(std::vector<std::string> labels,
                                        std::string_view null_label,
                                        const char* what) {
  std::erase(labels, std::string(null_label));
  labels.insert(labels.begin(), std::string(null_label));
  std::vector<std::string> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) {
    throw SchemaError(std::string("duplicate ") + what + " '" + *dup + "'");
  }
  return labels;
}

std::unordered_map<std::string, int> index_of(const std::vector<std::string>& v) {
  std::unordered_map<std::string, int> m;
  for (size_t i = 0; i < v.size(); ++i) m[v[i]] = static_cast<int>(i);
  return m;
}

bool in_real_range(int s, int e, int n) {
  return s >= kSentinelCount && s <= e && e < n;
}

}  // namespace

LabelSchema::LabelSchema(std::vector<std::string> event_types,
                         std::vector<std::string> role_types)
    : event_types_(pin_null_label(std::move(event_types), kNullEventType,
                                  "event type")),
      role_types_(pin_null_label(std::move(role_types), kNoRole, "role")),
      event_lookup_(index_of(event_types_)),
      role_lookup_(index_of(role_types_)) {}

bool LabelSchema::has_event_type(std::string_view name) const {
  return event_lookup_.count(std::string(name)) > 0;
}

bool LabelSchema::has_role(std::string_view name) const {
  return role_lookup_.count(std::string(name)) > 0;
}

int LabelSchema::event_index(std::string_view name) const {
  auto it = event_lookup_.find(std::string(name));
  if (it == event_lookup_.end()) {
    throw SchemaError("unknown event type '" + std::string(name) + "'");
  }
  return it->second;
}

int LabelSchema::role_index(std::string_view name) const {
  auto it = role_lookup_.find(std::string(name));
  if (it == role_lookup_.end()) {
    throw SchemaError("unknown role '" + std::string(name) + "'");
  }
  return it->second;
}

nlohmann::json LabelSchema::to_json() const {
  return {{"event_types", event_types_}, {"role_types", role_types_}};
}

LabelSchema LabelSchema::from_json(const nlohmann::json& j) {
  try {
    return LabelSchema(j.at("event_types").get<std::vector<std::string>>(),
                       j.at("role_types").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("label schema: ") + e.what());
  }
}

LabelSchema LabelSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open label schema '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("label schema '" + path + "': " + e.what());
  }
  return from_json(j);
}

void LabelSchema::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << to_json().dump(2) << '\n';
}

Sentence augment_sentence(std::span<const std::string> raw_tokens,
                          std::span<const std::string> pos,
                          std::span<const std::string> dep,
                          std::span<const std::string> ent) {
  if (raw_tokens.empty()) throw InvalidInputError("empty token sequence");
  if (pos.size() != raw_tokens.size() || dep.size() != raw_tokens.size() ||
      ent.size() != raw_tokens.size()) {
    throw InvalidInputError("feature sequences differ in length from tokens (" +
                            std::to_string(raw_tokens.size()) + " tokens)");
  }
  const std::string sent(kSentinelFeature);
  auto prepend = [&sent](std::span<const std::string> xs,
                         std::vector<std::string> head) {
    head.insert(head.end(), xs.begin(), xs.end());
    return head;
  };
  Sentence s;
  s.tokens = prepend(raw_tokens, {std::string(kTriggerSentinel),
                                  std::string(kArgumentSentinel)});
  s.pos_tags = prepend(pos, {sent, sent});
  s.dep_tags = prepend(dep, {sent, sent});
  s.ent_tags = prepend(ent, {sent, sent});
  return s;
}

void validate_tuple(const EventTuple& t, int n) {
  auto fail = [&t](const std::string& why) {
    throw InvalidInputError("invalid tuple (" + std::to_string(t.s_tr) + " " +
                            std::to_string(t.e_tr) + " " + t.event_type + " " +
                            std::to_string(t.s_ar) + " " +
                            std::to_string(t.e_ar) + " " + t.role + "): " + why);
  };
  const bool null_trigger = t.s_tr == kNullTriggerIndex && t.e_tr == kNullTriggerIndex;
  const bool null_arg = !t.has_argument();
  if (!null_trigger && !in_real_range(t.s_tr, t.e_tr, n)) {
    fail("trigger span outside [2, " + std::to_string(n - 1) + "]");
  }
  if (!null_arg && !in_real_range(t.s_ar, t.e_ar, n)) {
    fail("argument span outside [2, " + std::to_string(n - 1) + "]");
  }
  if (null_arg != (t.role == kNoRole)) fail("role NA iff argument is (1,1)");
  if (null_trigger != (t.event_type == kNullEventType)) {
    fail("event type NULL-EVT iff trigger is (0,0)");
  }
  if (null_trigger && !null_arg) fail("null event carries an argument");
  if (!null_trigger && !null_arg && t.s_tr <= t.e_ar && t.s_ar <= t.e_tr) {
    fail("trigger and argument overlap");
  }
}

bool is_valid_tuple(const EventTuple& t, int n) {
  try {
    validate_tuple(t, n);
    return true;
  } catch (const InvalidInputError&) {
    return false;
  }
}

std::vector<EventTuple> encode_frames(const Sentence& sentence,
                                      std::span<const EventRecord> gold,
                                      const LabelSchema& schema) {
  const int raw_n = sentence.raw_size();
  auto check_span = [raw_n](const Span& s, const char* what) {
    if (s.start < 0 || s.start > s.end || s.end >= raw_n) {
      throw InvalidInputError(std::string(what) + " span [" +
                              std::to_string(s.start) + "," +
                              std::to_string(s.end) + "] out of range for " +
                              std::to_string(raw_n) + " tokens");
    }
  };
  // Events sharing a trigger and type are merged first, so an argument-less
  // duplicate does not leave a stray NA tuple next to real arguments.
  const std::vector<EventRecord> merged =
      canonicalize(std::vector<EventRecord>(gold.begin(), gold.end()));
  std::vector<EventTuple> out;
  for (const EventRecord& ev : merged) {
    check_span(ev.trigger, "trigger");
    if (ev.type == kNullEventType || !schema.has_event_type(ev.type)) {
      throw SchemaError("unknown event type '" + ev.type + "'");
    }
    EventTuple t;
    t.s_tr = ev.trigger.start + kSentinelCount;
    t.e_tr = ev.trigger.end + kSentinelCount;
    t.event_type = ev.type;
    if (ev.arguments.empty()) {
      out.push_back(t);
      continue;
    }
    for (const Argument& arg : ev.arguments) {
      check_span(arg.span, "argument");
      if (arg.role == kNoRole || !schema.has_role(arg.role)) {
        throw SchemaError("unknown role '" + arg.role + "'");
      }
      if (arg.span.overlaps(ev.trigger)) {
        throw InvalidInputError("argument overlaps its trigger");
      }
      EventTuple a = t;
      a.s_ar = arg.span.start + kSentinelCount;
      a.e_ar = arg.span.end + kSentinelCount;
      a.role = arg.role;
      out.push_back(std::move(a));
    }
  }
  if (out.empty()) out.push_back(EventTuple::null_tuple());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string join_tokens(std::span<const std::string> tokens, int start, int end) {
  std::string s;
  for (int i = start; i <= end; ++i) {
    if (i > start) s += ' ';
    s += tokens[static_cast<size_t>(i)];
  }
  return s;
}

std::vector<EventRecord> decode_frames(std::span<const EventTuple> tuples,
                                       const Sentence& sentence) {
  const int n = sentence.size();
  std::map<std::pair<Span, std::string>, EventRecord> events;
  for (const EventTuple& t : tuples) {
    if (t.is_null()) continue;
    validate_tuple(t, n);
    const Span trig{t.s_tr - kSentinelCount, t.e_tr - kSentinelCount};
    EventRecord& rec = events[{trig, t.event_type}];
    rec.trigger = trig;
    rec.type = t.event_type;
    rec.trigger_text = join_tokens(sentence.tokens, t.s_tr, t.e_tr);
    if (t.has_argument()) {
      rec.arguments.push_back(
          Argument{Span{t.s_ar - kSentinelCount, t.e_ar - kSentinelCount}, t.role,
                   join_tokens(sentence.tokens, t.s_ar, t.e_ar)});
    }
  }
  std::vector<EventRecord> out;
  out.reserve(events.size());
  for (auto& [key, rec] : events) out.push_back(std::move(rec));
  return canonicalize(std::move(out));
}

std::vector<EventRecord> canonicalize(std::vector<EventRecord> records) {
  auto arg_less = [](const Argument& a, const Argument& b) {
    return std::tie(a.span, a.role) < std::tie(b.span, b.role);
  };
  std::map<std::pair<Span, std::string>, EventRecord> merged;
  for (EventRecord& r : records) {
    auto [it, fresh] = merged.try_emplace({r.trigger, r.type}, r);
    if (!fresh) {
      it->second.arguments.insert(it->second.arguments.end(), r.arguments.begin(),
                                  r.arguments.end());
    }
  }
  std::vector<EventRecord> out;
  for (auto& [key, r] : merged) {
    std::sort(r.arguments.begin(), r.arguments.end(), arg_less);
    r.arguments.erase(std::unique(r.arguments.begin(), r.arguments.end()),
                      r.arguments.end());
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_tuples(std::span<const EventTuple> tuples) {
  std::ostringstream os;
  for (size_t i = 0; i < tuples.size(); ++i) {
    const EventTuple& t = tuples[i];
    if (i > 0) os << " , ";
    os << t.s_tr << ' ' << t.e_tr << ' ' << t.event_type << ' ' << t.s_ar << ' '
       << t.e_ar << ' ' << t.role;
  }
  return os.str();
}

std::vector<EventTuple> parse_tuples(std::string_view text) {
  std::vector<EventTuple> out;
  std::istringstream is{std::string(text)};
  std::vector<std::string> fields;
  std::string word;
  auto flush = [&]() {
    if (fields.empty()) return;
    if (fields.size() != 6) {
      throw FormatError("tuple needs 6 fields, got " + std::to_string(fields.size()));
    }
    EventTuple t;
    try {
      t.s_tr = std::stoi(fields[0]);
      t.e_tr = std::stoi(fields[1]);
      t.s_ar = std::stoi(fields[3]);
      t.e_ar = std::stoi(fields[4]);
    } catch (const std::exception&) {
      throw FormatError("non-numeric tuple index");
    }
    t.event_type = fields[2];
    t.role = fields[5];
    out.push_back(std::move(t));
    fields.clear();
  };
  while (is >> word) {
    if (word == ",") {
      flush();
    } else {
      fields.push_back(word);
    }
  }
  flush();
  return out;
}

}  // namespace evtuple
