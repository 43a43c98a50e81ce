// Event-frame data model: label schema, sentinel-augmented sentences and the
// 6-tuple (trigger start, trigger end, event type, argument start, argument
// end, role) used as the decoder target.
#ifndef EVTUPLE_FRAME_CODEC_H_
#define EVTUPLE_FRAME_CODEC_H_

#include <compare>
#include <tuple>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace evtuple {

inline constexpr std::string_view kTriggerSentinel = "[unused1]";
inline constexpr std::string_view kArgumentSentinel = "[unused2]";
inline constexpr std::string_view kNullEventType = "NULL-EVT";
inline constexpr std::string_view kNoRole = "NA";
inline constexpr std::string_view kSentinelFeature = "SENT";

// Index of the sentinels after augmentation, and the offset applied to every
// raw-token span.
inline constexpr int kNullTriggerIndex = 0;
inline constexpr int kNullArgumentIndex = 1;
inline constexpr int kSentinelCount = 2;

// Event types and roles, each with its null label pinned at index 0.
class LabelSchema {
 public:
  LabelSchema() : LabelSchema({}, {}) {}
  // The null labels are inserted at index 0 when absent and moved there when
  // present elsewhere. Duplicates raise SchemaError.
  LabelSchema(std::vector<std::string> event_types,
              std::vector<std::string> role_types);

  const std::vector<std::string>& event_types() const { return event_types_; }
  const std::vector<std::string>& role_types() const { return role_types_; }
  // p + 1 and r + 1.
  int num_event_classes() const { return static_cast<int>(event_types_.size()); }
  int num_role_classes() const { return static_cast<int>(role_types_.size()); }

  bool has_event_type(std::string_view name) const;
  bool has_role(std::string_view name) const;
  // Throw SchemaError for unknown labels.
  int event_index(std::string_view name) const;
  int role_index(std::string_view name) const;

  nlohmann::json to_json() const;
  static LabelSchema from_json(const nlohmann::json& j);
  static LabelSchema load(const std::string& path);
  void save(const std::string& path) const;

  bool operator==(const LabelSchema& other) const {
    return event_types_ == other.event_types_ && role_types_ == other.role_types_;
  }

 private:
  std::vector<std::string> event_types_;
  std::vector<std::string> role_types_;
  std::unordered_map<std::string, int> event_lookup_;
  std::unordered_map<std::string, int> role_lookup_;
};

// Tokens with the two sentinels prepended; every feature sequence has the
// same length as tokens.
struct Sentence {
  std::vector<std::string> tokens;
  std::vector<std::string> pos_tags;
  std::vector<std::string> dep_tags;
  std::vector<std::string> ent_tags;

  int size() const { return static_cast<int>(tokens.size()); }
  int raw_size() const { return size() - kSentinelCount; }
  // Tokens after the sentinels.
  std::span<const std::string> raw_tokens() const {
    return std::span<const std::string>(tokens).subspan(kSentinelCount);
  }
};

struct EventTuple {
  int s_tr = kNullTriggerIndex;
  int e_tr = kNullTriggerIndex;
  std::string event_type{kNullEventType};
  int s_ar = kNullArgumentIndex;
  int e_ar = kNullArgumentIndex;
  std::string role{kNoRole};

  static EventTuple null_tuple() { return EventTuple{}; }
  bool is_null() const {
    return (s_tr == kNullTriggerIndex && e_tr == kNullTriggerIndex) ||
           event_type == kNullEventType;
  }
  bool has_argument() const {
    return !(s_ar == kNullArgumentIndex && e_ar == kNullArgumentIndex);
  }

  // Canonical order: trigger span, argument span, event type, role.
  auto key() const { return std::tie(s_tr, e_tr, s_ar, e_ar, event_type, role); }
  bool operator==(const EventTuple& o) const { return key() == o.key(); }
  bool operator<(const EventTuple& o) const { return key() < o.key(); }
};

// Inclusive token span.
struct Span {
  int start = 0;
  int end = 0;
  auto operator<=>(const Span&) const = default;
  int length() const { return end - start + 1; }
  bool overlaps(const Span& o) const { return start <= o.end && o.start <= end; }
};

struct Argument {
  Span span;
  std::string role;
  std::string text;  // surface phrase; informational, ignored by ==

  bool operator==(const Argument& o) const {
    return span == o.span && role == o.role;
  }
};

// An event in raw-token coordinates (before sentinel insertion).
struct EventRecord {
  Span trigger;
  std::string type;
  std::vector<Argument> arguments;
  std::string trigger_text;  // informational, ignored by ==

  bool operator==(const EventRecord& o) const {
    return trigger == o.trigger && type == o.type && arguments == o.arguments;
  }
};

Sentence augment_sentence(std::span<const std::string> raw_tokens,
                          std::span<const std::string> pos,
                          std::span<const std::string> dep,
                          std::span<const std::string> ent);

// Throws InvalidInputError describing the first violated invariant.
void validate_tuple(const EventTuple& t, int n);
bool is_valid_tuple(const EventTuple& t, int n);

// One tuple per (trigger, argument) pair, shifted into augmented coordinates,
// deduplicated and sorted. A sentence without events yields the null tuple.
std::vector<EventTuple> encode_frames(const Sentence& sentence,
                                      std::span<const EventRecord> gold,
                                      const LabelSchema& schema);

// Inverse of encode_frames: null tuples vanish, NA arguments become empty
// argument lists, and surface phrases are sliced from the sentence.
std::vector<EventRecord> decode_frames(std::span<const EventTuple> tuples,
                                       const Sentence& sentence);

// Sorted, with duplicate events merged and duplicate arguments removed; the
// form decode_frames produces.
std::vector<EventRecord> canonicalize(std::vector<EventRecord> records);

// "s_tr e_tr Type s_ar e_ar Role , ..." as printed in annotated examples.
std::string format_tuples(std::span<const EventTuple> tuples);
std::vector<EventTuple> parse_tuples(std::string_view text);

std::string join_tokens(std::span<const std::string> tokens, int start, int end);

}  // namespace evtuple

#endif  // EVTUPLE_FRAME_CODEC_H_
