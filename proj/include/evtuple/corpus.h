// Annotated corpora: JSON-lines loading and writing, discrete-feature
// vocabularies, padded batches and a seeded synthetic corpus generator.
#ifndef EVTUPLE_CORPUS_H_
#define EVTUPLE_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "evtuple/frame_codec.h"

namespace evtuple {

struct CorpusExample {
  std::string id;
  Sentence sentence;
  std::vector<EventTuple> gold;  // never empty; the null tuple when no events
};

// Label -> contiguous index, with UNK at 0 and SENT at 1. Lookups of unseen
// labels return UNK.
class LabelIndex {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kSent = 1;

  LabelIndex();
  explicit LabelIndex(std::vector<std::string> labels);  // sorted, deduplicated

  int lookup(const std::string& label) const;
  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  bool operator==(const LabelIndex& o) const { return labels_ == o.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

struct FeatureVocab {
  LabelIndex pos;
  LabelIndex dep;
  LabelIndex ent;
  LabelIndex chars;  // UTF-8 code points

  bool operator==(const FeatureVocab&) const = default;
  nlohmann::json to_json() const;
  static FeatureVocab from_json(const nlohmann::json& j);
};

// Splits a UTF-8 string into code points (invalid bytes become single units).
std::vector<std::string> utf8_chars(const std::string& s);

FeatureVocab build_vocab(std::span<const CorpusExample> examples);

// One record per line; see README for the schema. Blank lines are skipped.
// Records without an "id" are named by their 1-based line number.
std::vector<CorpusExample> load_corpus(const std::string& path,
                                       const LabelSchema& schema);
std::vector<CorpusExample> parse_corpus(std::istream& in, const LabelSchema& schema);
CorpusExample parse_record(const nlohmann::json& record, const LabelSchema& schema,
                           int line);

// Raw-coordinate event records as stored in corpus and prediction files.
std::vector<EventRecord> parse_events(const nlohmann::json& events);
nlohmann::json events_to_json(std::span<const EventRecord> events);

nlohmann::json example_to_json(const CorpusExample& example);
void write_corpus(std::ostream& out, std::span<const CorpusExample> examples);
void save_corpus(const std::string& path, std::span<const CorpusExample> examples);

inline constexpr int kMaxWordLength = 10;

struct Batch {
  std::vector<size_t> example_indices;
  int max_len = 0;
  // batch_size x max_len, padded with -1.
  Eigen::MatrixXi pos_ids;
  Eigen::MatrixXi dep_ids;
  Eigen::MatrixXi ent_ids;
  // batch_size x (max_len * kMaxWordLength), padded with -1.
  Eigen::MatrixXi char_ids;
  Eigen::MatrixXi token_mask;  // 1 for real (including sentinel) tokens
  // Gold tuples right-padded with null tuples to max_tuples.
  std::vector<std::vector<EventTuple>> gold;
  Eigen::MatrixXi tuple_mask;  // batch_size x max_tuples

  int size() const { return static_cast<int>(example_indices.size()); }
};

// Character ids of one token, truncated or padded (-1) to kMaxWordLength.
std::vector<int> char_ids(const std::string& token, const LabelIndex& chars);

size_t max_tuple_count(std::span<const CorpusExample> examples);

std::vector<Batch> make_batches(std::span<const CorpusExample> examples,
                                const FeatureVocab& vocab, int batch_size,
                                int max_tuples,
                                std::optional<uint64_t> shuffle_seed = {});

struct SyntheticConfig {
  int num_sentences = 200;
  int num_event_types = 5;
  int num_roles = 6;
  double multi_event_rate = 0.3;
  double shared_arg_rate = 0.2;
  double overlap_arg_rate = 0.0;
  double null_sentence_rate = 0.1;
  uint64_t seed = 1;

  nlohmann::json to_json() const;
  static SyntheticConfig from_json(const nlohmann::json& j);
};

// What the generator deliberately placed into each sentence.
struct SyntheticFlags {
  bool multi_event = false;
  bool shared_argument = false;
  bool overlapping_arguments = false;
};

struct SyntheticCorpus {
  LabelSchema schema;
  std::vector<CorpusExample> examples;
  std::vector<SyntheticFlags> flags;
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

}  // namespace evtuple

#endif  // EVTUPLE_CORPUS_H_
