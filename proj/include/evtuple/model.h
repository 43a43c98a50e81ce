// The full extractor: encoder + decoder sharing one parameter set, together
// with the label schema and vocabularies it was built for.
#ifndef EVTUPLE_MODEL_H_
#define EVTUPLE_MODEL_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evtuple/autodiff.h"
#include "evtuple/corpus.h"
#include "evtuple/decoder.h"
#include "evtuple/encoder.h"
#include "evtuple/frame_codec.h"

namespace evtuple {

inline constexpr int kCheckpointVersion = 1;

class Model {
 public:
  // Random initialisation from `seed`. When encoder.contextual.checkpoint is
  // set, the word-piece vocabulary and contextual weights come from that
  // file; otherwise the vocabulary is built from `corpus`.
  static Model create(const LabelSchema& schema, const FeatureVocab& vocab,
                      std::span<const CorpusExample> corpus, const EncoderConfig& encoder,
                      const DecoderConfig& decoder, uint64_t seed);
  static Model create(const LabelSchema& schema, const FeatureVocab& vocab,
                      WordPieceTokenizer tokenizer, const EncoderConfig& encoder,
                      const DecoderConfig& decoder, uint64_t seed);

  const LabelSchema& schema() const { return schema_; }
  const FeatureVocab& vocab() const { return vocab_; }
  const Encoder& encoder() const { return encoder_; }
  const Decoder& decoder() const { return decoder_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Runs `steps` decoding steps. Dropout is active iff `dropout_rng` is set.
  std::vector<StepVars> forward(Graph& g, const Sentence& sentence, int steps,
                                std::mt19937_64* dropout_rng = nullptr) const;

  // `provenance` is stored verbatim in the checkpoint header.
  void save(const std::string& path, const nlohmann::json& provenance = {}) const;
  static Model load(const std::string& path);
  // Provenance block of a checkpoint without building the model.
  static nlohmann::json read_provenance(const std::string& path);

 private:
  Model() = default;

  LabelSchema schema_;
  FeatureVocab vocab_;
  ParameterSet params_;
  Encoder encoder_;
  Decoder decoder_;
};

// Writes the contextual-encoder part of a model as a standalone pretrained
// checkpoint (vocabulary, shape config and "contextual.*" tensors).
void save_contextual_checkpoint(const Model& model, const std::string& path);

}  // namespace evtuple

#endif  // EVTUPLE_MODEL_H_
