#include "evtuple/model.h"

#include "evtuple/archive.h"
#include "evtuple/errors.h"

namespace evtuple {

using nlohmann::json;

namespace {

const char* const kContextualPrefix = "contextual.";

json contextual_shape(const EncoderConfig& enc) {
  return {{"d_ctx", enc.d_ctx},
          {"layers", enc.contextual.layers},
          {"heads", enc.contextual.heads},
          {"ffn_dim", enc.contextual.ffn_dim},
          {"max_positions", enc.contextual.max_positions}};
}

void copy_tensor(Parameter& p, const NamedTensor& t) {
  if (t.value.rows() != p.value.rows() || t.value.cols() != p.value.cols()) {
    throw CheckpointError("tensor '" + t.name + "' has shape " +
                          std::to_string(t.value.rows()) + "x" +
                          std::to_string(t.value.cols()) + ", model expects " +
                          std::to_string(p.value.rows()) + "x" +
                          std::to_string(p.value.cols()));
  }
  p.value = t.value;
}

}  // namespace

Model Model::create(const LabelSchema& schema, const FeatureVocab& vocab,
                    std::span<const CorpusExample> corpus, const EncoderConfig& encoder,
                    const DecoderConfig& decoder, uint64_t seed) {
  if (encoder.contextual.checkpoint.empty()) {
    return create(schema, vocab,
                  WordPieceTokenizer::from_corpus(corpus, encoder.contextual.min_word_freq),
                  encoder, decoder, seed);
  }
  const TensorArchive ar = TensorArchive::load(encoder.contextual.checkpoint);
  if (ar.kind != "contextual") {
    throw CheckpointError("'" + encoder.contextual.checkpoint +
                          "' is not a contextual-encoder checkpoint");
  }
  if (ar.meta.at("shape") != contextual_shape(encoder)) {
    throw ConfigError("contextual checkpoint shape " + ar.meta.at("shape").dump() +
                      " does not match encoder config " + contextual_shape(encoder).dump());
  }
  Model m = create(schema, vocab,
                   WordPieceTokenizer(ar.meta.at("vocab").get<std::vector<std::string>>()),
                   encoder, decoder, seed);
  for (Parameter* p : m.params_.all()) {
    if (p->name.rfind(kContextualPrefix, 0) != 0) continue;
    const NamedTensor* t = ar.find(p->name);
    if (t == nullptr) throw CheckpointError("contextual checkpoint lacks '" + p->name + "'");
    copy_tensor(*p, *t);
  }
  return m;
}

Model Model::create(const LabelSchema& schema, const FeatureVocab& vocab,
                    WordPieceTokenizer tokenizer, const EncoderConfig& encoder,
                    const DecoderConfig& decoder, uint64_t seed) {
  Model m;
  m.schema_ = schema;
  m.vocab_ = vocab;
  std::mt19937_64 rng(seed);
  m.encoder_ = Encoder(m.params_, encoder, m.vocab_, std::move(tokenizer), rng);
  m.decoder_ = Decoder(m.params_, decoder, encoder.width(), schema.num_event_classes(),
                       schema.num_role_classes(), rng);
  return m;
}

std::vector<StepVars> Model::forward(Graph& g, const Sentence& sentence, int steps,
                                     std::mt19937_64* dropout_rng) const {
  const TokenEncodings enc = encoder_.encode(g, sentence, dropout_rng);
  const Var keys = decoder_.attention_keys(g, enc);
  DecoderState state = decoder_.initial_state(g);
  std::vector<StepVars> out;
  out.reserve(static_cast<size_t>(steps));
  for (int t = 0; t < steps; ++t) out.push_back(decoder_.step(g, enc, keys, state));
  return out;
}

void Model::save(const std::string& path, const json& provenance) const {
  TensorArchive ar;
  ar.kind = "model";
  ar.meta = {{"checkpoint_version", kCheckpointVersion},
             {"schema", schema_.to_json()},
             {"vocab", vocab_.to_json()},
             {"piece_vocab", encoder_.contextual().tokenizer().vocab()},
             {"encoder", encoder_.config().to_json()},
             {"decoder", decoder_.config().to_json()},
             {"provenance", provenance}};
  for (const Parameter* p : params_.all()) ar.tensors.push_back({p->name, p->value});
  ar.save(path);
}

Model Model::load(const std::string& path) {
  const TensorArchive ar = TensorArchive::load(path);
  if (ar.kind != "model") throw CheckpointError("'" + path + "' is not a model checkpoint");
  Model m;
  try {
    const int version = ar.meta.at("checkpoint_version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("model checkpoint version " + std::to_string(version) +
                            " is incompatible with this build (expects " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    EncoderConfig enc = EncoderConfig::from_json(ar.meta.at("encoder"));
    // Weights come from this file, not from the original pretrained source.
    enc.contextual.checkpoint.clear();
    m = create(LabelSchema::from_json(ar.meta.at("schema")),
               FeatureVocab::from_json(ar.meta.at("vocab")),
               WordPieceTokenizer(ar.meta.at("piece_vocab").get<std::vector<std::string>>()),
               enc, DecoderConfig::from_json(ar.meta.at("decoder")), 0);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupted checkpoint metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config rejected: ") + e.what());
  }
  const auto params = m.params_.all();
  if (params.size() != ar.tensors.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(ar.tensors.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (ar.tensors[i].name != params[i]->name) {
      throw CheckpointError("tensor order mismatch at '" + ar.tensors[i].name + "'");
    }
    copy_tensor(*params[i], ar.tensors[i]);
  }
  return m;
}

json Model::read_provenance(const std::string& path) {
  const TensorArchive ar = TensorArchive::load(path);
  return ar.meta.value("provenance", json{});
}

void save_contextual_checkpoint(const Model& model, const std::string& path) {
  TensorArchive ar;
  ar.kind = "contextual";
  ar.meta = {{"shape", contextual_shape(model.encoder().config())},
             {"vocab", model.encoder().contextual().tokenizer().vocab()}};
  for (const Parameter* p : model.params().all()) {
    if (p->name.rfind(kContextualPrefix, 0) == 0) ar.tensors.push_back({p->name, p->value});
  }
  ar.save(path);
}

}  // namespace evtuple
