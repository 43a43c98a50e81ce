// Sentence encoder: contextual token embeddings fused with POS, dependency,
// entity and character-CNN feature embeddings into one row per token.
#ifndef EVTUPLE_ENCODER_H_
#define EVTUPLE_ENCODER_H_

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evtuple/autodiff.h"
#include "evtuple/corpus.h"
#include "evtuple/frame_codec.h"
#include "evtuple/nn.h"

namespace evtuple {

enum class PiecePooling { kFirst, kMean };

struct ContextualConfig {
  // Transformer depth; 0 turns the contextual encoder into a plain
  // piece-embedding table.
  int layers = 12;
  int heads = 12;
  int ffn_dim = 3072;
  int max_positions = 512;
  PiecePooling pooling = PiecePooling::kFirst;
  bool freeze = false;
  // Path of a converted pretrained checkpoint; empty means random init.
  std::string checkpoint;
  // Minimum frequency for whole words in a corpus-built piece vocabulary.
  int min_word_freq = 1;
};

struct EncoderConfig {
  int d_ctx = 768;
  int d_pos = 50;
  int d_dep = 50;
  int d_ent = 50;
  int d_char = 50;
  int d_c = 50;
  int cnn_filter = 3;
  int max_word_len = kMaxWordLength;
  bool use_pos = true;
  bool use_dep = true;
  bool use_ent = true;
  bool use_char = true;
  double dropout = 0.5;
  ContextualConfig contextual;

  // d_h: contextual width plus every enabled feature width.
  int width() const;
  // Throws ConfigError on non-positive widths or dropout outside [0, 1).
  void validate() const;

  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

// Greedy longest-match-first word-piece tokenizer. "[unused1]" and
// "[unused2]" are never split.
class WordPieceTokenizer {
 public:
  WordPieceTokenizer() = default;
  explicit WordPieceTokenizer(std::vector<std::string> vocab);

  // Vocabulary of special entries, every corpus word seen at least
  // min_word_freq times, and every character as a leading and "##" piece.
  static WordPieceTokenizer from_corpus(std::span<const CorpusExample> examples,
                                        int min_word_freq);

  std::vector<int> tokenize(const std::string& word) const;
  int id(const std::string& piece) const;  // UNK id when absent
  int unk_id() const { return unk_; }
  int cls_id() const { return cls_; }
  int sep_id() const { return sep_; }
  int size() const { return static_cast<int>(vocab_.size()); }
  const std::vector<std::string>& vocab() const { return vocab_; }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  int unk_ = 0, cls_ = 0, sep_ = 0;
};

struct TokenEncodings {
  Var rows;                // n x d_h
  std::vector<char> mask;  // 1 for real tokens, length n

  int size() const { return static_cast<int>(mask.size()); }
  int length() const;  // count of leading real tokens
};

// Word-piece embeddings, optional transformer stack, pooled back to one row
// per sentence token.
class ContextualEncoder {
 public:
  ContextualEncoder() = default;
  ContextualEncoder(ParameterSet& params, const ContextualConfig& config, int d_ctx,
                    WordPieceTokenizer tokenizer, std::mt19937_64& rng);

  Var embed(Graph& g, const Sentence& sentence) const;
  // Piece-level outputs of the transformer (including [CLS]/[SEP]) and the
  // piece range of each token; exposed for pooling tests.
  struct PieceOutput {
    Var pieces;
    std::vector<std::pair<int, int>> token_ranges;  // [begin, end) into pieces
  };
  PieceOutput embed_pieces(Graph& g, const Sentence& sentence) const;

  const WordPieceTokenizer& tokenizer() const { return tokenizer_; }
  const ContextualConfig& config() const { return config_; }

 private:
  ContextualConfig config_;
  int d_ctx_ = 0;
  WordPieceTokenizer tokenizer_;
  nn::Embedding words_;
  nn::Embedding positions_;
  nn::Embedding token_types_;
  nn::LayerNorm embed_norm_;
  std::vector<nn::TransformerLayer> layers_;
};

class Encoder {
 public:
  Encoder() = default;
  Encoder(ParameterSet& params, const EncoderConfig& config, const FeatureVocab& vocab,
          WordPieceTokenizer tokenizer, std::mt19937_64& rng);

  const EncoderConfig& config() const { return config_; }
  int width() const { return config_.width(); }
  const ContextualEncoder& contextual() const { return contextual_; }

  Var embed_contextual(Graph& g, const Sentence& sentence) const;
  // 1 x d_c character-CNN vector of one token.
  Var embed_chars(Graph& g, const std::string& token) const;
  // n x d_c for every token of a sentence in one pass.
  Var embed_chars(Graph& g, const Sentence& sentence) const;

  // Dropout is applied to the fused rows only when `rng` is given.
  TokenEncodings encode(Graph& g, const Sentence& sentence,
                        std::mt19937_64* rng = nullptr) const;

 private:
  EncoderConfig config_;
  FeatureVocab vocab_;
  ContextualEncoder contextual_;
  nn::Embedding pos_, dep_, ent_, chars_;
  nn::Linear char_conv_;
};

}  // namespace evtuple

#endif  // EVTUPLE_ENCODER_H_
