#include "evtuple/encoder.h"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "evtuple/errors.h"

namespace evtuple {

using nlohmann::json;

namespace {

const std::vector<std::string> kSpecialPieces = {
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", std::string(kTriggerSentinel),
    std::string(kArgumentSentinel)};

template <class T>
void read_key(const json& j, const std::string& key, T& out) {
  try {
    out = j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for encoder config key '" + key + "'");
  }
}

}  // namespace

int EncoderConfig::width() const {
  return d_ctx + (use_pos ? d_pos : 0) + (use_dep ? d_dep : 0) + (use_ent ? d_ent : 0) +
         (use_char ? d_c : 0);
}

void EncoderConfig::validate() const {
  for (int w : {d_ctx, d_pos, d_dep, d_ent, d_char, d_c, cnn_filter, max_word_len}) {
    if (w <= 0) throw ConfigError("encoder widths must be positive");
  }
  if (cnn_filter > max_word_len) throw ConfigError("cnn_filter exceeds max_word_len");
  if (max_word_len != kMaxWordLength) {
    throw ConfigError("max_word_len is fixed at " + std::to_string(kMaxWordLength));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (contextual.layers < 0) throw ConfigError("contextual.layers must be >= 0");
  if (contextual.layers > 0) {
    if (contextual.heads <= 0 || d_ctx % contextual.heads != 0) {
      throw ConfigError("contextual.heads must divide d_ctx");
    }
    if (contextual.ffn_dim <= 0 || contextual.max_positions <= 0) {
      throw ConfigError("contextual.ffn_dim and max_positions must be positive");
    }
  }
}

json EncoderConfig::to_json() const {
  return {{"d_ctx", d_ctx},
          {"d_pos", d_pos},
          {"d_dep", d_dep},
          {"d_ent", d_ent},
          {"d_char", d_char},
          {"d_c", d_c},
          {"cnn_filter", cnn_filter},
          {"max_word_len", max_word_len},
          {"use_pos", use_pos},
          {"use_dep", use_dep},
          {"use_ent", use_ent},
          {"use_char", use_char},
          {"dropout", dropout},
          {"contextual",
           {{"layers", contextual.layers},
            {"heads", contextual.heads},
            {"ffn_dim", contextual.ffn_dim},
            {"max_positions", contextual.max_positions},
            {"pooling", contextual.pooling == PiecePooling::kFirst ? "first" : "mean"},
            {"freeze", contextual.freeze},
            {"checkpoint", contextual.checkpoint},
            {"min_word_freq", contextual.min_word_freq}}}};
}

EncoderConfig EncoderConfig::from_json(const json& j) {
  EncoderConfig c;
  const std::map<std::string, int*> ints = {
      {"d_ctx", &c.d_ctx}, {"d_pos", &c.d_pos},   {"d_dep", &c.d_dep},
      {"d_ent", &c.d_ent}, {"d_char", &c.d_char}, {"d_c", &c.d_c},
      {"cnn_filter", &c.cnn_filter}, {"max_word_len", &c.max_word_len}};
  const std::map<std::string, bool*> bools = {{"use_pos", &c.use_pos},
                                              {"use_dep", &c.use_dep},
                                              {"use_ent", &c.use_ent},
                                              {"use_char", &c.use_char}};
  for (const auto& [key, value] : j.items()) {
    if (auto it = ints.find(key); it != ints.end()) {
      read_key(value, key, *it->second);
    } else if (auto bt = bools.find(key); bt != bools.end()) {
      read_key(value, key, *bt->second);
    } else if (key == "dropout") {
      read_key(value, key, c.dropout);
    } else if (key == "contextual") {
      for (const auto& [ck, cv] : value.items()) {
        const std::string full = "contextual." + ck;
        if (ck == "layers") {
          read_key(cv, full, c.contextual.layers);
        } else if (ck == "heads") {
          read_key(cv, full, c.contextual.heads);
        } else if (ck == "ffn_dim") {
          read_key(cv, full, c.contextual.ffn_dim);
        } else if (ck == "max_positions") {
          read_key(cv, full, c.contextual.max_positions);
        } else if (ck == "freeze") {
          read_key(cv, full, c.contextual.freeze);
        } else if (ck == "checkpoint") {
          read_key(cv, full, c.contextual.checkpoint);
        } else if (ck == "min_word_freq") {
          read_key(cv, full, c.contextual.min_word_freq);
        } else if (ck == "pooling") {
          std::string p;
          read_key(cv, full, p);
          if (p == "first") {
            c.contextual.pooling = PiecePooling::kFirst;
          } else if (p == "mean") {
            c.contextual.pooling = PiecePooling::kMean;
          } else {
            throw ConfigError("contextual.pooling must be 'first' or 'mean'");
          }
        } else {
          throw ConfigError("unknown encoder config key '" + full + "'");
        }
      }
    } else {
      throw ConfigError("unknown encoder config key '" + key + "'");
    }
  }
  return c;
}

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> vocab)
    : vocab_(std::move(vocab)) {
  for (size_t i = 0; i < vocab_.size(); ++i) {
    index_.emplace(vocab_[i], static_cast<int>(i));
  }
  for (const auto& special : kSpecialPieces) {
    if (!index_.count(special)) {
      throw ConfigError("word-piece vocabulary lacks '" + special + "'");
    }
  }
  unk_ = index_.at("[UNK]");
  cls_ = index_.at("[CLS]");
  sep_ = index_.at("[SEP]");
}

WordPieceTokenizer WordPieceTokenizer::from_corpus(
    std::span<const CorpusExample> examples, int min_word_freq) {
  std::map<std::string, int> freq;
  std::set<std::string> chars;
  for (const auto& ex : examples) {
    for (const auto& tok : ex.sentence.raw_tokens()) {
      ++freq[tok];
      for (auto& c : utf8_chars(tok)) chars.insert(std::move(c));
    }
  }
  std::set<std::string> pieces;
  for (const auto& [word, count] : freq) {
    if (count >= min_word_freq) pieces.insert(word);
  }
  for (const auto& c : chars) {
    pieces.insert(c);
    pieces.insert("##" + c);
  }
  std::vector<std::string> vocab = kSpecialPieces;
  for (const auto& p : pieces) {
    if (std::find(vocab.begin(), vocab.end(), p) == vocab.end()) vocab.push_back(p);
  }
  return WordPieceTokenizer(std::move(vocab));
}

int WordPieceTokenizer::id(const std::string& piece) const {
  auto it = index_.find(piece);
  return it == index_.end() ? unk_ : it->second;
}

std::vector<int> WordPieceTokenizer::tokenize(const std::string& word) const {
  if (word == kTriggerSentinel || word == kArgumentSentinel) return {id(word)};
  constexpr size_t kMaxChars = 100;
  if (word.empty() || word.size() > kMaxChars) return {unk_};
  std::vector<int> out;
  const auto chars = utf8_chars(word);
  size_t start = 0;
  while (start < chars.size()) {
    size_t end = chars.size();
    int found = -1;
    while (end > start) {
      std::string piece = start > 0 ? "##" : "";
      for (size_t k = start; k < end; ++k) piece += chars[k];
      auto it = index_.find(piece);
      if (it != index_.end()) {
        found = it->second;
        break;
      }
      --end;
    }
    if (found < 0) return {unk_};
    out.push_back(found);
    start = end;
  }
  return out;
}

int TokenEncodings::length() const {
  int n = 0;
  while (n < size() && mask[static_cast<size_t>(n)]) ++n;
  return n;
}

ContextualEncoder::ContextualEncoder(ParameterSet& params, const ContextualConfig& config,
                                     int d_ctx, WordPieceTokenizer tokenizer,
                                     std::mt19937_64& rng)
    : config_(config), d_ctx_(d_ctx), tokenizer_(std::move(tokenizer)) {
  const size_t first = params.size();
  words_ = nn::Embedding::create(params, "contextual.word_embeddings", tokenizer_.size(),
                                 d_ctx, 0.02, rng);
  if (config_.layers > 0) {
    positions_ = nn::Embedding::create(params, "contextual.position_embeddings",
                                       config_.max_positions, d_ctx, 0.02, rng);
    token_types_ = nn::Embedding::create(params, "contextual.token_type_embeddings", 2,
                                         d_ctx, 0.02, rng);
    embed_norm_ = nn::LayerNorm::create(params, "contextual.embed_norm", d_ctx, 1e-12);
    for (int l = 0; l < config_.layers; ++l) {
      layers_.push_back(nn::TransformerLayer::create(
          params, "contextual.layer." + std::to_string(l), d_ctx, config_.heads,
          config_.ffn_dim, rng));
    }
  }
  if (config_.freeze) {
    auto all = params.all();
    for (size_t i = first; i < all.size(); ++i) all[i]->trainable = false;
  }
}

ContextualEncoder::PieceOutput ContextualEncoder::embed_pieces(
    Graph& g, const Sentence& sentence) const {
  std::vector<int> ids;
  PieceOutput out;
  const bool wrap = !layers_.empty();
  if (wrap) ids.push_back(tokenizer_.cls_id());
  for (const auto& tok : sentence.tokens) {
    const auto pieces = tokenizer_.tokenize(tok);
    const int begin = static_cast<int>(ids.size());
    ids.insert(ids.end(), pieces.begin(), pieces.end());
    out.token_ranges.emplace_back(begin, static_cast<int>(ids.size()));
  }
  if (wrap) ids.push_back(tokenizer_.sep_id());

  Var x = words_(g, ids);
  if (wrap) {
    std::vector<int> pos(ids.size()), types(ids.size(), 0);
    for (size_t i = 0; i < ids.size(); ++i) {
      // Positions past the table reuse the last learned position.
      pos[i] = std::min(static_cast<int>(i), config_.max_positions - 1);
    }
    x = g.add(g.add(x, positions_(g, pos)), token_types_(g, types));
    x = embed_norm_(g, x);
    for (const auto& layer : layers_) x = layer(g, x, {});
  }
  out.pieces = x;
  return out;
}

Var ContextualEncoder::embed(Graph& g, const Sentence& sentence) const {
  const PieceOutput po = embed_pieces(g, sentence);
  if (config_.pooling == PiecePooling::kFirst) {
    std::vector<int> first;
    first.reserve(po.token_ranges.size());
    for (const auto& [b, e] : po.token_ranges) first.push_back(b);
    return g.gather_rows(po.pieces, first);
  }
  std::vector<Var> rows;
  rows.reserve(po.token_ranges.size());
  for (const auto& [b, e] : po.token_ranges) {
    rows.push_back(g.mean_rows(g.slice_rows(po.pieces, b, e - b)));
  }
  return g.concat_rows(rows);
}

Encoder::Encoder(ParameterSet& params, const EncoderConfig& config,
                 const FeatureVocab& vocab, WordPieceTokenizer tokenizer,
                 std::mt19937_64& rng)
    : config_(config), vocab_(vocab) {
  config_.validate();
  contextual_ =
      ContextualEncoder(params, config_.contextual, config_.d_ctx, std::move(tokenizer), rng);
  // Feature tables exist whatever the toggles say so that toggling a feature
  // leaves every other parameter's initial value untouched.
  pos_ = nn::Embedding::create(params, "encoder.pos_embeddings", vocab_.pos.size(),
                               config_.d_pos, 0.1, rng);
  dep_ = nn::Embedding::create(params, "encoder.dep_embeddings", vocab_.dep.size(),
                               config_.d_dep, 0.1, rng);
  ent_ = nn::Embedding::create(params, "encoder.ent_embeddings", vocab_.ent.size(),
                               config_.d_ent, 0.1, rng);
  chars_ = nn::Embedding::create(params, "encoder.char_embeddings", vocab_.chars.size(),
                                 config_.d_char, 0.1, rng);
  char_conv_ = nn::Linear::create(params, "encoder.char_conv",
                                  config_.cnn_filter * config_.d_char, config_.d_c, rng);
}

Var Encoder::embed_contextual(Graph& g, const Sentence& sentence) const {
  return contextual_.embed(g, sentence);
}

Var Encoder::embed_chars(Graph& g, const std::string& token) const {
  Sentence one;
  one.tokens = {token};
  return embed_chars(g, one);
}

Var Encoder::embed_chars(Graph& g, const Sentence& sentence) const {
  const int n = sentence.size();
  const int windows = config_.max_word_len - config_.cnn_filter + 1;
  std::vector<std::vector<int>> ids;
  ids.reserve(static_cast<size_t>(n));
  for (const auto& tok : sentence.tokens) ids.push_back(char_ids(tok, vocab_.chars));
  // Row (token i, window w) of the k-th column block holds char w + k.
  std::vector<Var> blocks;
  for (int k = 0; k < config_.cnn_filter; ++k) {
    std::vector<int> sel;
    sel.reserve(static_cast<size_t>(n * windows));
    for (int i = 0; i < n; ++i) {
      for (int w = 0; w < windows; ++w) {
        sel.push_back(ids[static_cast<size_t>(i)][static_cast<size_t>(w + k)]);
      }
    }
    blocks.push_back(chars_(g, sel));
  }
  Var conv = char_conv_(g, g.concat_cols(blocks));
  std::vector<Var> pooled;
  pooled.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pooled.push_back(g.max_rows(g.slice_rows(conv, i * windows, windows)));
  return n == 1 ? pooled.front() : g.concat_rows(pooled);
}

TokenEncodings Encoder::encode(Graph& g, const Sentence& sentence,
                               std::mt19937_64* rng) const {
  const int n = sentence.size();
  std::vector<Var> parts{embed_contextual(g, sentence)};
  auto lookup = [n](const LabelIndex& idx, const std::vector<std::string>& labels) {
    std::vector<int> ids(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<size_t>(i)] = idx.lookup(labels[static_cast<size_t>(i)]);
    return ids;
  };
  if (config_.use_pos) parts.push_back(pos_(g, lookup(vocab_.pos, sentence.pos_tags)));
  if (config_.use_dep) parts.push_back(dep_(g, lookup(vocab_.dep, sentence.dep_tags)));
  if (config_.use_ent) parts.push_back(ent_(g, lookup(vocab_.ent, sentence.ent_tags)));
  if (config_.use_char) parts.push_back(embed_chars(g, sentence));
  Var rows = parts.size() == 1 ? parts.front() : g.concat_cols(parts);
  if (rng != nullptr && config_.dropout > 0.0) {
    rows = g.mul_const(rows, nn::dropout_mask(n, rows.cols(), config_.dropout, *rng));
  }
  return TokenEncodings{rows, std::vector<char>(static_cast<size_t>(n), 1)};
}

}  // namespace evtuple
