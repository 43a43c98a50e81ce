// One decoding step of the tuple generator: attention over the token
// encodings, the sequence LSTM, the trigger and argument pointer networks, and
// the event-type and role classifiers.
#ifndef EVTUPLE_DECODER_H_
#define EVTUPLE_DECODER_H_

#include <random>

#include <nlohmann/json_fwd.hpp>

#include "evtuple/autodiff.h"
#include "evtuple/encoder.h"
#include "evtuple/nn.h"

namespace evtuple {

struct DecoderConfig {
  int d_p = 968;  // per-direction hidden width of each pointer Bi-LSTM
  int attention_dim = 0;  // 0 means d_h

  void validate() const;
  nlohmann::json to_json() const;
  static DecoderConfig from_json(const nlohmann::json& j);
};

struct DecoderState {
  Var h;           // 1 x d_h
  Var c;           // 1 x d_h
  Var tuple_sum;   // 1 x 8*d_p, sum of previously produced tuple embeddings
  int step = 0;
};

// Graph-level outputs of one step. All probability rows are 1 x n or
// 1 x classes.
struct StepVars {
  Var s_tr, e_tr, s_ar, e_ar;
  Var event_type;
  Var role;
  Var trigger_vec;   // 1 x 4*d_p
  Var argument_vec;  // 1 x 4*d_p
};

// Plain-valued copy of StepVars for inference and scoring.
struct StepOutput {
  Vector s_tr, e_tr, s_ar, e_ar;
  Vector event_type;
  Vector role;
  Vector trigger_vec;
  Vector argument_vec;

  static StepOutput from(const StepVars& v);
  int length() const { return static_cast<int>(s_tr.size()); }
};

struct PointerOutput {
  Var start;   // 1 x n
  Var end;     // 1 x n
  Var hidden;  // n x 2*d_p
};

class Decoder {
 public:
  Decoder() = default;
  Decoder(ParameterSet& params, const DecoderConfig& config, int d_h, int event_classes,
          int role_classes, std::mt19937_64& rng);

  const DecoderConfig& config() const { return config_; }
  int d_h() const { return d_h_; }
  int tuple_width() const { return 8 * config_.d_p; }

  DecoderState initial_state(Graph& g) const;
  // Key projections of the encodings; computed once per sentence.
  Var attention_keys(Graph& g, const TokenEncodings& enc) const;

  Var attend(Graph& g, const TokenEncodings& enc, Var keys,
             const DecoderState& state) const;
  DecoderState lstm_step(Graph& g, Var context, const DecoderState& state) const;
  PointerOutput trigger_pointer(Graph& g, const TokenEncodings& enc, Var h) const;
  PointerOutput argument_pointer(Graph& g, const TokenEncodings& enc, Var trigger_hidden,
                                 Var h) const;
  // (trigger vector, argument vector).
  std::pair<Var, Var> phrase_vectors(Graph& g, const PointerOutput& trigger,
                                     const PointerOutput& argument) const;
  Var classify_event(Graph& g, Var trigger_vec, Var h) const;
  Var classify_role(Graph& g, Var trigger_vec, Var argument_vec, Var h) const;

  // Full step; `state` is advanced in place (hidden state and tuple sum).
  StepVars step(Graph& g, const TokenEncodings& enc, Var keys, DecoderState& state) const;

 private:
  DecoderConfig config_;
  int d_h_ = 0;
  nn::Linear att_query_;
  nn::Linear att_key_;
  Parameter* att_score_ = nullptr;  // attention_dim x 1
  nn::LstmCell lstm_;
  nn::BiLstm trigger_lstm_;
  nn::Linear trigger_start_, trigger_end_;
  nn::BiLstm argument_lstm_;
  nn::Linear argument_start_, argument_end_;
  nn::Linear event_classifier_;
  nn::Linear role_classifier_;
};

}  // namespace evtuple

#endif  // EVTUPLE_DECODER_H_
