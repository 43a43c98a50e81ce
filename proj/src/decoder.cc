#include "evtuple/decoder.h"

#include <nlohmann/json.hpp>

#include "evtuple/errors.h"

namespace evtuple {

using nlohmann::json;

void DecoderConfig::validate() const {
  if (d_p <= 0) throw ConfigError("decoder d_p must be positive");
  if (attention_dim < 0) throw ConfigError("decoder attention_dim must be >= 0");
}

json DecoderConfig::to_json() const {
  return {{"d_p", d_p}, {"attention_dim", attention_dim}};
}

DecoderConfig DecoderConfig::from_json(const json& j) {
  DecoderConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "d_p") {
        c.d_p = value.get<int>();
      } else if (key == "attention_dim") {
        c.attention_dim = value.get<int>();
      } else {
        throw ConfigError("unknown decoder config key '" + key + "'");
      }
    } catch (const json::exception&) {
      throw ConfigError("bad value for decoder config key '" + key + "'");
    }
  }
  return c;
}

StepOutput StepOutput::from(const StepVars& v) {
  auto vec = [](Var x) { return Vector(x.value().row(0).transpose()); };
  return StepOutput{vec(v.s_tr),       vec(v.e_tr),        vec(v.s_ar),
                    vec(v.e_ar),       vec(v.event_type),  vec(v.role),
                    vec(v.trigger_vec), vec(v.argument_vec)};
}

Decoder::Decoder(ParameterSet& params, const DecoderConfig& config, int d_h,
                 int event_classes, int role_classes, std::mt19937_64& rng)
    : config_(config), d_h_(d_h) {
  config_.validate();
  const int dp = config_.d_p;
  const int att = config_.attention_dim > 0 ? config_.attention_dim : d_h;
  att_query_ = nn::Linear::create(params, "decoder.attention.query", d_h + 8 * dp, att, rng);
  att_key_ = nn::Linear::create(params, "decoder.attention.key", d_h, att, rng);
  att_score_ = &params.add("decoder.attention.score", att, 1);
  init_xavier(att_score_->value, rng);
  lstm_ = nn::LstmCell::create(params, "decoder.lstm", d_h + 8 * dp, d_h, rng);
  trigger_lstm_ = nn::BiLstm::create(params, "decoder.trigger_pointer", 2 * d_h, dp, rng);
  trigger_start_ = nn::Linear::create(params, "decoder.trigger_pointer.start", 2 * dp, 1, rng);
  trigger_end_ = nn::Linear::create(params, "decoder.trigger_pointer.end", 2 * dp, 1, rng);
  argument_lstm_ =
      nn::BiLstm::create(params, "decoder.argument_pointer", 2 * dp + 2 * d_h, dp, rng);
  argument_start_ =
      nn::Linear::create(params, "decoder.argument_pointer.start", 2 * dp, 1, rng);
  argument_end_ = nn::Linear::create(params, "decoder.argument_pointer.end", 2 * dp, 1, rng);
  event_classifier_ =
      nn::Linear::create(params, "decoder.event_classifier", 4 * dp + d_h, event_classes, rng);
  role_classifier_ =
      nn::Linear::create(params, "decoder.role_classifier", 8 * dp + d_h, role_classes, rng);
}

DecoderState Decoder::initial_state(Graph& g) const {
  const Var zero_h = g.constant(Matrix::Zero(1, d_h_));
  return DecoderState{zero_h, zero_h, g.constant(Matrix::Zero(1, tuple_width())), 0};
}

Var Decoder::attention_keys(Graph& g, const TokenEncodings& enc) const {
  return att_key_(g, enc.rows);
}

Var Decoder::attend(Graph& g, const TokenEncodings& enc, Var keys,
                    const DecoderState& state) const {
  const int n = enc.size();
  Var query = att_query_(g, g.concat_cols(std::vector<Var>{state.h, state.tuple_sum}));
  Var hidden = g.tanh(g.add(keys, g.repeat_rows(query, n)));
  Var scores = g.transpose(g.matmul(hidden, g.param(*att_score_)));  // 1 x n
  Var weights = g.softmax_rows(scores, enc.mask);
  return g.matmul(weights, enc.rows);
}

DecoderState Decoder::lstm_step(Graph& g, Var context, const DecoderState& state) const {
  Var input = g.concat_cols(std::vector<Var>{context, state.tuple_sum});
  auto [h, c] = lstm_.step(g, input, state.h, state.c);
  return DecoderState{h, c, state.tuple_sum, state.step + 1};
}

PointerOutput Decoder::trigger_pointer(Graph& g, const TokenEncodings& enc, Var h) const {
  const int n = enc.size();
  Var input = g.concat_cols(std::vector<Var>{g.repeat_rows(h, n), enc.rows});
  Var hidden = trigger_lstm_(g, input, enc.length());
  Var start = g.softmax_rows(g.transpose(trigger_start_(g, hidden)), enc.mask);
  Var end = g.softmax_rows(g.transpose(trigger_end_(g, hidden)), enc.mask);
  return PointerOutput{start, end, hidden};
}

PointerOutput Decoder::argument_pointer(Graph& g, const TokenEncodings& enc,
                                        Var trigger_hidden, Var h) const {
  const int n = enc.size();
  Var input =
      g.concat_cols(std::vector<Var>{trigger_hidden, g.repeat_rows(h, n), enc.rows});
  Var hidden = argument_lstm_(g, input, enc.length());
  Var start = g.softmax_rows(g.transpose(argument_start_(g, hidden)), enc.mask);
  Var end = g.softmax_rows(g.transpose(argument_end_(g, hidden)), enc.mask);
  return PointerOutput{start, end, hidden};
}

std::pair<Var, Var> Decoder::phrase_vectors(Graph& g, const PointerOutput& trigger,
                                            const PointerOutput& argument) const {
  Var ev = g.concat_cols(std::vector<Var>{g.matmul(trigger.start, trigger.hidden),
                                          g.matmul(trigger.end, trigger.hidden)});
  Var arg = g.concat_cols(std::vector<Var>{g.matmul(argument.start, argument.hidden),
                                           g.matmul(argument.end, argument.hidden)});
  return {ev, arg};
}

Var Decoder::classify_event(Graph& g, Var trigger_vec, Var h) const {
  return g.softmax_rows(event_classifier_(g, g.concat_cols(std::vector<Var>{trigger_vec, h})));
}

Var Decoder::classify_role(Graph& g, Var trigger_vec, Var argument_vec, Var h) const {
  return g.softmax_rows(
      role_classifier_(g, g.concat_cols(std::vector<Var>{trigger_vec, argument_vec, h})));
}

StepVars Decoder::step(Graph& g, const TokenEncodings& enc, Var keys,
                       DecoderState& state) const {
  Var context = attend(g, enc, keys, state);
  DecoderState next = lstm_step(g, context, state);
  PointerOutput trig = trigger_pointer(g, enc, next.h);
  PointerOutput arg = argument_pointer(g, enc, trig.hidden, next.h);
  auto [ev, av] = phrase_vectors(g, trig, arg);
  StepVars out{trig.start, trig.end, arg.start, arg.end,
               classify_event(g, ev, next.h), classify_role(g, ev, av, next.h), ev, av};
  next.tuple_sum = g.add(next.tuple_sum, g.concat_cols(std::vector<Var>{ev, av}));
  state = next;
  return out;
}

}  // namespace evtuple
