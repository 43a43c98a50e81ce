// Parameterised layers built on the autodiff graph. Layers only hold
// pointers into a ParameterSet; the set owns the storage.
#ifndef EVTUPLE_NN_H_
#define EVTUPLE_NN_H_

#include <random>
#include <span>
#include <string>
#include <utility>

#include "evtuple/autodiff.h"

namespace evtuple::nn {

struct Linear {
  Parameter* weight = nullptr;  // in x out
  Parameter* bias = nullptr;    // 1 x out

  static Linear create(ParameterSet& ps, const std::string& name, int in, int out,
                       std::mt19937_64& rng);
  Var operator()(Graph& g, Var x) const;
  int in_dim() const { return static_cast<int>(weight->value.rows()); }
  int out_dim() const { return static_cast<int>(weight->value.cols()); }
};

struct Embedding {
  Parameter* table = nullptr;  // vocab x dim

  static Embedding create(ParameterSet& ps, const std::string& name, int vocab, int dim,
                          double init_scale, std::mt19937_64& rng);
  Var operator()(Graph& g, std::span<const int> ids) const;
  int dim() const { return static_cast<int>(table->value.cols()); }
};

// Gate layout along the 4*h axis: input, forget, cell, output.
struct LstmCell {
  Parameter* w_input = nullptr;   // in x 4h
  Parameter* w_hidden = nullptr;  // h x 4h
  Parameter* bias = nullptr;      // 1 x 4h

  static LstmCell create(ParameterSet& ps, const std::string& name, int in, int hidden,
                         std::mt19937_64& rng);
  int hidden_dim() const { return static_cast<int>(w_hidden->value.rows()); }
  int input_dim() const { return static_cast<int>(w_input->value.rows()); }

  // One step given the already projected input row x*W_input (1 x 4h).
  // Returns (h, c).
  std::pair<Var, Var> step_projected(Graph& g, Var x_proj, Var h, Var c) const;
  std::pair<Var, Var> step(Graph& g, Var x, Var h, Var c) const;
};

// Bidirectional LSTM over the first `length` rows of x; rows past `length`
// are zero in the output. Output width is 2 * hidden (forward then backward).
struct BiLstm {
  LstmCell forward;
  LstmCell backward;

  static BiLstm create(ParameterSet& ps, const std::string& name, int in, int hidden,
                       std::mt19937_64& rng);
  Var operator()(Graph& g, Var x, int length) const;
  int hidden_dim() const { return forward.hidden_dim(); }
};

struct LayerNorm {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;
  double eps = 1e-12;

  static LayerNorm create(ParameterSet& ps, const std::string& name, int dim, double eps);
  Var operator()(Graph& g, Var x) const;
};

// Post-norm transformer encoder layer with the BERT layout: multi-head
// self-attention, residual + norm, GELU feed-forward, residual + norm.
struct TransformerLayer {
  Linear query, key, value, attn_out;
  LayerNorm attn_norm;
  Linear ffn_in, ffn_out;
  LayerNorm ffn_norm;
  int heads = 1;

  static TransformerLayer create(ParameterSet& ps, const std::string& name, int dim,
                                 int heads, int ffn_dim, std::mt19937_64& rng);
  Var operator()(Graph& g, Var x, std::span<const char> mask) const;
};

Matrix dropout_mask(int rows, int cols, double p, std::mt19937_64& rng);

}  // namespace evtuple::nn

#endif  // EVTUPLE_NN_H_
