#include "evtuple/nn.h"

#include <cassert>
#include <cmath>
#include <tuple>
#include <vector>

namespace evtuple::nn {

Linear Linear::create(ParameterSet& ps, const std::string& name, int in, int out,
                      std::mt19937_64& rng) {
  Linear l;
  l.weight = &ps.add(name + ".weight", in, out);
  l.bias = &ps.add(name + ".bias", 1, out);
  init_xavier(l.weight->value, rng);
  return l;
}

Var Linear::operator()(Graph& g, Var x) const {
  return g.add_row(g.matmul(x, g.param(*weight)), g.param(*bias));
}

Embedding Embedding::create(ParameterSet& ps, const std::string& name, int vocab, int dim,
                            double init_scale, std::mt19937_64& rng) {
  Embedding e;
  e.table = &ps.add(name, vocab, dim);
  init_normal(e.table->value, init_scale, rng);
  return e;
}

Var Embedding::operator()(Graph& g, std::span<const int> ids) const {
  return g.gather_rows(g.param(*table), ids);
}

LstmCell LstmCell::create(ParameterSet& ps, const std::string& name, int in, int hidden,
                          std::mt19937_64& rng) {
  LstmCell c;
  c.w_input = &ps.add(name + ".w_input", in, 4 * hidden);
  c.w_hidden = &ps.add(name + ".w_hidden", hidden, 4 * hidden);
  c.bias = &ps.add(name + ".bias", 1, 4 * hidden);
  init_xavier(c.w_input->value, rng);
  init_xavier(c.w_hidden->value, rng);
  // Forget gate bias starts at 1.
  c.bias->value.middleCols(hidden, hidden).setOnes();
  return c;
}

std::pair<Var, Var> LstmCell::step_projected(Graph& g, Var x_proj, Var h, Var c) const {
  const int hd = hidden_dim();
  Var gates = g.add(x_proj, g.matmul(h, g.param(*w_hidden)));
  Var i = g.sigmoid(g.slice_cols(gates, 0, hd));
  Var f = g.sigmoid(g.slice_cols(gates, hd, hd));
  Var cand = g.tanh(g.slice_cols(gates, 2 * hd, hd));
  Var o = g.sigmoid(g.slice_cols(gates, 3 * hd, hd));
  Var c_next = g.add(g.mul(f, c), g.mul(i, cand));
  Var h_next = g.mul(o, g.tanh(c_next));
  return {h_next, c_next};
}

std::pair<Var, Var> LstmCell::step(Graph& g, Var x, Var h, Var c) const {
  Var proj = g.add_row(g.matmul(x, g.param(*w_input)), g.param(*bias));
  return step_projected(g, proj, h, c);
}

BiLstm BiLstm::create(ParameterSet& ps, const std::string& name, int in, int hidden,
                      std::mt19937_64& rng) {
  return BiLstm{LstmCell::create(ps, name + ".fwd", in, hidden, rng),
                LstmCell::create(ps, name + ".bwd", in, hidden, rng)};
}

Var BiLstm::operator()(Graph& g, Var x, int length) const {
  const int hd = hidden_dim();
  const int n = x.rows();
  assert(length >= 1 && length <= n);
  Var real = length == n ? x : g.slice_rows(x, 0, length);
  Var proj_f = g.add_row(g.matmul(real, g.param(*forward.w_input)), g.param(*forward.bias));
  Var proj_b =
      g.add_row(g.matmul(real, g.param(*backward.w_input)), g.param(*backward.bias));
  const Var zero = g.constant(Matrix::Zero(1, hd));

  std::vector<Var> fwd(static_cast<size_t>(length)), bwd(static_cast<size_t>(length));
  Var h = zero, c = zero;
  for (int t = 0; t < length; ++t) {
    std::tie(h, c) = forward.step_projected(g, g.row(proj_f, t), h, c);
    fwd[static_cast<size_t>(t)] = h;
  }
  h = zero;
  c = zero;
  for (int t = length - 1; t >= 0; --t) {
    std::tie(h, c) = backward.step_projected(g, g.row(proj_b, t), h, c);
    bwd[static_cast<size_t>(t)] = h;
  }
  Var out = g.concat_cols(std::vector<Var>{g.concat_rows(fwd), g.concat_rows(bwd)});
  if (length < n) {
    Var pad = g.constant(Matrix::Zero(n - length, 2 * hd));
    out = g.concat_rows(std::vector<Var>{out, pad});
  }
  return out;
}

LayerNorm LayerNorm::create(ParameterSet& ps, const std::string& name, int dim,
                            double eps) {
  LayerNorm ln;
  ln.gamma = &ps.add(name + ".gamma", 1, dim);
  ln.beta = &ps.add(name + ".beta", 1, dim);
  ln.gamma->value.setOnes();
  ln.eps = eps;
  return ln;
}

Var LayerNorm::operator()(Graph& g, Var x) const {
  return g.layer_norm_rows(x, g.param(*gamma), g.param(*beta), eps);
}

TransformerLayer TransformerLayer::create(ParameterSet& ps, const std::string& name,
                                          int dim, int heads, int ffn_dim,
                                          std::mt19937_64& rng) {
  TransformerLayer t;
  t.query = Linear::create(ps, name + ".attention.query", dim, dim, rng);
  t.key = Linear::create(ps, name + ".attention.key", dim, dim, rng);
  t.value = Linear::create(ps, name + ".attention.value", dim, dim, rng);
  t.attn_out = Linear::create(ps, name + ".attention.output", dim, dim, rng);
  t.attn_norm = LayerNorm::create(ps, name + ".attention.norm", dim, 1e-12);
  t.ffn_in = Linear::create(ps, name + ".ffn.in", dim, ffn_dim, rng);
  t.ffn_out = Linear::create(ps, name + ".ffn.out", ffn_dim, dim, rng);
  t.ffn_norm = LayerNorm::create(ps, name + ".ffn.norm", dim, 1e-12);
  t.heads = heads;
  return t;
}

Var TransformerLayer::operator()(Graph& g, Var x, std::span<const char> mask) const {
  const int dim = x.cols();
  const int head_dim = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var q = query(g, x), k = key(g, x), v = value(g, x);
  std::vector<Var> contexts;
  for (int h = 0; h < heads; ++h) {
    Var qh = g.slice_cols(q, h * head_dim, head_dim);
    Var kh = g.slice_cols(k, h * head_dim, head_dim);
    Var vh = g.slice_cols(v, h * head_dim, head_dim);
    Var scores = g.scale(g.matmul(qh, g.transpose(kh)), scale);
    contexts.push_back(g.matmul(g.softmax_rows(scores, mask), vh));
  }
  Var ctx = heads == 1 ? contexts.front() : g.concat_cols(contexts);
  Var h1 = attn_norm(g, g.add(x, attn_out(g, ctx)));
  Var ff = ffn_out(g, g.gelu(ffn_in(g, h1)));
  return ffn_norm(g, g.add(h1, ff));
}

Matrix dropout_mask(int rows, int cols, double p, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::bernoulli_distribution keep(1.0 - p);
  const double inv = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? inv : 0.0;
  return m;
}

}  // namespace evtuple::nn
