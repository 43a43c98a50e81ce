#include "evtuple/autodiff.h"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evtuple {

Parameter& ParameterSet::add(const std::string& name, int rows, int cols) {
  if (by_name_.count(name)) {
    throw std::logic_error("duplicate parameter name: " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Matrix::Zero(rows, cols);
  Parameter* raw = p.get();
  params_.push_back(std::move(p));
  by_name_[name] = raw;
  return *raw;
}

Parameter* ParameterSet::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

size_t ParameterSet::scalar_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p->value.size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) {
    if (p->grad.size() == 0) {
      p->grad = Matrix::Zero(p->value.rows(), p->value.cols());
    } else {
      p->grad.setZero();
    }
  }
}

std::vector<Matrix> ParameterSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) {
    throw std::logic_error("parameter snapshot size mismatch");
  }
  for (size_t i = 0; i < values.size(); ++i) params_[i]->value = values[i];
}

const Matrix& Var::value() const { return graph->value(*this); }

Var Graph::push(Matrix value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = grad_enabled_ && requires_grad;
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Matrix& Graph::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::constant(Matrix value) { return push(std::move(value), false); }

Var Graph::param(Parameter& p) {
  auto it = leaf_of_.find(&p);
  if (it != leaf_of_.end()) return Var{this, it->second};
  Var v = push(p.value, p.trainable);
  nodes_[v.id].param = &p;
  leaf_of_[&p] = v.id;
  return v;
}

Var Graph::matmul(Var a, Var b) {
  assert(value(a).cols() == value(b).rows());
  Var out = push(value(a) * value(b), needs(a) || needs(b));
  if (needs(out)) {
    nodes_[out.id].backward = [a, b, out](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      if (g.needs(a)) g.grad_ref(a.id).noalias() += go * g.value(b).transpose();
      if (g.needs(b)) g.grad_ref(b.id).noalias() += g.value(a).transpose() * go;
    };
  }
  return out;
}

Var Graph::add(Var a, Var b) {
  assert(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols());
  Var out = push(value(a) + value(b), needs(a) || needs(b));
  if (needs(out)) {
    nodes_[out.id].backward = [a, b, out](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      if (g.needs(a)) g.grad_ref(a.id) += go;
      if (g.needs(b)) g.grad_ref(b.id) += go;
    };
  }
  return out;
}

Var Graph::sub(Var a, Var b) {
  Var out = push(value(a) - value(b), needs(a) || needs(b));
  if (needs(out)) {
    nodes_[out.id].backward = [a, b, out](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      if (g.needs(a)) g.grad_ref(a.id) += go;
      if (g.needs(b)) g.grad_ref(b.id) -= go;
    };
  }
  return out;
}

Var Graph::add_row(Var a, Var row) {
  assert(value(row).rows() == 1 && value(row).cols() == value(a).cols());
  Matrix v = value(a);
  v.rowwise() += value(row).row(0);
  Var out = push(std::move(v), needs(a) || needs(row));
  if (needs(out)) {
    nodes_[out.id].backward = [a, row, out](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      if (g.needs(a)) g.grad_ref(a.id) += go;
      if (g.needs(row)) g.grad_ref(row.id) += go.colwise().sum();
    };
  }
  return out;
}

Var Graph::mul(Var a, Var b) {
  Var out = push(value(a).cwiseProduct(value(b)), needs(a) || needs(b));
  if (needs(out)) {
    nodes_[out.id].backward = [a, b, out](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      if (g.needs(a)) g.grad_ref(a.id) += go.cwiseProduct(g.value(b));
      if (g.needs(b)) g.grad_ref(b.id) += go.cwiseProduct(g.value(a));
    };
  }
  return out;
}

Var Graph::scale(Var a, double c) {
  Var out = push(value(a) * c, needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, c, out](Graph& g) {
      g.grad_ref(a.id) += g.nodes_[out.id].grad * c;
    };
  }
  return out;
}

Var Graph::mul_const(Var a, const Matrix& mask) {
  Var out = push(value(a).cwiseProduct(mask), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, mask, out](Graph& g) {
      g.grad_ref(a.id) += g.nodes_[out.id].grad.cwiseProduct(mask);
    };
  }
  return out;
}

Var Graph::transpose(Var a) {
  Var out = push(value(a).transpose(), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, out](Graph& g) {
      g.grad_ref(a.id) += g.nodes_[out.id].grad.transpose();
    };
  }
  return out;
}

Var Graph::concat_cols(std::span<const Var> parts) {
  assert(!parts.empty());
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool req = false;
  for (Var p : parts) {
    assert(value(p).rows() == rows);
    cols += value(p).cols();
    req = req || needs(p);
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    v.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  Var out = push(std::move(v), req);
  if (needs(out)) {
    std::vector<Var> saved(parts.begin(), parts.end());
    nodes_[out.id].backward = [saved, out](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      Eigen::Index at = 0;
      for (Var p : saved) {
        const Eigen::Index w = g.value(p).cols();
        if (g.needs(p)) g.grad_ref(p.id) += go.middleCols(at, w);
        at += w;
      }
    };
  }
  return out;
}

Var Graph::concat_rows(std::span<const Var> parts) {
  assert(!parts.empty());
  const Eigen::Index cols = value(parts[0]).cols();
  Eigen::Index rows = 0;
  bool req = false;
  for (Var p : parts) {
    assert(value(p).cols() == cols);
    rows += value(p).rows();
    req = req || needs(p);
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    v.middleRows(at, value(p).rows()) = value(p);
    at += value(p).rows();
  }
  Var out = push(std::move(v), req);
  if (needs(out)) {
    std::vector<Var> saved(parts.begin(), parts.end());
    nodes_[out.id].backward = [saved, out](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      Eigen::Index at = 0;
      for (Var p : saved) {
        const Eigen::Index h = g.value(p).rows();
        if (g.needs(p)) g.grad_ref(p.id) += go.middleRows(at, h);
        at += h;
      }
    };
  }
  return out;
}

Var Graph::slice_cols(Var a, int start, int len) {
  assert(start >= 0 && start + len <= value(a).cols());
  Var out = push(value(a).middleCols(start, len), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, start, len, out](Graph& g) {
      g.grad_ref(a.id).middleCols(start, len) += g.nodes_[out.id].grad;
    };
  }
  return out;
}

Var Graph::slice_rows(Var a, int start, int len) {
  assert(start >= 0 && start + len <= value(a).rows());
  Var out = push(value(a).middleRows(start, len), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, start, len, out](Graph& g) {
      g.grad_ref(a.id).middleRows(start, len) += g.nodes_[out.id].grad;
    };
  }
  return out;
}

Var Graph::gather_rows(Var table, std::span<const int> indices) {
  const Matrix& t = value(table);
  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(indices.size()), t.cols());
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= 0) {
      assert(indices[i] < t.rows());
      v.row(static_cast<Eigen::Index>(i)) = t.row(indices[i]);
    }
  }
  Var out = push(std::move(v), needs(table));
  if (needs(out)) {
    std::vector<int> idx(indices.begin(), indices.end());
    nodes_[out.id].backward = [table, idx, out](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      Matrix& gt = g.grad_ref(table.id);
      for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= 0) gt.row(idx[i]) += go.row(static_cast<Eigen::Index>(i));
      }
    };
  }
  return out;
}

Var Graph::repeat_rows(Var row, int n) {
  assert(value(row).rows() == 1);
  Matrix v = value(row).replicate(n, 1);
  Var out = push(std::move(v), needs(row));
  if (needs(out)) {
    nodes_[out.id].backward = [row, out](Graph& g) {
      g.grad_ref(row.id) += g.nodes_[out.id].grad.colwise().sum();
    };
  }
  return out;
}

Var Graph::sum(std::span<const Var> terms) {
  assert(!terms.empty());
  Matrix v = value(terms[0]);
  bool req = needs(terms[0]);
  for (size_t i = 1; i < terms.size(); ++i) {
    v += value(terms[i]);
    req = req || needs(terms[i]);
  }
  Var out = push(std::move(v), req);
  if (needs(out)) {
    std::vector<Var> saved(terms.begin(), terms.end());
    nodes_[out.id].backward = [saved, out](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      for (Var t : saved) {
        if (g.needs(t)) g.grad_ref(t.id) += go;
      }
    };
  }
  return out;
}

Var Graph::tanh(Var a) {
  Var out = push(value(a).array().tanh().matrix(), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, out](Graph& g) {
      const Matrix& y = g.value(out);
      g.grad_ref(a.id).array() +=
          g.nodes_[out.id].grad.array() * (1.0 - y.array().square());
    };
  }
  return out;
}

Var Graph::sigmoid(Var a) {
  Matrix v = (1.0 + (-value(a).array()).exp()).inverse().matrix();
  Var out = push(std::move(v), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, out](Graph& g) {
      const Matrix& y = g.value(out);
      g.grad_ref(a.id).array() +=
          g.nodes_[out.id].grad.array() * y.array() * (1.0 - y.array());
    };
  }
  return out;
}

// Exact (erf) GELU, as used by BERT checkpoints.
Var Graph::gelu(Var a) {
  const Matrix& x = value(a);
  Matrix v = x.unaryExpr([](double t) {
    return 0.5 * t * (1.0 + std::erf(t / std::sqrt(2.0)));
  });
  Var out = push(std::move(v), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, out](Graph& g) {
      const Matrix d = g.value(a).unaryExpr([](double t) {
        const double cdf = 0.5 * (1.0 + std::erf(t / std::sqrt(2.0)));
        const double pdf = std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
        return cdf + t * pdf;
      });
      g.grad_ref(a.id).array() += g.nodes_[out.id].grad.array() * d.array();
    };
  }
  return out;
}

Var Graph::sum_all(Var a) {
  Matrix v(1, 1);
  v(0, 0) = value(a).sum();
  Var out = push(std::move(v), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, out](Graph& g) {
      g.grad_ref(a.id).array() += g.nodes_[out.id].grad(0, 0);
    };
  }
  return out;
}

Var Graph::mean_rows(Var a) {
  const double n = static_cast<double>(value(a).rows());
  Var out = push(value(a).colwise().mean(), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, n, out](Graph& g) {
      g.grad_ref(a.id).rowwise() += g.nodes_[out.id].grad.row(0) / n;
    };
  }
  return out;
}

Var Graph::max_rows(Var a) {
  const Matrix& x = value(a);
  assert(x.rows() > 0);
  Matrix v(1, x.cols());
  std::vector<Eigen::Index> arg(static_cast<size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < x.rows(); ++i) {
      if (x(i, j) > x(best, j)) best = i;
    }
    arg[static_cast<size_t>(j)] = best;
    v(0, j) = x(best, j);
  }
  Var out = push(std::move(v), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, arg, out](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      Matrix& ga = g.grad_ref(a.id);
      for (size_t j = 0; j < arg.size(); ++j) {
        ga(arg[j], static_cast<Eigen::Index>(j)) += go(0, static_cast<Eigen::Index>(j));
      }
    };
  }
  return out;
}

Var Graph::softmax_rows(Var a, std::span<const char> column_mask) {
  const Matrix& x = value(a);
  const bool masked = !column_mask.empty();
  assert(!masked || static_cast<Eigen::Index>(column_mask.size()) == x.cols());
  Matrix v = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!masked || column_mask[static_cast<size_t>(j)]) mx = std::max(mx, x(i, j));
    }
    double z = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!masked || column_mask[static_cast<size_t>(j)]) {
        v(i, j) = std::exp(x(i, j) - mx);
        z += v(i, j);
      }
    }
    if (z > 0.0) v.row(i) /= z;
  }
  Var out = push(std::move(v), needs(a));
  if (needs(out)) {
    nodes_[out.id].backward = [a, out](Graph& g) {
      const Matrix& y = g.value(out);
      const Matrix& go = g.nodes_[out.id].grad;
      Matrix& ga = g.grad_ref(a.id);
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const double dot = go.row(i).dot(y.row(i));
        ga.row(i).array() += y.row(i).array() * (go.row(i).array() - dot);
      }
    };
  }
  return out;
}

Var Graph::layer_norm_rows(Var a, Var gamma, Var beta, double eps) {
  const Matrix& x = value(a);
  const Eigen::Index d = x.cols();
  Matrix xhat(x.rows(), d);
  Vector inv_std(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x.row(i).array() - mean) * inv_std(i);
  }
  Matrix v = xhat.array().rowwise() * value(gamma).row(0).array();
  v.rowwise() += value(beta).row(0);
  Var out = push(std::move(v), needs(a) || needs(gamma) || needs(beta));
  if (needs(out)) {
    nodes_[out.id].backward = [a, gamma, beta, out, xhat, inv_std](Graph& g) {
      const Matrix& go = g.nodes_[out.id].grad;
      if (g.needs(gamma)) {
        g.grad_ref(gamma.id) += go.cwiseProduct(xhat).colwise().sum();
      }
      if (g.needs(beta)) g.grad_ref(beta.id) += go.colwise().sum();
      if (g.needs(a)) {
        const Matrix dxhat = go.array().rowwise() * g.value(gamma).row(0).array();
        const double d = static_cast<double>(xhat.cols());
        Matrix& ga = g.grad_ref(a.id);
        for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
          const double m1 = dxhat.row(i).sum() / d;
          const double m2 = dxhat.row(i).dot(xhat.row(i)) / d;
          ga.row(i).array() += inv_std(i) * (dxhat.row(i).array() - m1 -
                                             xhat.row(i).array() * m2);
        }
      }
    };
  }
  return out;
}

Var Graph::nll_at(Var prob, int index, double floor) {
  assert(value(prob).rows() == 1 && index >= 0 && index < value(prob).cols());
  const double p = value(prob)(0, index);
  Matrix v(1, 1);
  v(0, 0) = -std::log(std::max(p, floor));
  Var out = push(std::move(v), needs(prob));
  if (needs(out) && p > floor) {
    nodes_[out.id].backward = [prob, index, p, out](Graph& g) {
      g.grad_ref(prob.id)(0, index) -= g.nodes_[out.id].grad(0, 0) / p;
    };
  }
  return out;
}

void Graph::backward(Var scalar_output) {
  assert(value(scalar_output).size() == 1);
  if (!needs(scalar_output)) return;
  grad_ref(scalar_output.id)(0, 0) += 1.0;
  for (int i = scalar_output.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.backward && n.grad.size() != 0) n.backward(*this);
  }
}

void Graph::accumulate_gradients() {
  for (const auto& [param, id] : leaf_of_) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() == 0 || !param->trainable) continue;
    Parameter* p = n.param;
    if (p->grad.size() == 0) {
      p->grad = n.grad;
    } else {
      p->grad += n.grad;
    }
  }
}

void init_uniform(Matrix& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void init_xavier(Matrix& m, std::mt19937_64& rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  init_uniform(m, bound, rng);
}

void init_normal(Matrix& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

}  // namespace evtuple
