// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Graph records every operation eagerly (values are computed immediately)
// and keeps a closure per node that propagates the node's gradient to its
// inputs. Nodes are appended in topological order, so backward() is a single
// reverse sweep. Parameters live outside the graph; a graph creates one leaf
// per parameter on first use and accumulate_gradients() adds leaf gradients
// into Parameter::grad.
#ifndef EVTUPLE_AUTODIFF_H_
#define EVTUPLE_AUTODIFF_H_

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace evtuple {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;
};

// Owns named parameters in registration order. Registration order is the
// serialization order of checkpoints.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  Parameter& add(const std::string& name, int rows, int cols);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  size_t size() const { return params_.size(); }
  size_t scalar_count() const;

  void zero_grad();

  // Deep copies of the values, keyed by position.
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

class Graph;

struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Matrix& value() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }
  double scalar() const { return value()(0, 0); }
};

class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Matrix value);
  Var param(Parameter& p);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }
  size_t node_count() const { return nodes_.size(); }

  // Linear algebra and shape manipulation.
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_row(Var a, Var row);  // broadcast a 1 x d row over every row of a
  Var mul(Var a, Var b);        // elementwise
  Var scale(Var a, double c);
  Var mul_const(Var a, const Matrix& mask);
  Var transpose(Var a);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var slice_cols(Var a, int start, int len);
  Var slice_rows(Var a, int start, int len);
  Var row(Var a, int i) { return slice_rows(a, i, 1); }
  // Rows of `table` selected by index; a negative index yields a zero row.
  Var gather_rows(Var table, std::span<const int> indices);
  Var repeat_rows(Var row, int n);
  Var sum(std::span<const Var> terms);

  // Pointwise nonlinearities.
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var gelu(Var a);

  // Reductions.
  Var sum_all(Var a);
  Var mean_rows(Var a);  // 1 x cols
  Var max_rows(Var a);   // 1 x cols, column-wise maximum

  // Row-wise softmax. Columns with column_mask[j] == false receive exactly
  // zero probability. An empty mask means every column is valid.
  Var softmax_rows(Var a, std::span<const char> column_mask = {});
  Var layer_norm_rows(Var a, Var gamma, Var beta, double eps);

  // -log(max(prob[0, index], floor)).
  Var nll_at(Var prob, int index, double floor);

  void backward(Var scalar_output);
  // Adds leaf gradients into Parameter::grad (allocating it if empty).
  void accumulate_gradients();

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Graph&)> backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Var push(Matrix value, bool requires_grad);
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  Matrix& grad_ref(int id);

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> leaf_of_;
};

// Weight initialisation helpers.
void init_uniform(Matrix& m, double bound, std::mt19937_64& rng);
void init_xavier(Matrix& m, std::mt19937_64& rng);
void init_normal(Matrix& m, double stddev, std::mt19937_64& rng);

}  // namespace evtuple

#endif  // EVTUPLE_AUTODIFF_H_
