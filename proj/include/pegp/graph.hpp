#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "pegp/numerics.hpp"

namespace pegp::nets {

struct Node {
  std::size_t id = 0;
};

/// Reverse-mode differentiation over a fixed set of matrix operations.
///
/// Nodes are appended in evaluation order, so reverse creation order is a
/// valid topological order for the backward sweep. Only subgraphs that touch a
/// parameter node carry gradients. Operations outside the built-in set enter
/// through `custom`, which takes a precomputed value and a closure mapping the
/// upstream gradient to one gradient per input.
class Graph {
 public:
  using Backward = std::function<std::vector<Matrix>(const Matrix& upstream)>;

  Node parameter(Matrix value);
  Node constant(Matrix value);

  Node matmul(Node a, Node b);
  /// a * b^T
  Node matmul_transposed(Node a, Node b);
  /// x (n x k) plus a k x 1 column vector added to every row.
  Node add_row_bias(Node x, Node bias);
  Node add(Node a, Node b);
  Node sub(Node a, Node b);
  Node hadamard(Node a, Node b);
  Node scale(Node a, double factor);
  Node tanh(Node a);
  Node sigmoid(Node a);
  Node exp(Node a);
  Node log(Node a);
  Node square(Node a);
  /// 1 x 1 sum of all entries.
  Node sum(Node a);
  Node columns(Node a, Eigen::Index first, Eigen::Index count);
  /// 1 x 1 Bernoulli log-likelihood of binary `targets` under `probs`, with
  /// probabilities clamped to [1e-7, 1 - 1e-7]; clamped entries pass no
  /// gradient.
  Node bernoulli_loglik(Node probs, Matrix targets);
  Node custom(std::vector<Node> inputs, Matrix value, Backward backward);

  const Matrix& value(Node n) const;
  double scalar(Node n) const;
  bool requires_grad(Node n) const;

  /// Backward sweep from a 1 x 1 root. Gradients of earlier sweeps are reset.
  void backward(Node root);
  /// d root / d node; throws Usage if no backward sweep has run.
  const Matrix& grad(Node n) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  enum class Op {
    Parameter, Constant, MatMul, MatMulT, AddRowBias, Add, Sub, Hadamard, Scale,
    Tanh, Sigmoid, Exp, Log, Square, Sum, Columns, Bernoulli, Custom,
  };

  struct Record {
    Op op;
    std::vector<std::size_t> inputs;
    Matrix value;
    mutable Matrix grad;
    bool needs_grad = false;
    double factor = 0.0;
    Eigen::Index first = 0;
    Matrix aux;
    Backward backward;
  };

  Node push(Op op, std::vector<std::size_t> inputs, Matrix value);
  const Record& at(Node n) const;
  void accumulate(std::size_t id, const Matrix& g);

  std::vector<Record> nodes_;
  bool has_gradients_ = false;
};

}  // namespace pegp::nets
