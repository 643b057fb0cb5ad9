#include "pegp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pegp/error.hpp"

namespace pegp::nets {

namespace {

constexpr double kProbClamp = 1e-7;

void same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::Dimension, std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                                   std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                   std::to_string(b.cols()));
  }
}

}  // namespace

Node Graph::push(Op op, std::vector<std::size_t> inputs, Matrix value) {
  Record r;
  r.op = op;
  r.needs_grad = op == Op::Parameter;
  for (std::size_t in : inputs) r.needs_grad = r.needs_grad || nodes_[in].needs_grad;
  r.inputs = std::move(inputs);
  r.value = std::move(value);
  nodes_.push_back(std::move(r));
  has_gradients_ = false;
  return Node{nodes_.size() - 1};
}

const Graph::Record& Graph::at(Node n) const {
  if (n.id >= nodes_.size()) fail(ErrorKind::Usage, "node does not belong to this graph");
  return nodes_[n.id];
}

Node Graph::parameter(Matrix value) { return push(Op::Parameter, {}, std::move(value)); }
Node Graph::constant(Matrix value) { return push(Op::Constant, {}, std::move(value)); }

Node Graph::matmul(Node a, Node b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  if (va.cols() != vb.rows()) fail(ErrorKind::Dimension, "matmul: inner dimensions differ");
  return push(Op::MatMul, {a.id, b.id}, va * vb);
}

Node Graph::matmul_transposed(Node a, Node b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  if (va.cols() != vb.cols()) fail(ErrorKind::Dimension, "matmul_transposed: inner dimensions differ");
  return push(Op::MatMulT, {a.id, b.id}, va * vb.transpose());
}

Node Graph::add_row_bias(Node x, Node bias) {
  const Matrix& vx = at(x).value;
  const Matrix& vb = at(bias).value;
  if (vb.cols() != 1 || vb.rows() != vx.cols()) fail(ErrorKind::Dimension, "add_row_bias: bias must be cols(x) x 1");
  Matrix out = vx.rowwise() + vb.col(0).transpose();
  return push(Op::AddRowBias, {x.id, bias.id}, std::move(out));
}

Node Graph::add(Node a, Node b) {
  same_shape(at(a).value, at(b).value, "add");
  return push(Op::Add, {a.id, b.id}, at(a).value + at(b).value);
}

Node Graph::sub(Node a, Node b) {
  same_shape(at(a).value, at(b).value, "sub");
  return push(Op::Sub, {a.id, b.id}, at(a).value - at(b).value);
}

Node Graph::hadamard(Node a, Node b) {
  same_shape(at(a).value, at(b).value, "hadamard");
  return push(Op::Hadamard, {a.id, b.id}, at(a).value.cwiseProduct(at(b).value));
}

Node Graph::scale(Node a, double factor) {
  Node n = push(Op::Scale, {a.id}, at(a).value * factor);
  nodes_[n.id].factor = factor;
  return n;
}

Node Graph::tanh(Node a) { return push(Op::Tanh, {a.id}, at(a).value.array().tanh().matrix()); }

Node Graph::sigmoid(Node a) {
  // 1 / (1 + e^-x) written to avoid overflow for large |x|.
  Matrix out = at(a).value.unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return push(Op::Sigmoid, {a.id}, std::move(out));
}

Node Graph::exp(Node a) { return push(Op::Exp, {a.id}, at(a).value.array().exp().matrix()); }
Node Graph::log(Node a) { return push(Op::Log, {a.id}, at(a).value.array().log().matrix()); }
Node Graph::square(Node a) { return push(Op::Square, {a.id}, at(a).value.array().square().matrix()); }

Node Graph::sum(Node a) {
  Matrix out(1, 1);
  out(0, 0) = at(a).value.sum();
  return push(Op::Sum, {a.id}, std::move(out));
}

Node Graph::columns(Node a, Eigen::Index first, Eigen::Index count) {
  const Matrix& va = at(a).value;
  if (first < 0 || count < 0 || first + count > va.cols()) fail(ErrorKind::Dimension, "columns: range out of bounds");
  Node n = push(Op::Columns, {a.id}, va.middleCols(first, count));
  nodes_[n.id].first = first;
  return n;
}

Node Graph::bernoulli_loglik(Node probs, Matrix targets) {
  const Matrix& p = at(probs).value;
  same_shape(p, targets, "bernoulli_loglik");
  double total = 0.0;
  Matrix dp(p.rows(), p.cols());
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double raw = p(i, j);
      const double rho = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
      const double v = targets(i, j);
      total += v * std::log(rho) + (1.0 - v) * std::log1p(-rho);
      dp(i, j) = (raw == rho) ? v / rho - (1.0 - v) / (1.0 - rho) : 0.0;
    }
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  Node n = push(Op::Bernoulli, {probs.id}, std::move(out));
  nodes_[n.id].aux = std::move(dp);
  return n;
}

Node Graph::custom(std::vector<Node> inputs, Matrix value, Backward backward) {
  std::vector<std::size_t> ids;
  ids.reserve(inputs.size());
  for (Node in : inputs) {
    at(in);
    ids.push_back(in.id);
  }
  Node n = push(Op::Custom, std::move(ids), std::move(value));
  nodes_[n.id].backward = std::move(backward);
  return n;
}

const Matrix& Graph::value(Node n) const { return at(n).value; }

double Graph::scalar(Node n) const {
  const Matrix& v = at(n).value;
  if (v.rows() != 1 || v.cols() != 1) fail(ErrorKind::Usage, "node is not a scalar");
  return v(0, 0);
}

bool Graph::requires_grad(Node n) const { return at(n).needs_grad; }

void Graph::accumulate(std::size_t id, const Matrix& g) {
  Record& r = nodes_[id];
  if (!r.needs_grad) return;
  if (r.grad.size() == 0) {
    r.grad = g;
  } else {
    r.grad += g;
  }
}

void Graph::backward(Node root) {
  const Record& root_record = at(root);
  if (root_record.value.rows() != 1 || root_record.value.cols() != 1) {
    fail(ErrorKind::Usage, "backward needs a scalar root");
  }
  for (Record& r : nodes_) r.grad.resize(0, 0);
  if (root_record.needs_grad) nodes_[root.id].grad = Matrix::Ones(1, 1);

  for (std::size_t id = root.id + 1; id-- > 0;) {
    Record& r = nodes_[id];
    if (!r.needs_grad || r.grad.size() == 0 || r.inputs.empty()) continue;
    const Matrix& up = r.grad;
    auto in = [&](std::size_t k) -> const Matrix& { return nodes_[r.inputs[k]].value; };
    switch (r.op) {
      case Op::Parameter:
      case Op::Constant:
        break;
      case Op::MatMul:
        if (nodes_[r.inputs[0]].needs_grad) accumulate(r.inputs[0], up * in(1).transpose());
        if (nodes_[r.inputs[1]].needs_grad) accumulate(r.inputs[1], in(0).transpose() * up);
        break;
      case Op::MatMulT:
        // C = A B^T: dA = dC B, dB = dC^T A
        if (nodes_[r.inputs[0]].needs_grad) accumulate(r.inputs[0], up * in(1));
        if (nodes_[r.inputs[1]].needs_grad) accumulate(r.inputs[1], up.transpose() * in(0));
        break;
      case Op::AddRowBias:
        accumulate(r.inputs[0], up);
        if (nodes_[r.inputs[1]].needs_grad) accumulate(r.inputs[1], up.colwise().sum().transpose());
        break;
      case Op::Add:
        accumulate(r.inputs[0], up);
        accumulate(r.inputs[1], up);
        break;
      case Op::Sub:
        accumulate(r.inputs[0], up);
        accumulate(r.inputs[1], -up);
        break;
      case Op::Hadamard:
        accumulate(r.inputs[0], up.cwiseProduct(in(1)));
        accumulate(r.inputs[1], up.cwiseProduct(in(0)));
        break;
      case Op::Scale:
        accumulate(r.inputs[0], up * r.factor);
        break;
      case Op::Tanh:
        accumulate(r.inputs[0], up.cwiseProduct((1.0 - r.value.array().square()).matrix()));
        break;
      case Op::Sigmoid:
        accumulate(r.inputs[0], up.cwiseProduct((r.value.array() * (1.0 - r.value.array())).matrix()));
        break;
      case Op::Exp:
        accumulate(r.inputs[0], up.cwiseProduct(r.value));
        break;
      case Op::Log:
        accumulate(r.inputs[0], up.cwiseQuotient(in(0)));
        break;
      case Op::Square:
        accumulate(r.inputs[0], 2.0 * up.cwiseProduct(in(0)));
        break;
      case Op::Sum:
        accumulate(r.inputs[0], Matrix::Constant(in(0).rows(), in(0).cols(), up(0, 0)));
        break;
      case Op::Columns: {
        Matrix g = Matrix::Zero(in(0).rows(), in(0).cols());
        g.middleCols(r.first, up.cols()) = up;
        accumulate(r.inputs[0], g);
        break;
      }
      case Op::Bernoulli:
        accumulate(r.inputs[0], r.aux * up(0, 0));
        break;
      case Op::Custom: {
        const std::vector<Matrix> grads = r.backward(up);
        if (grads.size() != r.inputs.size()) fail(ErrorKind::Usage, "custom node returned wrong gradient count");
        for (std::size_t k = 0; k < grads.size(); ++k) {
          if (!nodes_[r.inputs[k]].needs_grad || grads[k].size() == 0) continue;
          same_shape(grads[k], in(k), "custom backward");
          accumulate(r.inputs[k], grads[k]);
        }
        break;
      }
    }
  }
  has_gradients_ = true;
}

const Matrix& Graph::grad(Node n) const {
  if (!has_gradients_) fail(ErrorKind::Usage, "gradients requested before a backward pass");
  const Record& r = at(n);
  // Nodes the sweep never reached have an identically zero gradient.
  if (r.grad.size() == 0) r.grad = Matrix::Zero(r.value.rows(), r.value.cols());
  return r.grad;
}

}  // namespace pegp::nets
