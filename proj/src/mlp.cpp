#include <algorithm>
#include <cmath>

#include "pegp/error.hpp"
#include "pegp/nets.hpp"

namespace pegp::nets {

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double limit, numerics::RngStream& rng) {
  Matrix m(rows, cols);
  // Row-major fill order keeps the draw sequence independent of storage order.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = limit * (2.0 * rng.uniform() - 1.0);
  }
  return m;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector hidden_layer(const MlpParams& p, const Vector& x) {
  return (p.w1 * x + p.b1.col(0)).array().tanh().matrix();
}

}  // namespace

MlpParams MlpParams::zeros(Eigen::Index input, Eigen::Index hidden, Eigen::Index output) {
  return {Matrix::Zero(hidden, input), Matrix::Zero(hidden, 1), Matrix::Zero(output, hidden), Matrix::Zero(output, 1)};
}

MlpParams MlpParams::glorot(Eigen::Index input, Eigen::Index hidden, Eigen::Index output, numerics::RngStream& rng) {
  MlpParams p = zeros(input, hidden, output);
  p.w1 = uniform_matrix(hidden, input, std::sqrt(6.0 / static_cast<double>(input + hidden)), rng);
  p.w2 = uniform_matrix(output, hidden, std::sqrt(6.0 / static_cast<double>(hidden + output)), rng);
  return p;
}

void MlpParams::validate() const {
  if (b1.rows() != w1.rows() || b1.cols() != 1 || w2.cols() != w1.rows() || b2.rows() != w2.rows() ||
      b2.cols() != 1) {
    fail(ErrorKind::Dimension, "inconsistent MLP parameter shapes");
  }
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite()) {
    fail(ErrorKind::NumericalRange, "non-finite MLP parameter");
  }
}

bool MlpParams::operator==(const MlpParams& o) const {
  auto same = [](const Matrix& a, const Matrix& b) { return a.rows() == b.rows() && a.cols() == b.cols() && a == b; };
  return same(w1, o.w1) && same(b1, o.b1) && same(w2, o.w2) && same(b2, o.b2);
}

MlpNodes add_parameters(Graph& graph, const MlpParams& params) {
  params.validate();
  return {graph.parameter(params.w1), graph.parameter(params.b1), graph.parameter(params.w2),
          graph.parameter(params.b2)};
}

Node mlp_forward(Graph& graph, const MlpNodes& nodes, Node input, OutputActivation activation) {
  const Node hidden = graph.tanh(graph.add_row_bias(graph.matmul_transposed(input, nodes.w1), nodes.b1));
  const Node out = graph.add_row_bias(graph.matmul_transposed(hidden, nodes.w2), nodes.b2);
  return activation == OutputActivation::Sigmoid ? graph.sigmoid(out) : out;
}

EncoderOutput encode(const MlpParams& params, const Vector& frame) {
  params.validate();
  if (frame.size() != params.input_dim()) {
    fail(ErrorKind::Dimension, "frame has " + std::to_string(frame.size()) + " pixels, encoder expects " +
                                   std::to_string(params.input_dim()));
  }
  if (params.output_dim() % 2 != 0) fail(ErrorKind::Dimension, "encoder output must hold means and log-sigmas");
  const Vector out = params.w2 * hidden_layer(params, frame) + params.b2.col(0);
  const Eigen::Index p = out.size() / 2;
  return {out.head(p), out.tail(p)};
}

Vector decode(const MlpParams& params, const Vector& latent) {
  params.validate();
  if (latent.size() != params.input_dim()) fail(ErrorKind::Dimension, "latent size does not match decoder input");
  const Vector logits = params.w2 * hidden_layer(params, latent) + params.b2.col(0);
  return logits.unaryExpr(&stable_sigmoid);
}

double bernoulli_loglik(const Vector& frame, const Vector& probs) {
  if (frame.size() != probs.size()) fail(ErrorKind::Dimension, "frame and probability vectors differ in length");
  double total = 0.0;
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    const double rho = std::clamp(probs(i), 1e-7, 1.0 - 1e-7);
    total += frame(i) * std::log(rho) + (1.0 - frame(i)) * std::log1p(-rho);
  }
  return total;
}

}  // namespace pegp::nets
