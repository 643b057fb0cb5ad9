#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pegp/graph.hpp"
#include "pegp/numerics.hpp"

namespace pegp::nets {

/// One-hidden-layer perceptron: out = act(W2 tanh(W1 x + b1) + b2).
/// Biases are stored as column matrices so every tensor shares one type.
struct MlpParams {
  Matrix w1;  // hidden x input
  Matrix b1;  // hidden x 1
  Matrix w2;  // output x hidden
  Matrix b2;  // output x 1

  static MlpParams zeros(Eigen::Index input, Eigen::Index hidden, Eigen::Index output);
  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) per weight matrix, zero biases.
  static MlpParams glorot(Eigen::Index input, Eigen::Index hidden, Eigen::Index output, numerics::RngStream& rng);

  Eigen::Index input_dim() const noexcept { return w1.cols(); }
  Eigen::Index hidden_dim() const noexcept { return w1.rows(); }
  Eigen::Index output_dim() const noexcept { return w2.rows(); }

  void validate() const;
  bool operator==(const MlpParams& other) const;
};

enum class OutputActivation { Identity, Sigmoid };

struct MlpNodes {
  Node w1, b1, w2, b2;
};

MlpNodes add_parameters(Graph& graph, const MlpParams& params);
/// Batched forward pass; `input` holds one example per row.
Node mlp_forward(Graph& graph, const MlpNodes& nodes, Node input, OutputActivation activation);

struct EncoderOutput {
  Vector mu;
  Vector log_sigma;
  Vector sigma() const { return log_sigma.array().exp().matrix(); }
};

/// Encoder head: 2p outputs split into pseudo-observation means and log
/// standard deviations.
EncoderOutput encode(const MlpParams& params, const Vector& frame);
/// Decoder: Bernoulli pixel probabilities, each in (0, 1).
Vector decode(const MlpParams& params, const Vector& latent);

/// Sum over pixels of v log(rho) + (1 - v) log(1 - rho), rho clamped to
/// [1e-7, 1 - 1e-7].
double bernoulli_loglik(const Vector& frame, const Vector& probs);

/// Named view of a trainable tensor.
struct ParameterRef {
  std::string name;
  Matrix* value;
};

struct AdamState {
  std::int64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// Descent step with bias correction. Moments are allocated on first use.
/// Throws TrainingDivergence naming the parameter when a gradient is
/// non-finite; parameters are untouched in that case.
void adam_step(AdamState& state, std::span<const ParameterRef> params, std::span<const Matrix> grads);

}  // namespace pegp::nets
