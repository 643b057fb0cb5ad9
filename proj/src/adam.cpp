#include <cmath>

#include "pegp/error.hpp"
#include "pegp/nets.hpp"

namespace pegp::nets {

void adam_step(AdamState& state, std::span<const ParameterRef> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size()) fail(ErrorKind::Dimension, "adam_step: parameter and gradient counts differ");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix& p = *params[k].value;
    if (p.rows() != grads[k].rows() || p.cols() != grads[k].cols()) {
      fail(ErrorKind::Dimension, "adam_step: gradient shape mismatch for " + params[k].name);
    }
    if (!grads[k].allFinite()) throw TrainingDivergence(state.step, "non-finite gradient for " + params[k].name);
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
      state.second_moment.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) fail(ErrorKind::Dimension, "adam_step: state does not match parameters");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto m = state.first_moment[k].array();
    auto v = state.second_moment[k].array();
    const auto g = grads[k].array();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    params[k].value->array() -= state.learning_rate * (m / correction1) / ((v / correction2).sqrt() + state.epsilon);
  }
}

}  // namespace pegp::nets
