#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pegp/numerics.hpp"

namespace pegp::lti {

enum class MatrixSlot { A, B, C };

/// One free parameter phi_k occupying a single matrix entry.
struct ParameterBinding {
  MatrixSlot slot;
  Eigen::Index row;
  Eigen::Index col;
  bool operator==(const ParameterBinding&) const = default;
};

/// x' = A x + B u, y = C x with time in microseconds.
///
/// Matrix entries named by a ParameterBinding are overwritten by the current
/// parameter vector; every other entry is fixed at construction.
class LtiSystem {
 public:
  LtiSystem(Matrix a, Matrix b, Matrix c);

  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  const Matrix& c() const noexcept { return c_; }

  Eigen::Index state_dim() const noexcept { return a_.rows(); }
  Eigen::Index input_dim() const noexcept { return b_.cols(); }
  Eigen::Index output_dim() const noexcept { return c_.rows(); }

  /// Registers a free parameter initialised from the current entry value.
  std::size_t bind_parameter(MatrixSlot slot, Eigen::Index row, Eigen::Index col);
  const std::vector<ParameterBinding>& bindings() const noexcept { return bindings_; }
  const std::vector<double>& parameters() const noexcept { return phi_; }
  void set_parameters(std::span<const double> phi);

  /// JSON text with row-major "A", "B", "C" arrays and a "phi" list of
  /// {"matrix", "row", "col", "value"} objects.
  std::string to_json() const;
  static LtiSystem from_json(const std::string& text);

  bool operator==(const LtiSystem&) const;

 private:
  Matrix& slot(MatrixSlot s);
  void apply_parameters();

  Matrix a_, b_, c_;
  std::vector<ParameterBinding> bindings_;
  std::vector<double> phi_;
};

/// Impulse response C e^{A (t - t')} B, a p x m matrix. Throws Causality for
/// t < t'.
Matrix greens_function(const LtiSystem& sys, double t, double t_prime);

/// Input samples u(times[k]) held constant on [times[k], times[k+1]).
struct InputSignal {
  std::vector<double> times;
  Matrix values;  // m x times.size()
};

struct LatentTrajectory {
  std::vector<double> times;
  Matrix states;   // n x times.size()
  Matrix outputs;  // p x times.size()
};

/// Exact zero-order-hold propagation of the state from x0 at
/// input.times.front(). Output times must be strictly increasing and lie
/// inside the input grid.
LatentTrajectory simulate(const LtiSystem& sys, const InputSignal& input, const Vector& x0,
                          std::span<const double> output_times);

/// Uniform grid start, start + step, ..., count points.
std::vector<double> uniform_grid(double start, double step, std::size_t count);

}  // namespace pegp::lti
