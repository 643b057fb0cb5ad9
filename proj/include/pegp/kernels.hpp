#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "pegp/lti.hpp"
#include "pegp/numerics.hpp"

namespace pegp::kernels {

/// sigma_f^2 exp(-(t - t')^2 / (2 l^2)), lengthscale in microseconds.
struct SeKernel {
  double variance = 1.0;
  double lengthscale = 1.0;
};

double se_eval(const SeKernel& k, double t, double t_prime);

/// Output covariance of an LTI system driven by independent GP inputs:
///
///   k_ij(t, t') = int_0^t int_0^t' G_i(t, s) diag(k_u(s, s')) G_j(t', s')^T ds ds'
///
/// evaluated by tensorised Gauss-Legendre quadrature on [0, t] x [0, t'].
/// Every evaluation is repeated with twice the nodes; the finer value is
/// returned and a relative disagreement above `convergence_tol` raises an
/// Accuracy error.
class PhysicsKernel {
 public:
  PhysicsKernel(lti::LtiSystem system, std::vector<SeKernel> input_kernels, std::size_t quad_nodes = 32,
                double convergence_tol = 1e-6);

  const lti::LtiSystem& system() const noexcept { return system_; }
  const std::vector<SeKernel>& input_kernels() const noexcept { return inputs_; }
  std::size_t quad_nodes() const noexcept { return quad_nodes_; }
  double convergence_tol() const noexcept { return tol_; }
  Eigen::Index output_dim() const noexcept { return system_.output_dim(); }

  /// k_ij(t, t') with zero-based output indices.
  double eval(Eigen::Index i, Eigen::Index j, double t, double t_prime) const;

  /// All p x p output covariances at (t, t').
  Matrix block(double t, double t_prime) const;

  /// Same integral at an explicit node count with no convergence check.
  Matrix block_with_nodes(double t, double t_prime, std::size_t nodes) const;

 private:
  lti::LtiSystem system_;
  std::vector<SeKernel> inputs_;
  std::size_t quad_nodes_;
  double tol_;
};

/// Block Gram matrix over a time grid, ordered dimension-major:
/// index d * times.size() + k holds output d at times[k].
struct GramMatrix {
  std::vector<double> times;
  Eigen::Index block_dim = 0;
  Matrix values;
  double jitter = 0.0;

  Eigen::Index time_count() const noexcept { return static_cast<Eigen::Index>(times.size()); }
  Eigen::Index index(Eigen::Index dim, Eigen::Index time) const noexcept { return dim * time_count() + time; }
  /// K_ij(T, T) block without jitter removal.
  Matrix block(Eigen::Index i, Eigen::Index j) const;
};

GramMatrix gram_physics(const PhysicsKernel& k, std::span<const double> times);
GramMatrix gram_se_baseline(std::span<const SeKernel> per_dim, std::span<const double> times);

/// Jitter added by both Gram builders: 1e-8 * mean(diag).
inline constexpr double kRelativeJitter = 1e-8;

/// Dense CSV: a header line of the grid times, then one row of values per time.
void write_block_csv(std::ostream& os, std::span<const double> times, const Matrix& block);

/// Scales a covariance block to unit diagonal (zero-variance rows stay zero).
Matrix normalize_to_correlation(const Matrix& block);

}  // namespace pegp::kernels
