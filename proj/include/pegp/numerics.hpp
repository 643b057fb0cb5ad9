#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace pegp {

// All numerics are f64. Dense storage is Eigen's column-major MatrixXd; index
// semantics (row, col) are what matter to callers.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace pegp

namespace pegp::numerics {

/// e^{A t} by scaling and squaring of a truncated Taylor series. The argument
/// is scaled so that ||A t / 2^s||_1 <= 0.5 and the series is summed until the
/// next term is below 1e-16 of the running sum (1-norm).
Matrix matrix_exponential(const Matrix& a, double t = 1.0);

/// Lower Cholesky factor M = L L^T. Throws NotPositiveDefinite carrying the
/// failing pivot index; no jitter is added here.
class Cholesky {
 public:
  explicit Cholesky(const Matrix& m);

  const Matrix& lower() const noexcept { return lower_; }
  Eigen::Index size() const noexcept { return lower_.rows(); }
  double log_determinant() const noexcept { return log_det_; }

  Matrix solve(const Matrix& rhs) const;
  Vector solve(const Vector& rhs) const;
  Matrix inverse() const;

 private:
  Matrix lower_;
  double log_det_ = 0.0;
};

struct CholeskySolution {
  Matrix solution;
  double log_determinant;
};

CholeskySolution cholesky_solve(const Matrix& m, const Matrix& rhs);

struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing, in [-1, 1]
  std::vector<double> weights;  // positive, sum to 2
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(std::size_t n);

/// Seeded source of uniform and standard-normal variates.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniforms take the top 53 bits; normals use the Box-Muller
/// transform implemented here (standard library distributions are not
/// reproducible across implementations). Child streams for parallel or
/// per-iteration work are derived with a SplitMix64 mix of (seed, key).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  std::uint64_t next_u64() { return engine_(); }

  RngStream child(std::uint64_t key) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

Vector gaussian_draws(RngStream& rng, std::size_t n);

std::uint64_t splitmix64(std::uint64_t x);

/// Max absolute entry; convenience for tolerances.
double max_abs(const Matrix& m);

}  // namespace pegp::numerics
