#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library routine it is used to check.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// e^{A t} through the complex eigendecomposition (A must be diagonalisable).
Matrix expm_eigen(const Matrix& a, double t);

/// Composite Simpson rule over [0, t] x [0, t_prime] with n (even) panels per axis.
double simpson_2d(const std::function<double(double, double)>& f, double t, double t_prime, int n);

/// Conditioning of the joint Gaussian (f, f_obs + noise) written with an
/// explicit LU inverse: mean = K_qo (K_oo + N)^-1 y, cov = K_qq - K_qo (K_oo + N)^-1 K_oq.
struct Conditional {
  Vector mean;
  Matrix cov;
};
Conditional joint_condition(const Matrix& k, const std::vector<int>& observed, const Vector& noise_var, const Vector& y);

/// log N(x | mean, cov) via LU determinant and inverse.
double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov);

/// Classical RK4 on x' = A x + B u(t) with u held piecewise constant on the
/// input grid; returns C x at `times`, each time stepped with `substeps`
/// RK4 steps per input interval.
Matrix rk4_outputs(const Matrix& a, const Matrix& b, const Matrix& c, const std::vector<double>& input_times,
                   const Matrix& input_values, const std::vector<double>& times, int substeps);

double central_difference(const std::function<double(double)>& f, double x, double h);

/// Deterministic pseudo-random matrix in [-1, 1] (independent of the library RNG).
Matrix random_matrix(int rows, int cols, std::uint64_t seed);

/// Random SPD matrix M M^T + shift I.
Matrix random_spd(int n, std::uint64_t seed, double shift = 0.5);

}  // namespace oracle
