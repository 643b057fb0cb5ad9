#include "pegp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pegp/error.hpp"

namespace pegp::numerics {

namespace {

double norm1(const Matrix& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

Matrix matrix_exponential(const Matrix& a, double t) {
  if (a.rows() != a.cols()) {
    fail(ErrorKind::Dimension, "matrix_exponential needs a square matrix, got " +
                                   std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  if (!std::isfinite(t)) fail(ErrorKind::InvalidArgument, "matrix_exponential: non-finite time");
  const Eigen::Index n = a.rows();
  if (n == 0) return Matrix(0, 0);

  Matrix scaled = a * t;
  const double norm = norm1(scaled);
  if (!std::isfinite(norm)) fail(ErrorKind::NumericalRange, "matrix_exponential: non-finite input");

  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  scaled /= std::ldexp(1.0, squarings);

  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 64; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
    if (norm1(term) <= 1e-16 * norm1(sum)) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;

  if (!sum.allFinite()) fail(ErrorKind::NumericalRange, "matrix_exponential overflowed");
  return sum;
}

Cholesky::Cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) fail(ErrorKind::Dimension, "Cholesky needs a square matrix");
  const Eigen::Index n = m.rows();
  lower_ = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pivot =
        m(j, j) - lower_.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw NotPositiveDefinite(static_cast<std::size_t>(j), pivot);
    }
    const double ljj = std::sqrt(pivot);
    lower_(j, j) = ljj;
    log_det_ += 2.0 * std::log(ljj);
    if (j + 1 < n) {
      const Eigen::Index rest = n - j - 1;
      lower_.col(j).tail(rest) =
          (m.col(j).tail(rest) - lower_.bottomLeftCorner(rest, j) * lower_.row(j).head(j).transpose()) /
          ljj;
    }
  }
}

Matrix Cholesky::solve(const Matrix& rhs) const {
  if (rhs.rows() != lower_.rows()) fail(ErrorKind::Dimension, "Cholesky::solve row mismatch");
  Matrix y = lower_.triangularView<Eigen::Lower>().solve(rhs);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Vector Cholesky::solve(const Vector& rhs) const {
  if (rhs.rows() != lower_.rows()) fail(ErrorKind::Dimension, "Cholesky::solve row mismatch");
  Vector y = lower_.triangularView<Eigen::Lower>().solve(rhs);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix Cholesky::inverse() const {
  return solve(Matrix(Matrix::Identity(size(), size())));
}

CholeskySolution cholesky_solve(const Matrix& m, const Matrix& rhs) {
  Cholesky factor(m);
  return {factor.solve(rhs), factor.log_determinant()};
}

QuadratureRule gauss_legendre(std::size_t n) {
  if (n == 0) fail(ErrorKind::InvalidArgument, "gauss_legendre needs at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double nd = static_cast<double>(n);
  // Roots are symmetric; find the upper half by Newton on P_n.
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      derivative = nd * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / derivative;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    if (n == 1) {
      x = 0.0;
      derivative = 1.0;
    }
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[n - 1 - i] = w;
    rule.weights[i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double RngStream::uniform() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

RngStream RngStream::child(std::uint64_t key) const {
  return RngStream(splitmix64(splitmix64(seed_) ^ splitmix64(key + 0x632be59bd9b4e019ULL)));
}

Vector gaussian_draws(RngStream& rng, std::size_t n) {
  Vector out(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = rng.normal();
  return out;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace pegp::numerics
