#include "pegp/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "pegp/error.hpp"

namespace pegp::kernels {

namespace {

// Quadrature nodes on [0, t] and, per input l, the p x N matrix whose column k
// is w_k * G_{:, l}(t, tau_k).
struct WeightedResponse {
  Vector taus;
  std::vector<Matrix> per_input;
};

WeightedResponse weighted_response(const lti::LtiSystem& sys, const numerics::QuadratureRule& rule, double t) {
  const auto n = static_cast<Eigen::Index>(rule.nodes.size());
  const Eigen::Index p = sys.output_dim();
  const Eigen::Index m = sys.input_dim();
  WeightedResponse out;
  out.taus.resize(n);
  out.per_input.assign(static_cast<std::size_t>(m), Matrix::Zero(p, n));
  if (t == 0.0) return out;
  const double half = 0.5 * t;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double tau = half * (rule.nodes[static_cast<std::size_t>(k)] + 1.0);
    out.taus(k) = tau;
    const Matrix g = sys.c() * numerics::matrix_exponential(sys.a(), t - tau) * sys.b();
    const double w = half * rule.weights[static_cast<std::size_t>(k)];
    for (Eigen::Index l = 0; l < m; ++l) out.per_input[static_cast<std::size_t>(l)].col(k) = w * g.col(l);
  }
  return out;
}

Matrix se_matrix(const SeKernel& k, const Vector& a, const Vector& b) {
  Matrix out(a.size(), b.size());
  const double inv = 1.0 / (2.0 * k.lengthscale * k.lengthscale);
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double d = a(i) - b(j);
      out(i, j) = k.variance * std::exp(-d * d * inv);
    }
  }
  return out;
}

Matrix combine(const std::vector<SeKernel>& inputs, const WeightedResponse& left, const WeightedResponse& right,
               Eigen::Index p) {
  Matrix block = Matrix::Zero(p, p);
  for (std::size_t l = 0; l < inputs.size(); ++l) {
    const Matrix kuu = se_matrix(inputs[l], left.taus, right.taus);
    block.noalias() += left.per_input[l] * kuu * right.per_input[l].transpose();
  }
  return block;
}

void validate_times(std::span<const double> times) {
  if (times.empty()) fail(ErrorKind::InvalidArgument, "Gram matrix needs at least one time");
  for (double t : times) {
    if (!std::isfinite(t) || t < 0.0) fail(ErrorKind::Domain, "Gram times must be finite and non-negative");
  }
}

void add_jitter(GramMatrix& g) {
  g.values = 0.5 * (g.values + g.values.transpose());
  const double mean_diag = g.values.size() == 0 ? 0.0 : g.values.diagonal().mean();
  g.jitter = kRelativeJitter * mean_diag;
  g.values.diagonal().array() += g.jitter;
}

}  // namespace

double se_eval(const SeKernel& k, double t, double t_prime) {
  const double d = t - t_prime;
  return k.variance * std::exp(-d * d / (2.0 * k.lengthscale * k.lengthscale));
}

PhysicsKernel::PhysicsKernel(lti::LtiSystem system, std::vector<SeKernel> input_kernels, std::size_t quad_nodes,
                             double convergence_tol)
    : system_(std::move(system)), inputs_(std::move(input_kernels)), quad_nodes_(quad_nodes), tol_(convergence_tol) {
  if (static_cast<Eigen::Index>(inputs_.size()) != system_.input_dim()) {
    fail(ErrorKind::Dimension, "physics kernel needs one input kernel per system input");
  }
  if (quad_nodes_ < 2) fail(ErrorKind::InvalidArgument, "physics kernel needs at least 2 quadrature nodes");
  if (!(tol_ > 0.0)) fail(ErrorKind::InvalidArgument, "convergence tolerance must be positive");
  for (const auto& k : inputs_) {
    if (!(k.variance > 0.0) || !(k.lengthscale > 0.0)) {
      fail(ErrorKind::InvalidArgument, "input kernel variance and lengthscale must be positive");
    }
  }
}

Matrix PhysicsKernel::block_with_nodes(double t, double t_prime, std::size_t nodes) const {
  if (!(t >= 0.0) || !(t_prime >= 0.0)) fail(ErrorKind::Domain, "physics kernel times must be non-negative");
  const auto rule = numerics::gauss_legendre(nodes);
  const auto left = weighted_response(system_, rule, t);
  const auto right = weighted_response(system_, rule, t_prime);
  return combine(inputs_, left, right, output_dim());
}

Matrix PhysicsKernel::block(double t, double t_prime) const {
  const Matrix coarse = block_with_nodes(t, t_prime, quad_nodes_);
  const Matrix fine = block_with_nodes(t, t_prime, 2 * quad_nodes_);
  for (Eigen::Index j = 0; j < fine.cols(); ++j) {
    for (Eigen::Index i = 0; i < fine.rows(); ++i) {
      const double diff = std::abs(fine(i, j) - coarse(i, j));
      if (diff > tol_ * std::abs(fine(i, j)) + 1e-12) {
        fail(ErrorKind::Accuracy, "physics kernel quadrature did not converge at (" + std::to_string(t) + ", " +
                                      std::to_string(t_prime) + "): change " + std::to_string(diff));
      }
    }
  }
  return fine;
}

double PhysicsKernel::eval(Eigen::Index i, Eigen::Index j, double t, double t_prime) const {
  const Eigen::Index p = output_dim();
  if (i < 0 || j < 0 || i >= p || j >= p) fail(ErrorKind::Dimension, "output index out of range");
  return block(t, t_prime)(i, j);
}

Matrix GramMatrix::block(Eigen::Index i, Eigen::Index j) const {
  const Eigen::Index n = time_count();
  return values.block(i * n, j * n, n, n);
}

GramMatrix gram_physics(const PhysicsKernel& k, std::span<const double> times) {
  validate_times(times);
  const Eigen::Index p = k.output_dim();
  const auto n = static_cast<Eigen::Index>(times.size());
  const auto coarse_rule = numerics::gauss_legendre(k.quad_nodes());
  const auto fine_rule = numerics::gauss_legendre(2 * k.quad_nodes());

  std::vector<WeightedResponse> coarse, fine;
  coarse.reserve(times.size());
  fine.reserve(times.size());
  for (double t : times) {
    coarse.push_back(weighted_response(k.system(), coarse_rule, t));
    fine.push_back(weighted_response(k.system(), fine_rule, t));
  }

  GramMatrix g;
  g.times.assign(times.begin(), times.end());
  g.block_dim = p;
  g.values = Matrix::Zero(n * p, n * p);
  Matrix coarse_values = Matrix::Zero(n * p, n * p);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const Matrix fb = combine(k.input_kernels(), fine[static_cast<std::size_t>(a)], fine[static_cast<std::size_t>(b)], p);
      const Matrix cb = combine(k.input_kernels(), coarse[static_cast<std::size_t>(a)], coarse[static_cast<std::size_t>(b)], p);
      for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
          g.values(i * n + a, j * n + b) = fb(i, j);
          g.values(j * n + b, i * n + a) = fb(i, j);
          coarse_values(i * n + a, j * n + b) = cb(i, j);
          coarse_values(j * n + b, i * n + a) = cb(i, j);
        }
      }
    }
  }

  // Entrywise check scaled by the correlation bound sqrt(K_aa K_bb) so that
  // near-zero cross-covariances are not held to a relative standard.
  const Vector diag = g.values.diagonal().cwiseAbs();
  for (Eigen::Index c = 0; c < n * p; ++c) {
    for (Eigen::Index r = 0; r < n * p; ++r) {
      const double scale = std::sqrt(diag(r) * diag(c));
      const double diff = std::abs(g.values(r, c) - coarse_values(r, c));
      if (diff > k.convergence_tol() * scale + 1e-12) {
        fail(ErrorKind::Accuracy, "physics Gram quadrature did not converge at entry (" + std::to_string(r) + ", " +
                                      std::to_string(c) + ")");
      }
    }
  }
  add_jitter(g);
  return g;
}

GramMatrix gram_se_baseline(std::span<const SeKernel> per_dim, std::span<const double> times) {
  validate_times(times);
  if (per_dim.empty()) fail(ErrorKind::InvalidArgument, "SE baseline needs at least one dimension");
  const auto p = static_cast<Eigen::Index>(per_dim.size());
  const auto n = static_cast<Eigen::Index>(times.size());
  GramMatrix g;
  g.times.assign(times.begin(), times.end());
  g.block_dim = p;
  g.values = Matrix::Zero(n * p, n * p);
  for (Eigen::Index d = 0; d < p; ++d) {
    const SeKernel& k = per_dim[static_cast<std::size_t>(d)];
    if (!(k.variance > 0.0) || !(k.lengthscale > 0.0)) {
      fail(ErrorKind::InvalidArgument, "SE variance and lengthscale must be positive");
    }
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        g.values(d * n + a, d * n + b) = se_eval(k, times[static_cast<std::size_t>(a)], times[static_cast<std::size_t>(b)]);
      }
    }
  }
  add_jitter(g);
  return g;
}

Matrix normalize_to_correlation(const Matrix& block) {
  Matrix out = block;
  const Vector d = block.diagonal();
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      const double s = std::sqrt(d(i) * d(j));
      out(i, j) = s > 0.0 ? block(i, j) / s : 0.0;
    }
  }
  return out;
}

void write_block_csv(std::ostream& os, std::span<const double> times, const Matrix& block) {
  char buf[64];
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::snprintf(buf, sizeof buf, k == 0 ? "%.17g" : ",%.17g", times[k]);
    os << buf;
  }
  os << '\n';
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      std::snprintf(buf, sizeof buf, j == 0 ? "%.17g" : ",%.17g", block(i, j));
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace pegp::kernels
