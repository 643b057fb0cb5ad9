#include "pegp/gp.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>

#include "pegp/error.hpp"

namespace pegp::gp {

namespace {

// Prior/observation indices for the stacked, dimension-major ordering.
std::vector<Eigen::Index> observation_indices(const kernels::GramMatrix& prior, const PseudoObservations& obs) {
  if (obs.block_dim != prior.block_dim) fail(ErrorKind::Alignment, "observation and prior latent dimensions differ");
  const auto time_rows = locate_times(prior.times, obs.times);
  const auto n_prior = prior.time_count();
  std::vector<Eigen::Index> idx;
  idx.reserve(time_rows.size() * static_cast<std::size_t>(obs.block_dim));
  for (Eigen::Index d = 0; d < obs.block_dim; ++d) {
    for (Eigen::Index r : time_rows) idx.push_back(d * n_prior + r);
  }
  return idx;
}

Matrix select(const Matrix& m, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    }
  }
  return out;
}

Matrix observed_covariance(const kernels::GramMatrix& prior, const PseudoObservations& obs,
                           const std::vector<Eigen::Index>& idx) {
  Matrix k = select(prior.values, idx, idx);
  k.diagonal() += obs.sigma_star.array().square().matrix();
  return k;
}

}  // namespace

void PseudoObservations::validate() const {
  const auto expected = static_cast<Eigen::Index>(times.size()) * block_dim;
  if (mu_star.size() != expected || sigma_star.size() != expected) {
    fail(ErrorKind::Alignment, "pseudo-observation vectors must have length block_dim * time count");
  }
  if (!mu_star.allFinite()) fail(ErrorKind::InvalidArgument, "non-finite pseudo-observation mean");
  for (Eigen::Index i = 0; i < sigma_star.size(); ++i) {
    if (!(sigma_star(i) > 0.0) || !std::isfinite(sigma_star(i))) {
      fail(ErrorKind::InvalidArgument, "pseudo-observation standard deviations must be positive and finite");
    }
  }
}

Vector GpPosterior::std_dev() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }

std::vector<Eigen::Index> locate_times(const std::vector<double>& prior_times, const std::vector<double>& obs_times) {
  std::vector<Eigen::Index> rows;
  rows.reserve(obs_times.size());
  for (double t : obs_times) {
    Eigen::Index found = -1;
    for (std::size_t k = 0; k < prior_times.size(); ++k) {
      if (std::abs(prior_times[k] - t) <= 1e-9 * (1.0 + std::abs(t))) {
        found = static_cast<Eigen::Index>(k);
        break;
      }
    }
    if (found < 0) fail(ErrorKind::Alignment, "observation time " + std::to_string(t) + " is not on the prior grid");
    rows.push_back(found);
  }
  return rows;
}

GpPosterior condition(const kernels::GramMatrix& prior, const PseudoObservations& obs) {
  obs.validate();
  const auto idx = observation_indices(prior, obs);
  const numerics::Cholesky factor(observed_covariance(prior, obs, idx));

  std::vector<Eigen::Index> all(static_cast<std::size_t>(prior.values.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
  const Matrix k_qt = select(prior.values, all, idx);

  GpPosterior post;
  post.times = prior.times;
  post.block_dim = prior.block_dim;
  post.mean = k_qt * factor.solve(obs.mu_star);
  const Matrix half = factor.lower().triangularView<Eigen::Lower>().solve(k_qt.transpose());
  post.cov = prior.values - half.transpose() * half;
  post.cov = 0.5 * (post.cov + post.cov.transpose());
  for (Eigen::Index i = 0; i < post.cov.rows(); ++i) {
    if (post.cov(i, i) < 0.0 && post.cov(i, i) >= -1e-12) post.cov(i, i) = 0.0;
  }
  return post;
}

double log_marginal(const kernels::GramMatrix& prior, const PseudoObservations& obs) {
  obs.validate();
  const auto idx = observation_indices(prior, obs);
  const numerics::Cholesky factor(observed_covariance(prior, obs, idx));
  const Vector whitened = factor.lower().triangularView<Eigen::Lower>().solve(obs.mu_star);
  const auto n = static_cast<double>(obs.mu_star.size());
  return -0.5 * (whitened.squaredNorm() + factor.log_determinant() + n * std::log(2.0 * std::numbers::pi));
}

PosteriorSample sample_posterior(const GpPosterior& post, numerics::RngStream& rng) {
  return sample_posterior(post, numerics::gaussian_draws(rng, static_cast<std::size_t>(post.mean.size())));
}

PosteriorSample sample_posterior(const GpPosterior& post, const Vector& eps) {
  if (eps.size() != post.mean.size() || post.cov.rows() != post.mean.size()) {
    fail(ErrorKind::Dimension, "posterior sample dimension mismatch");
  }
  PosteriorSample s;
  s.eps = eps;
  if (numerics::max_abs(post.cov) == 0.0) {
    s.factor = Matrix::Zero(post.cov.rows(), post.cov.cols());
    s.value = post.mean;
    return s;
  }
  Matrix jittered = post.cov;
  jittered.diagonal().array() += kernels::kRelativeJitter * std::abs(post.cov.diagonal().mean());
  s.factor = numerics::Cholesky(jittered).lower();
  s.value = post.mean + s.factor * eps;
  return s;
}

PosteriorSampleGradient sample_posterior_backward(const PosteriorSample& sample, const Vector& upstream) {
  if (upstream.size() != sample.value.size()) fail(ErrorKind::Dimension, "upstream gradient size mismatch");
  PosteriorSampleGradient g;
  g.mean = upstream;
  const Matrix& l = sample.factor;
  const Eigen::Index n = l.rows();
  if (numerics::max_abs(l) == 0.0) {
    g.cov = Matrix::Zero(n, n);
    return g;
  }
  const Matrix l_bar = (upstream * sample.eps.transpose()).triangularView<Eigen::Lower>();
  // Cholesky adjoint: P = Phi(L^T Lbar), G = L^-T P L^-1, symmetrised.
  Matrix p = (l.transpose() * l_bar).triangularView<Eigen::Lower>();
  p.diagonal() *= 0.5;
  const Matrix right = l.triangularView<Eigen::Lower>().solve<Eigen::OnTheRight>(p);
  const Matrix full = l.transpose().triangularView<Eigen::Upper>().solve(right);
  g.cov = 0.5 * (full + full.transpose());
  return g;
}

void write_posterior_csv(std::ostream& os, const GpPosterior& post) {
  os << "time,dim,mean,std\n";
  const Vector sd = post.std_dev();
  char buf[128];
  for (Eigen::Index d = 0; d < post.block_dim; ++d) {
    for (std::size_t k = 0; k < post.times.size(); ++k) {
      const Eigen::Index i = post.index(d, static_cast<Eigen::Index>(k));
      std::snprintf(buf, sizeof buf, "%.17g,%lld,%.17g,%.17g\n", post.times[k], static_cast<long long>(d + 1),
                    post.mean(i), sd(i));
      os << buf;
    }
  }
}

}  // namespace pegp::gp
