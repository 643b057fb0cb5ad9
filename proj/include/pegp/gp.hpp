#pragma once

#include <iosfwd>
#include <vector>

#include "pegp/kernels.hpp"
#include "pegp/numerics.hpp"

namespace pegp::gp {

/// Encoder outputs treated as noisy observations of the latent GP.
/// Vectors are dimension-major, matching GramMatrix ordering.
struct PseudoObservations {
  std::vector<double> times;
  Eigen::Index block_dim = 0;
  Vector mu_star;
  Vector sigma_star;  // standard deviations, > 0

  void validate() const;
};

struct GpPosterior {
  std::vector<double> times;
  Eigen::Index block_dim = 0;
  Vector mean;  // dimension-major over times
  Matrix cov;

  Eigen::Index index(Eigen::Index dim, Eigen::Index time) const noexcept {
    return dim * static_cast<Eigen::Index>(times.size()) + time;
  }
  Vector std_dev() const;
};

/// Exact conditioning of the prior (over all query times) on pseudo-observations
/// at a subset of those times:
///   mean = K_qt (K_tt + S)^-1 mu*,  cov = K_qq - K_qt (K_tt + S)^-1 K_tq
/// with S = diag(sigma*^2).
GpPosterior condition(const kernels::GramMatrix& prior, const PseudoObservations& obs);

/// log N(mu* | 0, K_tt + S) in the standard sign convention, with the 2*pi term
/// counted over all n_f * p stacked coordinates.
double log_marginal(const kernels::GramMatrix& prior, const PseudoObservations& obs);

/// Draw mean + L eps where L L^T = cov + jitter I. `eps` and `factor` are kept
/// so the pathwise derivative can be formed.
struct PosteriorSample {
  Vector value;
  Vector eps;
  Matrix factor;
};

PosteriorSample sample_posterior(const GpPosterior& post, numerics::RngStream& rng);
PosteriorSample sample_posterior(const GpPosterior& post, const Vector& eps);

/// Pathwise gradients of a scalar f(sample) with respect to the posterior mean
/// and (symmetric) covariance, given df/dsample. Uses the Cholesky adjoint.
struct PosteriorSampleGradient {
  Vector mean;
  Matrix cov;
};

PosteriorSampleGradient sample_posterior_backward(const PosteriorSample& sample, const Vector& upstream);

/// CSV with columns time,dim,mean,std (dim is 1-based).
void write_posterior_csv(std::ostream& os, const GpPosterior& post);

/// Row indices of `obs_times` inside `prior_times`; throws Alignment when a
/// time is missing.
std::vector<Eigen::Index> locate_times(const std::vector<double>& prior_times, const std::vector<double>& obs_times);

}  // namespace pegp::gp
