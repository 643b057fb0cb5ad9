#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pegp/datagen.hpp"
#include "pegp/gp.hpp"
#include "pegp/kernels.hpp"
#include "pegp/lti.hpp"
#include "pegp/nets.hpp"
#include "pegp/numerics.hpp"

namespace pegp::vae {

enum class KernelKind { Physics, SeBaseline };

const char* to_string(KernelKind kind);
/// Accepts "physics" and "se-baseline"; anything else is a Config error.
KernelKind parse_kernel_kind(const std::string& text);

/// GP prior over the p latent trajectories.
///
/// Physics: outputs of `system` driven by independent SE inputs.
/// SE baseline: independent SE kernels placed directly on each latent
/// dimension. Hyperparameters are the (variance, lengthscale) pairs of
/// `kernels`, exposed in log space for optimisation.
struct LatentPrior {
  KernelKind kind = KernelKind::SeBaseline;
  std::optional<lti::LtiSystem> system;
  std::vector<kernels::SeKernel> kernels;
  std::size_t quad_nodes = 32;
  double quad_tol = 1e-6;

  static LatentPrior physics(lti::LtiSystem system, std::vector<kernels::SeKernel> inputs, std::size_t quad_nodes = 32,
                             double quad_tol = 1e-6);
  static LatentPrior se_baseline(std::vector<kernels::SeKernel> per_dim);

  Eigen::Index latent_dim() const;
  kernels::GramMatrix gram(std::span<const double> times) const;

  std::vector<double> log_hyperparameters() const;
  void set_log_hyperparameters(std::span<const double> values);
  void validate() const;
};

/// Prior Gram over a time grid together with its Cholesky factor.
struct PriorFactor {
  kernels::GramMatrix gram;
  numerics::Cholesky chol;
};

PriorFactor factor_prior(const LatentPrior& prior, std::span<const double> times);

struct Model {
  LatentPrior prior;
  nets::MlpParams encoder;  // d^2 -> hidden -> 2p (means, then log-sigmas)
  nets::MlpParams decoder;  // p -> hidden -> d^2, sigmoid output

  static Model initial(LatentPrior prior, Eigen::Index pixels, Eigen::Index encoder_hidden,
                       Eigen::Index decoder_hidden, numerics::RngStream& rng);
  void validate() const;
};

struct ElboBreakdown {
  double reconstruction = 0.0;
  double entropy_term = 0.0;
  double log_marginal = 0.0;
  double total = 0.0;
};

/// Standard-normal draws for the Monte-Carlo estimate: per sample one vector
/// for the prior path and one for the pseudo-observation noise.
struct ElboNoise {
  std::vector<Vector> prior;
  std::vector<Vector> observation;

  static ElboNoise draw(numerics::RngStream& rng, Eigen::Index size, int samples);
  int samples() const noexcept { return static_cast<int>(prior.size()); }
};

/// Posterior sample by pathwise conditioning:
///   f = L_K eps_prior,  y = f + K (K + S)^-1 (mu* - f - sigma* . eps_obs)
/// which has the law N(mean, cov) of gp::condition on the same grid.
Vector pathwise_sample(const PriorFactor& prior, const gp::PseudoObservations& obs, const Vector& eps_prior,
                       const Vector& eps_obs);

/// Pseudo-observations from the encoder, one per frame.
gp::PseudoObservations pseudo_observations(const Model& model, const datagen::VideoSequence& seq);

/// Value of the ELBO for an arbitrary likelihood of the latent trajectory,
/// which receives the sample as an n_f x p matrix.
using Likelihood = std::function<double(const Matrix& latent)>;
ElboBreakdown elbo_with_likelihood(const gp::PseudoObservations& obs, const PriorFactor& prior,
                                   const ElboNoise& noise, const Likelihood& loglik);

struct ModelGradients {
  nets::MlpParams encoder;
  nets::MlpParams decoder;
};

/// ELBO of one sequence with the Bernoulli decoder. When `grads` is given the
/// exact gradient of `total` with respect to every network weight is written
/// there. Throws TrainingDivergence (iteration -1) on a non-finite value.
ElboBreakdown elbo(const Model& model, const datagen::VideoSequence& seq, const PriorFactor& prior,
                   const ElboNoise& noise, ModelGradients* grads = nullptr);
ElboBreakdown elbo(const Model& model, const datagen::VideoSequence& seq, numerics::RngStream& rng,
                   int mc_samples = 1);

struct TrainConfig {
  std::int64_t iterations = 30000;
  double learning_rate = 1e-3;
  int mc_samples = 1;
  std::uint64_t seed = 0;
  int sequences_per_step = 1;
  bool train_hyperparams = false;
  std::int64_t checkpoint_every = 1000;

  void validate() const;
};

struct TrainState {
  Model model;
  nets::AdamState adam;
  std::int64_t iteration = 0;
};

struct TraceRow {
  std::int64_t iteration;  // 1-based, counted after the update
  ElboBreakdown elbo;      // mean over the step's sequences, before the update
};

using TraceSink = std::function<void(const TraceRow&)>;
using CheckpointSink = std::function<void(const TrainState&)>;

/// Index of the sequence used at position `slot` of the training stream:
/// epochs of a seeded permutation of 0..count-1.
std::size_t stream_sequence(std::uint64_t seed, std::size_t count, std::int64_t slot);

/// Runs optimiser steps until state.iteration == cfg.iterations. Every value
/// depends only on (cfg.seed, iteration), so resuming from a saved state
/// continues the uninterrupted run exactly.
void train(TrainState& state, std::span<const datagen::VideoSequence> data, const TrainConfig& cfg,
           const TraceSink& on_iteration = {}, const CheckpointSink& on_checkpoint = {});

struct Reconstruction {
  gp::GpPosterior posterior;
  Matrix frames;  // n_f x d^2 decoded posterior mean
};

Reconstruction reconstruct(const Model& model, const datagen::VideoSequence& seq);

/// Posterior on the grid (k + 1) dt up to `horizon`, conditioned on the
/// observed frames only.
gp::GpPosterior extrapolate(const Model& model, const datagen::VideoSequence& seq, double horizon);

/// Posterior mean as a times x p matrix.
Matrix mean_matrix(const gp::GpPosterior& post);
Matrix std_matrix(const gp::GpPosterior& post);

/// Per-dimension least-squares map truth ~ scale * estimate + offset.
struct AffineAlignment {
  Vector scale;
  Vector offset;

  Matrix apply(const Matrix& estimate) const;
  Matrix apply_std(const Matrix& std_dev) const;
};

AffineAlignment fit_alignment(const Matrix& estimate, const Matrix& truth);

double rmse(const Matrix& a, const Matrix& b);

}  // namespace pegp::vae
