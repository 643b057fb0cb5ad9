#include <cmath>
#include <numeric>
#include <optional>

#include "pegp/error.hpp"
#include "pegp/vae.hpp"

namespace pegp::vae {

namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566666c65ULL;  // "shuffle"
constexpr std::uint64_t kStepStream = 0x73746570ULL;           // "step"
constexpr double kHyperStep = 1e-4;

void accumulate(nets::MlpParams& into, const nets::MlpParams& g) {
  into.w1 += g.w1;
  into.b1 += g.b1;
  into.w2 += g.w2;
  into.b2 += g.b2;
}

void scale(nets::MlpParams& p, double f) {
  p.w1 *= f;
  p.b1 *= f;
  p.w2 *= f;
  p.b2 *= f;
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 0) fail(ErrorKind::InvalidArgument, "iterations must be non-negative");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail(ErrorKind::InvalidArgument, "learning_rate must be > 0");
  if (mc_samples < 1) fail(ErrorKind::InvalidArgument, "mc_samples must be at least 1");
  if (sequences_per_step < 1) fail(ErrorKind::InvalidArgument, "sequences_per_step must be at least 1");
  if (checkpoint_every < 0) fail(ErrorKind::InvalidArgument, "checkpoint_every must be non-negative");
}

std::size_t stream_sequence(std::uint64_t seed, std::size_t count, std::int64_t slot) {
  if (count == 0 || slot < 0) fail(ErrorKind::InvalidArgument, "stream_sequence needs a non-empty dataset");
  const auto epoch = static_cast<std::uint64_t>(slot) / count;
  numerics::RngStream rng = numerics::RngStream(seed).child(kShuffleStream).child(epoch);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = count - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  return order[static_cast<std::uint64_t>(slot) % count];
}

void train(TrainState& state, std::span<const datagen::VideoSequence> data, const TrainConfig& cfg,
           const TraceSink& on_iteration, const CheckpointSink& on_checkpoint) {
  cfg.validate();
  state.model.validate();
  if (data.empty()) fail(ErrorKind::InvalidArgument, "training needs at least one sequence");
  const std::vector<double> times = data.front().times();
  for (const auto& seq : data) {
    if (seq.times() != times) fail(ErrorKind::Alignment, "all training sequences must share one time grid");
  }
  if (state.iteration > cfg.iterations) {
    fail(ErrorKind::InvalidArgument, "state is already past the requested iteration count");
  }
  state.adam.learning_rate = cfg.learning_rate;

  // The Gram depends only on the shared grid, so it is factored once unless
  // the hyperparameters move.
  std::optional<PriorFactor> cached;
  if (!cfg.train_hyperparams) cached = factor_prior(state.model.prior, times);

  const std::vector<double> h0 = state.model.prior.log_hyperparameters();
  Matrix log_h = Eigen::Map<const Vector>(h0.data(), static_cast<Eigen::Index>(h0.size()));
  const numerics::RngStream steps = numerics::RngStream(cfg.seed).child(kStepStream);
  const Eigen::Index n = static_cast<Eigen::Index>(times.size()) * state.model.prior.latent_dim();

  while (state.iteration < cfg.iterations) {
    const std::int64_t it = state.iteration;
    try {
      numerics::RngStream rng = steps.child(static_cast<std::uint64_t>(it));
      std::optional<PriorFactor> fresh;
      if (!cached) fresh = factor_prior(state.model.prior, times);
      const PriorFactor& prior = cached ? *cached : *fresh;

      ModelGradients sum;
      Matrix hyper_grad = Matrix::Zero(log_h.rows(), 1);
      ElboBreakdown mean;
      for (int b = 0; b < cfg.sequences_per_step; ++b) {
        const auto& seq = data[stream_sequence(cfg.seed, data.size(), it * cfg.sequences_per_step + b)];
        const ElboNoise noise = ElboNoise::draw(rng, n, cfg.mc_samples);
        ModelGradients g;
        const ElboBreakdown e = elbo(state.model, seq, prior, noise, &g);
        if (b == 0) {
          sum = std::move(g);
        } else {
          accumulate(sum.encoder, g.encoder);
          accumulate(sum.decoder, g.decoder);
        }
        mean.reconstruction += e.reconstruction;
        mean.entropy_term += e.entropy_term;
        mean.log_marginal += e.log_marginal;
        mean.total += e.total;

        if (cfg.train_hyperparams) {
          // Central differences of the whole ELBO in log-hyperparameter space,
          // with the Monte-Carlo noise held fixed.
          for (Eigen::Index j = 0; j < log_h.rows(); ++j) {
            double side[2];
            for (int sgn = 0; sgn < 2; ++sgn) {
              Model shifted = state.model;
              std::vector<double> h(log_h.data(), log_h.data() + log_h.rows());
              h[static_cast<std::size_t>(j)] += sgn == 0 ? kHyperStep : -kHyperStep;
              shifted.prior.set_log_hyperparameters(h);
              side[sgn] = elbo(shifted, seq, factor_prior(shifted.prior, times), noise).total;
            }
            hyper_grad(j, 0) += (side[0] - side[1]) / (2.0 * kHyperStep);
          }
        }
      }
      const double inv = 1.0 / cfg.sequences_per_step;
      mean.reconstruction *= inv;
      mean.entropy_term *= inv;
      mean.log_marginal *= inv;
      mean.total *= inv;

      // Adam descends, so it receives the gradient of -ELBO.
      scale(sum.encoder, -inv);
      scale(sum.decoder, -inv);
      std::vector<nets::ParameterRef> refs{
          {"encoder.w1", &state.model.encoder.w1}, {"encoder.b1", &state.model.encoder.b1},
          {"encoder.w2", &state.model.encoder.w2}, {"encoder.b2", &state.model.encoder.b2},
          {"decoder.w1", &state.model.decoder.w1}, {"decoder.b1", &state.model.decoder.b1},
          {"decoder.w2", &state.model.decoder.w2}, {"decoder.b2", &state.model.decoder.b2}};
      std::vector<Matrix> grads;
      for (nets::MlpParams* net : {&sum.encoder, &sum.decoder}) {
        grads.push_back(std::move(net->w1));
        grads.push_back(std::move(net->b1));
        grads.push_back(std::move(net->w2));
        grads.push_back(std::move(net->b2));
      }
      if (cfg.train_hyperparams) {
        refs.push_back({"prior.log_hyperparameters", &log_h});
        grads.push_back(-inv * hyper_grad);
      }
      nets::adam_step(state.adam, refs, grads);
      if (cfg.train_hyperparams) {
        state.model.prior.set_log_hyperparameters(std::vector<double>(log_h.data(), log_h.data() + log_h.rows()));
      }

      ++state.iteration;
      if (on_iteration) on_iteration({state.iteration, mean});
      if (on_checkpoint && cfg.checkpoint_every > 0 && state.iteration % cfg.checkpoint_every == 0) {
        on_checkpoint(state);
      }
    } catch (const TrainingDivergence& e) {
      throw TrainingDivergence(it + 1, e.reason());
    }
  }
}

}  // namespace pegp::vae
