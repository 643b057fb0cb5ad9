#include "pegp/vae.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "pegp/error.hpp"

namespace pegp::vae {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Eigen storage is column-major, so an n_f x p matrix read as a flat vector is
// already in the dimension-major order used by the Gram matrices.
Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unflatten(const Vector& v, Eigen::Index rows) {
  return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

struct ObservedFactor {
  Vector mu;
  Vector log_sigma;
  Vector sigma;
  Vector var;
  numerics::Cholesky a;  // chol(K + diag(var))
};

ObservedFactor observed_factor(const PriorFactor& prior, const Vector& mu, const Vector& log_sigma) {
  Vector sigma = log_sigma.array().exp().matrix();
  Vector var = sigma.array().square().matrix();
  Matrix a = prior.gram.values;
  a.diagonal() += var;
  return {mu, log_sigma, std::move(sigma), std::move(var), numerics::Cholesky(a)};
}

struct SampleParts {
  Vector y;
  Vector w;  // (K + S)^-1 (mu - f - sigma . eps_obs)
};

SampleParts pathwise(const PriorFactor& prior, const ObservedFactor& obs, const Vector& eps_prior,
                     const Vector& eps_obs) {
  const auto n = prior.gram.values.rows();
  if (eps_prior.size() != n || eps_obs.size() != n) fail(ErrorKind::Dimension, "ELBO noise has the wrong length");
  const Vector f = prior.chol.lower().triangularView<Eigen::Lower>() * eps_prior;
  Vector w = obs.a.solve(Vector(obs.mu - f - obs.sigma.cwiseProduct(eps_obs)));
  Vector y = f + prior.gram.values * w;
  return {std::move(y), std::move(w)};
}

double log_marginal_value(const ObservedFactor& obs) {
  const Vector white = obs.a.lower().triangularView<Eigen::Lower>().solve(obs.mu);
  const auto n = static_cast<double>(obs.mu.size());
  return -0.5 * (white.squaredNorm() + obs.a.log_determinant()) - n * kHalfLog2Pi;
}

// -log N(y | mu, diag(var))
double surrogate_entropy(const ObservedFactor& obs, const Vector& y) {
  const Vector r = y - obs.mu;
  return obs.log_sigma.sum() + static_cast<double>(y.size()) * kHalfLog2Pi +
         0.5 * (r.array().square() / obs.var.array()).sum();
}

void check_finite(const ElboBreakdown& e) {
  if (!std::isfinite(e.total) || !std::isfinite(e.reconstruction) || !std::isfinite(e.entropy_term) ||
      !std::isfinite(e.log_marginal)) {
    throw TrainingDivergence(-1, "non-finite ELBO");
  }
}

void check_sequence(const Model& model, const datagen::VideoSequence& seq) {
  seq.validate();
  if (model.encoder.input_dim() != static_cast<Eigen::Index>(seq.d) * seq.d) {
    fail(ErrorKind::Dimension, "encoder expects " + std::to_string(model.encoder.input_dim()) + " pixels, frames have " +
                                   std::to_string(seq.d * seq.d));
  }
}

}  // namespace

const char* to_string(KernelKind kind) { return kind == KernelKind::Physics ? "physics" : "se-baseline"; }

KernelKind parse_kernel_kind(const std::string& text) {
  if (text == "physics") return KernelKind::Physics;
  if (text == "se-baseline") return KernelKind::SeBaseline;
  fail(ErrorKind::Config, "unknown kernel '" + text + "' (expected physics or se-baseline)");
}

LatentPrior LatentPrior::physics(lti::LtiSystem system, std::vector<kernels::SeKernel> inputs, std::size_t quad_nodes,
                                 double quad_tol) {
  LatentPrior p;
  p.kind = KernelKind::Physics;
  p.system = std::move(system);
  p.kernels = std::move(inputs);
  p.quad_nodes = quad_nodes;
  p.quad_tol = quad_tol;
  p.validate();
  return p;
}

LatentPrior LatentPrior::se_baseline(std::vector<kernels::SeKernel> per_dim) {
  LatentPrior p;
  p.kind = KernelKind::SeBaseline;
  p.kernels = std::move(per_dim);
  p.validate();
  return p;
}

void LatentPrior::validate() const {
  if (kernels.empty()) fail(ErrorKind::InvalidArgument, "latent prior needs at least one kernel");
  for (const auto& k : kernels) {
    if (!(k.variance > 0.0) || !(k.lengthscale > 0.0) || !std::isfinite(k.variance) || !std::isfinite(k.lengthscale)) {
      fail(ErrorKind::InvalidArgument, "kernel variance and lengthscale must be positive");
    }
  }
  if (kind == KernelKind::Physics) {
    if (!system) fail(ErrorKind::InvalidArgument, "physics prior needs an LTI system");
    if (static_cast<Eigen::Index>(kernels.size()) != system->input_dim()) {
      fail(ErrorKind::Dimension, "physics prior needs one input kernel per system input");
    }
  }
}

Eigen::Index LatentPrior::latent_dim() const {
  return kind == KernelKind::Physics ? system->output_dim() : static_cast<Eigen::Index>(kernels.size());
}

kernels::GramMatrix LatentPrior::gram(std::span<const double> times) const {
  validate();
  if (kind == KernelKind::SeBaseline) return kernels::gram_se_baseline(kernels, times);
  return kernels::gram_physics(kernels::PhysicsKernel(*system, kernels, quad_nodes, quad_tol), times);
}

std::vector<double> LatentPrior::log_hyperparameters() const {
  std::vector<double> out;
  for (const auto& k : kernels) {
    out.push_back(std::log(k.variance));
    out.push_back(std::log(k.lengthscale));
  }
  return out;
}

void LatentPrior::set_log_hyperparameters(std::span<const double> values) {
  if (values.size() != 2 * kernels.size()) fail(ErrorKind::Dimension, "expected two log-hyperparameters per kernel");
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    kernels[k].variance = std::exp(values[2 * k]);
    kernels[k].lengthscale = std::exp(values[2 * k + 1]);
  }
  validate();
}

PriorFactor factor_prior(const LatentPrior& prior, std::span<const double> times) {
  kernels::GramMatrix gram = prior.gram(times);
  numerics::Cholesky chol(gram.values);
  return {std::move(gram), std::move(chol)};
}

Model Model::initial(LatentPrior prior, Eigen::Index pixels, Eigen::Index encoder_hidden, Eigen::Index decoder_hidden,
                     numerics::RngStream& rng) {
  prior.validate();
  const Eigen::Index p = prior.latent_dim();
  Model m{std::move(prior), {}, {}};
  m.encoder = nets::MlpParams::glorot(pixels, encoder_hidden, 2 * p, rng);
  m.decoder = nets::MlpParams::glorot(p, decoder_hidden, pixels, rng);
  return m;
}

void Model::validate() const {
  prior.validate();
  encoder.validate();
  decoder.validate();
  const Eigen::Index p = prior.latent_dim();
  if (encoder.output_dim() != 2 * p || decoder.input_dim() != p || decoder.output_dim() != encoder.input_dim()) {
    fail(ErrorKind::Dimension, "encoder, decoder and latent prior dimensions disagree");
  }
}

ElboNoise ElboNoise::draw(numerics::RngStream& rng, Eigen::Index size, int samples) {
  if (samples < 1) fail(ErrorKind::InvalidArgument, "mc_samples must be at least 1");
  ElboNoise noise;
  for (int s = 0; s < samples; ++s) {
    noise.prior.push_back(numerics::gaussian_draws(rng, static_cast<std::size_t>(size)));
    noise.observation.push_back(numerics::gaussian_draws(rng, static_cast<std::size_t>(size)));
  }
  return noise;
}

Vector pathwise_sample(const PriorFactor& prior, const gp::PseudoObservations& obs, const Vector& eps_prior,
                       const Vector& eps_obs) {
  obs.validate();
  if (obs.mu_star.size() != prior.gram.values.rows()) fail(ErrorKind::Alignment, "observations must cover the grid");
  const ObservedFactor f = observed_factor(prior, obs.mu_star, obs.sigma_star.array().log().matrix());
  return pathwise(prior, f, eps_prior, eps_obs).y;
}

gp::PseudoObservations pseudo_observations(const Model& model, const datagen::VideoSequence& seq) {
  check_sequence(model, seq);
  const Matrix frames = seq.frames();
  const Eigen::Index p = model.prior.latent_dim();
  Matrix mu(seq.n_frames, p), log_sigma(seq.n_frames, p);
  for (Eigen::Index k = 0; k < frames.rows(); ++k) {
    const nets::EncoderOutput out = nets::encode(model.encoder, frames.row(k).transpose());
    mu.row(k) = out.mu.transpose();
    log_sigma.row(k) = out.log_sigma.transpose();
  }
  gp::PseudoObservations obs{seq.times(), p, flatten(mu), flatten(log_sigma).array().exp().matrix()};
  obs.validate();
  return obs;
}

ElboBreakdown elbo_with_likelihood(const gp::PseudoObservations& obs, const PriorFactor& prior,
                                   const ElboNoise& noise, const Likelihood& loglik) {
  obs.validate();
  if (obs.mu_star.size() != prior.gram.values.rows()) fail(ErrorKind::Alignment, "observations must cover the grid");
  if (noise.samples() < 1) fail(ErrorKind::InvalidArgument, "ELBO needs at least one Monte-Carlo sample");
  const ObservedFactor f = observed_factor(prior, obs.mu_star, obs.sigma_star.array().log().matrix());
  const auto n_f = static_cast<Eigen::Index>(obs.times.size());
  ElboBreakdown e;
  for (int s = 0; s < noise.samples(); ++s) {
    const SampleParts draw = pathwise(prior, f, noise.prior[s], noise.observation[s]);
    e.reconstruction += loglik(unflatten(draw.y, n_f));
    e.entropy_term += surrogate_entropy(f, draw.y);
  }
  e.reconstruction /= noise.samples();
  e.entropy_term /= noise.samples();
  e.log_marginal = log_marginal_value(f);
  e.total = e.reconstruction + e.entropy_term + e.log_marginal;
  return e;
}

ElboBreakdown elbo(const Model& model, const datagen::VideoSequence& seq, const PriorFactor& prior,
                   const ElboNoise& noise, ModelGradients* grads) {
  check_sequence(model, seq);
  const Eigen::Index p = model.prior.latent_dim();
  const Eigen::Index n_f = seq.n_frames;
  const Eigen::Index n = n_f * p;
  if (prior.gram.values.rows() != n) fail(ErrorKind::Alignment, "prior grid does not match the sequence");
  if (noise.samples() < 1) fail(ErrorKind::InvalidArgument, "ELBO needs at least one Monte-Carlo sample");

  nets::Graph g;
  const Matrix frames = seq.frames();
  const nets::Node x = g.constant(frames);
  const nets::MlpNodes enc = nets::add_parameters(g, model.encoder);
  const nets::MlpNodes dec = nets::add_parameters(g, model.decoder);
  const nets::Node out = nets::mlp_forward(g, enc, x, nets::OutputActivation::Identity);

  const Matrix& o = g.value(out);
  const auto obs = std::make_shared<ObservedFactor>(
      observed_factor(prior, flatten(o.leftCols(p)), flatten(o.rightCols(p))));
  const Matrix& k = prior.gram.values;

  // Packs gradients for (mu, log sigma) back into the encoder-output layout.
  auto pack = [n_f, p](const Vector& d_mu, const Vector& d_log_sigma) {
    Matrix d(n_f, 2 * p);
    d.leftCols(p) = unflatten(d_mu, n_f);
    d.rightCols(p) = unflatten(d_log_sigma, n_f);
    return d;
  };

  Matrix marginal_value(1, 1);
  marginal_value(0, 0) = log_marginal_value(*obs);
  const nets::Node marginal = g.custom({out}, marginal_value, [obs, pack](const Matrix& up) {
    const Vector alpha = obs->a.solve(obs->mu);
    const Vector inv_diag = obs->a.inverse().diagonal();
    const double u = up(0, 0);
    const Vector d_ls = obs->var.cwiseProduct(Vector(alpha.array().square() - inv_diag.array()));
    return std::vector<Matrix>{pack(-u * alpha, u * d_ls)};
  });

  std::vector<nets::Node> recon_nodes, entropy_nodes;
  for (int s = 0; s < noise.samples(); ++s) {
    const Vector eps_obs = noise.observation[s];
    const SampleParts draw = pathwise(prior, *obs, noise.prior[s], eps_obs);
    const Vector w = draw.w;
    // d/dmu = G, d/dlog(sigma) from both the noise term and S inside (K + S)^-1
    const nets::Node y = g.custom({out}, unflatten(draw.y, n_f), [obs, pack, &k, eps_obs, w](const Matrix& up) {
      const Vector gv = obs->a.solve(Vector(k * flatten(up)));
      const Vector d_ls = -obs->sigma.cwiseProduct(gv).cwiseProduct(eps_obs) -
                          2.0 * obs->var.cwiseProduct(gv).cwiseProduct(w);
      return std::vector<Matrix>{pack(gv, d_ls)};
    });

    Matrix entropy_value(1, 1);
    entropy_value(0, 0) = surrogate_entropy(*obs, draw.y);
    const Vector yv = draw.y;
    entropy_nodes.push_back(g.custom({out, y}, entropy_value, [obs, pack, yv, n_f](const Matrix& up) {
      const double u = up(0, 0);
      const Vector z = (yv - obs->mu).cwiseQuotient(obs->var);
      const Vector d_ls = (1.0 - (yv - obs->mu).cwiseProduct(z).array()).matrix();
      return std::vector<Matrix>{pack(-u * z, u * d_ls), unflatten(Vector(u * z), n_f)};
    }));

    const nets::Node probs = nets::mlp_forward(g, dec, y, nets::OutputActivation::Sigmoid);
    recon_nodes.push_back(g.bernoulli_loglik(probs, frames));
  }

  const double inv = 1.0 / noise.samples();
  auto mean_of = [&](const std::vector<nets::Node>& nodes) {
    nets::Node acc = nodes.front();
    for (std::size_t i = 1; i < nodes.size(); ++i) acc = g.add(acc, nodes[i]);
    return nodes.size() == 1 ? acc : g.scale(acc, inv);
  };
  const nets::Node recon = mean_of(recon_nodes);
  const nets::Node entropy = mean_of(entropy_nodes);
  const nets::Node total = g.add(g.add(recon, entropy), marginal);

  ElboBreakdown e{g.scalar(recon), g.scalar(entropy), g.scalar(marginal), 0.0};
  e.total = e.reconstruction + e.entropy_term + e.log_marginal;
  check_finite(e);

  if (grads) {
    g.backward(total);
    grads->encoder = {g.grad(enc.w1), g.grad(enc.b1), g.grad(enc.w2), g.grad(enc.b2)};
    grads->decoder = {g.grad(dec.w1), g.grad(dec.b1), g.grad(dec.w2), g.grad(dec.b2)};
  }
  return e;
}

ElboBreakdown elbo(const Model& model, const datagen::VideoSequence& seq, numerics::RngStream& rng, int mc_samples) {
  model.validate();
  const PriorFactor prior = factor_prior(model.prior, seq.times());
  const ElboNoise noise = ElboNoise::draw(rng, prior.gram.values.rows(), mc_samples);
  return elbo(model, seq, prior, noise);
}

Reconstruction reconstruct(const Model& model, const datagen::VideoSequence& seq) {
  model.validate();
  const gp::PseudoObservations obs = pseudo_observations(model, seq);
  Reconstruction r;
  r.posterior = gp::condition(model.prior.gram(obs.times), obs);
  const Matrix mean = mean_matrix(r.posterior);
  r.frames.resize(mean.rows(), model.decoder.output_dim());
  for (Eigen::Index t = 0; t < mean.rows(); ++t) {
    r.frames.row(t) = nets::decode(model.decoder, mean.row(t).transpose()).transpose();
  }
  return r;
}

gp::GpPosterior extrapolate(const Model& model, const datagen::VideoSequence& seq, double horizon) {
  model.validate();
  const double observed = seq.n_frames * seq.dt;
  if (!(horizon >= observed - 1e-9 * observed)) {
    fail(ErrorKind::InvalidArgument, "horizon must not end before the observation window");
  }
  const double steps = horizon / seq.dt;
  const auto count = static_cast<std::size_t>(std::llround(steps));
  if (std::abs(steps - static_cast<double>(count)) > 1e-9 * steps) {
    fail(ErrorKind::InvalidArgument, "horizon must be a whole number of frame intervals");
  }
  const std::vector<double> grid = lti::uniform_grid(seq.dt, seq.dt, count);
  const gp::PseudoObservations obs = pseudo_observations(model, seq);
  return gp::condition(model.prior.gram(grid), obs);
}

Matrix mean_matrix(const gp::GpPosterior& post) {
  return unflatten(post.mean, static_cast<Eigen::Index>(post.times.size()));
}

Matrix std_matrix(const gp::GpPosterior& post) {
  return unflatten(post.std_dev(), static_cast<Eigen::Index>(post.times.size()));
}

Matrix AffineAlignment::apply(const Matrix& estimate) const {
  if (estimate.cols() != scale.size()) fail(ErrorKind::Dimension, "alignment dimension mismatch");
  return (estimate * scale.asDiagonal()).rowwise() + offset.transpose();
}

Matrix AffineAlignment::apply_std(const Matrix& std_dev) const {
  if (std_dev.cols() != scale.size()) fail(ErrorKind::Dimension, "alignment dimension mismatch");
  return std_dev * scale.cwiseAbs().asDiagonal();
}

AffineAlignment fit_alignment(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols() || estimate.rows() < 2) {
    fail(ErrorKind::Dimension, "alignment needs matching estimate and truth with at least two rows");
  }
  AffineAlignment a{Vector(estimate.cols()), Vector(estimate.cols())};
  for (Eigen::Index d = 0; d < estimate.cols(); ++d) {
    const double me = estimate.col(d).mean();
    const double mt = truth.col(d).mean();
    const Vector ce = estimate.col(d).array() - me;
    const Vector ct = truth.col(d).array() - mt;
    const double sxx = ce.squaredNorm();
    a.scale(d) = sxx > 0.0 ? ce.dot(ct) / sxx : 0.0;
    a.offset(d) = mt - a.scale(d) * me;
  }
  return a;
}

double rmse(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.size() == 0) fail(ErrorKind::Dimension, "rmse shape mismatch");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

}  // namespace pegp::vae
