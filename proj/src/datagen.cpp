#include "pegp/datagen.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pegp/error.hpp"

namespace pegp::datagen {

namespace {

constexpr std::uint64_t kPilotStream = 0x70696c6f74ULL;  // "pilot"

std::vector<double> frame_times(const DatasetConfig& cfg) {
  std::vector<double> t(static_cast<std::size_t>(cfg.n_frames));
  for (int k = 0; k < cfg.n_frames; ++k) t[static_cast<std::size_t>(k)] = static_cast<double>(k + 1) * cfg.frame_dt;
  return t;
}

void validate_config(const DatasetConfig& cfg) {
  if (cfg.n_frames < 1 || cfg.substeps < 1 || !(cfg.frame_dt > 0.0)) {
    fail(ErrorKind::InvalidArgument, "dataset needs n_frames >= 1, substeps >= 1, frame_dt > 0");
  }
  if (cfg.truth_horizon < cfg.n_frames * cfg.frame_dt) {
    fail(ErrorKind::InvalidArgument, "ground-truth horizon must cover the clip");
  }
  if (cfg.render.d < 1 || !(cfg.render.half_width > 0.0) || !(cfg.render.blob_radius_px > 0.0)) {
    fail(ErrorKind::InvalidArgument, "invalid render settings");
  }
}

GroundTruth simulate_truth(const lti::LtiSystem& sys, const std::vector<double>& grid, Matrix forces) {
  lti::InputSignal input{grid, std::move(forces)};
  GroundTruth truth;
  truth.latent = lti::simulate(sys, input, Vector::Zero(sys.state_dim()), grid);
  truth.forces = std::move(input);
  return truth;
}

}  // namespace

std::vector<double> VideoSequence::times() const {
  std::vector<double> t(static_cast<std::size_t>(n_frames));
  for (int k = 0; k < n_frames; ++k) t[static_cast<std::size_t>(k)] = static_cast<double>(k + 1) * dt;
  return t;
}

Matrix VideoSequence::frames() const {
  const Eigen::Index px = static_cast<Eigen::Index>(d) * d;
  Matrix out(n_frames, px);
  for (Eigen::Index k = 0; k < n_frames; ++k) {
    for (Eigen::Index i = 0; i < px; ++i) out(k, i) = pixels[static_cast<std::size_t>(k * px + i)] ? 1.0 : 0.0;
  }
  return out;
}

std::span<const std::uint8_t> VideoSequence::frame(int k) const {
  if (k < 0 || k >= n_frames) fail(ErrorKind::NotFound, "frame index out of range");
  const std::size_t px = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
  return std::span<const std::uint8_t>(pixels).subspan(static_cast<std::size_t>(k) * px, px);
}

void VideoSequence::validate() const {
  if (d < 1 || n_frames < 1 || !(dt > 0.0)) fail(ErrorKind::InvalidArgument, "video needs d >= 1, n_f >= 1, dt > 0");
  if (pixels.size() != static_cast<std::size_t>(n_frames) * static_cast<std::size_t>(d) * static_cast<std::size_t>(d)) {
    fail(ErrorKind::Dimension, "pixel buffer does not match n_f * d^2");
  }
  for (std::uint8_t v : pixels) {
    if (v > 1) fail(ErrorKind::InvalidArgument, "frames must be binary");
  }
}

OscillatorConstants oscillator_constants(const OscillatorSpec& spec) {
  // kHz -> rad/us: 2 pi f * 1e3 / 1e6
  const double w1 = 2.0 * std::numbers::pi * spec.frequency_khz_1 * 1e-3;
  const double w2 = 2.0 * std::numbers::pi * spec.frequency_khz_2 * 1e-3;
  return {w1 * w1, w2 * w2, 2.0 * spec.damping_1 * w1, 2.0 * spec.damping_2 * w2};
}

lti::LtiSystem build_experiment_system(const OscillatorSpec& spec) {
  const OscillatorConstants k = oscillator_constants(spec);
  Matrix a = Matrix::Zero(4, 4);
  a(0, 2) = 1.0;
  a(1, 3) = 1.0;
  a(2, 0) = -k.c1;
  a(2, 2) = -k.d1;
  a(3, 1) = -k.c2;
  a(3, 3) = -k.d2;
  Matrix b = Matrix::Zero(4, 2);
  b(2, 0) = 1.0;
  b(3, 1) = 1.0;
  Matrix c = Matrix::Zero(2, 4);
  c(0, 0) = 1.0;
  c(1, 1) = 1.0;
  return lti::LtiSystem(std::move(a), std::move(b), std::move(c));
}

std::vector<std::uint8_t> render_frame(const Vector& y, const RenderSettings& s) {
  if (y.size() < 2) fail(ErrorKind::Dimension, "render_frame needs a 2-d position");
  if (!y.allFinite()) fail(ErrorKind::InvalidArgument, "render_frame needs a finite position");
  const double px_per_unit = static_cast<double>(s.d) / (2.0 * s.half_width);
  const double col_centre = (y(0) + s.half_width) * px_per_unit;
  const double row_centre = (s.half_width - y(1)) * px_per_unit;
  const double inv = 1.0 / (2.0 * s.blob_radius_px * s.blob_radius_px);
  std::vector<std::uint8_t> frame(static_cast<std::size_t>(s.d) * static_cast<std::size_t>(s.d), 0);
  for (int r = 0; r < s.d; ++r) {
    for (int c = 0; c < s.d; ++c) {
      const double dr = r - row_centre;
      const double dc = c - col_centre;
      if (std::exp(-(dr * dr + dc * dc) * inv) >= 0.5) frame[static_cast<std::size_t>(r * s.d + c)] = 1;
    }
  }
  return frame;
}

ForceSampler::ForceSampler(std::vector<kernels::SeKernel> per_input, std::vector<double> grid)
    : grid_(std::move(grid)) {
  for (std::size_t k = 1; k < grid_.size(); ++k) {
    if (!(grid_[k] > grid_[k - 1])) fail(ErrorKind::InvalidGrid, "force grid must be strictly increasing");
  }
  const auto n = static_cast<Eigen::Index>(grid_.size());
  for (const auto& kernel : per_input) {
    Matrix k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        k(i, j) = kernels::se_eval(kernel, grid_[static_cast<std::size_t>(i)], grid_[static_cast<std::size_t>(j)]);
      }
    }
    k.diagonal().array() += kernels::kRelativeJitter * kernel.variance;
    factors_.push_back(numerics::Cholesky(k).lower());
  }
}

Matrix ForceSampler::sample(numerics::RngStream& rng) const {
  const auto n = static_cast<Eigen::Index>(grid_.size());
  Matrix out(static_cast<Eigen::Index>(factors_.size()), n);
  for (std::size_t l = 0; l < factors_.size(); ++l) {
    const Vector eps = numerics::gaussian_draws(rng, grid_.size());
    out.row(static_cast<Eigen::Index>(l)) = (factors_[l] * eps).transpose();
  }
  return out;
}

Matrix sample_forces(numerics::RngStream& rng, std::span<const kernels::SeKernel> per_input,
                     std::span<const double> grid) {
  return ForceSampler({per_input.begin(), per_input.end()}, {grid.begin(), grid.end()}).sample(rng);
}

std::vector<double> fine_grid(const DatasetConfig& cfg) {
  const double step_den = static_cast<double>(cfg.substeps);
  const auto count = static_cast<std::size_t>(std::llround(cfg.truth_horizon / cfg.frame_dt * step_den)) + 1;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = static_cast<double>(k) * cfg.frame_dt / step_den;
  return grid;
}

Matrix truth_at(const GroundTruth& truth, std::span<const double> times) {
  const auto& grid = truth.latent.times;
  Matrix out(static_cast<Eigen::Index>(times.size()), truth.latent.outputs.rows());
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    while (cursor < grid.size() && grid[cursor] < t - 1e-9 * (1.0 + std::abs(t))) ++cursor;
    if (cursor == grid.size() || std::abs(grid[cursor] - t) > 1e-9 * (1.0 + std::abs(t))) {
      fail(ErrorKind::Alignment, "time " + std::to_string(t) + " is not on the ground-truth grid");
    }
    out.row(static_cast<Eigen::Index>(k)) = truth.latent.outputs.col(static_cast<Eigen::Index>(cursor)).transpose();
  }
  return out;
}

std::vector<double> calibrate_force_variance(const DatasetConfig& cfg, const numerics::RngStream& rng) {
  validate_config(cfg);
  if (cfg.pilot_sequences < 1) fail(ErrorKind::InvalidArgument, "calibration needs at least one pilot sequence");
  const lti::LtiSystem sys = build_experiment_system(cfg.oscillator);
  const auto m = static_cast<std::size_t>(sys.input_dim());
  const std::vector<double> grid = fine_grid(cfg);
  const ForceSampler sampler(std::vector<kernels::SeKernel>(m, {1.0, cfg.force_lengthscale}), grid);
  const std::vector<double> times = frame_times(cfg);

  numerics::RngStream pilot = rng.child(kPilotStream);
  Vector sum_sq = Vector::Zero(sys.output_dim());
  double count = 0.0;
  for (int s = 0; s < cfg.pilot_sequences; ++s) {
    numerics::RngStream stream = pilot.child(static_cast<std::uint64_t>(s));
    const GroundTruth truth = simulate_truth(sys, grid, sampler.sample(stream));
    const Matrix y = truth_at(truth, times);
    sum_sq += y.colwise().squaredNorm().transpose();
    count += static_cast<double>(y.rows());
  }
  std::vector<double> variance(m);
  for (std::size_t l = 0; l < m; ++l) {
    const double rms = std::sqrt(sum_sq(static_cast<Eigen::Index>(l)) / count);
    variance[l] = std::pow(cfg.target_position_std / rms, 2);
  }
  return variance;
}

Dataset generate_dataset(int n_sequences, const DatasetConfig& cfg, const numerics::RngStream& rng) {
  if (n_sequences < 1) fail(ErrorKind::InvalidArgument, "dataset needs at least one sequence");
  validate_config(cfg);
  const lti::LtiSystem sys = build_experiment_system(cfg.oscillator);
  Dataset data;
  data.force_variance = cfg.force_variance ? *cfg.force_variance : calibrate_force_variance(cfg, rng);
  if (static_cast<Eigen::Index>(data.force_variance.size()) != sys.input_dim()) {
    fail(ErrorKind::Dimension, "one force variance per input is required");
  }
  std::vector<kernels::SeKernel> force_kernels;
  for (double v : data.force_variance) force_kernels.push_back({v, cfg.force_lengthscale});
  const std::vector<double> grid = fine_grid(cfg);
  const ForceSampler sampler(force_kernels, grid);
  const std::vector<double> times = frame_times(cfg);

  for (int i = 0; i < n_sequences; ++i) {
    numerics::RngStream stream = rng.child(static_cast<std::uint64_t>(i));
    GroundTruth truth = simulate_truth(sys, grid, sampler.sample(stream));
    const Matrix y = truth_at(truth, times);
    VideoSequence seq;
    seq.d = cfg.render.d;
    seq.n_frames = cfg.n_frames;
    seq.dt = cfg.frame_dt;
    seq.pixels.reserve(static_cast<std::size_t>(cfg.n_frames) * static_cast<std::size_t>(cfg.render.d * cfg.render.d));
    for (Eigen::Index k = 0; k < y.rows(); ++k) {
      const auto frame = render_frame(y.row(k).transpose(), cfg.render);
      seq.pixels.insert(seq.pixels.end(), frame.begin(), frame.end());
    }
    data.sequences.push_back(std::move(seq));
    data.truths.push_back(std::move(truth));
  }
  return data;
}

}  // namespace pegp::datagen
