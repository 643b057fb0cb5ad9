#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pegp/kernels.hpp"
#include "pegp/lti.hpp"
#include "pegp/numerics.hpp"

namespace pegp::datagen {

/// n_f binary d x d frames. Frame k (zero-based) is recorded at (k + 1) * dt,
/// so a clip of n_f frames spans (0, n_f * dt].
struct VideoSequence {
  int d = 0;
  int n_frames = 0;
  double dt = 1.0;
  std::vector<std::uint8_t> pixels;  // n_frames * d * d, row-major per frame

  std::vector<double> times() const;
  /// n_frames x d^2 matrix of 0.0 / 1.0.
  Matrix frames() const;
  std::span<const std::uint8_t> frame(int k) const;
  void validate() const;
  bool operator==(const VideoSequence&) const = default;
};

/// Evaluation-only record of what generated a sequence.
struct GroundTruth {
  lti::LatentTrajectory latent;  // over the fine grid
  lti::InputSignal forces;       // same grid
};

/// Oscillator constants: resonance frequencies in kHz and damping ratios.
struct OscillatorSpec {
  double frequency_khz_1 = 47.7;
  double frequency_khz_2 = 63.6;
  double damping_1 = 0.02;
  double damping_2 = 0.01;
};

struct OscillatorConstants {
  double c1, c2;  // stiffness omega^2 in 1/us^2
  double d1, d2;  // 2 zeta omega in 1/us
};

OscillatorConstants oscillator_constants(const OscillatorSpec& spec);

/// Two decoupled damped oscillators driven by forces (u1, u2), observed in
/// position; time unit is the microsecond.
lti::LtiSystem build_experiment_system(const OscillatorSpec& spec = {});

struct RenderSettings {
  int d = 40;
  double half_width = 3.0;      // workspace [-w, w]^2 in latent units
  double blob_radius_px = 1.5;  // Gaussian blob sigma in pixels
};

/// Paints exp(-r^2 / (2 rho^2)) around the mapped particle and thresholds at
/// 0.5. Column follows y1 left to right, row follows y2 top to bottom with
/// +y2 at the top. The workspace centre maps to pixel (d/2, d/2).
std::vector<std::uint8_t> render_frame(const Vector& y, const RenderSettings& settings);

/// Draws independent GP sample paths u_l ~ N(0, K_l(grid) + jitter) for each
/// input kernel. Returns an m x grid.size() matrix.
class ForceSampler {
 public:
  ForceSampler(std::vector<kernels::SeKernel> per_input, std::vector<double> grid);
  Matrix sample(numerics::RngStream& rng) const;
  const std::vector<double>& grid() const noexcept { return grid_; }

 private:
  std::vector<double> grid_;
  std::vector<Matrix> factors_;
};

Matrix sample_forces(numerics::RngStream& rng, std::span<const kernels::SeKernel> per_input,
                     std::span<const double> grid);

struct DatasetConfig {
  int n_frames = 30;
  double frame_dt = 1.0;
  int substeps = 10;             // fine simulation steps per frame
  double truth_horizon = 50.0;   // ground truth is simulated on [0, horizon]
  double force_lengthscale = 5.0;
  double target_position_std = 1.0;
  int pilot_sequences = 64;
  /// Per-input force variances; calibrated by pilot simulation when empty.
  std::optional<std::vector<double>> force_variance;
  RenderSettings render;
  OscillatorSpec oscillator;
};

struct Dataset {
  std::vector<VideoSequence> sequences;
  std::vector<GroundTruth> truths;
  std::vector<double> force_variance;
};

/// Fine simulation grid k * frame_dt / substeps over [0, truth_horizon].
std::vector<double> fine_grid(const DatasetConfig& cfg);

/// Per-input force variance making each position's RMS over the frame times
/// equal cfg.target_position_std, estimated from pilot_sequences unit-variance
/// simulations (positions scale linearly with the force amplitude).
std::vector<double> calibrate_force_variance(const DatasetConfig& cfg, const numerics::RngStream& rng);

/// Sequence i uses the child stream rng.child(i); pilot calibration uses a
/// separate child stream.
Dataset generate_dataset(int n_sequences, const DatasetConfig& cfg, const numerics::RngStream& rng);

// Persistence. Sequence files: "PEGV", u16 version, u16 d, u16 n_f, f64 dt,
// then n_f * d^2 bytes (0/1), all little-endian.
void write_sequence(const std::string& path, const VideoSequence& seq);
VideoSequence read_sequence(const std::string& path);

/// CSV columns time,y1,y2,...,u1,u2,...
void write_ground_truth(const std::string& path, const GroundTruth& truth);
GroundTruth read_ground_truth(const std::string& path);

/// 8-bit binary PGM of values in [0, 1].
void write_pgm(const std::string& path, int d, std::span<const double> values);

/// Positions y(t) from a ground-truth record at the requested times
/// (must be on the fine grid); returns times.size() x p.
Matrix truth_at(const GroundTruth& truth, std::span<const double> times);

}  // namespace pegp::datagen
