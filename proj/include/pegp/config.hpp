#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pegp/datagen.hpp"
#include "pegp/vae.hpp"

namespace pegp::config {

/// Everything a run needs. Text form is one `key = value` per line with `#`
/// comments; every key is optional and unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string data_dir;  // empty: <out_dir>/data

  // dataset
  int n_sequences = 100;
  int holdout = 10;
  int frame_size = 40;
  int n_frames = 30;
  double frame_dt = 1.0;
  int substeps = 10;
  double horizon = 50.0;
  double freq_khz_1 = 47.7;
  double freq_khz_2 = 63.6;
  double damping_1 = 0.02;
  double damping_2 = 0.01;
  double workspace_half_width = 3.0;
  double blob_radius_px = 1.5;
  double force_lengthscale = 5.0;
  std::optional<double> force_variance_1;  // "auto": pilot calibration
  std::optional<double> force_variance_2;
  double target_position_std = 1.0;
  int pilot_sequences = 64;

  // model
  vae::KernelKind kernel = vae::KernelKind::Physics;
  std::optional<double> physics_variance_1;  // "auto": the dataset's force variance
  std::optional<double> physics_variance_2;
  double physics_lengthscale = 5.0;
  double se_variance = 1.0;
  double se_lengthscale = 3.0;
  int quad_nodes = 32;
  double quad_tol = 1e-6;
  int encoder_hidden = 500;
  int decoder_hidden = 500;

  // training
  std::int64_t iterations = 30000;
  double learning_rate = 1e-3;
  int mc_samples = 1;
  int sequences_per_step = 1;
  bool train_hyperparams = false;
  std::int64_t checkpoint_every = 1000;

  bool operator==(const ExperimentConfig&) const = default;

  /// Range checks across fields; throws Config.
  void validate() const;

  std::string resolved_data_dir() const;
  datagen::DatasetConfig dataset() const;
  datagen::OscillatorSpec oscillator() const;
  vae::TrainConfig training() const;
};

ExperimentConfig parse(const std::string& text);
ExperimentConfig load(const std::string& path);
std::string to_text(const ExperimentConfig& cfg);
void save(const std::string& path, const ExperimentConfig& cfg);

/// Applies one key/value pair with the same parsing as the text form.
void set(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get(const ExperimentConfig& cfg, const std::string& key);
std::vector<std::string> keys();

}  // namespace pegp::config
