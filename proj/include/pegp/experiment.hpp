#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pegp/config.hpp"
#include "pegp/datagen.hpp"
#include "pegp/vae.hpp"

namespace pegp::experiment {

/// Frames and calibration read back from a generated dataset directory.
/// Ground-truth files are never opened here.
struct LoadedDataset {
  std::vector<datagen::VideoSequence> sequences;
  std::vector<double> force_variance;
  int holdout = 0;

  std::span<const datagen::VideoSequence> training() const;
  std::vector<int> held_out_ids() const;
};

LoadedDataset load_dataset(const config::ExperimentConfig& cfg);

std::string sequence_path(const std::string& dir, int id);
std::string truth_path(const std::string& dir, int id);

/// Prior described by the config; "auto" physics variances take the
/// dataset's calibrated force variances.
vae::LatentPrior make_prior(const config::ExperimentConfig& cfg, vae::KernelKind kind,
                            const std::vector<double>& force_variance);

/// Writes sequences, ground-truth CSVs and manifest.json under the data
/// directory; returns the manifest path.
std::string cmd_generate(const config::ExperimentConfig& cfg);

struct TrainResult {
  std::string final_checkpoint;
  std::string trace;
  std::int64_t iterations = 0;
};

/// Trains cfg.kernel on the non-held-out sequences. With `resume` the state is
/// loaded from that checkpoint and the trace is cut back to its iteration.
TrainResult cmd_train(const config::ExperimentConfig& cfg, const std::optional<std::string>& resume = {});

struct ReconstructResult {
  std::string latent_csv;
  std::optional<double> aligned_rmse;  // when ground truth is available
};

ReconstructResult cmd_reconstruct(const config::ExperimentConfig& cfg, const std::string& checkpoint, int sequence);

struct ComparisonRow {
  int sequence;
  vae::KernelKind kernel;
  double recon_rmse;
  std::optional<double> extrap_rmse;
  std::optional<double> extrap_mean_std;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  int physics_wins = 0;
  int se_wins = 0;
  std::string csv;
};

/// Needs one physics and one SE-baseline checkpoint; evaluates every held-out
/// sequence over (0, horizon].
Comparison cmd_extrapolate(const config::ExperimentConfig& cfg, const std::vector<std::string>& checkpoints,
                           double horizon);

/// Per-sequence evaluation shared by the CLI and the acceptance suite:
/// alignment fit on the observed window, applied over the whole horizon.
struct SequenceScore {
  double recon_rmse;
  std::optional<double> extrap_rmse;
  std::optional<double> extrap_mean_std;  // aligned posterior std
};

SequenceScore score_sequence(const vae::Model& model, const datagen::VideoSequence& seq,
                             const datagen::GroundTruth& truth, double horizon);

struct HeatmapResult {
  std::string se_csv;
  std::string physics_csv;
  Matrix se;       // normalised K_11 over the frame times
  Matrix physics;
};

HeatmapResult cmd_kernel_heatmap(const config::ExperimentConfig& cfg);

}  // namespace pegp::experiment
