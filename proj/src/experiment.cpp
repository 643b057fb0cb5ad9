#include "pegp/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pegp/checkpoint.hpp"
#include "pegp/error.hpp"
#include "pegp/gp.hpp"
#include "pegp/kernels.hpp"

namespace fs = std::filesystem;

namespace pegp::experiment {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;  // "init"
constexpr int kManifestVersion = 1;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string numbered(const char* pattern, int id) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, id);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string manifest_path(const config::ExperimentConfig& cfg) {
  return join(cfg.resolved_data_dir(), "manifest.json");
}

nlohmann::json read_manifest(const config::ExperimentConfig& cfg) {
  const std::string path = manifest_path(cfg);
  std::ifstream is(path);
  if (!is) fail(ErrorKind::NotFound, "no dataset manifest at " + path + " (run generate first)");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot write " + path);
  os << text;
  if (!os) fail(ErrorKind::Io, "failed writing " + path);
}

std::string trace_line(const vae::TraceRow& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(r.iteration),
                r.elbo.reconstruction, r.elbo.entropy_term, r.elbo.log_marginal, r.elbo.total);
  return buf;
}

constexpr const char* kTraceHeader = "iteration,reconstruction,entropy_term,log_marginal,total\n";

// Keeps the header and every row up to `iteration`.
void truncate_trace(const std::string& path, std::int64_t iteration) {
  std::ifstream is(path);
  std::string kept = kTraceHeader;
  if (is) {
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) > iteration) break;
      kept += line + "\n";
    }
  }
  write_text(path, kept);
}

}  // namespace

std::span<const datagen::VideoSequence> LoadedDataset::training() const {
  return std::span<const datagen::VideoSequence>(sequences).first(sequences.size() - static_cast<std::size_t>(holdout));
}

std::vector<int> LoadedDataset::held_out_ids() const {
  std::vector<int> ids;
  for (int i = static_cast<int>(sequences.size()) - holdout; i < static_cast<int>(sequences.size()); ++i) ids.push_back(i);
  return ids;
}

std::string sequence_path(const std::string& dir, int id) { return join(dir, numbered("seq_%03d.pegv", id)); }
std::string truth_path(const std::string& dir, int id) { return join(dir, numbered("seq_%03d_truth.csv", id)); }

LoadedDataset load_dataset(const config::ExperimentConfig& cfg) {
  const nlohmann::json m = read_manifest(cfg);
  LoadedDataset data;
  try {
    if (m.at("format_version").get<int>() != kManifestVersion) fail(ErrorKind::Io, "unsupported manifest version");
    if (m.at("n_frames").get<int>() != cfg.n_frames || m.at("frame_size").get<int>() != cfg.frame_size ||
        m.at("frame_dt").get<double>() != cfg.frame_dt) {
      fail(ErrorKind::Config, "dataset in " + cfg.resolved_data_dir() + " was generated with different frame settings");
    }
    data.force_variance = m.at("force_variance").get<std::vector<double>>();
    data.holdout = m.at("holdout").get<int>();
    const int n = m.at("n_sequences").get<int>();
    for (int i = 0; i < n; ++i) data.sequences.push_back(datagen::read_sequence(sequence_path(cfg.resolved_data_dir(), i)));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, manifest_path(cfg) + ": " + e.what());
  }
  if (data.holdout < 0 || data.holdout >= static_cast<int>(data.sequences.size())) {
    fail(ErrorKind::Io, "manifest holdout is out of range");
  }
  return data;
}

vae::LatentPrior make_prior(const config::ExperimentConfig& cfg, vae::KernelKind kind,
                            const std::vector<double>& force_variance) {
  if (kind == vae::KernelKind::SeBaseline) {
    return vae::LatentPrior::se_baseline(std::vector<kernels::SeKernel>(2, {cfg.se_variance, cfg.se_lengthscale}));
  }
  const std::optional<double> given[2] = {cfg.physics_variance_1, cfg.physics_variance_2};
  std::vector<kernels::SeKernel> inputs;
  for (std::size_t l = 0; l < 2; ++l) {
    double v = 0.0;
    if (given[l]) {
      v = *given[l];
    } else {
      if (force_variance.size() != 2) fail(ErrorKind::Config, "physics variance is auto but no calibration is known");
      v = force_variance[l];
    }
    inputs.push_back({v, cfg.physics_lengthscale});
  }
  return vae::LatentPrior::physics(datagen::build_experiment_system(cfg.oscillator()), std::move(inputs),
                                   static_cast<std::size_t>(cfg.quad_nodes), cfg.quad_tol);
}

std::string cmd_generate(const config::ExperimentConfig& cfg) {
  cfg.validate();
  const std::string dir = cfg.resolved_data_dir();
  ensure_dir(dir);
  const datagen::Dataset data =
      datagen::generate_dataset(cfg.n_sequences, cfg.dataset(), numerics::RngStream(cfg.seed));

  nlohmann::json files = nlohmann::json::array();
  for (int i = 0; i < cfg.n_sequences; ++i) {
    datagen::write_sequence(sequence_path(dir, i), data.sequences[static_cast<std::size_t>(i)]);
    datagen::write_ground_truth(truth_path(dir, i), data.truths[static_cast<std::size_t>(i)]);
    files.push_back({{"id", i},
                     {"frames", fs::path(sequence_path(dir, i)).filename().string()},
                     {"truth", fs::path(truth_path(dir, i)).filename().string()}});
  }
  std::vector<int> held_out;
  for (int i = cfg.n_sequences - cfg.holdout; i < cfg.n_sequences; ++i) held_out.push_back(i);

  const nlohmann::json manifest = {
      {"format_version", kManifestVersion},
      {"seed", cfg.seed},
      {"n_sequences", cfg.n_sequences},
      {"holdout", cfg.holdout},
      {"held_out", held_out},
      {"frame_size", cfg.frame_size},
      {"n_frames", cfg.n_frames},
      {"frame_dt", cfg.frame_dt},
      {"substeps", cfg.substeps},
      {"truth_horizon", cfg.horizon},
      {"workspace_half_width", cfg.workspace_half_width},
      {"blob_radius_px", cfg.blob_radius_px},
      {"force_lengthscale", cfg.force_lengthscale},
      {"force_variance", data.force_variance},
      {"force_variance_calibrated", !(cfg.force_variance_1 || cfg.force_variance_2)},
      {"target_position_std", cfg.target_position_std},
      {"pilot_sequences", cfg.pilot_sequences},
      {"oscillator",
       {{"freq_khz_1", cfg.freq_khz_1}, {"freq_khz_2", cfg.freq_khz_2}, {"damping_1", cfg.damping_1},
        {"damping_2", cfg.damping_2}}},
      {"system", nlohmann::json::parse(datagen::build_experiment_system(cfg.oscillator()).to_json())},
      {"sequences", files},
  };
  const std::string path = manifest_path(cfg);
  write_text(path, manifest.dump(2) + "\n");
  return path;
}

TrainResult cmd_train(const config::ExperimentConfig& cfg, const std::optional<std::string>& resume) {
  cfg.validate();
  const LoadedDataset data = load_dataset(cfg);
  const std::string dir = join(cfg.out_dir, vae::to_string(cfg.kernel));
  ensure_dir(dir);
  const std::string trace = join(dir, "trace.csv");

  vae::TrainState state;
  if (resume) {
    state = checkpoint::load(*resume);
    if (state.model.prior.kind != cfg.kernel) {
      fail(ErrorKind::Usage, "checkpoint " + *resume + " holds a " + vae::to_string(state.model.prior.kind) +
                                 " model but the config asks for " + vae::to_string(cfg.kernel));
    }
    truncate_trace(trace, state.iteration);
  } else {
    numerics::RngStream init = numerics::RngStream(cfg.seed).child(kInitStream);
    const Eigen::Index pixels = static_cast<Eigen::Index>(cfg.frame_size) * cfg.frame_size;
    state.model = vae::Model::initial(make_prior(cfg, cfg.kernel, data.force_variance), pixels, cfg.encoder_hidden,
                                      cfg.decoder_hidden, init);
    write_text(trace, kTraceHeader);
  }

  std::ofstream trace_os(trace, std::ios::app | std::ios::binary);
  if (!trace_os) fail(ErrorKind::Io, "cannot append to " + trace);
  vae::train(
      state, data.training(), cfg.training(),
      [&](const vae::TraceRow& row) {
        trace_os << trace_line(row);
        trace_os.flush();
        if (!trace_os) fail(ErrorKind::Io, "failed writing " + trace);
      },
      [&](const vae::TrainState& s) {
        checkpoint::save(join(dir, numbered("checkpoint_%06d.pegp", static_cast<int>(s.iteration))), s);
      });

  TrainResult result{join(dir, "final.pegp"), trace, state.iteration};
  checkpoint::save(result.final_checkpoint, state);
  return result;
}

SequenceScore score_sequence(const vae::Model& model, const datagen::VideoSequence& seq,
                             const datagen::GroundTruth& truth, double horizon) {
  const gp::GpPosterior post = vae::extrapolate(model, seq, horizon);
  const Matrix mean = vae::mean_matrix(post);
  const Matrix sd = vae::std_matrix(post);
  const Matrix y = datagen::truth_at(truth, post.times);
  const Eigen::Index n_obs = seq.n_frames;
  const vae::AffineAlignment align = vae::fit_alignment(mean.topRows(n_obs), y.topRows(n_obs));
  const Matrix aligned = align.apply(mean);
  SequenceScore s{vae::rmse(aligned.topRows(n_obs), y.topRows(n_obs)), {}, {}};
  const Eigen::Index n_extra = mean.rows() - n_obs;
  if (n_extra > 0) {
    s.extrap_rmse = vae::rmse(aligned.bottomRows(n_extra), y.bottomRows(n_extra));
    s.extrap_mean_std = align.apply_std(sd).bottomRows(n_extra).mean();
  }
  return s;
}

ReconstructResult cmd_reconstruct(const config::ExperimentConfig& cfg, const std::string& checkpoint_path,
                                  int sequence) {
  cfg.validate();
  const vae::TrainState state = checkpoint::load(checkpoint_path);
  const std::string data_dir = cfg.resolved_data_dir();
  const std::string seq_file = sequence_path(data_dir, sequence);
  if (sequence < 0 || !fs::exists(seq_file)) {
    fail(ErrorKind::NotFound, "sequence " + std::to_string(sequence) + " does not exist in " + data_dir);
  }
  const datagen::VideoSequence seq = datagen::read_sequence(seq_file);
  const vae::Reconstruction rec = vae::reconstruct(state.model, seq);

  const std::string dir = join(join(cfg.out_dir, "reconstruct"), vae::to_string(state.model.prior.kind));
  ensure_dir(dir);
  ReconstructResult result;
  result.latent_csv = join(dir, numbered("seq_%03d_latent.csv", sequence));
  {
    std::ostringstream os;
    gp::write_posterior_csv(os, rec.posterior);
    write_text(result.latent_csv, os.str());
  }
  const Matrix frames = seq.frames();
  for (int k = 0; k < seq.n_frames; ++k) {
    const std::string stem = numbered("seq_%03d", sequence) + numbered("_frame_%02d", k);
    const Vector original = frames.row(k).transpose();
    const Vector decoded = rec.frames.row(k).transpose();
    datagen::write_pgm(join(dir, stem + "_original.pgm"), seq.d, std::span<const double>(original.data(), original.size()));
    datagen::write_pgm(join(dir, stem + "_recon.pgm"), seq.d, std::span<const double>(decoded.data(), decoded.size()));
  }

  const std::string truth_file = truth_path(data_dir, sequence);
  if (fs::exists(truth_file)) {
    const datagen::GroundTruth truth = datagen::read_ground_truth(truth_file);
    const Matrix mean = vae::mean_matrix(rec.posterior);
    const Matrix y = datagen::truth_at(truth, rec.posterior.times);
    result.aligned_rmse = vae::rmse(vae::fit_alignment(mean, y).apply(mean), y);
  }
  return result;
}

Comparison cmd_extrapolate(const config::ExperimentConfig& cfg, const std::vector<std::string>& checkpoints,
                           double horizon) {
  cfg.validate();
  const double observed = cfg.n_frames * cfg.frame_dt;
  if (!(horizon >= observed)) {
    fail(ErrorKind::InvalidArgument, "horizon " + fmt(horizon) + " ends before the observation window " + fmt(observed));
  }
  if (checkpoints.size() != 2) fail(ErrorKind::Usage, "extrapolate needs one physics and one se-baseline checkpoint");
  std::optional<vae::TrainState> physics, se;
  for (const auto& path : checkpoints) {
    vae::TrainState s = checkpoint::load(path);
    auto& slot = s.model.prior.kind == vae::KernelKind::Physics ? physics : se;
    if (slot) fail(ErrorKind::Usage, "both checkpoints hold the same kernel kind");
    slot = std::move(s);
  }

  const LoadedDataset data = load_dataset(cfg);
  const std::string dir = join(cfg.out_dir, "extrapolate");
  ensure_dir(dir);
  Comparison cmp;
  std::string csv = "sequence,kernel,recon_rmse,extrap_rmse,extrap_mean_std,physics_wins,se_wins\n";
  for (int id : data.held_out_ids()) {
    const datagen::GroundTruth truth = datagen::read_ground_truth(truth_path(cfg.resolved_data_dir(), id));
    const auto& seq = data.sequences[static_cast<std::size_t>(id)];
    double score[2] = {0.0, 0.0};
    int slot = 0;
    for (const vae::TrainState* s : {&*physics, &*se}) {
      const SequenceScore sc = score_sequence(s->model, seq, truth, horizon);
      cmp.rows.push_back({id, s->model.prior.kind, sc.recon_rmse, sc.extrap_rmse, sc.extrap_mean_std});
      csv += std::to_string(id) + "," + vae::to_string(s->model.prior.kind) + "," + fmt(sc.recon_rmse) + "," +
             fmt(sc.extrap_rmse) + "," + fmt(sc.extrap_mean_std) + ",,\n";
      score[slot++] = sc.extrap_rmse.value_or(sc.recon_rmse);
    }
    (score[0] < score[1] ? cmp.physics_wins : cmp.se_wins) += 1;
  }
  csv += "summary,,,,," + std::to_string(cmp.physics_wins) + "," + std::to_string(cmp.se_wins) + "\n";
  cmp.csv = join(dir, "comparison.csv");
  write_text(cmp.csv, csv);
  return cmp;
}

HeatmapResult cmd_kernel_heatmap(const config::ExperimentConfig& cfg) {
  cfg.validate();
  // The normalised heatmap does not depend on the input variances; the
  // calibrated ones are used when a dataset exists.
  std::vector<double> force_variance{1.0, 1.0};
  if (fs::exists(manifest_path(cfg))) {
    force_variance = read_manifest(cfg).at("force_variance").get<std::vector<double>>();
  }
  const std::vector<double> grid = lti::uniform_grid(cfg.frame_dt, cfg.frame_dt, static_cast<std::size_t>(cfg.n_frames));

  auto k11 = [&](vae::KernelKind kind) {
    const kernels::GramMatrix g = make_prior(cfg, kind, force_variance).gram(grid);
    Matrix b = g.block(0, 0);
    b.diagonal().array() -= g.jitter;
    return kernels::normalize_to_correlation(b);
  };

  HeatmapResult r;
  r.se = k11(vae::KernelKind::SeBaseline);
  r.physics = k11(vae::KernelKind::Physics);
  const std::string dir = join(cfg.out_dir, "heatmap");
  ensure_dir(dir);
  r.se_csv = join(dir, "kernel_se.csv");
  r.physics_csv = join(dir, "kernel_physics.csv");
  for (const auto& [path, m] : {std::pair{r.se_csv, &r.se}, std::pair{r.physics_csv, &r.physics}}) {
    std::ostringstream os;
    kernels::write_block_csv(os, grid, *m);
    write_text(path, os.str());
  }
  return r;
}

}  // namespace pegp::experiment
