// Command-line front end over the C API.
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pegp/pegp.h"

namespace {

struct ConfigDeleter {
  void operator()(pegp_config* c) const { pegp_config_free(c); }
};
using ConfigPtr = std::unique_ptr<pegp_config, ConfigDeleter>;

struct Options {
  std::string config;
  std::string seed;
  std::string out;
  std::vector<std::string> checkpoints;
  int sequence = -1;
  double horizon = 50.0;
  long long iterations = -1;
};

int report(pegp_status s) {
  if (s != PEGP_OK) std::fprintf(stderr, "pegp: %s error: %s\n", pegp_status_name(s), pegp_last_error());
  return pegp_exit_code(s);
}

pegp_status open_config(const Options& o, ConfigPtr& out) {
  pegp_config* raw = nullptr;
  pegp_status s = o.config.empty() ? pegp_config_default(&raw) : pegp_config_load(o.config.c_str(), &raw);
  out.reset(raw);
  if (s != PEGP_OK) return s;
  if (!o.seed.empty() && (s = pegp_config_set(raw, "seed", o.seed.c_str())) != PEGP_OK) return s;
  if (!o.out.empty() && (s = pegp_config_set(raw, "out_dir", o.out.c_str())) != PEGP_OK) return s;
  if (o.iterations >= 0) {
    s = pegp_config_set(raw, "iterations", std::to_string(o.iterations).c_str());
  }
  return s;
}

std::string config_value(const pegp_config* cfg, const char* key) {
  char buf[512];
  size_t needed = 0;
  if (pegp_config_get(cfg, key, buf, sizeof buf, &needed) != PEGP_OK) return {};
  return buf;
}

int run(const std::string& command, const Options& o) {
  ConfigPtr cfg;
  pegp_status s = open_config(o, cfg);
  if (s != PEGP_OK) return report(s);

  if (command == "generate") {
    s = pegp_generate(cfg.get());
    if (s == PEGP_OK) {
      std::string dir = config_value(cfg.get(), "data_dir");
      if (dir.empty()) dir = config_value(cfg.get(), "out_dir") + "/data";
      std::printf("dataset written to %s\n", dir.c_str());
    }
  } else if (command == "train") {
    if (o.checkpoints.size() > 1) {
      std::fprintf(stderr, "pegp: usage error: train resumes from at most one --checkpoint\n");
      return 1;
    }
    int64_t done = 0, diverged = -1;
    s = pegp_train(cfg.get(), o.checkpoints.empty() ? nullptr : o.checkpoints.front().c_str(), &done, &diverged);
    if (s == PEGP_OK) {
      std::printf("trained %s to iteration %lld in %s/%s\n", config_value(cfg.get(), "kernel").c_str(),
                  static_cast<long long>(done), config_value(cfg.get(), "out_dir").c_str(),
                  config_value(cfg.get(), "kernel").c_str());
    } else if (diverged >= 0) {
      std::fprintf(stderr, "pegp: training diverged at iteration %lld\n", static_cast<long long>(diverged));
    }
  } else if (command == "reconstruct") {
    if (o.checkpoints.size() != 1 || o.sequence < 0) {
      std::fprintf(stderr, "pegp: usage error: reconstruct needs one --checkpoint and --sequence\n");
      return 1;
    }
    double rmse = 0.0;
    s = pegp_reconstruct(cfg.get(), o.checkpoints.front().c_str(), o.sequence, &rmse);
    if (s == PEGP_OK && !std::isnan(rmse)) std::printf("aligned latent RMSE %.6f\n", rmse);
  } else if (command == "extrapolate") {
    std::vector<const char*> paths;
    for (const auto& c : o.checkpoints) paths.push_back(c.c_str());
    int physics_wins = 0, se_wins = 0;
    s = pegp_extrapolate(cfg.get(), paths.data(), paths.size(), o.horizon, &physics_wins, &se_wins);
    if (s == PEGP_OK) {
      std::printf("physics wins %d, se-baseline wins %d; table in %s/extrapolate/comparison.csv\n", physics_wins,
                  se_wins, config_value(cfg.get(), "out_dir").c_str());
    }
  } else if (command == "kernel-heatmap") {
    s = pegp_kernel_heatmap(cfg.get());
    if (s == PEGP_OK) std::printf("heatmaps written to %s/heatmap\n", config_value(cfg.get(), "out_dir").c_str());
  }
  return report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-enhanced GP variational autoencoder experiments"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config file (key = value)");
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--out", o.out, "Override the output directory");
  };

  CLI::App* generate = app.add_subcommand("generate", "Generate the synthetic video dataset");
  add_common(generate);

  CLI::App* train = app.add_subcommand("train", "Train the configured kernel's model");
  add_common(train);
  train->add_option("--iterations", o.iterations, "Override the iteration count")->check(CLI::NonNegativeNumber);
  train->add_option("--checkpoint", o.checkpoints, "Resume from this checkpoint");

  CLI::App* reconstruct = app.add_subcommand("reconstruct", "Posterior and decoded frames for one sequence");
  add_common(reconstruct);
  reconstruct->add_option("--checkpoint", o.checkpoints, "Trained checkpoint")->required();
  reconstruct->add_option("--sequence", o.sequence, "Sequence id")->required();

  CLI::App* extrapolate = app.add_subcommand("extrapolate", "Compare physics and SE models past the clip");
  add_common(extrapolate);
  extrapolate->add_option("--checkpoint", o.checkpoints, "One physics and one se-baseline checkpoint")->required();
  extrapolate->add_option("--horizon", o.horizon, "Prediction horizon in microseconds");

  CLI::App* heatmap = app.add_subcommand("kernel-heatmap", "Normalised K11 heatmaps for both kernels");
  add_common(heatmap);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return run(app.get_subcommands().front()->get_name(), o);
}
