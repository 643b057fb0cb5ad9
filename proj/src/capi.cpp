#include "pegp/pegp.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <new>
#include <string>

#include "pegp/checkpoint.hpp"
#include "pegp/config.hpp"
#include "pegp/error.hpp"
#include "pegp/experiment.hpp"

struct pegp_config {
  pegp::config::ExperimentConfig value;
};

struct pegp_model {
  pegp::vae::TrainState state;
};

namespace {

thread_local std::string last_error;

pegp_status status_of(pegp::ErrorKind kind) {
  using pegp::ErrorKind;
  switch (kind) {
    case ErrorKind::InvalidArgument: return PEGP_ERR_INVALID_ARGUMENT;
    case ErrorKind::Dimension: return PEGP_ERR_DIMENSION;
    case ErrorKind::NumericalRange:
    case ErrorKind::Causality:
    case ErrorKind::InvalidGrid:
    case ErrorKind::Domain:
    case ErrorKind::Accuracy: return PEGP_ERR_NUMERICAL;
    case ErrorKind::NotPositiveDefinite: return PEGP_ERR_NOT_POSITIVE_DEFINITE;
    case ErrorKind::Divergence: return PEGP_ERR_DIVERGENCE;
    case ErrorKind::Io: return PEGP_ERR_IO;
    case ErrorKind::NotFound: return PEGP_ERR_NOT_FOUND;
    case ErrorKind::Config: return PEGP_ERR_CONFIG;
    case ErrorKind::Usage: return PEGP_ERR_USAGE;
    case ErrorKind::Alignment: return PEGP_ERR_ALIGNMENT;
  }
  return PEGP_ERR_INTERNAL;
}

pegp_status fail_with(pegp_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
pegp_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return PEGP_OK;
  } catch (const pegp::Error& e) {
    return fail_with(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(PEGP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(PEGP_ERR_INTERNAL, e.what());
  }
}

#define PEGP_REQUIRE(ptr)                                                           \
  do {                                                                              \
    if (!(ptr)) return fail_with(PEGP_ERR_INVALID_ARGUMENT, #ptr " must not be NULL"); \
  } while (0)

}  // namespace

extern "C" {

const char* pegp_version(void) { return "0.1.0"; }

const char* pegp_last_error(void) { return last_error.c_str(); }

const char* pegp_status_name(pegp_status status) {
  switch (status) {
    case PEGP_OK: return "ok";
    case PEGP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PEGP_ERR_DIMENSION: return "dimension";
    case PEGP_ERR_NUMERICAL: return "numerical";
    case PEGP_ERR_NOT_POSITIVE_DEFINITE: return "not positive definite";
    case PEGP_ERR_DIVERGENCE: return "training divergence";
    case PEGP_ERR_IO: return "i/o";
    case PEGP_ERR_NOT_FOUND: return "not found";
    case PEGP_ERR_CONFIG: return "config";
    case PEGP_ERR_USAGE: return "usage";
    case PEGP_ERR_ALIGNMENT: return "alignment";
    case PEGP_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

int pegp_exit_code(pegp_status status) {
  switch (status) {
    case PEGP_OK: return 0;
    case PEGP_ERR_IO: return 2;
    case PEGP_ERR_NUMERICAL:
    case PEGP_ERR_NOT_POSITIVE_DEFINITE:
    case PEGP_ERR_DIVERGENCE:
    case PEGP_ERR_INTERNAL: return 3;
    default: return 1;
  }
}

pegp_status pegp_config_default(pegp_config** out) {
  PEGP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new pegp_config{}; });
}

pegp_status pegp_config_load(const char* path, pegp_config** out) {
  PEGP_REQUIRE(path);
  PEGP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new pegp_config{pegp::config::load(path)}; });
}

pegp_status pegp_config_set(pegp_config* cfg, const char* key, const char* value) {
  PEGP_REQUIRE(cfg);
  PEGP_REQUIRE(key);
  PEGP_REQUIRE(value);
  return guarded([&] {
    pegp::config::ExperimentConfig next = cfg->value;
    pegp::config::set(next, key, value);
    next.validate();
    cfg->value = std::move(next);
  });
}

pegp_status pegp_config_get(const pegp_config* cfg, const char* key, char* buf, size_t len, size_t* needed) {
  PEGP_REQUIRE(cfg);
  PEGP_REQUIRE(key);
  return guarded([&] {
    const std::string v = pegp::config::get(cfg->value, key);
    if (needed) *needed = v.size();
    if (buf && len > 0) {
      const size_t n = std::min(len - 1, v.size());
      std::memcpy(buf, v.data(), n);
      buf[n] = '\0';
    }
  });
}

pegp_status pegp_config_save(const pegp_config* cfg, const char* path) {
  PEGP_REQUIRE(cfg);
  PEGP_REQUIRE(path);
  return guarded([&] { pegp::config::save(path, cfg->value); });
}

void pegp_config_free(pegp_config* cfg) { delete cfg; }

pegp_status pegp_generate(const pegp_config* cfg) {
  PEGP_REQUIRE(cfg);
  return guarded([&] { pegp::experiment::cmd_generate(cfg->value); });
}

pegp_status pegp_train(const pegp_config* cfg, const char* resume_checkpoint, int64_t* final_iteration,
                       int64_t* diverged_iteration) {
  PEGP_REQUIRE(cfg);
  if (diverged_iteration) *diverged_iteration = -1;
  return guarded([&] {
    try {
      std::optional<std::string> resume;
      if (resume_checkpoint) resume = resume_checkpoint;
      const auto r = pegp::experiment::cmd_train(cfg->value, resume);
      if (final_iteration) *final_iteration = r.iterations;
    } catch (const pegp::TrainingDivergence& e) {
      if (diverged_iteration) *diverged_iteration = e.iteration();
      throw;
    }
  });
}

pegp_status pegp_reconstruct(const pegp_config* cfg, const char* checkpoint, int sequence, double* aligned_rmse) {
  PEGP_REQUIRE(cfg);
  PEGP_REQUIRE(checkpoint);
  return guarded([&] {
    const auto r = pegp::experiment::cmd_reconstruct(cfg->value, checkpoint, sequence);
    if (aligned_rmse) *aligned_rmse = r.aligned_rmse.value_or(std::numeric_limits<double>::quiet_NaN());
  });
}

pegp_status pegp_extrapolate(const pegp_config* cfg, const char* const* checkpoints, size_t count, double horizon,
                             int* physics_wins, int* se_wins) {
  PEGP_REQUIRE(cfg);
  PEGP_REQUIRE(checkpoints);
  return guarded([&] {
    std::vector<std::string> paths;
    for (size_t i = 0; i < count; ++i) {
      if (!checkpoints[i]) pegp::fail(pegp::ErrorKind::InvalidArgument, "checkpoint path must not be NULL");
      paths.emplace_back(checkpoints[i]);
    }
    const auto r = pegp::experiment::cmd_extrapolate(cfg->value, paths, horizon);
    if (physics_wins) *physics_wins = r.physics_wins;
    if (se_wins) *se_wins = r.se_wins;
  });
}

pegp_status pegp_kernel_heatmap(const pegp_config* cfg) {
  PEGP_REQUIRE(cfg);
  return guarded([&] { pegp::experiment::cmd_kernel_heatmap(cfg->value); });
}

pegp_status pegp_model_load(const char* checkpoint, pegp_model** out) {
  PEGP_REQUIRE(checkpoint);
  PEGP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new pegp_model{pegp::checkpoint::load(checkpoint)}; });
}

void pegp_model_free(pegp_model* model) { delete model; }

const char* pegp_model_kernel(const pegp_model* model) {
  return model ? pegp::vae::to_string(model->state.model.prior.kind) : nullptr;
}

int64_t pegp_model_iteration(const pegp_model* model) { return model ? model->state.iteration : -1; }

int pegp_model_latent_dim(const pegp_model* model) {
  return model ? static_cast<int>(model->state.model.prior.latent_dim()) : -1;
}

pegp_status pegp_model_posterior(const pegp_model* model, const char* sequence_file, double horizon, double* mean,
                                 double* std_dev, size_t capacity, size_t* count) {
  PEGP_REQUIRE(model);
  PEGP_REQUIRE(sequence_file);
  return guarded([&] {
    const auto seq = pegp::datagen::read_sequence(sequence_file);
    const auto post = pegp::vae::extrapolate(model->state.model, seq, horizon);
    const auto n = static_cast<size_t>(post.mean.size());
    if (count) *count = n;
    if (capacity < n) pegp::fail(pegp::ErrorKind::Dimension, "output buffers hold fewer than " + std::to_string(n) + " values");
    if (!mean || !std_dev) pegp::fail(pegp::ErrorKind::InvalidArgument, "output buffers must not be NULL");
    const pegp::Vector sd = post.std_dev();
    for (size_t i = 0; i < n; ++i) {
      mean[i] = post.mean(static_cast<Eigen::Index>(i));
      std_dev[i] = sd(static_cast<Eigen::Index>(i));
    }
  });
}

}  // extern "C"
