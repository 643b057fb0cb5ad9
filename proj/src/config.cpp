#include "pegp/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "pegp/error.hpp"

namespace pegp::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(d)) {
    fail(ErrorKind::Config, key + ": '" + v + "' is not a finite number");
  }
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE) fail(ErrorKind::Config, key + ": '" + v + "' is not an integer");
  return i;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || *end != '\0' || errno == ERANGE) {
    fail(ErrorKind::Config, key + ": '" + v + "' is not an unsigned integer");
  }
  return u;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(ErrorKind::Config, key + ": expected true or false, got '" + v + "'");
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define PEGP_DOUBLE(name)                                                                   \
  Field {                                                                                   \
    #name, [](const ExperimentConfig& c) { return fmt_double(c.name); },                    \
        [](ExperimentConfig& c, const std::string& v) { c.name = to_double(#name, v); }     \
  }
#define PEGP_INT(name)                                                                                  \
  Field {                                                                                               \
    #name, [](const ExperimentConfig& c) { return std::to_string(c.name); },                            \
        [](ExperimentConfig& c, const std::string& v) {                                                 \
          c.name = static_cast<decltype(c.name)>(to_int(#name, v));                                     \
          if (static_cast<long long>(c.name) != to_int(#name, v)) fail(ErrorKind::Config, #name ": out of range"); \
        }                                                                                               \
  }
#define PEGP_AUTO(name)                                                                     \
  Field {                                                                                   \
    #name, [](const ExperimentConfig& c) { return c.name ? fmt_double(*c.name) : "auto"; }, \
        [](ExperimentConfig& c, const std::string& v) {                                     \
          if (v == "auto") c.name.reset();                                                  \
          else c.name = to_double(#name, v);                                                \
        }                                                                                   \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
            [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("seed", v); }},
      Field{"out_dir", [](const ExperimentConfig& c) { return c.out_dir; },
            [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
      Field{"data_dir", [](const ExperimentConfig& c) { return c.data_dir; },
            [](ExperimentConfig& c, const std::string& v) { c.data_dir = v; }},
      PEGP_INT(n_sequences),
      PEGP_INT(holdout),
      PEGP_INT(frame_size),
      PEGP_INT(n_frames),
      PEGP_DOUBLE(frame_dt),
      PEGP_INT(substeps),
      PEGP_DOUBLE(horizon),
      PEGP_DOUBLE(freq_khz_1),
      PEGP_DOUBLE(freq_khz_2),
      PEGP_DOUBLE(damping_1),
      PEGP_DOUBLE(damping_2),
      PEGP_DOUBLE(workspace_half_width),
      PEGP_DOUBLE(blob_radius_px),
      PEGP_DOUBLE(force_lengthscale),
      PEGP_AUTO(force_variance_1),
      PEGP_AUTO(force_variance_2),
      PEGP_DOUBLE(target_position_std),
      PEGP_INT(pilot_sequences),
      Field{"kernel", [](const ExperimentConfig& c) { return std::string(vae::to_string(c.kernel)); },
            [](ExperimentConfig& c, const std::string& v) { c.kernel = vae::parse_kernel_kind(v); }},
      PEGP_AUTO(physics_variance_1),
      PEGP_AUTO(physics_variance_2),
      PEGP_DOUBLE(physics_lengthscale),
      PEGP_DOUBLE(se_variance),
      PEGP_DOUBLE(se_lengthscale),
      PEGP_INT(quad_nodes),
      PEGP_DOUBLE(quad_tol),
      PEGP_INT(encoder_hidden),
      PEGP_INT(decoder_hidden),
      PEGP_INT(iterations),
      PEGP_DOUBLE(learning_rate),
      PEGP_INT(mc_samples),
      PEGP_INT(sequences_per_step),
      Field{"train_hyperparams", [](const ExperimentConfig& c) { return std::string(c.train_hyperparams ? "true" : "false"); },
            [](ExperimentConfig& c, const std::string& v) { c.train_hyperparams = to_bool("train_hyperparams", v); }},
      PEGP_INT(checkpoint_every),
  };
  return table;
}

#undef PEGP_DOUBLE
#undef PEGP_INT
#undef PEGP_AUTO

const Field& find(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  fail(ErrorKind::Config, "unknown key '" + key + "'");
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Config, what);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!out_dir.empty(), "out_dir must not be empty");
  require(n_sequences >= 1, "n_sequences must be at least 1");
  require(holdout >= 0 && holdout < n_sequences, "holdout must be in [0, n_sequences)");
  require(frame_size >= 1 && n_frames >= 1 && substeps >= 1, "frame_size, n_frames and substeps must be positive");
  require(frame_dt > 0.0 && horizon >= n_frames * frame_dt, "need frame_dt > 0 and horizon >= n_frames * frame_dt");
  require(freq_khz_1 > 0.0 && freq_khz_2 > 0.0 && damping_1 >= 0.0 && damping_2 >= 0.0,
          "oscillator frequencies must be positive and damping non-negative");
  require(workspace_half_width > 0.0 && blob_radius_px > 0.0, "workspace and blob sizes must be positive");
  require(force_lengthscale > 0.0 && target_position_std > 0.0 && pilot_sequences >= 1,
          "force prior settings must be positive");
  for (const auto& v : {force_variance_1, force_variance_2, physics_variance_1, physics_variance_2}) {
    require(!v || *v > 0.0, "variances must be positive");
  }
  require(physics_lengthscale > 0.0 && se_variance > 0.0 && se_lengthscale > 0.0, "kernel hyperparameters must be positive");
  require(quad_nodes >= 1 && quad_tol > 0.0, "quadrature settings must be positive");
  require(encoder_hidden >= 1 && decoder_hidden >= 1, "network widths must be positive");
  require(iterations >= 0 && learning_rate > 0.0 && mc_samples >= 1 && sequences_per_step >= 1 && checkpoint_every >= 0,
          "training settings out of range");
}

std::string ExperimentConfig::resolved_data_dir() const { return data_dir.empty() ? out_dir + "/data" : data_dir; }

datagen::OscillatorSpec ExperimentConfig::oscillator() const {
  return {freq_khz_1, freq_khz_2, damping_1, damping_2};
}

datagen::DatasetConfig ExperimentConfig::dataset() const {
  datagen::DatasetConfig d;
  d.n_frames = n_frames;
  d.frame_dt = frame_dt;
  d.substeps = substeps;
  d.truth_horizon = horizon;
  d.force_lengthscale = force_lengthscale;
  d.target_position_std = target_position_std;
  d.pilot_sequences = pilot_sequences;
  if (force_variance_1 || force_variance_2) {
    require(force_variance_1 && force_variance_2, "set both force variances or neither");
    d.force_variance = std::vector<double>{*force_variance_1, *force_variance_2};
  }
  d.render = {frame_size, workspace_half_width, blob_radius_px};
  d.oscillator = oscillator();
  return d;
}

vae::TrainConfig ExperimentConfig::training() const {
  vae::TrainConfig t;
  t.iterations = iterations;
  t.learning_rate = learning_rate;
  t.mc_samples = mc_samples;
  t.seed = seed;
  t.sequences_per_step = sequences_per_step;
  t.train_hyperparams = train_hyperparams;
  t.checkpoint_every = checkpoint_every;
  return t;
}

void set(ExperimentConfig& cfg, const std::string& key, const std::string& value) { find(key).set(cfg, value); }

std::string get(const ExperimentConfig& cfg, const std::string& key) { return find(key).get(cfg); }

std::vector<std::string> keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

ExperimentConfig parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Config, "line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      set(cfg, key, trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorKind::Config, "line " + std::to_string(number) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::NotFound, "cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse(ss.str());
  } catch (const Error& e) {
    fail(ErrorKind::Config, path + ": " + e.what());
  }
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

void save(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Io, "cannot write " + path);
  os << to_text(cfg);
  if (!os) fail(ErrorKind::Io, "failed writing " + path);
}

}  // namespace pegp::config
