#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "pegp/checkpoint.hpp"
#include "pegp/config.hpp"
#include "pegp/error.hpp"

using namespace pegp;
namespace fs = std::filesystem;

#ifndef PEGP_SOURCE_DIR
#define PEGP_SOURCE_DIR "."
#endif

TEST_CASE("config text round trip") {
  config::ExperimentConfig cfg;
  cfg.seed = 123456789012345ULL;
  cfg.learning_rate = 0.1 + 0.2;
  cfg.kernel = vae::KernelKind::SeBaseline;
  cfg.force_variance_1 = 0.0123456789;
  cfg.train_hyperparams = true;
  cfg.data_dir = "some/where";
  CHECK(config::parse(config::to_text(cfg)) == cfg);
  CHECK(config::parse(config::to_text(config::ExperimentConfig{})) == config::ExperimentConfig{});
}

TEST_CASE("config parsing") {
  const auto cfg = config::parse("# comment\nseed = 9\n\n  kernel=se-baseline  # trailing\nforce_variance_2 = auto\n");
  CHECK(cfg.seed == 9);
  CHECK(cfg.kernel == vae::KernelKind::SeBaseline);
  CHECK_FALSE(cfg.force_variance_2.has_value());
  CHECK_THROWS_AS(config::parse("sedd = 1\n"), Error);
  CHECK_THROWS_AS(config::parse("seed = many\n"), Error);
  CHECK_THROWS_AS(config::parse("seed\n"), Error);
  CHECK_THROWS_AS(config::parse("holdout = 200\n"), Error);

  config::ExperimentConfig c;
  config::set(c, "iterations", "10");
  CHECK(config::get(c, "iterations") == "10");
  CHECK_THROWS_AS(config::set(c, "nope", "1"), Error);
  CHECK(config::keys().size() > 30);
}

TEST_CASE("shipped example configs round trip") {
  const fs::path dir = fs::path(PEGP_SOURCE_DIR) / "configs";
  REQUIRE(fs::exists(dir));
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".cfg") continue;
    const auto cfg = config::load(entry.path().string());
    CHECK(config::parse(config::to_text(cfg)) == cfg);
    ++seen;
  }
  CHECK(seen >= 1);
}

TEST_CASE("checkpoint round trip for both kernels") {
  const fs::path dir = fs::temp_directory_path() / "pegp_test_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (auto prior : {fixtures::physics_prior(), fixtures::se_prior()}) {
    vae::TrainState s{fixtures::small_model(prior, 16, 5, 3), {}, 0};
    s.iteration = 42;
    s.adam.step = 42;
    s.adam.first_moment = {Matrix::Ones(2, 2)};
    s.adam.second_moment = {Matrix::Constant(2, 2, 0.5)};
    const std::string path = (dir / "c.pegp").string();
    checkpoint::save(path, s);
    const auto back = checkpoint::load(path);
    CHECK(back.iteration == 42);
    CHECK(back.model.prior.kind == prior.kind);
    CHECK(back.model.prior.log_hyperparameters() == prior.log_hyperparameters());
    CHECK(back.model.encoder == s.model.encoder);
    CHECK(back.model.decoder == s.model.decoder);
    CHECK(back.adam.first_moment[0] == s.adam.first_moment[0]);
    CHECK(back.adam.second_moment[0] == s.adam.second_moment[0]);
    if (prior.system) {
      REQUIRE(back.model.prior.system.has_value());
      CHECK(*back.model.prior.system == *prior.system);
    }
    CHECK(checkpoint::serialize(back) == checkpoint::serialize(s));
  }
  CHECK_THROWS_AS(checkpoint::load((dir / "missing.pegp").string()), Error);
  std::vector<char> junk{'P', 'E', 'G', 'P'};
  CHECK_THROWS_AS(checkpoint::deserialize(junk), Error);
  fs::remove_all(dir);
}
