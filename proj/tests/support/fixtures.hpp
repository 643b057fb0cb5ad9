#pragma once

#include <cstdint>
#include <vector>

#include "oracles.hpp"
#include "pegp/datagen.hpp"
#include "pegp/vae.hpp"

namespace fixtures {

inline pegp::datagen::VideoSequence random_sequence(int d, int n_frames, std::uint64_t seed) {
  pegp::datagen::VideoSequence seq;
  seq.d = d;
  seq.n_frames = n_frames;
  seq.dt = 1.0;
  const pegp::Matrix r = oracle::random_matrix(n_frames, d * d, seed);
  seq.pixels.resize(static_cast<std::size_t>(n_frames * d * d));
  for (int k = 0; k < n_frames; ++k) {
    for (int i = 0; i < d * d; ++i) seq.pixels[static_cast<std::size_t>(k * d * d + i)] = r(k, i) > 0.3 ? 1 : 0;
  }
  return seq;
}

inline pegp::vae::LatentPrior physics_prior() {
  return pegp::vae::LatentPrior::physics(pegp::datagen::build_experiment_system(), {{0.05, 5.0}, {0.08, 5.0}});
}

inline pegp::vae::LatentPrior se_prior() { return pegp::vae::LatentPrior::se_baseline({{1.0, 3.0}, {1.0, 3.0}}); }

// Small network with non-zero biases so every parameter carries gradient.
inline pegp::vae::Model small_model(pegp::vae::LatentPrior prior, int pixels, int hidden, std::uint64_t seed) {
  pegp::numerics::RngStream rng(seed);
  auto m = pegp::vae::Model::initial(std::move(prior), pixels, hidden, hidden, rng);
  m.encoder.b1 = oracle::random_matrix(hidden, 1, seed + 1) * 0.2;
  m.encoder.b2 = oracle::random_matrix(4, 1, seed + 2) * 0.2;
  m.decoder.b1 = oracle::random_matrix(hidden, 1, seed + 3) * 0.2;
  m.decoder.b2 = oracle::random_matrix(pixels, 1, seed + 4) * 0.2;
  return m;
}

}  // namespace fixtures
