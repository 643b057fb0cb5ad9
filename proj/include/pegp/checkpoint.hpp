#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pegp/vae.hpp"

namespace pegp::checkpoint {

// Layout, little-endian:
//   "PEGPCKPT", u32 version, u32 kernel kind, i64 iteration,
//   u32 quadrature nodes, f64 quadrature tolerance,
//   u32 length + LTI system JSON (empty for the SE baseline),
//   u32 kernel count + (f64 variance, f64 lengthscale) pairs,
//   i64 Adam step, f64 learning rate, beta1, beta2, epsilon,
//   u32 tensor count, then per tensor: u16 name length, name, u32 rows,
//   u32 cols, rows * cols f64 in row-major order.
inline constexpr std::uint32_t kVersion = 1;

std::vector<char> serialize(const vae::TrainState& state);
vae::TrainState deserialize(const std::vector<char>& bytes, const std::string& origin = "checkpoint");

/// Writes to a temporary sibling and renames it into place.
void save(const std::string& path, const vae::TrainState& state);
vae::TrainState load(const std::string& path);

}  // namespace pegp::checkpoint
