#pragma once

#include <cstdint>
#include <random>

#include "lamp/tensor.hpp"

namespace lamp {

/// splitmix64 finalizer. Sub-seeds are derived as
/// `derive_seed(master, stream) = splitmix64(master ^ splitmix64(stream + 1))`.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 1));
}

/// Named streams used by the experiment runner.
enum class SeedStream : std::uint64_t {
  ground_truth = 1,
  measurement_noise = 2,
  initial_noise = 3,
  operator_kernel = 4,
};

inline std::uint64_t derive_seed(std::uint64_t master, SeedStream s) {
  return derive_seed(master, static_cast<std::uint64_t>(s));
}

using Rng = std::mt19937_64;

/// Image of i.i.d. standard normal draws.
Image standard_normal(Shape shape, Rng& rng);
Image standard_normal(Shape shape, std::uint64_t seed);

}  // namespace lamp
