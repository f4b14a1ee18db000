#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace plk {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of an independent stream for `task` derived from the master seed, so
/// that results do not depend on which worker runs which task.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view task,
                                    std::uint64_t index = 0) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : task) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return mix64(mix64(master ^ h) + index);
}

inline Rng make_rng(std::uint64_t master, std::string_view task, std::uint64_t index = 0) {
  return Rng(derive_seed(master, task, index));
}

}  // namespace plk
