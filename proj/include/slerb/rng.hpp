#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace slerb {

// splitmix64 step, used both as a standalone mixer and as the seed
// derivation hash.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed splitting rule: every consumer of randomness derives its own stream
// from (master seed, stage tag, index).  Two runs with the same master seed
// therefore produce identical results regardless of execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                                 std::uint64_t index) {
  std::uint64_t h = splitmix64(master);
  for (unsigned char c : stage) h = splitmix64(h ^ c);
  return splitmix64(h ^ index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::string_view stage,
                    std::uint64_t index) {
  return Rng(derive_seed(master, stage, index));
}

}  // namespace slerb
