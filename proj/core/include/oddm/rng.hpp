#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>

#include "oddm/types.hpp"

namespace oddm {

// splitmix64 step; good enough to whiten structured seed material.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Mix an ordered tuple of words into one seed. Order matters, so
// (master, point, frame) streams never collide across roles.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t s = 0x243F6A8885A308D3ull;  // arbitrary nonzero start
  for (std::uint64_t w : words) {
    s ^= w + 0x9E3779B97F4A7C15ull + (s << 6) + (s >> 2);
    (void)splitmix64(s);
  }
  return splitmix64(s);
}

inline std::uint64_t bits_of(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof(u));
  return u;
}

// Independent stream per (master seed, Eb/N0 point, frame index, role).
// Tagging by the bit pattern of ebn0 keeps per-point streams stable when a
// sweep grid is split or merged.
inline std::mt19937_64 frame_rng(std::uint64_t master, double ebn0_db,
                                 std::uint64_t frame, std::uint64_t role) {
  return std::mt19937_64(mix_seed({master, bits_of(ebn0_db), frame, role}));
}

inline void random_bits(Bits& out, std::size_t n, std::mt19937_64& rng) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(rng() & 1u);
}

// Circularly symmetric complex gaussian, E|z|^2 = var.
inline cplx crandn(std::mt19937_64& rng, double var) {
  std::normal_distribution<double> g(0.0, std::sqrt(var / 2.0));
  return {g(rng), g(rng)};
}

}  // namespace oddm
