#pragma once

#include <bit>
#include <cstdint>
#include <complex>
#include <random>

namespace atomcav {

// SplitMix64 step; used both as a seed scrambler and to derive independent
// streams from (master seed, tags...) without any coupling between streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_word(std::uint64_t acc, std::uint64_t word) {
  acc ^= word + 0x9e3779b97f4a7c15ULL + (acc << 6) + (acc >> 2);
  std::uint64_t s = acc;
  return splitmix64(s);
}

inline std::uint64_t seed_word(double value) {
  return std::bit_cast<std::uint64_t>(value);
}

// Derives a child seed from a master seed and an arbitrary list of tag words.
// Tags are value-based (e.g. bit patterns of sweep coordinates), so the same
// cell always gets the same stream no matter how the grid is enumerated.
template <typename... Words>
std::uint64_t derive_seed(std::uint64_t master, Words... tags) {
  std::uint64_t acc = master;
  ((acc = mix_word(acc, static_cast<std::uint64_t>(tags))), ...);
  std::uint64_t s = acc;
  return splitmix64(s);
}

// Per-trajectory RNG: one engine, Gaussian and uniform draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double gaussian() { return normal_(engine_); }
  std::complex<double> gaussian_pair() {
    double re = normal_(engine_);
    double im = normal_(engine_);
    return {re, im};
  }
  // Uniform in [-1, 1).
  double symmetric_uniform() { return uniform_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{-1.0, 1.0};
};

}  // namespace atomcav
