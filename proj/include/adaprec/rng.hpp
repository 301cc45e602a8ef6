#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace adaprec {

/// One SplitMix64 scrambling step; decorrelates small user-facing seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of one run's stream, derived from its experiment tag and user seed.
inline std::uint64_t mix_seed(std::string_view tag, std::uint64_t seed) {
  return splitmix64(fnv1a64(tag) ^ splitmix64(seed));
}

/// Deterministic random stream: std::mt19937_64 (bit-exact by the standard)
/// with explicit output transforms, so a seed reproduces the same draws
/// everywhere the floating-point environment matches.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) built from the top 53 bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller. Consumes exactly two uniforms per call;
  /// the sine partner is discarded so the stream carries no hidden state.
  double gaussian() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

private:
  std::mt19937_64 gen_;
};

}  // namespace adaprec
