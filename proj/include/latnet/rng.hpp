#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace latnet {

// xoshiro256++ seeded through splitmix64. Self-contained on purpose: the
// standard-library distributions are not bit-identical across toolchains,
// and reports must reproduce exactly from a seed. The (seed, stream) pair
// gives independent substreams so parallel replicates stay deterministic
// regardless of how work is scheduled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t a = seed;
    std::uint64_t b = 0x9E3779B97F4A7C15ULL ^ stream;
    std::uint64_t z = mix_step(a) ^ mix_step(b);
    for (auto& w : s_) w = mix_step(z);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53 significant bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller; the second member of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  void fill_normal(std::span<double> out) {
    for (auto& v : out) v = normal();
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t mix_step(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint64_t, 4> s_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable 64-bit hash of (seed, tag) for handing seeds to nested components
// without correlating their streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  Rng r(seed, ~tag);
  return r.next_u64();
}

}  // namespace latnet
