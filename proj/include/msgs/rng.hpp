#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace msgs {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a fixed stream id.
/// Every subcommand exposes one --seed; module-level seeds come from here.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

// Fixed stream ids.
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamDropout = 2;
inline constexpr std::uint64_t kStreamSplit = 3;
inline constexpr std::uint64_t kStreamSbm = 4;

/// Maps 64 random bits to a double in [0, 1).
constexpr double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Stateless uniform in [0, 1) from a key; used by counter-based dropout.
constexpr double hash_unit(std::uint64_t key) {
  return unit_double(splitmix64(key));
}

/// Deterministic RNG. mt19937_64 supplies bits; all transforms are
/// hand-rolled so output never depends on libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return unit_double(eng_()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  int uniform_int(int n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t bits;
    do {
      bits = eng_();
    } while (bits >= limit);
    return static_cast<int>(bits % un);
  }

  /// Standard normal via Box-Muller; two uniforms per draw, no cached value.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (int i = static_cast<int>(items.size()) - 1; i > 0; --i) {
      std::swap(items[static_cast<std::size_t>(i)],
                items[static_cast<std::size_t>(uniform_int(i + 1))]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace msgs
