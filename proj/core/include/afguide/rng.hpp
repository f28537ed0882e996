#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace afguide {

/// SplitMix64 finalizer. Used as the mixing function of the counter-based
/// generator below.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Combines a key with any number of stream identifiers into a new key.
constexpr std::uint64_t mix_key(std::uint64_t key) noexcept { return key; }

template <typename... Rest>
constexpr std::uint64_t mix_key(std::uint64_t key, std::uint64_t first,
                                Rest... rest) noexcept {
  return mix_key(splitmix64(key ^ splitmix64(first + 0x632BE59BD9B4E019ull)),
                 static_cast<std::uint64_t>(rest)...);
}

/// Counter-based pseudo random generator: the i-th draw is a pure function
/// of (key, i). Cheap to copy, fork and reproduce across platforms; no
/// standard-library distribution is involved.
class Rng {
 public:
  explicit Rng(std::uint64_t key = 0) noexcept : key_(splitmix64(key)) {}

  std::uint64_t next_u64() noexcept {
    return splitmix64(key_ ^ splitmix64(counter_++));
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n) noexcept {
    __extension__ using u128 = unsigned __int128;
    const u128 wide = static_cast<u128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  /// Standard normal via Box-Muller; consumes two draws.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) noexcept {
    return mean + stddev * normal();
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Independent stream derived from this generator's key.
  [[nodiscard]] Rng fork(std::uint64_t stream) const noexcept {
    Rng child;
    child.key_ = mix_key(key_, stream);
    return child;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace afguide
