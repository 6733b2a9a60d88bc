#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace memeguard {

/// Seeded random stream with platform-independent draws.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// std:: distributions are not, so uniform/normal/below are derived from
/// the raw engine bits here. Two Rng objects with equal seeds produce the
/// same sequence on every conforming implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();

  /// Standard normal via Box-Muller.
  double normal();

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Derives an independent seed for sub-stream `stream` of `seed` (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace memeguard
