#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace sketchmix {

/// SplitMix64 finalizer; used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seedable random stream with explicit stream splitting.
///
/// A child obtained by `split(i)` depends only on the parent's seed and `i`,
/// never on how many numbers the parent has already produced.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  Rng split(std::uint64_t stream) const;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t next_u64() { return engine_(); }
  std::size_t below(std::size_t n);

  /// Index drawn proportionally to nonnegative `weights`.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sketchmix
