#include "sketchmix/rng.hpp"

#include "sketchmix/error.hpp"

namespace sketchmix {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() { return normal_(engine_); }

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw InvalidArgument("Rng::below: empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("categorical: negative or NaN weight");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("categorical: weights sum to zero");
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last_positive = k;
    acc += weights[k];
    if (u < acc) return k;
  }
  return last_positive;
}

}  // namespace sketchmix
