#pragma once

#include <cstdint>
#include <vector>

#include "sketchmix/freqdesign.hpp"
#include "sketchmix/model.hpp"
#include "sketchmix/rng.hpp"

namespace sketchmix {

/// Ground-truth mixture for a synthetic experiment.
struct SyntheticProblem {
  Mixture truth;
  std::size_t d = 0;
  std::size_t K = 0;
  std::uint64_t seed = 0;
};

enum class WeightMode { Uniform, FlatDirichlet };

/// Variances U[0.25, 1.75] per entry, means N(0, K^{2/d} I), weights 1/K
/// (or flat Dirichlet).
SyntheticProblem gen_synthetic(std::size_t d, std::size_t K, Rng& rng,
                               WeightMode weights = WeightMode::Uniform);

/// Monte-Carlo estimate with its standard error.
struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t clamp_count = 0;
};

inline constexpr std::size_t kDefaultKlSamples = 500000;
inline constexpr double kLogDensityFloor = -745.0;

/// Symmetric KL D(p||q) + D(q||p) estimated with samples from `truth`.
/// Samples are drawn in chunks from independent substreams of `rng`.
McEstimate kl_sym_mc(const Mixture& truth, const Mixture& est, std::size_t n_mc, Rng& rng,
                     unsigned threads = 0);

/// sqrt(E |psi_p(w) - psi_q(w)|^2) for w drawn from the isotropic design law
/// of the given kind at scale sigma2.
McEstimate mmd_mc(const Mixture& p, const Mixture& q, double sigma2, FreqKind kind,
                  std::size_t m_mc, Rng& rng);

struct EmOptions {
  std::size_t n_init = 10;
  std::size_t max_iter = 100;
  double rel_tol = 1e-10;
};

struct EmResult {
  Mixture mixture;
  double log_likelihood = 0.0;
  /// Mean log-likelihood after each iteration of the winning run.
  std::vector<double> trace;
  /// True when every run's log-likelihood was non-decreasing (up to 1e-9 relative).
  bool monotone = true;
  std::size_t reseeds = 0;
};

/// Minimal diagonal-covariance EM baseline, best of n_init random restarts.
EmResult em_baseline(const Dataset& data, std::size_t K, const EmOptions& opts, Rng& rng);

}  // namespace sketchmix
