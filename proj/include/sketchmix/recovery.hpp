#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sketchmix/freqdesign.hpp"
#include "sketchmix/model.hpp"
#include "sketchmix/optimize.hpp"
#include "sketchmix/rng.hpp"
#include "sketchmix/sketch.hpp"

namespace sketchmix {

enum class Algorithm { CLOMP, CLOMPR, Split };

const char* to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& name);  // "clomp" | "clompr" | "split"

struct RecoveryConfig {
  std::size_t K = 1;
  Algorithm algorithm = Algorithm::CLOMPR;
  int max_inner_iters = 2000;
  double grad_tol = 1e-8;
  std::size_t step1_restarts = 1;
  std::uint64_t seed = 0;

  /// Greedy iterations: K for CLOMP, 2K for CLOMPR.
  std::size_t iterations() const;
  BoxMinimizeOptions optimizer() const { return {max_inner_iters, grad_tol, 10}; }
};

/// Current support, (unnormalized) weights and residual z - sum_k w_k A(theta_k).
struct SupportState {
  std::vector<GaussianParams> support;
  Vector weights;
  ComplexVector residual;
};

/// Optional instrumentation filled in by the greedy drivers.
struct RecoveryTrace {
  std::size_t step1_calls = 0;
  std::size_t threshold_calls = 0;
  /// Per iteration: residual norm entering step 4, after step 4, after step 5.
  std::vector<std::array<double, 3>> residual_norms;
};

/// Sketches of a list of atoms (unnormalized), one column per atom.
Eigen::MatrixXcd atom_matrix(const std::vector<GaussianParams>& support, const FrequencySet& fs);

/// z - atoms * weights.
ComplexVector compute_residual(const ComplexVector& z, const std::vector<GaussianParams>& support,
                               const Vector& weights, const FrequencySet& fs);

/// Value and gradient of -Re<A(theta)/||A(theta)||, residual> at theta =
/// [mean; variances]. Returns +inf for atoms with norm below 1e-150.
double atom_correlation_objective(const ComplexVector& residual, const FrequencySet& fs,
                                  const Vector& theta, Vector& grad);

/// Step 1: a normalized atom maximally correlated with the residual, found by
/// local optimization from random centered isotropic initializations.
GaussianParams find_atom(const ComplexVector& residual, const FrequencySet& fs, double sigma2_bar,
                         std::size_t restarts, Rng& rng, const BoxMinimizeOptions& opts = {});

/// Step 3: keep the K atoms with the largest NNLS coefficients over
/// normalized atoms (ties go to the lower index). Requires |support| > K.
SupportState hard_threshold(const SupportState& state, const ComplexVector& z, std::size_t K,
                            const FrequencySet& fs);

/// Step 4: nonnegative weights for the current atoms; updates the residual.
SupportState project_weights(const SupportState& state, const ComplexVector& z,
                             const FrequencySet& fs);

/// Value and gradient of ||z - sum_k a_k A(theta_k)||^2 at the packed point
/// [theta_1; ...; theta_K; a].
double joint_objective(const ComplexVector& z, const FrequencySet& fs, const Vector& packed,
                       std::size_t K, Vector& grad);

/// Step 5: joint descent over all atoms and weights from the current state.
SupportState global_adjust(const SupportState& state, const ComplexVector& z,
                           const FrequencySet& fs, const BoxMinimizeOptions& opts = {});

/// Splits each Gaussian in two along its highest-variance axis (ties to the
/// lowest index), at mean -/+ one standard deviation.
std::vector<GaussianParams> split_support(const std::vector<GaussianParams>& support);

/// CL-OMP (T = K) or CL-OMPR (T = 2K). Returns a normalized mixture.
Mixture cl_omp(const Sketch& z, const FrequencySet& fs, const RecoveryConfig& cfg,
               RecoveryTrace* trace = nullptr);

/// Binary-splitting recovery in ceil(log2 K) rounds.
Mixture cl_split(const Sketch& z, const FrequencySet& fs, const RecoveryConfig& cfg,
                 RecoveryTrace* trace = nullptr);

/// Dispatches on cfg.algorithm.
Mixture recover(const Sketch& z, const FrequencySet& fs, const RecoveryConfig& cfg,
                RecoveryTrace* trace = nullptr);

}  // namespace sketchmix
