#pragma once

#include <cstdint>
#include <functional>
#include <optional>

namespace sketchmix {

/// Compact parameter set of diagonal Gaussians.
struct ParamDomain {
  std::size_t d = 1;
  double sigma2_min = 1.0;
  double sigma2_max = 1.0;
  double mean_bound = 0.0;  // M
  double radius = 1.0;      // Chebyshev radius of the parameter set

  void validate() const;
};

/// A possibly astronomically large positive quantity, kept in natural log.
struct LogValue {
  double log = 0.0;
  /// exp(log) when below 1e300.
  std::optional<double> linear() const;
};

/// B = 8 max(sigma_min^-1, sigma_min^-2 / sqrt 2) rad.
double covering_constant(const ParamDomain& dom);

/// Covering number of single Gaussians in TV norm: (B / eps)^{2d}.
LogValue covering_bound_gauss(const ParamDomain& dom, double eps);

/// Covering number of K-mixtures given the base family's log covering number:
/// (8 C N(tau eps) / ((1 - tau) eps))^K.
LogValue covering_bound_mixture(const std::function<double(double)>& base_log_bound, double C,
                                std::size_t K, double eps, double tau);

/// Closed-form GMM covering bound (2 (B + 1) / eps)^{(2d+1) K}.
LogValue covering_bound_gmm(const ParamDomain& dom, std::size_t K, double eps);

/// Constant D with ||P - Q||_TV <= D * MMD for a Gaussian frequency law N(0, (a/d) I).
LogValue domination_constant(const ParamDomain& dom, double a);

struct SketchSizeBound {
  double value = 0.0;       // right-hand side before rounding
  std::uint64_t m = 0;      // ceil(value)
  double A = 0.0;           // domination constant actually used
  bool uses_domination = false;  // true when A = D, false when A = 2/eta
};

/// Single Gaussian, Gaussian frequencies: m >= 12 A^2 (4d log(C/eta) + log(2/rho)),
/// A = min(D, 2/eta), C = sqrt(24 B).
SketchSizeBound sketch_size_single_gauss(const ParamDomain& dom, double a, double eta, double rho);

/// GMMs, any frequency law: m >= 48 eta^-2 (2K(2d+1) log(C/eta) + log(2/rho)),
/// C = sqrt(48 (B + 1)).
SketchSizeBound sketch_size_gmm(const ParamDomain& dom, std::size_t d, std::size_t K, double eta,
                                double rho);

/// Failure probability implied by m measurements for K-GMMs with A = 2/eta,
/// i.e. rho = 2 N(eta^2/24) exp(-m / (12 A^2)), in log form.
double implied_log_failure_probability(const ParamDomain& dom, std::size_t K, double eta, double m);

}  // namespace sketchmix
