#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

#include "sketchmix/rng.hpp"

namespace sketchmix {

using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row i is the data item x_i.
using Dataset = RowMatrix;

/// Smallest variance any Gaussian atom may carry.
inline constexpr double kVarianceFloor = 1e-15;

/// Diagonal-covariance Gaussian N(mean, diag(variances)).
/// Variances below kVarianceFloor are clamped up on construction.
class GaussianParams {
 public:
  GaussianParams(Vector mean, Vector variances);

  Eigen::Index dim() const noexcept { return mean_.size(); }
  const Vector& mean() const noexcept { return mean_; }
  const Vector& variances() const noexcept { return variances_; }

  friend bool operator==(const GaussianParams&, const GaussianParams&) = default;

 private:
  Vector mean_;
  Vector variances_;
};

/// Weighted collection of Gaussians sharing one dimension. Weights are
/// nonnegative; they sum to one only once `normalized()` has been applied.
struct Mixture {
  std::vector<GaussianParams> components;
  Vector weights;

  Mixture() = default;
  Mixture(std::vector<GaussianParams> comps, Vector w);

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(components.size()); }
  Eigen::Index dim() const;
  bool is_normalized(double tol = 1e-12) const;
  Mixture normalized() const;
};

double gauss_logpdf(const GaussianParams& p, const Vector& x);
double mixture_logpdf(const Mixture& mix, const Vector& x);

/// E[exp(-i w.x)] for x ~ p.
std::complex<double> gauss_charfn(const GaussianParams& p, const Vector& omega);

struct CharFnGrad {
  std::complex<double> value;
  ComplexVector dmean;
  ComplexVector dvar;
};

/// Characteristic function with its partials w.r.t. mean and variances.
CharFnGrad gauss_charfn_grad(const GaussianParams& p, const Vector& omega);

/// KL(p1 || p2) in nats.
double gauss_kl(const GaussianParams& p1, const GaussianParams& p2);

/// n i.i.d. draws; the label and then per-dimension normals, row by row.
Dataset mixture_sample(const Mixture& mix, std::size_t n, Rng& rng);

void require_finite(const Vector& v, const char* what);

}  // namespace sketchmix
