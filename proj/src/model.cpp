#include "sketchmix/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sketchmix/error.hpp"

namespace sketchmix {

namespace {

void require_dim(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" +
                          std::to_string(expected) + " vs " + std::to_string(got) + ")");
  }
}

}  // namespace

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite input");
}

GaussianParams::GaussianParams(Vector mean, Vector variances)
    : mean_(std::move(mean)), variances_(std::move(variances)) {
  if (mean_.size() < 1) throw InvalidArgument("GaussianParams: dimension must be >= 1");
  require_dim(mean_.size(), variances_.size(), "GaussianParams");
  require_finite(mean_, "GaussianParams mean");
  if (variances_.array().isNaN().any()) throw InvalidArgument("GaussianParams: NaN variance");
  variances_ = variances_.cwiseMax(kVarianceFloor);
}

Mixture::Mixture(std::vector<GaussianParams> comps, Vector w)
    : components(std::move(comps)), weights(std::move(w)) {
  if (components.empty()) throw InvalidArgument("Mixture: no components");
  require_dim(static_cast<Eigen::Index>(components.size()), weights.size(), "Mixture weights");
  const Eigen::Index d = components.front().dim();
  for (const auto& c : components) require_dim(d, c.dim(), "Mixture components");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw InvalidArgument("Mixture: weights must be finite and nonnegative");
  }
}

Eigen::Index Mixture::dim() const {
  if (components.empty()) throw InvalidArgument("Mixture: no components");
  return components.front().dim();
}

bool Mixture::is_normalized(double tol) const {
  return !components.empty() && std::abs(weights.sum() - 1.0) <= tol;
}

Mixture Mixture::normalized() const {
  const double total = weights.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("Mixture::normalized: weights sum to zero");
  }
  Mixture out = *this;
  out.weights /= total;
  return out;
}

double gauss_logpdf(const GaussianParams& p, const Vector& x) {
  require_dim(p.dim(), x.size(), "gauss_logpdf");
  require_finite(x, "gauss_logpdf");
  const auto& var = p.variances().array();
  const auto diff = x.array() - p.mean().array();
  return -0.5 * ((2.0 * std::numbers::pi * var).log() + diff.square() / var).sum();
}

double mixture_logpdf(const Mixture& mix, const Vector& x) {
  const auto K = mix.size();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(K));
  double peak = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < K; ++k) {
    const double w = mix.weights[k];
    const double lp = gauss_logpdf(mix.components[static_cast<std::size_t>(k)], x);
    if (w <= 0.0) continue;
    terms.push_back(std::log(w) + lp);
    peak = std::max(peak, terms.back());
  }
  if (terms.empty() || !std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc);
}

std::complex<double> gauss_charfn(const GaussianParams& p, const Vector& omega) {
  require_dim(p.dim(), omega.size(), "gauss_charfn");
  const double phase = omega.dot(p.mean());
  const double amp = std::exp(-0.5 * (p.variances().array() * omega.array().square()).sum());
  return {amp * std::cos(phase), -amp * std::sin(phase)};
}

CharFnGrad gauss_charfn_grad(const GaussianParams& p, const Vector& omega) {
  CharFnGrad g;
  g.value = gauss_charfn(p, omega);
  const std::complex<double> minus_i(0.0, -1.0);
  g.dmean = (minus_i * g.value) * omega.cast<std::complex<double>>();
  g.dvar = (-0.5 * g.value) * omega.array().square().matrix().cast<std::complex<double>>();
  return g;
}

double gauss_kl(const GaussianParams& p1, const GaussianParams& p2) {
  require_dim(p1.dim(), p2.dim(), "gauss_kl");
  const auto& v1 = p1.variances().array();
  const auto& v2 = p2.variances().array();
  const auto dm = p2.mean().array() - p1.mean().array();
  const double d = static_cast<double>(p1.dim());
  return 0.5 * ((v2 / v1).log().sum() + (v1 / v2).sum() - d + (dm.square() / v2).sum());
}

Dataset mixture_sample(const Mixture& mix, std::size_t n, Rng& rng) {
  if (n < 1) throw InvalidArgument("mixture_sample: n must be >= 1");
  const Eigen::Index d = mix.dim();
  std::vector<Vector> stddev;
  stddev.reserve(mix.components.size());
  for (const auto& c : mix.components) stddev.push_back(c.variances().cwiseSqrt());
  const std::span<const double> w(mix.weights.data(), static_cast<std::size_t>(mix.weights.size()));

  Dataset out(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const std::size_t k = mix.components.size() == 1 ? 0 : rng.categorical(w);
    const auto& mu = mix.components[k].mean();
    for (Eigen::Index l = 0; l < d; ++l) out(i, l) = mu[l] + stddev[k][l] * rng.normal();
  }
  return out;
}

}  // namespace sketchmix
