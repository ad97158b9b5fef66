#include "sketchmix/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "sketchmix/error.hpp"

namespace sketchmix {

void ParamDomain::validate() const {
  if (d < 1) throw InvalidArgument("ParamDomain: d must be >= 1");
  if (!(sigma2_min > 0.0) || !(sigma2_min <= sigma2_max)) {
    throw InvalidArgument("ParamDomain: need 0 < sigma2_min <= sigma2_max");
  }
  if (!(mean_bound >= 0.0)) throw InvalidArgument("ParamDomain: mean bound must be >= 0");
  if (!(radius > 0.0)) throw InvalidArgument("ParamDomain: radius must be > 0");
}

std::optional<double> LogValue::linear() const {
  if (log < std::log(1e300)) return std::exp(log);
  return std::nullopt;
}

namespace {

// max(sigma_min^-1, sigma_min^-2 / sqrt 2), in log form.
double log_sigma_prefactor(const ParamDomain& dom) {
  const double log_sigma = 0.5 * std::log(dom.sigma2_min);
  return std::max(-log_sigma, -2.0 * log_sigma - 0.5 * std::log(2.0));
}

}  // namespace

double covering_constant(const ParamDomain& dom) {
  dom.validate();
  return 8.0 * std::exp(log_sigma_prefactor(dom)) * dom.radius;
}

LogValue covering_bound_gauss(const ParamDomain& dom, double eps) {
  dom.validate();
  if (!(eps > 0.0)) throw InvalidArgument("covering_bound_gauss: eps must be > 0");
  const double log_B = std::log(8.0) + log_sigma_prefactor(dom) + std::log(dom.radius);
  return {2.0 * static_cast<double>(dom.d) * (log_B - std::log(eps))};
}

LogValue covering_bound_mixture(const std::function<double(double)>& base_log_bound, double C,
                                std::size_t K, double eps, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("covering_bound_mixture: tau must lie in (0, 1)");
  if (!(C >= 1.0)) throw InvalidArgument("covering_bound_mixture: C must be >= 1");
  if (!(eps > 0.0)) throw InvalidArgument("covering_bound_mixture: eps must be > 0");
  const double per = std::log(8.0 * C) + base_log_bound(tau * eps) - std::log((1.0 - tau) * eps);
  return {static_cast<double>(K) * per};
}

LogValue covering_bound_gmm(const ParamDomain& dom, std::size_t K, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("covering_bound_gmm: eps must be > 0");
  const double B = covering_constant(dom);
  const double exponent = static_cast<double>((2 * dom.d + 1) * K);
  return {exponent * (std::log(2.0 * (B + 1.0)) - std::log(eps))};
}

LogValue domination_constant(const ParamDomain& dom, double a) {
  dom.validate();
  if (!(a > 0.0)) throw InvalidArgument("domination_constant: a must be > 0");
  const double d = static_cast<double>(dom.d);
  const double D1 = dom.sigma2_max * a * (1.0 + 2.0 * dom.mean_bound * dom.mean_bound / d);
  // log(1 - e^{-D1}) without cancellation
  const double log_one_minus = std::log(-std::expm1(-D1));
  const double log_inner = std::log(2.0 * d) + std::log(D1) + 3.0 * a * dom.sigma2_max -
                           std::log(a) - log_one_minus;
  return {log_sigma_prefactor(dom) + 0.5 * log_inner};
}

namespace {

void check_eta_rho(double eta, double rho) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("sketch size: eta must lie in (0, 1]");
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("sketch size: rho must lie in (0, 1)");
}

SketchSizeBound rounded(double value, double A, bool uses_d) {
  SketchSizeBound b;
  b.value = value;
  b.A = A;
  b.uses_domination = uses_d;
  b.m = value <= 0.0 ? 0 : static_cast<std::uint64_t>(std::ceil(value));
  return b;
}

}  // namespace

SketchSizeBound sketch_size_single_gauss(const ParamDomain& dom, double a, double eta, double rho) {
  check_eta_rho(eta, rho);
  const double log_D = domination_constant(dom, a).log;
  const double crude = 2.0 / eta;
  const bool uses_d = log_D < std::log(crude);
  const double A = uses_d ? std::exp(log_D) : crude;
  const double C = std::sqrt(24.0 * covering_constant(dom));
  const double d = static_cast<double>(dom.d);
  const double value = 12.0 * A * A * (4.0 * d * std::log(C / eta) + std::log(2.0 / rho));
  return rounded(value, A, uses_d);
}

SketchSizeBound sketch_size_gmm(const ParamDomain& dom, std::size_t d, std::size_t K, double eta,
                                double rho) {
  check_eta_rho(eta, rho);
  if (K < 1 || d < 1) throw InvalidArgument("sketch_size_gmm: d and K must be >= 1");
  const double C = std::sqrt(48.0 * (covering_constant(dom) + 1.0));
  const double params = 2.0 * static_cast<double>(K) * (2.0 * static_cast<double>(d) + 1.0);
  const double value = 48.0 / (eta * eta) * (params * std::log(C / eta) + std::log(2.0 / rho));
  return rounded(value, 2.0 / eta, false);
}

double implied_log_failure_probability(const ParamDomain& dom, std::size_t K, double eta, double m) {
  const double A = 2.0 / eta;
  const double log_N = covering_bound_gmm(dom, K, eta * eta / 24.0).log;
  return std::log(2.0) + log_N - m / (12.0 * A * A);
}

}  // namespace sketchmix
