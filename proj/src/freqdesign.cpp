#include "sketchmix/freqdesign.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sketchmix/error.hpp"
#include "sketchmix/sketch.hpp"

namespace sketchmix {

const char* to_string(FreqKind kind) {
  switch (kind) {
    case FreqKind::Gaussian: return "gauss";
    case FreqKind::FoldedGaussianRadius: return "fgr";
    case FreqKind::AdaptedRadius: return "ar";
  }
  return "?";
}

FreqKind parse_freq_kind(const std::string& name) {
  if (name == "gauss" || name == "G") return FreqKind::Gaussian;
  if (name == "fgr" || name == "FGr") return FreqKind::FoldedGaussianRadius;
  if (name == "ar" || name == "Ar") return FreqKind::AdaptedRadius;
  throw InvalidArgument("unknown frequency kind '" + name + "' (expected gauss|fgr|ar)");
}

std::uint64_t frequency_fingerprint(const RowMatrix& freqs) {
  std::uint64_t h = 14695981039346656037ULL;
  for (Eigen::Index i = 0; i < freqs.rows(); ++i) {
    for (Eigen::Index l = 0; l < freqs.cols(); ++l) {
      const auto bits = std::bit_cast<std::uint64_t>(freqs(i, l));
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xFFu;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

FrequencySet::FrequencySet(RowMatrix f, FreqKind k, double s2, std::uint64_t sd)
    : freqs(std::move(f)), kind(k), sigma2_bar(s2), seed(sd) {
  if (freqs.rows() < 1 || freqs.cols() < 1) throw InvalidArgument("FrequencySet: empty");
  if (!freqs.allFinite()) throw InvalidArgument("FrequencySet: non-finite frequency");
  fingerprint = frequency_fingerprint(freqs);
}

// ---------------------------------------------------------------------------
// Adapted radius law

double adapted_radius_density_unnormalized(double r) {
  const double r2 = r * r;
  return std::sqrt(r2 + 0.25 * r2 * r2) * std::exp(-0.5 * r2);
}

namespace {

double simpson_cell(double a, double b) {
  return (b - a) / 6.0 *
         (adapted_radius_density_unnormalized(a) + 4.0 * adapted_radius_density_unnormalized(0.5 * (a + b)) +
          adapted_radius_density_unnormalized(b));
}

}  // namespace

RadiusTable adapted_radius_cdf_build(std::size_t grid_points, double r_max) {
  if (grid_points < 100) throw InvalidArgument("adapted_radius_cdf_build: need >= 100 grid points");
  if (!(r_max >= 8.0)) throw InvalidArgument("adapted_radius_cdf_build: r_max must be >= 8");

  const std::size_t G = grid_points;
  RadiusTable t;
  t.grid.resize(G + 1);
  std::vector<double> cum(G + 1, 0.0);
  for (std::size_t i = 0; i <= G; ++i) t.grid[i] = r_max * static_cast<double>(i) / static_cast<double>(G);
  for (std::size_t i = 0; i < G; ++i) cum[i + 1] = cum[i] + simpson_cell(t.grid[i], t.grid[i + 1]);

  // Tail past r_max, integrated out to where the density is below 1e-300.
  double tail = 0.0;
  const double h = t.grid[1] - t.grid[0];
  for (double a = r_max; a < r_max + 40.0; a += h) tail += simpson_cell(a, a + h);

  const double total = cum[G] + tail;
  t.norm_const = 1.0 / total;
  t.cdf.resize(G + 1);
  for (std::size_t i = 0; i < G; ++i) t.cdf[i] = cum[i] / total;
  t.cdf[G] = 1.0;
  return t;
}

double RadiusTable::inverse_cdf(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw InvalidArgument("inverse_cdf: u outside [0, 1]");
  if (u >= 1.0) return grid.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto i = static_cast<std::size_t>(std::distance(cdf.begin(), it)) - 1;
  const double span = cdf[i + 1] - cdf[i];
  const double frac = span > 0.0 ? (u - cdf[i]) / span : 0.0;
  return grid[i] + frac * (grid[i + 1] - grid[i]);
}

double RadiusTable::cdf_at(double r) const {
  if (r <= 0.0) return 0.0;
  if (r >= grid.back()) return 1.0;
  auto it = std::upper_bound(grid.begin(), grid.end(), r);
  const auto i = static_cast<std::size_t>(std::distance(grid.begin(), it)) - 1;
  const double frac = (r - grid[i]) / (grid[i + 1] - grid[i]);
  return cdf[i] + frac * (cdf[i + 1] - cdf[i]);
}

const RadiusTable& default_radius_table() {
  static const RadiusTable table = adapted_radius_cdf_build(kRadiusGridPoints, kRadiusMax);
  return table;
}

double sample_radius(FreqKind kind, const RadiusTable& table, Rng& rng) {
  switch (kind) {
    case FreqKind::FoldedGaussianRadius: return std::abs(rng.normal());
    case FreqKind::AdaptedRadius: return table.inverse_cdf(rng.uniform());
    case FreqKind::Gaussian: break;
  }
  throw InvalidArgument("sample_radius: the Gaussian kind has no radial decomposition");
}

// ---------------------------------------------------------------------------
// DrawFreq

TracedFrequencies draw_freq_traced(const std::vector<Vector>& variances, const Vector& weights,
                                   std::size_t m, FreqKind kind, Rng& rng) {
  if (m < 1) throw InvalidArgument("draw_freq: m must be >= 1");
  if (variances.empty() || static_cast<Eigen::Index>(variances.size()) != weights.size()) {
    throw InvalidArgument("draw_freq: need one variance vector per weight");
  }
  const Eigen::Index d = variances.front().size();
  if (d < 1) throw InvalidArgument("draw_freq: dimension must be >= 1");
  std::vector<Vector> inv_std;
  for (const auto& v : variances) {
    if (v.size() != d) throw InvalidArgument("draw_freq: inconsistent dimensions");
    if (!v.allFinite() || (v.array() <= 0.0).any()) {
      throw InvalidArgument("draw_freq: variances must be strictly positive");
    }
    inv_std.push_back(v.cwiseSqrt().cwiseInverse());
  }
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-6) {
    throw InvalidArgument("draw_freq: weights must be nonnegative and sum to 1");
  }
  const std::span<const double> w(weights.data(), static_cast<std::size_t>(weights.size()));
  const RadiusTable& table = default_radius_table();

  TracedFrequencies out;
  RowMatrix freqs(static_cast<Eigen::Index>(m), d);
  out.labels.resize(m);
  out.radii.assign(m, std::numeric_limits<double>::quiet_NaN());
  Vector dir(d);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t k = variances.size() == 1 ? 0 : rng.categorical(w);
    out.labels[j] = k;
    const auto row = static_cast<Eigen::Index>(j);
    if (kind == FreqKind::Gaussian) {
      for (Eigen::Index l = 0; l < d; ++l) freqs(row, l) = rng.normal() * inv_std[k][l];
      continue;
    }
    double norm = 0.0;
    do {
      for (Eigen::Index l = 0; l < d; ++l) dir[l] = rng.normal();
      norm = dir.norm();
    } while (norm == 0.0);
    dir /= norm;
    const double radius = sample_radius(kind, table, rng);
    out.radii[j] = radius;
    for (Eigen::Index l = 0; l < d; ++l) freqs(row, l) = radius * inv_std[k][l] * dir[l];
  }
  out.set = FrequencySet(std::move(freqs), kind, 1.0, rng.seed());
  // A single-component draw records its (mean) variance as the design scale.
  double s2 = 0.0;
  for (std::size_t k = 0; k < variances.size(); ++k) s2 += weights[static_cast<Eigen::Index>(k)] * variances[k].mean();
  out.set.sigma2_bar = s2;
  return out;
}

FrequencySet draw_freq(const std::vector<Vector>& variances, const Vector& weights, std::size_t m,
                       FreqKind kind, Rng& rng) {
  return draw_freq_traced(variances, weights, m, kind, rng).set;
}

// ---------------------------------------------------------------------------
// EstimMeanSigma

namespace {

double fit_objective(const std::vector<double>& r2, const std::vector<double>& peaks, double s) {
  double f = 0.0;
  for (std::size_t q = 0; q < peaks.size(); ++q) {
    const double e = peaks[q] - std::exp(-0.5 * r2[q] * s);
    f += e * e;
  }
  return f;
}

}  // namespace

double fit_mean_variance(const std::vector<double>& radii, const std::vector<double>& peaks,
                         double* residual) {
  if (radii.size() != peaks.size() || peaks.empty()) {
    throw InvalidArgument("fit_mean_variance: radii and peaks must be nonempty and equal length");
  }
  std::vector<double> r2(radii.size());
  double mean_r2 = 0.0;
  for (std::size_t q = 0; q < radii.size(); ++q) {
    r2[q] = radii[q] * radii[q];
    mean_r2 += r2[q];
  }
  mean_r2 /= static_cast<double>(r2.size());
  if (!(mean_r2 > 0.0)) throw NumericError("fit_mean_variance: all radii are zero");

  // Coarse scan over log(s), then golden-section refinement around the best
  // grid point. The scan spans 26 decades around the natural scale 1/mean(r^2).
  const double center = -std::log(mean_r2);
  constexpr int kGrid = 521;
  constexpr double kHalfWidth = 30.0;
  auto log_s_at = [&](int i) { return center - kHalfWidth + 2.0 * kHalfWidth * i / (kGrid - 1); };
  auto f_log = [&](double t) { return fit_objective(r2, peaks, std::exp(t)); };

  int best = 0;
  double best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double f = f_log(log_s_at(i));
    if (f < best_f) {
      best_f = f;
      best = i;
    }
  }
  double lo = log_s_at(std::max(0, best - 1));
  double hi = log_s_at(std::min(kGrid - 1, best + 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f_log(x1), f2 = f_log(x2);
  while (hi - lo > 1e-12) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f_log(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f_log(x2);
    }
  }
  double t = 0.5 * (lo + hi);
  if (best_f < f_log(t)) t = log_s_at(best);
  const double s = std::exp(t);
  if (residual) *residual = std::sqrt(fit_objective(r2, peaks, s));
  return s;
}

MeanSigmaEstimate estim_mean_sigma(const Dataset& data, const MeanSigmaOptions& opts, Rng& rng) {
  if (data.rows() < 1 || data.cols() < 1) throw InvalidArgument("estim_mean_sigma: empty data");
  if (opts.blocks < 1 || opts.m0 < opts.blocks) {
    throw InvalidArgument("estim_mean_sigma: need m0 >= blocks >= 1");
  }
  if (opts.iterations < 1) throw InvalidArgument("estim_mean_sigma: need at least one round");
  const auto n0 = static_cast<Eigen::Index>(std::min<std::size_t>(
      std::max<std::size_t>(opts.n0, 1), static_cast<std::size_t>(data.rows())));
  const Eigen::Index d = data.cols();
  const auto head = data.topRows(n0);
  const std::size_t block = opts.m0 / opts.blocks;

  MeanSigmaEstimate est;
  for (std::size_t round = 0; round < opts.iterations; ++round) {
    Rng round_rng = rng.split(round);
    const FrequencySet fs = draw_freq({Vector::Constant(d, est.sigma2_bar)}, Vector::Ones(1), opts.m0,
                                      FreqKind::AdaptedRadius, round_rng);
    std::vector<double> radius(opts.m0);
    for (std::size_t j = 0; j < opts.m0; ++j) radius[j] = fs.freqs.row(static_cast<Eigen::Index>(j)).norm();
    std::vector<std::size_t> order(opts.m0);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return radius[a] < radius[b]; });

    RowMatrix sorted(static_cast<Eigen::Index>(opts.m0), d);
    for (std::size_t j = 0; j < opts.m0; ++j) sorted.row(static_cast<Eigen::Index>(j)) = fs.freqs.row(static_cast<Eigen::Index>(order[j]));
    ComplexVector sums = ComplexVector::Zero(sorted.rows());
    accumulate_charfn(head, sorted, sums);
    sums /= static_cast<double>(n0);

    std::vector<double> peak_radius, peak_value;
    for (std::size_t q = 0; q < opts.blocks; ++q) {
      std::size_t arg = q * block;
      double best = -1.0;
      for (std::size_t j = q * block; j < (q + 1) * block; ++j) {
        const double mag = std::abs(sums[static_cast<Eigen::Index>(j)]);
        if (mag > best) {
          best = mag;
          arg = j;
        }
      }
      peak_radius.push_back(radius[order[arg]]);
      peak_value.push_back(std::clamp(best, std::numeric_limits<double>::min(), 1.0));
    }
    const double s = fit_mean_variance(peak_radius, peak_value, &est.fit_residual);
    est.sigma2_bar = std::max(s, kMeanSigmaFloor);
  }
  return est;
}

FrequencySet design_frequencies(const Dataset& data, std::size_t m, FreqKind kind,
                                const MeanSigmaOptions& opts, Rng& rng) {
  if (m < 1) throw InvalidArgument("design_frequencies: m must be >= 1");
  Rng estim_rng = rng.split(0);
  const MeanSigmaEstimate est = estim_mean_sigma(data, opts, estim_rng);
  Rng draw_rng = rng.split(1);
  FrequencySet fs =
      draw_freq({Vector::Constant(data.cols(), est.sigma2_bar)}, Vector::Ones(1), m, kind, draw_rng);
  fs.sigma2_bar = est.sigma2_bar;
  fs.seed = rng.seed();
  return fs;
}

}  // namespace sketchmix
