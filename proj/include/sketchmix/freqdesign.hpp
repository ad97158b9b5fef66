#pragma once

#include <cstdint>
#include <vector>

#include "sketchmix/model.hpp"
#include "sketchmix/rng.hpp"

namespace sketchmix {

/// Frequency law family; the numeric values are the on-disk kind byte.
enum class FreqKind : std::uint8_t {
  Gaussian = 0,
  FoldedGaussianRadius = 1,
  AdaptedRadius = 2,
};

const char* to_string(FreqKind kind);
FreqKind parse_freq_kind(const std::string& name);  // "gauss" | "fgr" | "ar"

/// FNV-1a (64-bit) over the little-endian bytes of `freqs`, row-major.
std::uint64_t frequency_fingerprint(const RowMatrix& freqs);

/// m sampling frequencies (rows) plus how they were designed.
struct FrequencySet {
  RowMatrix freqs;
  FreqKind kind = FreqKind::AdaptedRadius;
  double sigma2_bar = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t fingerprint = 0;

  FrequencySet() = default;
  FrequencySet(RowMatrix f, FreqKind k, double s2, std::uint64_t sd);

  Eigen::Index m() const noexcept { return freqs.rows(); }
  Eigen::Index dim() const noexcept { return freqs.cols(); }
};

/// Tabulated CDF of the adapted radius density
/// p(r) = C (r^2 + r^4/4)^{1/2} exp(-r^2/2).
struct RadiusTable {
  std::vector<double> grid;  // r_0 = 0 < ... < r_G = r_max
  std::vector<double> cdf;   // cdf[0] = 0, cdf[G] = 1
  double norm_const = 0.0;   // C

  double inverse_cdf(double u) const;
  double cdf_at(double r) const;
};

inline constexpr std::size_t kRadiusGridPoints = 10000;
inline constexpr double kRadiusMax = 10.0;

double adapted_radius_density_unnormalized(double r);

/// Composite Simpson tabulation on [0, r_max] with `grid_points` cells; the
/// mass beyond r_max goes into the last cell.
RadiusTable adapted_radius_cdf_build(std::size_t grid_points, double r_max);

/// Shared table built once with the default grid.
const RadiusTable& default_radius_table();

double sample_radius(FreqKind kind, const RadiusTable& table, Rng& rng);

/// Frequencies for a diagonal GMM with known variances and weights.
FrequencySet draw_freq(const std::vector<Vector>& variances, const Vector& weights,
                       std::size_t m, FreqKind kind, Rng& rng);

/// Same draw as draw_freq, also reporting the label and radius of every row
/// (radius is NaN for the Gaussian kind).
struct TracedFrequencies {
  FrequencySet set;
  std::vector<std::size_t> labels;
  std::vector<double> radii;
};
TracedFrequencies draw_freq_traced(const std::vector<Vector>& variances, const Vector& weights,
                                   std::size_t m, FreqKind kind, Rng& rng);

struct MeanSigmaOptions {
  std::size_t n0 = 5000;  // clipped to n
  std::size_t m0 = 500;
  std::size_t blocks = 30;
  std::size_t iterations = 5;
};

struct MeanSigmaEstimate {
  double sigma2_bar = 1.0;
  double fit_residual = 0.0;  // of the last round's regression
};

/// Least-squares fit of exp(-r^2 s / 2) to `peaks` over s > 0.
/// Returns the minimizer; peaks are expected in (0, 1].
double fit_mean_variance(const std::vector<double>& radii, const std::vector<double>& peaks,
                         double* residual = nullptr);

inline constexpr double kMeanSigmaFloor = 1e-6;

MeanSigmaEstimate estim_mean_sigma(const Dataset& data, const MeanSigmaOptions& opts, Rng& rng);

/// Mean variance estimate followed by an isotropic draw of m frequencies.
FrequencySet design_frequencies(const Dataset& data, std::size_t m, FreqKind kind,
                                const MeanSigmaOptions& opts, Rng& rng);

}  // namespace sketchmix
