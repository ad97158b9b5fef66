#include "sketchmix/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sketchmix/error.hpp"
#include "sketchmix/nnls.hpp"

namespace sketchmix {

namespace {

constexpr double kDegenerateAtomNorm = 1e-150;

// Unnormalized atom sketches for the columns of `means` / `vars` (d x K).
Eigen::MatrixXcd atoms_from_columns(const FrequencySet& fs, const Eigen::MatrixXd& means,
                                    const Eigen::MatrixXd& vars, Eigen::MatrixXd* amp_out = nullptr) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(fs.m()));
  const Eigen::MatrixXd phase = fs.freqs * means;
  const Eigen::MatrixXd amp =
      scale * (-0.5 * (fs.freqs.array().square().matrix() * vars)).array().exp().matrix();
  Eigen::MatrixXcd atoms(phase.rows(), phase.cols());
  for (Eigen::Index k = 0; k < phase.cols(); ++k) {
    for (Eigen::Index j = 0; j < phase.rows(); ++j) {
      atoms(j, k) = {amp(j, k) * std::cos(phase(j, k)), -amp(j, k) * std::sin(phase(j, k))};
    }
  }
  if (amp_out) *amp_out = amp;
  return atoms;
}

Vector theta_of(const GaussianParams& p) {
  Vector t(2 * p.dim());
  t << p.mean(), p.variances();
  return t;
}

GaussianParams params_of(const Eigen::Ref<const Vector>& theta, Eigen::Index d) {
  return GaussianParams(theta.head(d), theta.segment(d, d));
}

Vector theta_lower(Eigen::Index d) {
  Vector lo(2 * d);
  lo.head(d).setConstant(-std::numeric_limits<double>::infinity());
  lo.tail(d).setConstant(kVarianceFloor);
  return lo;
}

}  // namespace

const char* to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::CLOMP: return "clomp";
    case Algorithm::CLOMPR: return "clompr";
    case Algorithm::Split: return "split";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "clomp") return Algorithm::CLOMP;
  if (name == "clompr") return Algorithm::CLOMPR;
  if (name == "split") return Algorithm::Split;
  throw InvalidArgument("unknown algorithm '" + name + "' (expected clomp|clompr|split)");
}

std::size_t RecoveryConfig::iterations() const {
  switch (algorithm) {
    case Algorithm::CLOMP: return K;
    case Algorithm::CLOMPR: return 2 * K;
    case Algorithm::Split: {
      std::size_t rounds = 0;
      while ((std::size_t{1} << rounds) < K) ++rounds;
      return rounds;
    }
  }
  return K;
}

Eigen::MatrixXcd atom_matrix(const std::vector<GaussianParams>& support, const FrequencySet& fs) {
  const Eigen::Index d = fs.dim();
  Eigen::MatrixXd means(d, static_cast<Eigen::Index>(support.size()));
  Eigen::MatrixXd vars(d, static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k].dim() != d) throw InvalidArgument("atom dimension does not match frequencies");
    means.col(static_cast<Eigen::Index>(k)) = support[k].mean();
    vars.col(static_cast<Eigen::Index>(k)) = support[k].variances();
  }
  return atoms_from_columns(fs, means, vars);
}

ComplexVector compute_residual(const ComplexVector& z, const std::vector<GaussianParams>& support,
                               const Vector& weights, const FrequencySet& fs) {
  if (support.empty()) return z;
  return z - atom_matrix(support, fs) * weights.cast<std::complex<double>>();
}

// ---------------------------------------------------------------------------
// Step 1

double atom_correlation_objective(const ComplexVector& residual, const FrequencySet& fs,
                                  const Vector& theta, Vector& grad) {
  const Eigen::Index d = fs.dim();
  Eigen::MatrixXd amp;
  const Eigen::MatrixXcd atom =
      atoms_from_columns(fs, theta.head(d), theta.segment(d, d).cwiseMax(kVarianceFloor), &amp);
  const double norm2 = amp.squaredNorm();
  const double norm = std::sqrt(norm2);
  grad.setZero(2 * d);
  if (!(norm >= kDegenerateAtomNorm)) return std::numeric_limits<double>::infinity();

  const ComplexVector c = atom.col(0).cwiseProduct(residual.conjugate());
  const double corr = c.real().sum();
  const auto sq = fs.freqs.array().square().matrix();
  const Vector dcorr_mean = fs.freqs.transpose() * c.imag();
  const Vector dcorr_var = -0.5 * (sq.transpose() * c.real());
  const Vector dnorm_var = -(sq.transpose() * amp.col(0).cwiseAbs2()) / (2.0 * norm);

  grad.head(d) = -dcorr_mean / norm;
  grad.tail(d) = -(dcorr_var / norm - corr * dnorm_var / norm2);
  return -corr / norm;
}

GaussianParams find_atom(const ComplexVector& residual, const FrequencySet& fs, double sigma2_bar,
                         std::size_t restarts, Rng& rng, const BoxMinimizeOptions& opts) {
  if (residual.size() != fs.m()) throw InvalidArgument("find_atom: residual length differs from m");
  if (!(sigma2_bar > 0.0)) throw InvalidArgument("find_atom: sigma2_bar must be positive");
  const Eigen::Index d = fs.dim();
  const Vector lower = theta_lower(d);
  const Objective f = [&](const Vector& x, Vector& g) {
    return atom_correlation_objective(residual, fs, x, g);
  };

  double best_value = std::numeric_limits<double>::infinity();
  Vector best;
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    Vector init(2 * d);
    init.head(d).setZero();
    init.tail(d).setConstant(rng.uniform(0.5 * sigma2_bar, 1.5 * sigma2_bar));
    try {
      const BoxMinimizeResult res = box_minimize(f, init, lower, opts);
      if (res.value < best_value || best.size() == 0) {
        best_value = res.value;
        best = res.x;
      }
    } catch (const NumericError&) {
      // this initialization sits on a degenerate atom
    }
  }
  if (best.size() == 0 || !std::isfinite(best_value)) throw NumericError("degenerate atom");
  return params_of(best, d);
}

// ---------------------------------------------------------------------------
// Steps 3 and 4

SupportState hard_threshold(const SupportState& state, const ComplexVector& z, std::size_t K,
                            const FrequencySet& fs) {
  const std::size_t size = state.support.size();
  if (size <= K) throw InvalidArgument("hard_threshold: support is not larger than K");
  Eigen::MatrixXcd atoms = atom_matrix(state.support, fs);
  Vector norms(atoms.cols());
  for (Eigen::Index k = 0; k < atoms.cols(); ++k) {
    norms[k] = atoms.col(k).norm();
    if (norms[k] > 0.0) atoms.col(k) /= norms[k];
  }
  const Vector beta = nnls(atoms, z);

  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return beta[static_cast<Eigen::Index>(a)] > beta[static_cast<Eigen::Index>(b)];
  });
  std::vector<std::size_t> keep(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(K));
  std::sort(keep.begin(), keep.end());

  SupportState out;
  out.weights.resize(static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < K; ++i) {
    const auto k = static_cast<Eigen::Index>(keep[i]);
    out.support.push_back(state.support[keep[i]]);
    out.weights[static_cast<Eigen::Index>(i)] = norms[k] > 0.0 ? beta[k] / norms[k] : 0.0;
  }
  out.residual = compute_residual(z, out.support, out.weights, fs);
  return out;
}

SupportState project_weights(const SupportState& state, const ComplexVector& z,
                             const FrequencySet& fs) {
  SupportState out = state;
  out.weights = nnls(atom_matrix(state.support, fs), z);
  out.residual = compute_residual(z, out.support, out.weights, fs);
  return out;
}

// ---------------------------------------------------------------------------
// Step 5

double joint_objective(const ComplexVector& z, const FrequencySet& fs, const Vector& packed,
                       std::size_t K, Vector& grad) {
  const Eigen::Index d = fs.dim();
  const auto Ki = static_cast<Eigen::Index>(K);
  Eigen::MatrixXd means(d, Ki), vars(d, Ki);
  for (Eigen::Index k = 0; k < Ki; ++k) {
    means.col(k) = packed.segment(2 * d * k, d);
    vars.col(k) = packed.segment(2 * d * k + d, d).cwiseMax(kVarianceFloor);
  }
  const Vector alpha = packed.tail(Ki);
  const Eigen::MatrixXcd atoms = atoms_from_columns(fs, means, vars);
  const ComplexVector r = z - atoms * alpha.cast<std::complex<double>>();

  // C(j, k) = A(j, k) * conj(r_j)
  const Eigen::MatrixXcd C = atoms.array().colwise() * r.conjugate().array();
  const Eigen::MatrixXd gmean = fs.freqs.transpose() * C.imag();
  const Eigen::MatrixXd gvar = fs.freqs.array().square().matrix().transpose() * C.real();
  grad.resize(packed.size());
  for (Eigen::Index k = 0; k < Ki; ++k) {
    grad.segment(2 * d * k, d) = -2.0 * alpha[k] * gmean.col(k);
    grad.segment(2 * d * k + d, d) = alpha[k] * gvar.col(k);
  }
  grad.tail(Ki) = -2.0 * C.real().colwise().sum().transpose();
  return r.squaredNorm();
}

SupportState global_adjust(const SupportState& state, const ComplexVector& z,
                           const FrequencySet& fs, const BoxMinimizeOptions& opts) {
  const std::size_t K = state.support.size();
  if (K == 0) return state;
  const Eigen::Index d = fs.dim();
  const auto Ki = static_cast<Eigen::Index>(K);
  Vector init(2 * d * Ki + Ki), lower(2 * d * Ki + Ki);
  const Vector theta_lo = theta_lower(d);
  for (Eigen::Index k = 0; k < Ki; ++k) {
    init.segment(2 * d * k, 2 * d) = theta_of(state.support[static_cast<std::size_t>(k)]);
    lower.segment(2 * d * k, 2 * d) = theta_lo;
  }
  init.tail(Ki) = state.weights;
  lower.tail(Ki).setZero();

  const Objective f = [&](const Vector& x, Vector& g) { return joint_objective(z, fs, x, K, g); };
  const BoxMinimizeResult res = box_minimize(f, init, lower, opts);

  SupportState out;
  for (Eigen::Index k = 0; k < Ki; ++k) out.support.push_back(params_of(res.x.segment(2 * d * k, 2 * d), d));
  out.weights = res.x.tail(Ki);
  out.residual = compute_residual(z, out.support, out.weights, fs);
  return out;
}

std::vector<GaussianParams> split_support(const std::vector<GaussianParams>& support) {
  if (support.empty()) throw InvalidArgument("split_support: empty support");
  std::vector<GaussianParams> out;
  out.reserve(2 * support.size());
  for (const auto& p : support) {
    Eigen::Index axis = 0;
    p.variances().maxCoeff(&axis);  // first maximal index
    const double shift = std::sqrt(p.variances()[axis]);
    Vector lo = p.mean(), hi = p.mean();
    lo[axis] -= shift;
    hi[axis] += shift;
    out.emplace_back(std::move(lo), p.variances());
    out.emplace_back(std::move(hi), p.variances());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Drivers

namespace {

void require_ready(const Sketch& z, const FrequencySet& fs, const RecoveryConfig& cfg) {
  check_pairing(z, fs);
  if (cfg.K < 1) throw InvalidArgument("recovery: K must be >= 1");
  if (!(cfg.grad_tol > 0.0)) throw InvalidArgument("recovery: grad_tol must be positive");
}

// Steps 4 and 5 plus bookkeeping shared by both drivers.
SupportState project_and_adjust(SupportState state, const ComplexVector& z, const FrequencySet& fs,
                                const RecoveryConfig& cfg, RecoveryTrace* trace) {
  const double before = state.residual.norm();
  state = project_weights(state, z, fs);
  const double after_projection = state.residual.norm();
  state = global_adjust(state, z, fs, cfg.optimizer());
  if (trace) trace->residual_norms.push_back({before, after_projection, state.residual.norm()});
  return state;
}

Mixture finish(const SupportState& state) {
  return Mixture(state.support, state.weights).normalized();
}

SupportState initial_state(const ComplexVector& z) {
  SupportState s;
  s.weights.resize(0);
  s.residual = z;
  return s;
}

void append_atom(SupportState& state, GaussianParams atom) {
  state.support.push_back(std::move(atom));
  state.weights.conservativeResize(state.weights.size() + 1);
  state.weights[state.weights.size() - 1] = 0.0;
}

}  // namespace

Mixture cl_omp(const Sketch& z, const FrequencySet& fs, const RecoveryConfig& cfg,
               RecoveryTrace* trace) {
  require_ready(z, fs, cfg);
  if (cfg.algorithm == Algorithm::Split) throw InvalidArgument("cl_omp: use cl_split for Split");
  const Rng master(cfg.seed);
  SupportState state = initial_state(z.values);
  const std::size_t T = cfg.iterations();
  for (std::size_t t = 0; t < T; ++t) {
    Rng step_rng = master.split(t);
    append_atom(state, find_atom(state.residual, fs, fs.sigma2_bar, cfg.step1_restarts, step_rng,
                                 cfg.optimizer()));
    if (trace) ++trace->step1_calls;
    if (state.support.size() > cfg.K) {
      state = hard_threshold(state, z.values, cfg.K, fs);
      if (trace) ++trace->threshold_calls;
    }
    state = project_and_adjust(std::move(state), z.values, fs, cfg, trace);
  }
  return finish(state);
}

Mixture cl_split(const Sketch& z, const FrequencySet& fs, const RecoveryConfig& cfg,
                 RecoveryTrace* trace) {
  require_ready(z, fs, cfg);
  const Rng master(cfg.seed);
  Rng init_rng = master.split(0);
  SupportState state = initial_state(z.values);
  append_atom(state, find_atom(z.values, fs, fs.sigma2_bar, cfg.step1_restarts, init_rng,
                               cfg.optimizer()));
  if (trace) ++trace->step1_calls;
  state = project_and_adjust(std::move(state), z.values, fs, cfg, trace);

  RecoveryConfig split_cfg = cfg;
  split_cfg.algorithm = Algorithm::Split;
  const std::size_t rounds = split_cfg.iterations();
  for (std::size_t t = 0; t < rounds; ++t) {
    SupportState next;
    next.support = split_support(state.support);
    next.weights.resize(static_cast<Eigen::Index>(next.support.size()));
    for (Eigen::Index k = 0; k < state.weights.size(); ++k) {
      next.weights[2 * k] = next.weights[2 * k + 1] = 0.5 * state.weights[k];
    }
    next.residual = compute_residual(z.values, next.support, next.weights, fs);
    state = std::move(next);
    if (state.support.size() > cfg.K) {
      state = hard_threshold(state, z.values, cfg.K, fs);
      if (trace) ++trace->threshold_calls;
    }
    state = project_and_adjust(std::move(state), z.values, fs, cfg, trace);
  }
  return finish(state);
}

Mixture recover(const Sketch& z, const FrequencySet& fs, const RecoveryConfig& cfg,
                RecoveryTrace* trace) {
  return cfg.algorithm == Algorithm::Split ? cl_split(z, fs, cfg, trace) : cl_omp(z, fs, cfg, trace);
}

}  // namespace sketchmix
