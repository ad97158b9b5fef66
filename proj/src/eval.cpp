#include "sketchmix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sketchmix/error.hpp"
#include "sketchmix/parallel.hpp"
#include "sketchmix/sketch.hpp"

namespace sketchmix {

SyntheticProblem gen_synthetic(std::size_t d, std::size_t K, Rng& rng, WeightMode weights) {
  if (d < 1 || K < 1) throw InvalidArgument("gen_synthetic: d and K must be >= 1");
  const double sigma_mu = std::pow(static_cast<double>(K), 1.0 / static_cast<double>(d));
  const auto di = static_cast<Eigen::Index>(d);
  std::vector<GaussianParams> comps;
  comps.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    Vector var(di), mean(di);
    for (Eigen::Index l = 0; l < di; ++l) var[l] = rng.uniform(0.25, 1.75);
    for (Eigen::Index l = 0; l < di; ++l) mean[l] = sigma_mu * rng.normal();
    comps.emplace_back(std::move(mean), std::move(var));
  }
  Vector w(static_cast<Eigen::Index>(K));
  if (weights == WeightMode::Uniform) {
    w.setConstant(1.0 / static_cast<double>(K));
  } else {
    for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = -std::log1p(-rng.uniform());
    w /= w.sum();
  }
  return {Mixture(std::move(comps), std::move(w)), d, K, rng.seed()};
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMcChunk = 65536;

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t clamps = 0;
};

McEstimate finish_mean(const Moments& acc, std::size_t n) {
  McEstimate e;
  const double nn = static_cast<double>(n);
  e.value = acc.sum / nn;
  const double var = std::max(0.0, acc.sum_sq / nn - e.value * e.value);
  e.stderr_ = n > 1 ? std::sqrt(var * nn / (nn - 1.0) / nn) : 0.0;
  e.clamp_count = acc.clamps;
  return e;
}

}  // namespace

McEstimate kl_sym_mc(const Mixture& truth, const Mixture& est, std::size_t n_mc, Rng& rng,
                     unsigned threads) {
  if (truth.dim() != est.dim()) throw InvalidArgument("kl_sym_mc: dimension mismatch");
  if (n_mc < 1) throw InvalidArgument("kl_sym_mc: need at least one sample");
  const Mixture p = truth.normalized();
  const Mixture q = est.normalized();
  const std::size_t chunks = (n_mc + kMcChunk - 1) / kMcChunk;
  std::vector<Moments> parts(chunks);
  parallel_for(chunks, resolve_threads(threads), [&](std::size_t c) {
    Rng sub = rng.split(c);
    const std::size_t len = std::min(kMcChunk, n_mc - c * kMcChunk);
    const Dataset ys = mixture_sample(p, len, sub);
    Moments& acc = parts[c];
    Vector y(ys.cols());
    for (Eigen::Index i = 0; i < ys.rows(); ++i) {
      y = ys.row(i).transpose();
      double lp = mixture_logpdf(p, y);
      double lq = mixture_logpdf(q, y);
      bool clamped = false;
      if (!(lp >= kLogDensityFloor)) {
        lp = kLogDensityFloor;
        clamped = true;
      }
      if (!(lq >= kLogDensityFloor)) {
        lq = kLogDensityFloor;
        clamped = true;
      }
      double delta = lq - lp;  // log(q/p)
      if (delta > -kLogDensityFloor) {
        delta = -kLogDensityFloor;
        clamped = true;
      }
      const double term = -delta + std::exp(delta) * delta;
      acc.sum += term;
      acc.sum_sq += term * term;
      if (clamped) ++acc.clamps;
    }
  });
  Moments total;
  for (const auto& part : parts) {
    total.sum += part.sum;
    total.sum_sq += part.sum_sq;
    total.clamps += part.clamps;
  }
  return finish_mean(total, n_mc);
}

McEstimate mmd_mc(const Mixture& p, const Mixture& q, double sigma2, FreqKind kind,
                  std::size_t m_mc, Rng& rng) {
  if (p.dim() != q.dim()) throw InvalidArgument("mmd_mc: dimension mismatch");
  if (m_mc < 1) throw InvalidArgument("mmd_mc: need at least one frequency");
  if (!(sigma2 > 0.0)) throw InvalidArgument("mmd_mc: sigma2 must be positive");
  const FrequencySet fs =
      draw_freq({Vector::Constant(p.dim(), sigma2)}, Vector::Ones(1), m_mc, kind, rng);
  const Sketch sp = sketch_gmm(p, fs);
  const Sketch sq = sketch_gmm(q, fs);
  const double m = static_cast<double>(m_mc);
  Moments acc;
  for (Eigen::Index j = 0; j < fs.m(); ++j) {
    const double v = m * std::norm(sp.values[j] - sq.values[j]);
    acc.sum += v;
    acc.sum_sq += v * v;
  }
  const McEstimate sq_mean = finish_mean(acc, m_mc);
  McEstimate out;
  out.value = std::sqrt(sq_mean.value);
  out.stderr_ = out.value > 0.0 ? sq_mean.stderr_ / (2.0 * out.value) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// EM baseline

namespace {

struct EmRun {
  Eigen::MatrixXd means;  // d x K
  Eigen::MatrixXd vars;   // d x K
  Vector weights;
  std::vector<double> trace;
  bool monotone = true;
  std::size_t reseeds = 0;
};

// Mean log-likelihood; fills responsibilities (n x K) when `resp` is given.
double e_step(const Dataset& X, const EmRun& run, Eigen::MatrixXd* resp) {
  const Eigen::Index n = X.rows(), d = X.cols(), K = run.weights.size();
  Vector log_norm(K);
  Eigen::MatrixXd inv_var = run.vars.cwiseInverse();
  for (Eigen::Index k = 0; k < K; ++k) {
    log_norm[k] = (run.weights[k] > 0.0 ? std::log(run.weights[k]) : -std::numeric_limits<double>::infinity()) -
                  0.5 * (2.0 * M_PI * run.vars.col(k).array()).log().sum();
  }
  double ll = 0.0;
  Vector lk(K);
  for (Eigen::Index i = 0; i < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < K; ++k) {
      double q = 0.0;
      for (Eigen::Index l = 0; l < d; ++l) {
        const double diff = X(i, l) - run.means(l, k);
        q += diff * diff * inv_var(l, k);
      }
      lk[k] = log_norm[k] - 0.5 * q;
      peak = std::max(peak, lk[k]);
    }
    double s = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) s += std::exp(lk[k] - peak);
    const double lse = peak + std::log(s);
    ll += lse;
    if (resp) {
      for (Eigen::Index k = 0; k < K; ++k) (*resp)(i, k) = std::exp(lk[k] - lse);
    }
  }
  return ll / static_cast<double>(n);
}

}  // namespace

EmResult em_baseline(const Dataset& data, std::size_t K, const EmOptions& opts, Rng& rng) {
  const Eigen::Index n = data.rows(), d = data.cols();
  const auto Ki = static_cast<Eigen::Index>(K);
  if (K < 1 || n < Ki) throw InvalidArgument("em_baseline: need n >= K >= 1");
  const Vector global_mean = data.colwise().mean().transpose();
  const Vector global_var =
      ((data.rowwise() - global_mean.transpose()).array().square().colwise().sum() /
       static_cast<double>(n))
          .transpose()
          .matrix()
          .cwiseMax(kVarianceFloor);

  EmResult best;
  best.log_likelihood = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  Eigen::MatrixXd resp(n, Ki);

  for (std::size_t init = 0; init < std::max<std::size_t>(opts.n_init, 1); ++init) {
    Rng run_rng = rng.split(init);
    EmRun run;
    run.means.resize(d, Ki);
    run.vars = global_var.replicate(1, Ki);
    run.weights = Vector::Constant(Ki, 1.0 / static_cast<double>(K));
    // K distinct rows by partial Fisher-Yates over indices.
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index k = 0; k < Ki; ++k) {
      const auto j = static_cast<std::size_t>(k) + run_rng.below(static_cast<std::size_t>(n - k));
      std::swap(idx[static_cast<std::size_t>(k)], idx[j]);
      run.means.col(k) = data.row(idx[static_cast<std::size_t>(k)]).transpose();
    }

    bool reseeded_last = false;
    for (std::size_t it = 0;; ++it) {
      const double ll = e_step(data, run, it < opts.max_iter ? &resp : nullptr);
      if (!run.trace.empty() && !reseeded_last &&
          ll < run.trace.back() - 1e-9 * std::max(1.0, std::abs(run.trace.back()))) {
        run.monotone = false;
      }
      const bool converged = !run.trace.empty() && !reseeded_last &&
                             std::abs(ll - run.trace.back()) <= opts.rel_tol * std::max(1.0, std::abs(ll));
      run.trace.push_back(ll);
      if (converged || it >= opts.max_iter) break;

      // M-step
      reseeded_last = false;
      const Vector Nk = resp.colwise().sum().transpose();
      for (Eigen::Index k = 0; k < Ki; ++k) {
        if (Nk[k] < 1e-10 * static_cast<double>(n) || Nk[k] < 1e-300) {
          run.means.col(k) = data.row(static_cast<Eigen::Index>(run_rng.below(static_cast<std::size_t>(n)))).transpose();
          run.vars.col(k) = global_var;
          run.weights[k] = 1.0 / static_cast<double>(K);
          ++run.reseeds;
          reseeded_last = true;
          continue;
        }
        const Vector mu = (data.transpose() * resp.col(k)) / Nk[k];
        Vector var = Vector::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i) {
          var += resp(i, k) * (data.row(i).transpose() - mu).array().square().matrix();
        }
        run.means.col(k) = mu;
        run.vars.col(k) = (var / Nk[k]).cwiseMax(kVarianceFloor);
        run.weights[k] = Nk[k] / static_cast<double>(n);
      }
      run.weights /= run.weights.sum();
    }

    best.monotone = best.monotone && run.monotone;
    best.reseeds += run.reseeds;
    if (!have_best || run.trace.back() > best.log_likelihood) {
      have_best = true;
      best.log_likelihood = run.trace.back();
      best.trace = run.trace;
      std::vector<GaussianParams> comps;
      for (Eigen::Index k = 0; k < Ki; ++k) comps.emplace_back(run.means.col(k), run.vars.col(k));
      best.mixture = Mixture(std::move(comps), run.weights);
    }
  }
  return best;
}

}  // namespace sketchmix
