#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sketchmix/error.hpp"
#include "sketchmix/eval.hpp"

using namespace sketchmix;

namespace {

GaussianParams g1(double mu, double var) { return {Vector::Constant(1, mu), Vector::Constant(1, var)}; }

Mixture single(const GaussianParams& p) { return Mixture({p}, Vector::Ones(1)); }

double stdev(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / (v.size() - 1));
}

}  // namespace

TEST_CASE("gen_synthetic") {
  SUBCASE("d=1, K=1") {
    Rng rng(1);
    const auto prob = gen_synthetic(1, 1, rng);
    CHECK(prob.truth.size() == 1);
    CHECK(prob.truth.weights[0] == 1.0);
    const double v = prob.truth.components[0].variances()[0];
    CHECK(v >= 0.25);
    CHECK(v <= 1.75);
  }
  SUBCASE("mean variance over many problems") {
    Rng rng(2);
    double acc = 0.0;
    for (int t = 0; t < 10000; ++t) acc += gen_synthetic(3, 2, rng).truth.components[0].variances().mean();
    CHECK(std::abs(acc / 10000 - 1.0) < 0.01);
  }
  SUBCASE("mean spread d=2, K=4 has sigma_mu = 2") {
    Rng rng(3);
    double sq = 0.0;
    std::size_t count = 0;
    for (int t = 0; t < 5000; ++t) {
      const auto prob = gen_synthetic(2, 4, rng);
      for (const auto& c : prob.truth.components) {
        sq += c.mean().squaredNorm();
        count += 2;
      }
    }
    CHECK(std::abs(std::sqrt(sq / count) - 2.0) < 0.02);
  }
  SUBCASE("reproducible") {
    Rng a(4), b(4);
    const auto pa = gen_synthetic(5, 3, a, WeightMode::FlatDirichlet);
    const auto pb = gen_synthetic(5, 3, b, WeightMode::FlatDirichlet);
    for (std::size_t k = 0; k < 3; ++k) CHECK(pa.truth.components[k] == pb.truth.components[k]);
    CHECK(pa.truth.weights == pb.truth.weights);
    CHECK(std::abs(pa.truth.weights.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("kl_sym_mc of a mixture with itself") {
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(100 + seed);
    const auto prob = gen_synthetic(2, 3, rng);
    Rng mc(200 + seed);
    const auto e = kl_sym_mc(prob.truth, prob.truth, 2000, mc);
    CHECK(e.clamp_count == 0);
    if (std::abs(e.value) <= 3.0 * e.stderr_ + 1e-300) ++within;
  }
  CHECK(within >= 95);
}

TEST_CASE("kl_sym_mc matches the closed form for single Gaussians") {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    Vector mu(3), v1(3), v2(3);
    for (int l = 0; l < 3; ++l) {
      mu[l] = 0.5 * rng.normal();
      v1[l] = rng.uniform(0.5, 1.5);
      v2[l] = rng.uniform(0.5, 1.5);
    }
    const GaussianParams p(Vector::Zero(3), v1), q(mu, v2);
    const double exact = gauss_kl(p, q) + gauss_kl(q, p);
    Rng mc(300 + t);
    const auto e = kl_sym_mc(single(p), single(q), 200000, mc);
    CHECK(std::abs(e.value - exact) <= 3.0 * e.stderr_);
  }
}

TEST_CASE("kl_sym_mc swapped arguments agree for close mixtures") {
  Mixture p({g1(0, 1), g1(3, 0.5)}, (Vector(2) << 0.5, 0.5).finished());
  Mixture q({g1(0.05, 1.02), g1(3.02, 0.52)}, (Vector(2) << 0.49, 0.51).finished());
  Rng a(6), b(7);
  const auto pq = kl_sym_mc(p, q, 500000, a);
  const auto qp = kl_sym_mc(q, p, 500000, b);
  CHECK(pq.value != qp.value);
  CHECK(std::abs(pq.value - qp.value) <= 5.0 * std::hypot(pq.stderr_, qp.stderr_));
}

TEST_CASE("kl_sym_mc clamps disjoint supports") {
  Mixture p = single(g1(0, 1e-4)), q = single(g1(100, 1e-4));
  Rng rng(8);
  const auto e = kl_sym_mc(p, q, 1000, rng);
  CHECK(e.clamp_count == 1000);
  CHECK(std::isfinite(e.value));
}

TEST_CASE("kl_sym_mc is thread-count independent") {
  Rng rng(9);
  const auto prob = gen_synthetic(2, 2, rng);
  Mixture est({prob.truth.components[1], prob.truth.components[0]}, (Vector(2) << 0.4, 0.6).finished());
  Rng a(10), b(10);
  CHECK(kl_sym_mc(prob.truth, est, 200000, a, 1).value == kl_sym_mc(prob.truth, est, 200000, b, 4).value);
}

TEST_CASE("mmd_mc basics") {
  Rng rng(11);
  const auto prob = gen_synthetic(3, 2, rng);
  Rng a(12);
  CHECK(mmd_mc(prob.truth, prob.truth, 1.0, FreqKind::AdaptedRadius, 1000, a).value == 0.0);
  const auto other = gen_synthetic(3, 2, rng);
  Rng b(13), c(13);
  CHECK(mmd_mc(prob.truth, other.truth, 1.0, FreqKind::AdaptedRadius, 1000, b).value ==
        mmd_mc(other.truth, prob.truth, 1.0, FreqKind::AdaptedRadius, 1000, c).value);
}

TEST_CASE("mmd_mc is dominated by total variation") {
  Rng rng(14);
  for (int t = 0; t < 20; ++t) {
    const auto p = g1(rng.normal(), rng.uniform(0.3, 2.0));
    const auto q = g1(rng.normal(), rng.uniform(0.3, 2.0));
    const double tv = oracle::tv_1d(single(p), single(q));
    for (FreqKind kind : {FreqKind::Gaussian, FreqKind::AdaptedRadius}) {
      Rng mc(400 + t);
      CHECK(mmd_mc(single(p), single(q), 1.0, kind, 20000, mc).value <= tv);
    }
  }
}

TEST_CASE("mmd_mc standard deviation halves when m quadruples") {
  Mixture p = single({Vector::Zero(2), Vector::Ones(2)});
  Mixture q = single({Vector::Constant(2, 0.7), Vector::Constant(2, 1.5)});
  std::vector<double> small, large;
  for (std::uint64_t r = 0; r < 100; ++r) {
    Rng a(500 + r), b(700 + r);
    small.push_back(mmd_mc(p, q, 1.0, FreqKind::AdaptedRadius, 500, a).value);
    large.push_back(mmd_mc(p, q, 1.0, FreqKind::AdaptedRadius, 2000, b).value);
  }
  const double ratio = stdev(small) / stdev(large);
  CHECK(ratio >= 2.0 / 1.5);
  CHECK(ratio <= 2.0 * 1.5);
}

TEST_CASE("mmd_mc converges to the Gaussian-kernel closed form") {
  Rng rng(15);
  for (int t = 0; t < 10; ++t) {
    Vector mu(2), v1(2), v2(2);
    for (int l = 0; l < 2; ++l) {
      mu[l] = rng.normal();
      v1[l] = rng.uniform(0.3, 2.0);
      v2[l] = rng.uniform(0.3, 2.0);
    }
    const GaussianParams p(Vector::Zero(2), v1), q(mu, v2);
    const double s = rng.uniform(0.5, 2.0);
    const double exact = std::sqrt(oracle::gaussian_kernel_mmd2(p, q, s));
    Rng mc(600 + t);
    const auto e = mmd_mc(single(p), single(q), s, FreqKind::Gaussian, 200000, mc);
    CHECK(std::abs(e.value - exact) <= 3.0 * e.stderr_);
  }
}

TEST_CASE("em_baseline with K=1 is the closed-form MLE") {
  Rng rng(16);
  const Dataset x = mixture_sample(single({(Vector(2) << 1.0, -2.0).finished(), (Vector(2) << 0.5, 3.0).finished()}),
                                   5000, rng);
  Rng em(17);
  const auto res = em_baseline(x, 1, {}, em);
  const Vector mean = x.colwise().mean().transpose();
  const Vector var = ((x.rowwise() - mean.transpose()).array().square().colwise().sum() / 5000.0).transpose();
  CHECK((res.mixture.components[0].mean() - mean).norm() < 1e-12);
  CHECK((res.mixture.components[0].variances() - var).norm() < 1e-12);
  CHECK(res.trace.size() <= 3);
}

TEST_CASE("em_baseline log-likelihood is monotone") {
  Rng rng(18);
  const auto prob = gen_synthetic(3, 4, rng);
  Rng s(19);
  const Dataset x = mixture_sample(prob.truth, 5000, s);
  Rng em(20);
  const auto res = em_baseline(x, 4, {}, em);
  CHECK(res.monotone);
  for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] >= res.trace[i - 1] - 1e-12);
  CHECK(std::abs(res.mixture.weights.sum() - 1.0) < 1e-12);
  CHECK_THROWS_AS(em_baseline(x.topRows(2), 4, {}, em), InvalidArgument);
}

TEST_CASE("em_baseline on the d=2, K=3 synthetic problem") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(800 + seed);
    const auto prob = gen_synthetic(2, 3, rng);
    Rng s = rng.split(1);
    const Dataset x = mixture_sample(prob.truth, 100000, s);
    Rng em = rng.split(2);
    const auto res = em_baseline(x, 3, {}, em);
    Rng mc = rng.split(3);
    const auto kl = kl_sym_mc(prob.truth, res.mixture, kDefaultKlSamples, mc);
    if (kl.value <= 1e-2) ++ok;
  }
  CHECK(ok >= 8);
}
