#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "doctest.h"
#include "sketchmix/bounds.hpp"
#include "sketchmix/error.hpp"

using namespace sketchmix;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

ParamDomain dom(std::size_t d, double s2min, double s2max, double M, double rad) {
  ParamDomain p;
  p.d = d;
  p.sigma2_min = s2min;
  p.sigma2_max = s2max;
  p.mean_bound = M;
  p.radius = rad;
  return p;
}

// Extended-precision re-derivations, written directly from the formulas.
Big big_B(const ParamDomain& p) {
  const Big s = sqrt(Big(p.sigma2_min));
  const Big a = 1 / s, b = 1 / (s * s) / sqrt(Big(2));
  return 8 * (a > b ? a : b) * Big(p.radius);
}

Big big_log_D(const ParamDomain& p, double a_in) {
  const Big a = a_in, d = p.d;
  const Big D1 = Big(p.sigma2_max) * a * (1 + 2 * Big(p.mean_bound) * Big(p.mean_bound) / d);
  const Big s = sqrt(Big(p.sigma2_min));
  const Big pre = std::max(Big(1 / s), Big(1 / (s * s) / sqrt(Big(2))));
  const Big D = pre * sqrt(2 * d * D1 * exp(3 * a * Big(p.sigma2_max)) / (a * (1 - exp(-D1))));
  return log(D);
}

}  // namespace

TEST_CASE("covering_bound_gauss") {
  const auto p = dom(1, 1.0, 1.0, 0.0, 1.0);
  CHECK(covering_constant(p) == doctest::Approx(8.0).epsilon(1e-15));
  const auto v = covering_bound_gauss(p, 1.0);
  REQUIRE(v.linear());
  CHECK(*v.linear() == doctest::Approx(64.0).epsilon(1e-14));
  for (std::size_t d : {1u, 3u, 7u}) {
    const auto q = dom(d, 0.5, 2.0, 1.0, 3.0);
    CHECK(covering_bound_gauss(q, 0.1).log - covering_bound_gauss(q, 0.2).log ==
          doctest::Approx(2.0 * d * std::log(2.0)).epsilon(1e-13));
  }
  const auto big = dom(10, 0.25, 1.0, 0.0, 5.0);
  const Big ref = 20 * log(big_B(big) / Big(0.01));
  CHECK(std::abs(covering_bound_gauss(big, 0.01).log - static_cast<double>(ref)) < 1e-12 * static_cast<double>(ref));
  CHECK_THROWS_AS(covering_bound_gauss(p, 0.0), InvalidArgument);
}

TEST_CASE("covering_bound_mixture") {
  const auto p = dom(1, 1.0, 1.0, 0.0, 1.0);
  auto base = [&](double e) { return covering_bound_gauss(p, e).log; };
  SUBCASE("K=1, tau=1/2, C=1") {
    const double eps = 0.3;
    CHECK(covering_bound_mixture(base, 1.0, 1, eps, 0.5).log ==
          doctest::Approx(std::log(16.0) + base(eps / 2) - std::log(eps)).epsilon(1e-14));
  }
  SUBCASE("GMM specialization") {
    for (std::size_t d : {1u, 2u, 5u}) {
      const auto q = dom(d, 0.7, 1.0, 0.0, 2.0);
      const double B = covering_constant(q);
      auto qb = [&](double e) { return covering_bound_gauss(q, e).log; };
      for (std::size_t K : {1u, 3u}) {
        for (double eps : {0.01, 0.5}) {
          const double generic = covering_bound_mixture(qb, 1.0, K, eps, B / (B + 1.0)).log;
          const double closed = covering_bound_gmm(q, K, eps).log;
          // Same exponent structure; constants coincide at d = 1 and the
          // generic route is tighter by (2d - 2) K log 2 otherwise.
          CHECK(closed - generic == doctest::Approx(static_cast<double>(K) * (2.0 * d - 2.0) * std::log(2.0)).epsilon(1e-10).scale(1.0));
        }
      }
    }
  }
  SUBCASE("nonincreasing in eps") {
    double prev = std::numeric_limits<double>::infinity();
    for (double eps = 0.01; eps < 2.0; eps *= 1.1) {
      const double v = covering_bound_mixture(base, 2.0, 3, eps, 0.4).log;
      CHECK(v <= prev);
      prev = v;
    }
  }
  CHECK_THROWS_AS(covering_bound_mixture(base, 1.0, 1, 0.1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(covering_bound_mixture(base, 1.0, 1, 0.1, 0.0), InvalidArgument);
}

TEST_CASE("covering_bound_gmm spot value") {
  const auto p = dom(1, 1.0, 1.0, 0.0, 1.0);
  const auto v = covering_bound_gmm(p, 2, 1.0);
  REQUIRE(v.linear());
  CHECK(*v.linear() == doctest::Approx(std::pow(18.0, 6)).epsilon(1e-13));
}

TEST_CASE("domination_constant") {
  const auto p = dom(2, 1.0, 1.0, 1.0, 1.0);
  SUBCASE("spot value against extended precision") {
    CHECK(std::abs(domination_constant(p, 1.0).log - static_cast<double>(big_log_D(p, 1.0))) < 1e-14);
    const auto q = dom(4, 0.3, 2.0, 0.5, 1.0);
    for (double a : {0.05, 0.7, 3.0}) CHECK(std::abs(domination_constant(q, a).log - static_cast<double>(big_log_D(q, a))) < 1e-13);
  }
  SUBCASE("shape in a") {
    // log D = const + (3a - log(1 - e^{-2a})) / 2 here, minimized where e^{2a} = 5/3.
    const double a_star = 0.5 * std::log(5.0 / 3.0);
    double prev = -std::numeric_limits<double>::infinity();
    for (double a = 0.3; a <= 10.0; a += 0.1) {
      const double v = domination_constant(p, a).log;
      CHECK(v > prev);
      prev = v;
    }
    prev = std::numeric_limits<double>::infinity();
    for (double a = 0.1; a < a_star; a += 0.01) {
      const double v = domination_constant(p, a).log;
      CHECK(v < prev);
      prev = v;
    }
    double lo = 0.1, hi = 1.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
      const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      if (domination_constant(p, x1).log < domination_constant(p, x2).log) hi = x2;
      else lo = x1;
    }
    CHECK(0.5 * (lo + hi) == doctest::Approx(a_star).epsilon(1e-6));
  }
  SUBCASE("blows up as sigma_min shrinks") {
    const double big = domination_constant(dom(2, 0.01, 1.0, 1.0, 1.0), 1.0).log;
    const double ref = domination_constant(dom(2, 1.0, 1.0, 1.0, 1.0), 1.0).log;
    CHECK(big - ref > std::log(10.0));
  }
  SUBCASE("no overflow in log space") {
    const auto v = domination_constant(dom(3, 1e-300, 1e5, 1e3, 1.0), 1e3);
    CHECK(std::isfinite(v.log));
    CHECK(!v.linear());
  }
}

TEST_CASE("sketch_size_single_gauss") {
  const auto p = dom(1, 1.0, 1.0, 1.0, 1.0);
  const double rho = 2.0 / std::exp(1.0);
  SUBCASE("spot value") {
    const auto b = sketch_size_single_gauss(p, 1.0, 1.0, rho);
    CHECK(!b.uses_domination);
    CHECK(b.A == 2.0);
    const Big ref = 48 * (2 * log(Big(192)) + 1);
    CHECK(std::abs(b.value - static_cast<double>(ref)) < 1e-12 * b.value);
    CHECK(b.m == 553);
  }
  SUBCASE("nonincreasing in eta") {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 10; ++i) {
      const double v = sketch_size_single_gauss(p, 1.0, 0.1 * i, 0.1).value;
      CHECK(v <= prev);
      prev = v;
    }
  }
  SUBCASE("increasing in d") {
    double prev = 0.0;
    for (std::size_t d = 1; d <= 20; ++d) {
      const double v = sketch_size_single_gauss(dom(d, 1.0, 1.0, 1.0, 1.0), 1.0, 0.5, 0.1).value;
      CHECK(v > prev);
      prev = v;
    }
  }
  SUBCASE("domination branch is reported") {
    // Tiny a with no mean spread makes D smaller than 2/eta.
    const auto q = dom(1, 4.0, 4.0, 0.0, 1.0);
    const auto b = sketch_size_single_gauss(q, 0.05, 0.1, 0.1);
    CHECK(b.uses_domination);
    CHECK(b.A == doctest::Approx(std::exp(domination_constant(q, 0.05).log)));
  }
  CHECK_THROWS_AS(sketch_size_single_gauss(p, 1.0, 1.5, 0.1), InvalidArgument);
  CHECK_THROWS_AS(sketch_size_single_gauss(p, 1.0, 0.5, 1.0), InvalidArgument);
}

TEST_CASE("sketch_size_gmm") {
  const auto p = dom(1, 1.0, 1.0, 0.0, 1.0);
  const double rho = 2.0 / std::exp(1.0);
  SUBCASE("spot value") {
    const auto b = sketch_size_gmm(p, 1, 1, 1.0, rho);
    const Big ref = 48 * (3 * log(Big(432)) + 1);
    CHECK(std::abs(b.value - static_cast<double>(ref)) < 1e-12 * b.value);
    CHECK(b.m == 922);
  }
  SUBCASE("affine in K") {
    const auto q = dom(3, 0.5, 2.0, 1.0, 2.0);
    for (std::size_t K : {1u, 2u, 7u}) {
      const double m1 = sketch_size_gmm(q, 3, K, 0.3, 0.05).value;
      const double m2 = sketch_size_gmm(q, 3, 2 * K, 0.3, 0.05).value;
      const double m3 = sketch_size_gmm(q, 3, 3 * K, 0.3, 0.05).value;
      CHECK((m2 - m1) / (m3 - m2) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("halving eta more than quadruples") {
    for (double eta : {1.0, 0.5, 0.1}) {
      CHECK(sketch_size_gmm(p, 2, 3, eta / 2, 0.1).value > 4.0 * sketch_size_gmm(p, 2, 3, eta, 0.1).value);
    }
  }
  SUBCASE("implied failure probability does not exceed the request") {
    for (std::size_t K : {1u, 4u}) {
      for (double eta : {0.2, 0.9}) {
        for (double r : {0.01, 0.5}) {
          const auto q = dom(2, 0.5, 1.0, 1.0, 3.0);
          const auto b = sketch_size_gmm(q, 2, K, eta, r);
          CHECK(implied_log_failure_probability(q, K, eta, static_cast<double>(b.m)) <= std::log(r) + 1e-12);
          CHECK(implied_log_failure_probability(q, K, eta, b.value) == doctest::Approx(std::log(r)).epsilon(1e-9));
        }
      }
    }
  }
  SUBCASE("huge inputs stay finite") {
    const auto q = dom(1000, 1e-200, 1.0, 0.0, 1e100);
    const auto b = sketch_size_gmm(q, 1000, 1000000, 1e-3, 1e-10);
    CHECK(std::isfinite(b.value));
  }
}

TEST_CASE("ParamDomain validation") {
  CHECK_THROWS_AS(dom(0, 1, 1, 0, 1).validate(), InvalidArgument);
  CHECK_THROWS_AS(dom(1, 2, 1, 0, 1).validate(), InvalidArgument);
  CHECK_THROWS_AS(dom(1, 1, 1, -1, 1).validate(), InvalidArgument);
  CHECK_THROWS_AS(dom(1, 1, 1, 0, 0).validate(), InvalidArgument);
}
