#include <cmath>
#include <limits>

#include "doctest.h"
#include "sketchmix/error.hpp"
#include "sketchmix/nnls.hpp"
#include "sketchmix/optimize.hpp"
#include "sketchmix/rng.hpp"

using namespace sketchmix;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double rosenbrock(const Vector& x, Vector& g) {
  const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
  g[0] = -2.0 * a - 400.0 * x[0] * b;
  g[1] = 200.0 * b;
  return a * a + 100.0 * b * b;
}

// Exhaustive NNLS: least squares on every subset of columns, keep the best
// feasible one.
Vector nnls_enumerate(const Eigen::MatrixXd& A, const Vector& b) {
  const auto r = A.cols();
  Vector best = Vector::Zero(r);
  double best_val = b.squaredNorm();
  for (unsigned mask = 1; mask < (1u << r); ++mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index k = 0; k < r; ++k)
      if (mask & (1u << k)) cols.push_back(k);
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = A.col(cols[c]);
    const Vector coef = sub.completeOrthogonalDecomposition().solve(b);
    if ((coef.array() < 0.0).any()) continue;
    Vector full = Vector::Zero(r);
    for (std::size_t c = 0; c < cols.size(); ++c) full[cols[c]] = coef[static_cast<Eigen::Index>(c)];
    const double val = (A * full - b).squaredNorm();
    if (val < best_val) {
      best_val = val;
      best = full;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("box_minimize convex quadratic") {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    Vector x0(5);
    for (int i = 0; i < 5; ++i) x0[i] = 10 * rng.normal();
    const auto res = box_minimize(
        [](const Vector& x, Vector& g) {
          g = 2.0 * x;
          return x.squaredNorm();
        },
        x0, Vector::Constant(5, -kInf));
    CHECK(res.x.norm() < 1e-8);
  }
}

TEST_CASE("box_minimize active bound") {
  Vector x0(1);
  x0 << 3.0;
  const auto res = box_minimize(
      [](const Vector& x, Vector& g) {
        g[0] = 2.0 * (x[0] + 1.0);
        return (x[0] + 1.0) * (x[0] + 1.0);
      },
      x0, Vector::Zero(1));
  CHECK(res.x[0] == 0.0);
  CHECK(res.projected_grad_norm == 0.0);
}

TEST_CASE("box_minimize Rosenbrock") {
  // Oracle: long-run gradient descent with a small fixed step also lands on (1, 1).
  Vector y(2);
  y << -1.2, 1.0;
  Vector g(2);
  for (int it = 0; it < 2000000; ++it) {
    rosenbrock(y, g);
    y -= 1e-3 * g;
  }
  REQUIRE((y - Vector::Ones(2)).norm() < 1e-4);

  Vector x0(2);
  x0 << -1.2, 1.0;
  BoxMinimizeOptions opts;
  opts.max_iters = 1000;
  const auto res = box_minimize(rosenbrock, x0, Vector::Constant(2, -kInf), opts);
  CHECK((res.x - y).norm() < 1e-4);
  CHECK((res.x - Vector::Ones(2)).norm() < 1e-4);
}

TEST_CASE("box_minimize travels along a nearly flat start to a distant well") {
  // f = -exp(-|x - c|^2 / 50) has its only minimum at c; at the origin the
  // gradient is about 1e-3.
  Vector c(2);
  c << 12.0, -9.0;
  Objective f = [&](const Vector& x, Vector& g) {
    const double e = std::exp(-(x - c).squaredNorm() / 50.0);
    g = (x - c) * (e / 25.0);
    return -e;
  };
  const auto res = box_minimize(f, Vector::Zero(2), Vector::Constant(2, -kInf));
  CHECK((res.x - c).norm() < 1e-5);
  CHECK(res.iterations < 50);
}

TEST_CASE("box_minimize never worsens and stays feasible") {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    Eigen::MatrixXd M(4, 4);
    for (int i = 0; i < 16; ++i) M.data()[i] = rng.normal();
    const Eigen::MatrixXd H = M.transpose() * M + 0.1 * Eigen::MatrixXd::Identity(4, 4);
    Vector c(4), lower(4), x0(4);
    for (int i = 0; i < 4; ++i) {
      c[i] = rng.normal();
      lower[i] = rng.uniform() < 0.5 ? -kInf : rng.normal();
      x0[i] = std::isfinite(lower[i]) ? lower[i] + rng.uniform() : rng.normal();
    }
    Objective f = [&](const Vector& x, Vector& g) {
      g = H * x - c;
      return 0.5 * x.dot(H * x) - c.dot(x);
    };
    Vector g0(4);
    const double f0 = f(x0, g0);
    const auto res = box_minimize(f, x0, lower);
    CHECK(res.value <= f0);
    CHECK((res.x.array() >= lower.array()).all());
    CHECK(res.projected_grad_norm <= 1e-6);
  }
}

TEST_CASE("box_minimize rejects a non-finite start") {
  Vector x0 = Vector::Zero(2);
  CHECK_THROWS_AS(box_minimize([](const Vector&, Vector& g) {
                    g.setZero();
                    return std::numeric_limits<double>::quiet_NaN();
                  },
                  x0, Vector::Constant(2, -kInf)),
                  NumericError);
}

TEST_CASE("nnls spot cases") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  Vector b(2);
  b << 1.0, -1.0;
  const Vector beta = nnls_real(I, b);
  CHECK(beta[0] == doctest::Approx(1.0));
  CHECK(beta[1] == 0.0);

  Eigen::MatrixXcd a(3, 1);
  a << std::complex<double>(1, 2), std::complex<double>(-0.5, 0.1), std::complex<double>(0, 3);
  const Vector scalar = nnls(a, 2.0 * a.col(0));
  CHECK(scalar[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("nnls matches active-set enumeration on random 6x3 instances") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    Eigen::MatrixXd A(6, 3);
    Vector b(6);
    for (int i = 0; i < 18; ++i) A.data()[i] = rng.normal();
    for (int i = 0; i < 6; ++i) b[i] = rng.normal();
    const Vector got = nnls_real(A, b);
    const Vector ref = nnls_enumerate(A, b);
    CHECK((got - ref).norm() < 1e-10 * std::max(1.0, ref.norm()));
  }
}

TEST_CASE("nnls KKT conditions on complex instances") {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index m = 20, r = 1 + static_cast<Eigen::Index>(rng.below(8));
    Eigen::MatrixXcd A(m, r);
    ComplexVector z(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < r; ++k) A(i, k) = {rng.normal(), rng.normal()};
      z[i] = {rng.normal(), rng.normal()};
    }
    const Vector beta = nnls(A, z);
    REQUIRE((beta.array() >= 0.0).all());
    // d/d beta_k of ||z - A beta||^2 = -2 Re<A_k, z - A beta>.
    const ComplexVector res = z - A * beta.cast<std::complex<double>>();
    for (Eigen::Index k = 0; k < r; ++k) {
      const double grad = -2.0 * (A.col(k).adjoint() * res)(0).real();
      if (beta[k] > 0.0) {
        CHECK(std::abs(grad) <= 1e-8);
      } else {
        CHECK(grad >= -1e-8);
      }
    }
  }
}

TEST_CASE("nnls with duplicated and zero columns") {
  Eigen::MatrixXd A(4, 3);
  A << 1, 1, 0,
       2, 2, 0,
       0, 0, 0,
       1, 1, 0;
  Vector b(4);
  b << 2, 4, 1, 2;
  const Vector beta = nnls_real(A, b);
  CHECK((beta.array() >= 0.0).all());
  CHECK(beta[0] + beta[1] == doctest::Approx(2.0));
  CHECK(beta[2] == 0.0);
}
