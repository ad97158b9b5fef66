#include "sketchmix/nnls.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "sketchmix/error.hpp"

namespace sketchmix {

namespace {

// Least squares restricted to the passive columns; other entries are zero.
Vector solve_passive(const Eigen::MatrixXd& A, const Vector& b, const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (std::size_t k = 0; k < passive.size(); ++k)
    if (passive[k]) cols.push_back(static_cast<Eigen::Index>(k));
  Vector z = Vector::Zero(A.cols());
  if (cols.empty()) return z;
  Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = A.col(cols[c]);
  const Vector zs = sub.colPivHouseholderQr().solve(b);
  for (std::size_t c = 0; c < cols.size(); ++c) z[cols[c]] = zs[static_cast<Eigen::Index>(c)];
  return z;
}

}  // namespace

Vector nnls_real(const Eigen::MatrixXd& A, const Vector& b) {
  if (A.cols() < 1) throw InvalidArgument("nnls: need at least one column");
  if (A.rows() != b.size()) throw InvalidArgument("nnls: size mismatch");
  const Eigen::Index r = A.cols();
  // Dual feasibility tolerance, relative to the problem scale.
  const double tol = 1e-13 * std::max(1.0, A.norm() * b.norm());

  Vector x = Vector::Zero(r);
  std::vector<bool> passive(static_cast<std::size_t>(r), false);
  Vector w = A.transpose() * (b - A * x);

  const int max_outer = static_cast<int>(3 * r + 10);
  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index k = 0; k < r; ++k) {
      if (!passive[static_cast<std::size_t>(k)] && w[k] > best) {
        best = w[k];
        t = k;
      }
    }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;

    for (int inner = 0; inner < 3 * r + 10; ++inner) {
      Vector z = solve_passive(A, b, passive);
      bool feasible = true;
      for (Eigen::Index k = 0; k < r; ++k)
        if (passive[static_cast<std::size_t>(k)] && z[k] <= 0.0) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double step = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < r; ++k) {
        if (passive[static_cast<std::size_t>(k)] && z[k] <= 0.0) {
          step = std::min(step, x[k] / (x[k] - z[k]));
        }
      }
      x += step * (z - x);
      for (Eigen::Index k = 0; k < r; ++k) {
        if (passive[static_cast<std::size_t>(k)] && x[k] <= 1e-300) {
          passive[static_cast<std::size_t>(k)] = false;
          x[k] = 0.0;
        }
      }
      // Guard against the newly added column being dropped immediately forever.
      if (std::none_of(passive.begin(), passive.end(), [](bool p) { return p; })) break;
    }
    w = A.transpose() * (b - A * x);
  }
  return x.cwiseMax(0.0);
}

Vector nnls(const Eigen::MatrixXcd& atoms, const ComplexVector& target) {
  if (atoms.rows() != target.size()) throw InvalidArgument("nnls: size mismatch");
  const Eigen::Index m = atoms.rows();
  Eigen::MatrixXd A(2 * m, atoms.cols());
  A.topRows(m) = atoms.real();
  A.bottomRows(m) = atoms.imag();
  Vector b(2 * m);
  b.head(m) = target.real();
  b.tail(m) = target.imag();
  return nnls_real(A, b);
}

}  // namespace sketchmix
