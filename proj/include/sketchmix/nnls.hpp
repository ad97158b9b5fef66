#pragma once

#include <Eigen/Dense>

#include "sketchmix/model.hpp"

namespace sketchmix {

/// argmin_{beta >= 0} || target - atoms * beta ||_2 by the Lawson-Hanson
/// active-set method. Complex columns are treated as stacked (re; im) reals.
Vector nnls(const Eigen::MatrixXcd& atoms, const ComplexVector& target);

/// Real-valued variant used by the complex one.
Vector nnls_real(const Eigen::MatrixXd& A, const Vector& b);

}  // namespace sketchmix
