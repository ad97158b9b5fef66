#pragma once

#include <functional>

#include "sketchmix/model.hpp"

namespace sketchmix {

/// Returns f(x) and writes the gradient into `grad` (already sized).
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct BoxMinimizeOptions {
  int max_iters = 200;
  double grad_tol = 1e-8;
  int history = 10;
};

struct BoxMinimizeResult {
  Vector x;
  double value = 0.0;
  double projected_grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

/// Limited-memory BFGS with a strong-Wolfe line search for
/// min f(x) s.t. x >= lower (use -inf for free coordinates).
///
/// The returned point is feasible and never worse than `init` (after
/// projecting `init` onto the box).
BoxMinimizeResult box_minimize(const Objective& f, const Vector& init, const Vector& lower,
                               const BoxMinimizeOptions& opts = {});

}  // namespace sketchmix
