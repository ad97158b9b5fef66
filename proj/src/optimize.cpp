#include "sketchmix/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "sketchmix/error.hpp"

namespace sketchmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector project(const Vector& x, const Vector& lower) { return x.cwiseMax(lower); }

// Infinity norm of x - P(x - g).
double projected_gradient_norm(const Vector& x, const Vector& g, const Vector& lower) {
  return (x - project(x - g, lower)).lpNorm<Eigen::Infinity>();
}

struct Pair {
  Vector s, y;
  double rho;
};

struct LinePoint {
  double t = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative
  Vector x, g;
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), kept inside the
// middle 80% of [a, b]; bisection when the cubic is unusable.
double safeguarded_cubic(const LinePoint& a, const LinePoint& b) {
  const double lo = std::min(a.t, b.t), hi = std::max(a.t, b.t);
  const double margin = 0.1 * (hi - lo);
  double t = 0.5 * (a.t + b.t);
  if (std::isfinite(b.f)) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.t - b.t);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), b.t - a.t);
      const double denom = b.slope - a.slope + 2.0 * d2;
      if (denom != 0.0) {
        const double c = b.t - (b.t - a.t) * (b.slope + d2 - d1) / denom;
        if (std::isfinite(c)) t = c;
      }
    }
  }
  return std::clamp(t, lo + margin, hi - margin);
}

// Extrapolated trial beyond b.t (a.t < b.t, both slopes negative): the cubic
// step kept within [1.1, 4] times the last increment.
double extrapolate(const LinePoint& a, const LinePoint& b) {
  const double inc = b.t - a.t;
  const double lo = b.t + 1.1 * inc, hi = b.t + 4.0 * inc;
  const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.t - b.t);
  const double disc = d1 * d1 - a.slope * b.slope;
  if (!(disc >= 0.0)) return hi;
  const double d2 = std::sqrt(disc);
  const double denom = b.slope - a.slope + 2.0 * d2;
  if (denom == 0.0) return hi;
  const double c = b.t - inc * (b.slope + d2 - d1) / denom;
  if (!std::isfinite(c) || c <= b.t) return hi;
  return std::clamp(c, lo, hi);
}

// Strong-Wolfe search for phi(t) = f(x + t dir) on (0, t_max]. Returns false if
// no point with sufficient decrease was found.
bool wolfe_search(const Objective& f, const Vector& x, const Vector& dir, const LinePoint& start,
                  double t_init, double t_max, LinePoint& out, int& evaluations) {
  constexpr double kC1 = 1e-4, kC2 = 0.9;
  constexpr int kMaxEvals = 40;
  const double f0 = start.f, d0 = start.slope;

  auto eval = [&](double t) {
    LinePoint p;
    p.t = t;
    p.x = x + t * dir;
    p.g.resize(x.size());
    p.f = f(p.x, p.g);
    ++evaluations;
    if (!std::isfinite(p.f) || !p.g.allFinite()) {
      p.f = kInf;
      p.slope = kInf;
    } else {
      p.slope = p.g.dot(dir);
    }
    return p;
  };
  auto armijo = [&](const LinePoint& p) { return p.f <= f0 + kC1 * p.t * d0; };
  auto curvature = [&](const LinePoint& p) { return std::abs(p.slope) <= -kC2 * d0; };

  LinePoint lo = start, hi;
  bool bracketed = false;
  double t = std::min(t_init, t_max);
  int n = 0;
  for (; n < kMaxEvals; ++n) {
    LinePoint p = eval(t);
    if (!armijo(p) || p.f >= lo.f) {
      hi = std::move(p);
      bracketed = true;
      break;
    }
    if (curvature(p)) {
      out = std::move(p);
      return true;
    }
    if (p.slope >= 0.0) {
      hi = std::move(lo);
      lo = std::move(p);
      bracketed = true;
      break;
    }
    const double t_next = extrapolate(lo, p);
    lo = std::move(p);
    if (t >= t_max) break;  // the segment ends on a bound
    t = std::min(t_next, t_max);
  }

  if (bracketed) {
    for (++n; n < kMaxEvals; ++n) {
      if (std::abs(hi.t - lo.t) <= 1e-16 * std::max(1.0, lo.t)) break;
      LinePoint p = eval(safeguarded_cubic(lo, hi));
      if (!armijo(p) || p.f >= lo.f) {
        hi = std::move(p);
        continue;
      }
      if (curvature(p)) {
        out = std::move(p);
        return true;
      }
      if (p.slope * (hi.t - lo.t) >= 0.0) hi = std::move(lo);
      lo = std::move(p);
    }
  }
  if (lo.t > 0.0) {
    out = std::move(lo);
    return true;
  }
  return false;
}

}  // namespace

BoxMinimizeResult box_minimize(const Objective& f, const Vector& init, const Vector& lower,
                               const BoxMinimizeOptions& opts) {
  if (init.size() != lower.size()) throw InvalidArgument("box_minimize: bound size mismatch");
  const Eigen::Index n = init.size();

  BoxMinimizeResult res;
  Vector x = project(init, lower);
  Vector g(n);
  double fx = f(x, g);
  ++res.evaluations;
  if (!std::isfinite(fx) || !g.allFinite()) {
    throw NumericError("box_minimize: objective or gradient not finite at the initial point");
  }

  std::deque<Pair> memory;
  auto search_direction = [&](bool use_memory) {
    // Variables pinned at their bound with the gradient pushing outward stay fixed.
    Eigen::Array<bool, Eigen::Dynamic, 1> pinned(n);
    for (Eigen::Index i = 0; i < n; ++i) pinned[i] = x[i] <= lower[i] && g[i] > 0.0;
    Vector q = g;
    for (Eigen::Index i = 0; i < n; ++i)
      if (pinned[i]) q[i] = 0.0;
    if (use_memory && !memory.empty()) {
      std::vector<double> alpha(memory.size());
      for (std::size_t k = memory.size(); k-- > 0;) {
        alpha[k] = memory[k].rho * memory[k].s.dot(q);
        q -= alpha[k] * memory[k].y;
      }
      q *= memory.back().s.dot(memory.back().y) / memory.back().y.squaredNorm();
      for (std::size_t k = 0; k < memory.size(); ++k) {
        const double beta = memory[k].rho * memory[k].y.dot(q);
        q += (alpha[k] - beta) * memory[k].s;
      }
    }
    Vector dir = -q;
    for (Eigen::Index i = 0; i < n; ++i)
      if (pinned[i] || (x[i] <= lower[i] && dir[i] < 0.0)) dir[i] = 0.0;
    return dir;
  };

  for (res.iterations = 0; res.iterations < opts.max_iters; ++res.iterations) {
    if (projected_gradient_norm(x, g, lower) <= opts.grad_tol) break;

    Vector dir = search_direction(true);
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      memory.clear();
      dir = search_direction(false);
      slope = g.dot(dir);
      if (!(slope < 0.0)) break;
    }

    // Longest step that stays feasible without projection.
    double t_max = kInf;
    for (Eigen::Index i = 0; i < n; ++i)
      if (dir[i] < 0.0 && std::isfinite(lower[i])) t_max = std::min(t_max, (x[i] - lower[i]) / -dir[i]);

    const double t_init = memory.empty() ? std::min(1.0, 1.0 / dir.norm()) : 1.0;
    LinePoint start;
    start.f = fx;
    start.slope = slope;
    LinePoint next;
    if (!wolfe_search(f, x, dir, start, t_init, t_max, next, res.evaluations) || !(next.f < fx)) {
      if (memory.empty()) break;
      memory.clear();  // retry once from steepest descent
      continue;
    }

    Vector x_new = project(next.x, lower);
    if (next.t >= t_max) {
      // Land exactly on the bound that limited the step.
      for (Eigen::Index i = 0; i < n; ++i)
        if (dir[i] < 0.0 && std::isfinite(lower[i]) && (x[i] - lower[i]) / -dir[i] <= t_max) x_new[i] = lower[i];
    }
    Vector g_new = next.g;
    double f_new = next.f;
    if (x_new != next.x) {
      f_new = f(x_new, g_new);
      ++res.evaluations;
      if (!std::isfinite(f_new) || !g_new.allFinite() || f_new > next.f) {
        x_new = next.x;
        g_new = next.g;
        f_new = next.f;
      }
    }

    Vector s = x_new - x;
    Vector y = g_new - g;
    const double sy = s.dot(y);
    const double f_old = fx;
    x = std::move(x_new);
    fx = f_new;
    g = std::move(g_new);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      memory.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(memory.size()) > opts.history) memory.pop_front();
    }
    if (f_old - fx <= 10.0 * std::numeric_limits<double>::epsilon() *
                           std::max({std::abs(f_old), std::abs(fx), 1e-300})) {
      if (projected_gradient_norm(x, g, lower) <= opts.grad_tol || memory.empty()) break;
      memory.clear();
    }
  }
  res.x = std::move(x);
  res.value = fx;
  res.projected_grad_norm = projected_gradient_norm(res.x, g, lower);
  return res;
}

}  // namespace sketchmix
