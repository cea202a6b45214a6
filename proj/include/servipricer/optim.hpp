#pragma once

// Quasi-Newton (BFGS) minimizer with central-difference gradients and a
// backtracking line search. The likelihoods in this project are smooth and
// low-dimensional, so a single deterministic start is sufficient.

#include <cmath>
#include <vector>

#include "servipricer/numeric.hpp"

namespace servipricer {

struct OptimResult {
  std::vector<double> x;
  double f = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

struct OptimSettings {
  double rel_tol = 1e-8;
  int max_iterations = 500;
  double grad_step = 1e-6;
};

inline OptimResult minimize_bfgs(const ObjectiveFn& f, std::vector<double> x0,
                                 const OptimSettings& settings = {}) {
  const std::size_t n = x0.size();
  OptimResult res;
  res.x = std::move(x0);
  res.f = f(res.x);
  if (!std::isfinite(res.f)) return res;

  // inverse Hessian approximation, started at identity
  std::vector<double> Hinv(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) Hinv[i * n + i] = 1.0;

  std::vector<double> g = central_gradient(f, res.x, settings.grad_step);
  std::vector<double> dir(n), x_new(n), g_new(n), s(n), y(n), hy(n);

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    res.iterations = iter + 1;

    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) v += Hinv[i * n + j] * g[j];
      dir[i] = -v;
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += dir[i] * g[i];
    if (slope >= 0.0) {  // not a descent direction: reset to steepest descent
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) Hinv[i * n + j] = (i == j) ? 1.0 : 0.0;
        dir[i] = -g[i];
      }
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) slope -= g[i] * g[i];
      if (slope == 0.0) break;
    }

    // backtracking Armijo search
    double step = 1.0;
    double f_new = res.f;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * dir[i];
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * step * slope) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;

    g_new = central_gradient(f, x_new, settings.grad_step);
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = g_new[i] - g[i];
      sy += s[i] * y[i];
    }

    const double f_change = std::fabs(res.f - f_new);
    res.x = x_new;
    res.f = f_new;
    g = g_new;

    double gnorm = 0.0;
    for (double gi : g) gnorm += gi * gi;
    res.gradient_norm = std::sqrt(gnorm);

    if (f_change <= settings.rel_tol * (std::fabs(res.f) + 1.0)) {
      res.converged = true;
      break;
    }

    if (sy > 1e-12) {  // curvature condition holds: BFGS update of Hinv
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < n; ++j) v += Hinv[i * n + j] * y[j];
        hy[i] = v;
      }
      double yhy = 0.0;
      for (std::size_t i = 0; i < n; ++i) yhy += y[i] * hy[i];
      const double c1 = (sy + yhy) / (sy * sy);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          Hinv[i * n + j] +=
              c1 * s[i] * s[j] - (hy[i] * s[j] + s[i] * hy[j]) / sy;
    }
  }
  return res;
}

}  // namespace servipricer
