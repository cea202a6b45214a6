#pragma once

// Small numeric utilities: compensated summation, moments, dense symmetric
// solves for standard errors, and central-difference derivatives.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace servipricer {

inline constexpr double kZ95 = 1.959963984540054;  // 97.5% standard-normal quantile

class KahanAccumulator {
 public:
  void add(double x) {
    double y = x - c_;
    double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

inline double kahan_sum(std::span<const double> xs) {
  KahanAccumulator acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  // unbiased (n-1 denominator)
  std::size_t n = 0;

  double std_error() const { return n > 1 ? std::sqrt(variance / double(n)) : 0.0; }
};

inline MeanVar mean_var(std::span<const double> xs) {
  MeanVar mv;
  mv.n = xs.size();
  if (mv.n == 0) return mv;
  KahanAccumulator s;
  for (double x : xs) s.add(x);
  mv.mean = s.value() / double(mv.n);
  if (mv.n > 1) {
    KahanAccumulator q;
    for (double x : xs) q.add((x - mv.mean) * (x - mv.mean));
    mv.variance = q.value() / double(mv.n - 1);
  }
  return mv;
}

// Dense symmetric matrix in row-major order.
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  std::size_t size() const { return n_; }

  // Cholesky factorization A = L L'. Returns false if not positive definite.
  bool cholesky(SymMatrix& L) const {
    L = SymMatrix(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = (*this)(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
        if (i == j) {
          if (s <= 0.0 || !std::isfinite(s)) return false;
          L(i, i) = std::sqrt(s);
        } else {
          L(i, j) = s / L(j, j);
        }
      }
    }
    return true;
  }

  // Inverse via Cholesky; false if not positive definite.
  bool inverse_spd(SymMatrix& inv) const {
    SymMatrix L(n_);
    if (!cholesky(L)) return false;
    inv = SymMatrix(n_);
    // solve L L' X = I column by column
    std::vector<double> y(n_), x(n_);
    for (std::size_t col = 0; col < n_; ++col) {
      for (std::size_t i = 0; i < n_; ++i) {
        double s = (i == col) ? 1.0 : 0.0;
        for (std::size_t k = 0; k < i; ++k) s -= L(i, k) * y[k];
        y[i] = s / L(i, i);
      }
      for (std::size_t ii = n_; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n_; ++k) s -= L(k, ii) * x[k];
        x[ii] = s / L(ii, ii);
      }
      for (std::size_t i = 0; i < n_; ++i) inv(i, col) = x[i];
    }
    return true;
  }

 private:
  std::size_t n_;
  std::vector<double> a_;
};

using ObjectiveFn = std::function<double(const std::vector<double>&)>;

inline std::vector<double> central_gradient(const ObjectiveFn& f, const std::vector<double>& x,
                                            double h_base = 1e-6) {
  std::vector<double> g(x.size());
  std::vector<double> xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double h = h_base * std::max(1.0, std::fabs(x[i]));
    xp[i] = x[i] + h;
    double fp = f(xp);
    xp[i] = x[i] - h;
    double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline SymMatrix central_hessian(const ObjectiveFn& f, const std::vector<double>& x,
                                 double h_base = 1e-4) {
  const std::size_t n = x.size();
  SymMatrix H(n);
  std::vector<double> xp = x;
  const double f0 = f(x);
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = h_base * std::max(1.0, std::fabs(x[i]));
  for (std::size_t i = 0; i < n; ++i) {
    xp[i] = x[i] + h[i];
    double fp = f(xp);
    xp[i] = x[i] - h[i];
    double fm = f(xp);
    xp[i] = x[i];
    H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      xp[i] = x[i] + h[i];
      xp[j] = x[j] + h[j];
      double fpp = f(xp);
      xp[j] = x[j] - h[j];
      double fpm = f(xp);
      xp[i] = x[i] - h[i];
      double fmm = f(xp);
      xp[j] = x[j] + h[j];
      double fmp = f(xp);
      xp[i] = x[i];
      xp[j] = x[j];
      double v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  return H;
}

}  // namespace servipricer
