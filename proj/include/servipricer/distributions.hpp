#pragma once

// Gamma density/CDF helpers and the Frank copula: conditional-inverse pair
// sampling and log-density for two-stage dependence fitting.

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace servipricer {

inline double gamma_logpdf(double x, double shape, double scale) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) - std::lgamma(shape);
}

inline double gamma_cdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(shape, x / scale);
}

inline double gamma_quantile(double u, double shape, double scale) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("gamma_quantile needs u in (0,1)");
  return boost::math::gamma_p_inv(shape, u) * scale;
}

// theta below this magnitude is treated as the independence copula
inline constexpr double kFrankIndepEps = 1e-8;

// Conditional-distribution sampling: given u ~ U(0,1) and w ~ U(0,1), returns
// v such that (u,v) follows the Frank copula with parameter theta.
inline std::pair<double, double> frank_pair(double u, double w, double theta) {
  if (std::fabs(theta) < kFrankIndepEps) return {u, w};
  const double a = std::exp(-theta * u);
  const double num = w * std::expm1(-theta);
  const double den = a + w * (1.0 - a);
  double v = -std::log1p(num / den) / theta;
  if (v <= 0.0) v = std::numeric_limits<double>::min();
  if (v >= 1.0) v = 1.0 - 1e-16;
  return {u, v};
}

inline double frank_logpdf(double u, double v, double theta) {
  if (std::fabs(theta) < kFrankIndepEps) return 0.0;
  const double em = std::expm1(-theta);                        // e^-t - 1
  const double d0 = -em - std::expm1(-theta * u) * std::expm1(-theta * v);
  // c = -theta * em * exp(-theta(u+v)) / d0^2, positive for all valid inputs
  const double num = -theta * em;
  if (!(num > 0.0) || !(d0 != 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(num) - theta * (u + v) - 2.0 * std::log(std::fabs(d0));
}

}  // namespace servipricer
