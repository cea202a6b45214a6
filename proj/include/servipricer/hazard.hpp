#pragma once

// Failure-intensity functions, their exact piecewise integrals, the survival
// function and inverse-transform sampling of the next failure time.
//
// The minor-failure intensity is a sawtooth baseline (linear wear, partial
// reset of size kappa0 at each preventive-maintenance epoch) scaled by
// exp(beta1'chi1 + beta2*x2(t)). The catastrophic mode has a Weibull
// intensity. Both clocks restart at an overhaul: `segment_origin` is the
// virtual-age zero point, `baseline_origin` the zero point of the
// maintenance-phase sawtooth (identical by default, kept separate so the
// calendar-aligned maintenance-schedule convention stays available).
//
// Between maintenance epochs and covariate switch points the integrand has a
// closed antiderivative, so cumulative hazards are exact; no quadrature is
// used anywhere in this module.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <vector>

#include "servipricer/types.hpp"

namespace servipricer {

struct TvcStep {
  double time = 0.0;
  double value = 0.0;
};

// Covariate state of one machine over one renewal segment. The time-varying
// covariate is piecewise constant; its recorded value at time t is the value
// immediately before t (a switch at t takes effect just after t).
struct HazardContext {
  double segment_origin = 0.0;
  double baseline_origin = 0.0;
  std::array<double, kNumFixedCovariates> fixed{0, 0, 0, 0};
  double tvc_initial = 0.0;
  std::vector<TvcStep> tvc_steps;  // strictly increasing times

  static HazardContext at_origin(const MachineProfile& profile, double origin = 0.0) {
    HazardContext ctx;
    ctx.segment_origin = origin;
    ctx.baseline_origin = origin;
    for (int k = 0; k < kNumFixedCovariates; ++k) ctx.fixed[k] = profile.fixed[k];
    ctx.tvc_initial = profile.initial_tvc;
    return ctx;
  }

  double tvc_at(double t) const {
    double v = tvc_initial;
    for (const auto& s : tvc_steps) {
      if (s.time < t)
        v = s.value;
      else
        break;
    }
    return v;
  }
};

// baseline intensity at time u on the maintenance clock:
//   alpha0 * ((u mod pm_interval) + (1 - kappa0) * floor(u / pm_interval)) + gamma0
inline double baseline_intensity(double u, const HazardParams& p) {
  assert(u >= 0.0);
  const double d = p.pm_interval;
  const double j = std::floor(u / d);
  return p.alpha0 * ((u - j * d) + (1.0 - p.kappa0) * j) + p.gamma0;
}

// integral of the baseline intensity over [0, u], exact across epochs
inline double baseline_cumulative(double u, const HazardParams& p) {
  if (u <= 0.0) return 0.0;
  const double d = p.pm_interval;
  const double j = std::floor(u / d);
  const double r = u - j * d;
  return p.alpha0 * (j * d * d / 2.0 + (1.0 - p.kappa0) * d * j * (j - 1.0) / 2.0 +
                     r * r / 2.0 + (1.0 - p.kappa0) * j * r) +
         p.gamma0 * u;
}

// beta1'chi1 + beta2*x2(t), restricted to the plan's covariate sets
inline double covariate_effect(double t, const HazardContext& ctx, const HazardParams& p,
                               const TariffPlan& plan) {
  double eta = 0.0;
  for (int k = 0; k < kNumFixedCovariates; ++k)
    if (plan.chi1[k]) eta += p.beta1[k] * ctx.fixed[k];
  if (plan.chi2) eta += p.beta2 * ctx.tvc_at(t);
  return eta;
}

inline double minor_intensity(double t, const HazardContext& ctx, const HazardParams& p,
                              const TariffPlan& plan) {
  assert(t >= ctx.baseline_origin);
  return baseline_intensity(t - ctx.baseline_origin, p) *
         std::exp(covariate_effect(t, ctx, p, plan));
}

inline double catastrophic_intensity(double t, const HazardContext& ctx, const HazardParams& p) {
  const double u = t - ctx.segment_origin;
  assert(u >= 0.0);
  return p.kappa_c * std::pow(p.alpha_c, p.kappa_c) * std::pow(u, p.kappa_c - 1.0);
}

inline double total_intensity(double t, const HazardContext& ctx, const HazardParams& p,
                              const TariffPlan& plan) {
  return minor_intensity(t, ctx, p, plan) + catastrophic_intensity(t, ctx, p);
}

// cumulative hazard of the catastrophic mode over [t0, t1]
inline double catastrophic_cumulative(double t0, double t1, const HazardContext& ctx,
                                      const HazardParams& p) {
  const double u0 = std::max(0.0, t0 - ctx.segment_origin);
  const double u1 = std::max(0.0, t1 - ctx.segment_origin);
  return std::pow(p.alpha_c * u1, p.kappa_c) - std::pow(p.alpha_c * u0, p.kappa_c);
}

// integral of the total intensity over [t0, t1], exact: the covariate factor
// is constant between switch points of x2(t) and the baseline/Weibull parts
// have closed antiderivatives
inline double integrated_hazard(double t0, double t1, const HazardContext& ctx,
                                const HazardParams& p, const TariffPlan& plan) {
  assert(t0 <= t1);
  if (t1 <= t0) return 0.0;

  double eta_fixed = 0.0;
  for (int k = 0; k < kNumFixedCovariates; ++k)
    if (plan.chi1[k]) eta_fixed += p.beta1[k] * ctx.fixed[k];

  double minor = 0.0;
  double a = t0;
  // a switch exactly at t0 is already in force on (t0, t1] under the
  // value-immediately-before convention
  double value = ctx.tvc_initial;
  for (const auto& s : ctx.tvc_steps) {
    if (s.time <= t0)
      value = s.value;
    else
      break;
  }
  auto piece = [&](double lo, double hi, double x2) {
    const double eta = eta_fixed + (plan.chi2 ? p.beta2 * x2 : 0.0);
    return std::exp(eta) * (baseline_cumulative(hi - ctx.baseline_origin, p) -
                            baseline_cumulative(lo - ctx.baseline_origin, p));
  };
  for (const auto& s : ctx.tvc_steps) {
    if (s.time <= t0) continue;
    if (s.time >= t1) break;
    minor += piece(a, s.time, value);
    a = s.time;
    value = s.value;
  }
  minor += piece(a, t1, value);

  return minor + catastrophic_cumulative(t0, t1, ctx, p);
}

inline double survival(double t, double t0, const HazardContext& ctx, const HazardParams& p,
                       const TariffPlan& plan) {
  return std::exp(-integrated_hazard(t0, t, ctx, p, plan));
}

inline constexpr double kInverseTimeTol = 1e-10;
inline constexpr double kMaxSegmentHorizon = 1e4;  // years

// Inverse-transform sampling of the next failure time: the unique t >= t0
// with survival(t, t0) = u. The target cumulative hazard -log(u) is bracketed
// piece by piece (maintenance epochs and covariate switch points bound the
// pieces), then bisected within the final smooth piece. Returns +infinity if
// the hazard accumulates less than the target over `max_horizon` years,
// which is possible only when the intensities vanish.
inline double sample_next_failure(double t0, double u, const HazardContext& ctx,
                                  const HazardParams& p, const TariffPlan& plan,
                                  double max_horizon = kMaxSegmentHorizon) {
  assert(u > 0.0 && u < 1.0);
  const double target = -std::log(u);
  if (target <= 0.0) return t0;

  const double d = p.pm_interval;
  const double cap = t0 + max_horizon;
  std::size_t step_idx = 0;
  while (step_idx < ctx.tvc_steps.size() && ctx.tvc_steps[step_idx].time <= t0) ++step_idx;

  double a = t0;
  double acc = 0.0;
  while (a < cap) {
    // next piece boundary: maintenance epoch or covariate switch, whichever first
    double k = std::floor((a - ctx.baseline_origin) / d) + 1.0;
    double pm_epoch = ctx.baseline_origin + k * d;
    if (pm_epoch <= a) pm_epoch = a + d;
    double b = std::min(pm_epoch, cap);
    bool advance_step = false;
    if (step_idx < ctx.tvc_steps.size() && ctx.tvc_steps[step_idx].time < b) {
      b = ctx.tvc_steps[step_idx].time;
      advance_step = true;
    }
    const double g = integrated_hazard(a, b, ctx, p, plan);
    if (acc + g >= target) {
      double lo = a, hi = b;
      const double want = target - acc;
      while (hi - lo > kInverseTimeTol) {
        const double mid = 0.5 * (lo + hi);
        if (integrated_hazard(a, mid, ctx, p, plan) < want)
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    acc += g;
    a = b;
    if (advance_step) ++step_idx;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace servipricer
