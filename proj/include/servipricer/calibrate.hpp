#pragma once

// Maximum-likelihood calibration of the hierarchical model. The likelihood
// factorizes into three independent blocks that are fitted separately:
//
//   1. time-to-failure: competing minor/catastrophic intensities over the
//      inter-failure gaps, minor subtypes aggregated,
//   2. minor failure types: multinomial logit with the co-occurrence type as
//      reference class,
//   3. severities: one gamma model per event class plus the Frank copula for
//      the component costs of co-occurring failures, fitted margins-first.
//
// Optimization runs on an unconstrained reparameterization (log for positive
// parameters, logit for the maintenance-improvement factor). Standard errors
// come from the inverse numeric negative-Hessian at the optimum; confidence
// intervals are built on the transformed scale and mapped back, which keeps
// them inside the parameter ranges.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "servipricer/distributions.hpp"
#include "servipricer/hazard.hpp"
#include "servipricer/numeric.hpp"
#include "servipricer/optim.hpp"
#include "servipricer/parallel.hpp"
#include "servipricer/simulate.hpp"
#include "servipricer/types.hpp"

namespace servipricer {

struct ParamEstimate {
  std::string name;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double ci_lo = std::numeric_limits<double>::quiet_NaN();
  double ci_hi = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
};

struct FitResult {
  ModelParams estimates;
  std::vector<ParamEstimate> params;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> block_errors;

  const ParamEstimate* find(const std::string& name) const {
    for (const auto& p : params)
      if (p.name == name) return &p;
    return nullptr;
  }
};

struct CalibrationOptions {
  bool reset_pm_phase_at_overhaul = true;  // must match the data-generating convention
  double pm_interval = 0.0;  // 0 = infer from the earliest maintenance event
  OptimSettings optim;
};

// ---------------------------------------------------------------------------
// parameter transforms

namespace transform {
enum class Kind { identity, log, logit };

inline double to_unconstrained(Kind k, double v) {
  switch (k) {
    case Kind::identity: return v;
    case Kind::log: return std::log(v);
    case Kind::logit: return std::log(v / (1.0 - v));
  }
  return v;
}
inline double to_natural(Kind k, double x) {
  switch (k) {
    case Kind::identity: return x;
    case Kind::log: return std::exp(x);
    case Kind::logit: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}
inline double dnatural_dx(Kind k, double x) {
  switch (k) {
    case Kind::identity: return 1.0;
    case Kind::log: return std::exp(x);
    case Kind::logit: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}
}  // namespace transform

namespace detail {

struct TransformedParam {
  std::string name;
  transform::Kind kind = transform::Kind::identity;
};

// per-parameter estimates/CIs from the optimum of a transformed objective
inline std::vector<ParamEstimate> estimates_with_intervals(
    const ObjectiveFn& negloglik, const std::vector<double>& x_opt,
    const std::vector<TransformedParam>& spec, bool converged) {
  const std::size_t n = x_opt.size();
  std::vector<ParamEstimate> out(n);
  SymMatrix cov(n);
  bool have_cov = false;
  if (converged) {
    SymMatrix H = central_hessian(negloglik, x_opt);
    have_cov = H.inverse_spd(cov);
  }
  for (std::size_t i = 0; i < n; ++i) {
    ParamEstimate& pe = out[i];
    pe.name = spec[i].name;
    pe.estimate = transform::to_natural(spec[i].kind, x_opt[i]);
    if (have_cov && cov(i, i) > 0.0) {
      const double se_u = std::sqrt(cov(i, i));
      pe.std_error = std::fabs(transform::dnatural_dx(spec[i].kind, x_opt[i])) * se_u;
      pe.ci_lo = transform::to_natural(spec[i].kind, x_opt[i] - kZ95 * se_u);
      pe.ci_hi = transform::to_natural(spec[i].kind, x_opt[i] + kZ95 * se_u);
      pe.ok = std::isfinite(pe.std_error);
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// time-to-failure block

namespace detail {

// one inter-failure (or censoring) interval with constant covariate state
struct FailureGap {
  double t_start = 0.0;
  double t_end = 0.0;
  double segment_origin = 0.0;
  double x2 = 0.0;
  int kind = 2;  // 0 minor, 1 catastrophic, 2 censored
};

struct MachineGaps {
  std::array<double, kNumFixedCovariates> fixed{0, 0, 0, 0};
  std::vector<FailureGap> gaps;
};

struct TtfData {
  std::vector<MachineGaps> machines;  // sorted by machine id
  long n_minor = 0;
  long n_cat = 0;
};

inline TtfData prepare_ttf(const PortfolioDataset& data) {
  TtfData out;
  out.machines.reserve(data.timelines.size());
  std::vector<const Timeline*> ordered;
  ordered.reserve(data.timelines.size());
  for (const auto& tl : data.timelines) ordered.push_back(&tl);
  std::sort(ordered.begin(), ordered.end(),
            [](const Timeline* a, const Timeline* b) { return a->machine_id < b->machine_id; });
  for (const Timeline* tl : ordered) {
    MachineGaps mg;
    for (int k = 0; k < kNumFixedCovariates; ++k) mg.fixed[k] = tl->profile.fixed[k];
    double segment_origin = 0.0;
    for (const auto& e : tl->events) {
      if (e.type == EventType::maintenance) continue;
      FailureGap g;
      g.t_start = e.t_prev;
      g.t_end = e.t;
      g.segment_origin = segment_origin;
      g.x2 = e.x2;
      if (e.type == EventType::censor)
        g.kind = 2;
      else if (e.type == EventType::catastrophic)
        g.kind = 1;
      else
        g.kind = 0;
      mg.gaps.push_back(g);
      if (g.kind == 0) ++out.n_minor;
      if (g.kind == 1) {
        ++out.n_cat;
        segment_origin = e.t;
      }
    }
    out.machines.push_back(std::move(mg));
  }
  return out;
}

// log-likelihood of the time-to-failure block; -inf when a parameter makes an
// observed event impossible. `include_cat` drops the Weibull mode (used when
// no catastrophic failures were observed).
inline double ttf_loglik(const TtfData& data, const HazardParams& p, const TariffPlan& plan,
                         bool reset_pm_phase, bool include_cat) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> partial(data.machines.size(), 0.0);
  parallel_for(
      data.machines.size(),
      [&](std::size_t m) {
        const MachineGaps& mg = data.machines[m];
        KahanAccumulator acc;
        for (const FailureGap& g : mg.gaps) {
          HazardContext ctx;
          ctx.segment_origin = g.segment_origin;
          ctx.baseline_origin = reset_pm_phase ? g.segment_origin : 0.0;
          ctx.fixed = mg.fixed;
          ctx.tvc_initial = g.x2;
          double h = std::exp(covariate_effect(g.t_end, ctx, p, plan)) *
                     (baseline_cumulative(g.t_end - ctx.baseline_origin, p) -
                      baseline_cumulative(g.t_start - ctx.baseline_origin, p));
          if (include_cat) h += catastrophic_cumulative(g.t_start, g.t_end, ctx, p);
          acc.add(-h);
          if (g.kind == 0) {
            const double lam = minor_intensity(g.t_end, ctx, p, plan);
            if (!(lam > 0.0) || !std::isfinite(lam)) {
              partial[m] = neg_inf;
              return;
            }
            acc.add(std::log(lam));
          } else if (g.kind == 1) {
            if (!include_cat) {
              partial[m] = neg_inf;
              return;
            }
            const double lam = catastrophic_intensity(g.t_end, ctx, p);
            if (!(lam > 0.0) || !std::isfinite(lam)) {
              partial[m] = neg_inf;
              return;
            }
            acc.add(std::log(lam));
          }
        }
        partial[m] = acc.value();
      },
      data.machines.size() < 64 ? 1 : 0);
  KahanAccumulator total;
  for (double v : partial) {
    if (v == neg_inf) return neg_inf;
    total.add(v);
  }
  return total.value();
}

}  // namespace detail

// Sum over failures and censored intervals of c*log(lambda_y(t)) + log S(t|t-).
// Returns -infinity (never throws) when some observed event has zero intensity
// under the supplied parameters.
inline double time_to_failure_loglik(const HazardParams& p, const TariffPlan& plan,
                                     const PortfolioDataset& data,
                                     const CalibrationOptions& options = {}) {
  const auto prepared = detail::prepare_ttf(data);
  return detail::ttf_loglik(prepared, p, plan, options.reset_pm_phase_at_overhaul,
                            /*include_cat=*/true);
}

inline FitResult fit_time_to_failure(const PortfolioDataset& data, const TariffPlan& plan,
                                     const CalibrationOptions& options = {}) {
  using transform::Kind;
  FitResult res;
  const auto prepared = detail::prepare_ttf(data);

  if (prepared.machines.empty() || prepared.n_minor == 0) {
    res.block_errors.push_back("time-to-failure: no observed minor failures");
    return res;
  }
  const bool include_cat = prepared.n_cat > 0;
  if (!include_cat)
    res.block_errors.push_back(
        "time-to-failure: no catastrophic failures observed, Weibull block unidentifiable");

  double exposure = 0.0;
  for (const auto& tl : data.timelines) exposure += tl.observation_length;
  const double rate_minor = static_cast<double>(prepared.n_minor) / exposure;
  const double rate_cat = std::max(1e-3, static_cast<double>(prepared.n_cat) / exposure);

  // the maintenance interval is exogenous, not estimated; the first scheduled
  // maintenance sits one interval into the observation window
  double pm_interval = options.pm_interval;
  if (pm_interval <= 0.0) {
    pm_interval = std::numeric_limits<double>::infinity();
    for (const auto& tl : data.timelines)
      for (const auto& e : tl.events)
        if (e.type == EventType::maintenance) {
          pm_interval = std::min(pm_interval, e.t);
          break;  // events are sorted, first maintenance is the earliest
        }
    if (!std::isfinite(pm_interval)) pm_interval = 1.0;
  }

  // layout: alpha0, kappa0, gamma0, beta1 (chi1 members), beta2 (if chi2),
  // then the Weibull pair when identifiable
  std::vector<detail::TransformedParam> spec;
  std::vector<double> x0;
  spec.push_back({"alpha0", Kind::log});
  x0.push_back(std::log(std::max(rate_minor, 1e-3)));
  spec.push_back({"kappa0", Kind::logit});
  x0.push_back(0.0);
  spec.push_back({"gamma0", Kind::log});
  x0.push_back(std::log(std::max(0.5 * rate_minor, 1e-4)));
  for (int k = 0; k < kNumFixedCovariates; ++k)
    if (plan.chi1[k]) {
      spec.push_back({"beta1_" + std::to_string(k + 1), Kind::identity});
      x0.push_back(0.0);
    }
  if (plan.chi2) {
    spec.push_back({"beta2", Kind::identity});
    x0.push_back(0.0);
  }
  if (include_cat) {
    spec.push_back({"alpha_c", Kind::log});
    x0.push_back(std::log(rate_cat));
    spec.push_back({"kappa_c", Kind::log});
    x0.push_back(0.0);
  }

  auto unpack = [&, plan, pm_interval](const std::vector<double>& x) {
    HazardParams p;
    std::size_t i = 0;
    p.alpha0 = std::exp(x[i++]);
    p.kappa0 = 1.0 / (1.0 + std::exp(-x[i++]));
    p.gamma0 = std::exp(x[i++]);
    for (int k = 0; k < kNumFixedCovariates; ++k)
      if (plan.chi1[k]) p.beta1[k] = x[i++];
    if (plan.chi2) p.beta2 = x[i++];
    p.pm_interval = pm_interval;
    if (include_cat) {
      p.alpha_c = std::exp(x[i++]);
      p.kappa_c = std::exp(x[i++]);
    } else {
      p.alpha_c = 1e-12;
      p.kappa_c = 1.0;
    }
    return p;
  };

  ObjectiveFn neg = [&](const std::vector<double>& x) {
    return -detail::ttf_loglik(prepared, unpack(x), plan, options.reset_pm_phase_at_overhaul,
                               include_cat);
  };

  OptimResult opt = minimize_bfgs(neg, x0, options.optim);
  res.converged = opt.converged && res.block_errors.empty();
  res.iterations = opt.iterations;
  res.loglik = -opt.f;
  res.estimates.hazard = unpack(opt.x);
  res.params = detail::estimates_with_intervals(neg, opt.x, spec, opt.converged);
  if (!include_cat) {
    for (const char* name : {"alpha_c", "kappa_c"}) {
      ParamEstimate pe;
      pe.name = name;
      res.params.push_back(pe);
    }
  }
  if (!opt.converged)
    res.block_errors.push_back("time-to-failure: optimizer did not converge");
  return res;
}

// ---------------------------------------------------------------------------
// minor-failure-type block

inline FitResult fit_failure_types(const PortfolioDataset& data, const TariffPlan& plan,
                                   const CalibrationOptions& options = {}) {
  using transform::Kind;
  FitResult res;

  struct Obs {
    int type;  // 0, 1, 2
    std::array<double, kNumFixedCovariates> fixed;
  };
  std::vector<Obs> obs;
  std::array<long, kNumMinorTypes> counts{0, 0, 0};
  for (const auto& tl : data.timelines)
    for (const auto& e : tl.events)
      if (e.observed && is_minor(e.type)) {
        Obs o;
        o.type = e.type == EventType::minor1 ? 0 : (e.type == EventType::minor2 ? 1 : 2);
        for (int k = 0; k < kNumFixedCovariates; ++k) o.fixed[k] = tl.profile.fixed[k];
        ++counts[o.type];
        obs.push_back(o);
      }
  for (int c = 0; c < kNumMinorTypes; ++c)
    if (counts[c] == 0) {
      res.block_errors.push_back("failure types: no observations of minor type " +
                                 std::to_string(c + 1));
      return res;
    }

  std::vector<int> z_members;
  for (int k = 0; k < kNumFixedCovariates; ++k)
    if (plan.z[k]) z_members.push_back(k);
  const std::size_t dim_class = 1 + z_members.size();

  std::vector<detail::TransformedParam> spec;
  for (int c = 0; c < kNumMinorTypes - 1; ++c) {
    spec.push_back({"alpha" + std::to_string(c + 1) + "_0", Kind::identity});
    for (int k : z_members)
      spec.push_back({"alpha" + std::to_string(c + 1) + "_" + std::to_string(k + 1),
                      Kind::identity});
  }
  std::vector<double> x0(spec.size(), 0.0);

  auto class_linear = [&](const std::vector<double>& x, int c, const Obs& o) {
    const double* base = x.data() + c * dim_class;
    double lin = base[0];
    for (std::size_t j = 0; j < z_members.size(); ++j) lin += base[1 + j] * o.fixed[z_members[j]];
    return lin;
  };

  ObjectiveFn neg = [&](const std::vector<double>& x) {
    KahanAccumulator ll;
    for (const Obs& o : obs) {
      const double l0 = class_linear(x, 0, o);
      const double l1 = class_linear(x, 1, o);
      const double m = std::max({0.0, l0, l1});
      const double lse = m + std::log(std::exp(-m) + std::exp(l0 - m) + std::exp(l1 - m));
      double num = 0.0;  // reference class
      if (o.type == 0) num = l0;
      if (o.type == 1) num = l1;
      ll.add(num - lse);
    }
    return -ll.value();
  };

  OptimResult opt = minimize_bfgs(neg, x0, options.optim);
  bool separated = false;
  for (double xi : opt.x)
    if (std::fabs(xi) > 30.0) separated = true;
  res.converged = opt.converged && !separated;
  res.iterations = opt.iterations;
  res.loglik = -opt.f;
  res.params = detail::estimates_with_intervals(neg, opt.x, spec, res.converged);
  for (int c = 0; c < kNumMinorTypes - 1; ++c) {
    res.estimates.type_logit.alpha[c].fill(0.0);
    res.estimates.type_logit.alpha[c][0] = opt.x[c * dim_class];
    for (std::size_t j = 0; j < z_members.size(); ++j)
      res.estimates.type_logit.alpha[c][z_members[j] + 1] = opt.x[c * dim_class + 1 + j];
  }
  if (separated)
    res.block_errors.push_back("failure types: complete separation, estimates diverge");
  else if (!opt.converged)
    res.block_errors.push_back("failure types: optimizer did not converge");
  return res;
}

// ---------------------------------------------------------------------------
// severity block

namespace detail {

struct GammaFit {
  GammaSeverity params;
  std::vector<ParamEstimate> table;
  double loglik = 0.0;
  bool ok = false;
  std::string error;
};

inline GammaFit fit_gamma_class(const std::vector<double>& xs, const std::string& label,
                                const OptimSettings& settings) {
  using transform::Kind;
  GammaFit fit;
  if (xs.size() < 2) {
    fit.error = label + ": fewer than 2 cost observations";
    return fit;
  }
  MeanVar mv = mean_var(xs);
  if (!(mv.variance > 1e-12 * mv.mean * mv.mean)) {
    fit.error = label + ": zero cost variance, gamma shape diverges";
    return fit;
  }
  const double shape0 = mv.mean * mv.mean / mv.variance;
  const double scale0 = mv.variance / mv.mean;

  ObjectiveFn neg = [&](const std::vector<double>& x) {
    const double shape = std::exp(x[0]);
    const double scale = std::exp(x[1]);
    KahanAccumulator ll;
    for (double v : xs) ll.add(gamma_logpdf(v, shape, scale));
    return -ll.value();
  };
  OptimResult opt = minimize_bfgs(neg, {std::log(shape0), std::log(scale0)}, settings);
  fit.params.shape = std::exp(opt.x[0]);
  fit.params.scale = std::exp(opt.x[1]);
  fit.loglik = -opt.f;
  fit.ok = opt.converged;
  std::vector<TransformedParam> spec{{label + "_shape", Kind::log}, {label + "_scale", Kind::log}};
  fit.table = estimates_with_intervals(neg, opt.x, spec, opt.converged);
  if (!opt.converged) fit.error = label + ": optimizer did not converge";
  return fit;
}

}  // namespace detail

inline FitResult fit_severities(const PortfolioDataset& data, const TariffPlan& plan,
                                const CalibrationOptions& options = {}) {
  using transform::Kind;
  for (int k = 0; k < kNumFixedCovariates; ++k)
    if (plan.w[k] || plan.w_y[k] || plan.w_c[k])
      throw std::invalid_argument("severity covariates are not supported");

  FitResult res;
  std::vector<double> costs_m, costs_1, costs_2, costs_c;
  std::vector<std::pair<double, double>> pairs_3;
  for (const auto& tl : data.timelines)
    for (const auto& e : tl.events) {
      if (!e.observed) continue;
      switch (e.type) {
        case EventType::maintenance: costs_m.push_back(e.cost); break;
        case EventType::minor1: costs_1.push_back(e.cost); break;
        case EventType::minor2: costs_2.push_back(e.cost); break;
        case EventType::minor3: pairs_3.emplace_back(e.cost_sub1, e.cost_sub2); break;
        case EventType::catastrophic: costs_c.push_back(e.cost); break;
        default: break;
      }
    }

  auto fm = detail::fit_gamma_class(costs_m, "gamma_m", options.optim);
  auto f1 = detail::fit_gamma_class(costs_1, "gamma_1", options.optim);
  auto f2 = detail::fit_gamma_class(costs_2, "gamma_2", options.optim);
  auto fc = detail::fit_gamma_class(costs_c, "gamma_c", options.optim);
  for (auto* f : {&fm, &f1, &f2, &fc}) {
    if (!f->error.empty()) res.block_errors.push_back("severity: " + f->error);
    res.params.insert(res.params.end(), f->table.begin(), f->table.end());
    res.loglik += f->loglik;
  }
  res.estimates.severity.maintenance = fm.params;
  res.estimates.severity.minor1 = f1.params;
  res.estimates.severity.minor2 = f2.params;
  res.estimates.severity.catastrophic = fc.params;

  // two-stage copula fit: probability transforms through the fitted margins,
  // then 1-D ML for the dependence parameter
  ParamEstimate theta_pe;
  theta_pe.name = "theta";
  if (pairs_3.size() >= 2 && f1.ok && f2.ok) {
    std::vector<std::pair<double, double>> uv;
    uv.reserve(pairs_3.size());
    for (auto [a, b] : pairs_3) {
      double u = gamma_cdf(a, f1.params.shape, f1.params.scale);
      double v = gamma_cdf(b, f2.params.shape, f2.params.scale);
      u = std::min(1.0 - 1e-12, std::max(1e-12, u));
      v = std::min(1.0 - 1e-12, std::max(1e-12, v));
      uv.emplace_back(u, v);
    }
    ObjectiveFn neg = [&](const std::vector<double>& x) {
      KahanAccumulator ll;
      for (auto [u, v] : uv) ll.add(frank_logpdf(u, v, x[0]));
      return -ll.value();
    };
    OptimResult opt = minimize_bfgs(neg, {0.0}, options.optim);
    auto table = detail::estimates_with_intervals(
        neg, opt.x, {{"theta", transform::Kind::identity}}, opt.converged);
    theta_pe = table[0];
    res.estimates.severity.frank_theta = opt.x[0];
    res.loglik += -opt.f;
    if (!opt.converged) res.block_errors.push_back("severity: copula fit did not converge");
  } else if (pairs_3.size() < 2) {
    res.block_errors.push_back("severity: fewer than 2 co-occurring cost pairs, theta unidentifiable");
  }
  res.params.push_back(theta_pe);

  res.converged = res.block_errors.empty();
  res.iterations = 0;
  return res;
}

// ---------------------------------------------------------------------------

// The decomposition factorizes the likelihood, so the three blocks are fitted
// independently and composed; each block equals its standalone fit.
inline FitResult fit_all(const PortfolioDataset& data, const TariffPlan& plan,
                         const CalibrationOptions& options = {}) {
  FitResult ttf = fit_time_to_failure(data, plan, options);
  FitResult types = fit_failure_types(data, plan, options);
  FitResult sev = fit_severities(data, plan, options);

  FitResult res;
  res.estimates.hazard = ttf.estimates.hazard;
  res.estimates.type_logit = types.estimates.type_logit;
  res.estimates.severity = sev.estimates.severity;
  for (const auto* block : {&ttf, &types, &sev}) {
    res.params.insert(res.params.end(), block->params.begin(), block->params.end());
    res.block_errors.insert(res.block_errors.end(), block->block_errors.begin(),
                            block->block_errors.end());
    res.loglik += block->loglik;
    res.iterations += block->iterations;
  }
  res.converged = ttf.converged && types.converged && sev.converged;
  return res;
}

}  // namespace servipricer
