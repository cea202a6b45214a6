#pragma once

// Break-even contract pricing. The price combines Monte-Carlo estimates of
// the expected failure counts over the contract horizon with analytic gamma
// cost means:
//
//   P* = E[N_cat] * E[X_c] + E[N_minor] * sum_y Pr[Y=y|z] * E[X_y] + n_m * E[S]
//
// Contracts are priced from virtual age zero with the profile's initial
// time-varying covariate value. Failure-time uniforms are antithetically
// paired to cut variance; a full-path cost estimator (mean of the simulated
// total contract cost) is carried along as an independent cross-check of the
// frequency/severity factorization. Quotes are deterministic in (seed,
// n_paths); path streams are derived from the plan-relevant covariates only,
// so profiles the plan cannot distinguish receive identical quotes.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "servipricer/numeric.hpp"
#include "servipricer/parallel.hpp"
#include "servipricer/rng.hpp"
#include "servipricer/simulate.hpp"
#include "servipricer/types.hpp"

namespace servipricer {

struct PricingOptions {
  bool antithetic = true;
  SimulateOptions sim;
};

struct CountEstimate {
  double minor_mean = 0.0;
  double minor_se = 0.0;
  double cat_mean = 0.0;
  double cat_se = 0.0;
  double cov_minor_cat = 0.0;  // covariance of the two mean estimators
  double cost_mean = 0.0;      // full-path contract cost
  double cost_se = 0.0;
  long paths = 0;
};

namespace seed_tag {
inline constexpr std::uint64_t failure_uniforms = 11;
inline constexpr std::uint64_t path_aux = 12;
}  // namespace seed_tag

// Monte-Carlo means of minor/catastrophic failure counts (and full-path
// costs) over contract-horizon paths starting at virtual age 0.
inline CountEstimate expected_counts(const MachineProfile& profile, double duration,
                                     const ModelParams& params, const TariffPlan& plan,
                                     long n_paths, std::uint64_t seed,
                                     const PricingOptions& options = {}) {
  if (!(duration > 0)) throw std::invalid_argument("duration must be > 0");
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  params.validate();

  const int per_group = options.antithetic && n_paths > 1 ? 2 : 1;
  const long n_groups = (n_paths + per_group - 1) / per_group;
  const long n_pm = static_cast<long>(std::floor(duration / params.hazard.pm_interval + 1e-12));

  struct GroupStats {
    double minor, cat, cost;
  };
  std::vector<GroupStats> groups(n_groups);

  parallel_for(static_cast<std::size_t>(n_groups), [&](std::size_t g) {
    const std::uint64_t group_seed = derive_seed(seed, g + 1);
    double minor = 0, cat = 0, cost = 0;
    for (int which = 0; which < per_group; ++which) {
      // both paths of a pair replay the same uniform sequence, the second
      // path flipped
      RngStream fail(derive_seed(group_seed, seed_tag::failure_uniforms));
      RngStream aux(derive_seed(group_seed, seed_tag::path_aux, which));
      auto uni = [&fail, which] {
        const double u = fail.uniform();
        return which == 1 ? 1.0 - u : u;
      };
      long nm = 0, nc = 0;
      double c = 0;
      walk_failures(profile, duration, params, plan, options.sim, uni, aux,
                    /*with_costs=*/true, [&](const GeneratedFailure& f) {
                      if (f.type == EventType::catastrophic)
                        ++nc;
                      else
                        ++nm;
                      c += f.cost.total;
                    });
      for (long j = 0; j < n_pm; ++j) c += get_maintenance_costs(params.severity, aux);
      minor += nm;
      cat += nc;
      cost += c;
    }
    groups[g] = {minor / per_group, cat / per_group, cost / per_group};
  });

  // group means are i.i.d.; moments over groups give the standard errors
  CountEstimate ce;
  ce.paths = n_groups * per_group;
  KahanAccumulator sm, sc, scost;
  for (const auto& gs : groups) {
    sm.add(gs.minor);
    sc.add(gs.cat);
    scost.add(gs.cost);
  }
  const double n = static_cast<double>(n_groups);
  ce.minor_mean = sm.value() / n;
  ce.cat_mean = sc.value() / n;
  ce.cost_mean = scost.value() / n;
  if (n_groups > 1) {
    KahanAccumulator vm, vc, vcost, cmc;
    for (const auto& gs : groups) {
      vm.add((gs.minor - ce.minor_mean) * (gs.minor - ce.minor_mean));
      vc.add((gs.cat - ce.cat_mean) * (gs.cat - ce.cat_mean));
      vcost.add((gs.cost - ce.cost_mean) * (gs.cost - ce.cost_mean));
      cmc.add((gs.minor - ce.minor_mean) * (gs.cat - ce.cat_mean));
    }
    ce.minor_se = std::sqrt(vm.value() / (n - 1) / n);
    ce.cat_se = std::sqrt(vc.value() / (n - 1) / n);
    ce.cost_se = std::sqrt(vcost.value() / (n - 1) / n);
    ce.cov_minor_cat = cmc.value() / (n - 1) / n;
  }
  return ce;
}

// seed key from the covariates the plan can actually see, so that profiles
// identical under the plan receive bit-identical quotes
inline std::uint64_t plan_visible_key(const MachineProfile& profile, const TariffPlan& plan) {
  std::uint64_t key = 0;
  for (int k = 0; k < kNumFixedCovariates; ++k) {
    if (plan.chi1[k] && profile.fixed[k]) key |= 1ULL << k;
    if (plan.z[k] && profile.fixed[k]) key |= 1ULL << (kNumFixedCovariates + k);
  }
  if (plan.chi2 && profile.initial_tvc) key |= 1ULL << (2 * kNumFixedCovariates);
  return key;
}

inline ContractQuote break_even_price(const MachineProfile& profile, double duration,
                                      const ModelParams& params, const TariffPlan& plan,
                                      long n_paths, std::uint64_t seed,
                                      const PricingOptions& options = {}) {
  // every quote replays the same uniform streams (common random numbers), so
  // profiles the plan cannot distinguish price bit-identically and price
  // differences across profiles carry far less Monte-Carlo noise than the
  // per-quote standard errors suggest
  const CountEstimate ce =
      expected_counts(profile, duration, params, plan, n_paths, seed, options);

  const auto probs = minor_type_probabilities(profile, params.type_logit, plan);
  const double mean_minor_cost = probs[0] * params.severity.class_mean(EventType::minor1) +
                                 probs[1] * params.severity.class_mean(EventType::minor2) +
                                 probs[2] * params.severity.class_mean(EventType::minor3);
  const double mean_cat_cost = params.severity.class_mean(EventType::catastrophic);
  const long n_pm = static_cast<long>(std::floor(duration / params.hazard.pm_interval + 1e-12));

  ContractQuote q;
  q.profile = profile;
  q.duration = duration;
  q.mc_paths = ce.paths;
  q.catastrophic_term = ce.cat_mean * mean_cat_cost;
  q.minor_term = ce.minor_mean * mean_minor_cost;
  q.maintenance_term = static_cast<double>(n_pm) * params.severity.maintenance.mean();
  q.price = q.catastrophic_term + q.minor_term + q.maintenance_term;
  q.mc_std_error = std::sqrt(mean_cat_cost * mean_cat_cost * ce.cat_se * ce.cat_se +
                             mean_minor_cost * mean_minor_cost * ce.minor_se * ce.minor_se +
                             2.0 * mean_cat_cost * mean_minor_cost * ce.cov_minor_cat);
  q.path_cost_mean = ce.cost_mean;
  q.path_cost_std_error = ce.cost_se;
  return q;
}

// quotes for all 32 machine profiles; plan-indistinguishable profiles share
// the computation (and therefore the quote)
inline std::vector<ContractQuote> price_table(const ModelParams& params, const TariffPlan& plan,
                                              double duration, long n_paths, std::uint64_t seed,
                                              const PricingOptions& options = {}) {
  const auto profiles = enumerate_profiles();
  std::map<std::uint64_t, ContractQuote> cache;
  std::vector<std::uint64_t> keys;
  for (const auto& p : profiles) keys.push_back(plan_visible_key(p, plan));

  std::vector<std::uint64_t> unique_keys;
  std::vector<MachineProfile> unique_profiles;
  for (std::size_t i = 0; i < profiles.size(); ++i)
    if (!cache.count(keys[i])) {
      cache[keys[i]] = ContractQuote{};
      unique_keys.push_back(keys[i]);
      unique_profiles.push_back(profiles[i]);
    }
  for (std::size_t i = 0; i < unique_keys.size(); ++i)
    cache[unique_keys[i]] =
        break_even_price(unique_profiles[i], duration, params, plan, n_paths, seed, options);

  std::vector<ContractQuote> out;
  out.reserve(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    ContractQuote q = cache[keys[i]];
    q.profile = profiles[i];
    out.push_back(q);
  }
  return out;
}

}  // namespace servipricer
