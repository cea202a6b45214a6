#pragma once

// Portfolio simulation engine: failure times by inverse-transform sampling,
// two-stage failure-type draws (minor vs catastrophic from the intensity
// ratio, then the multinomial subtype), gamma costs with a Frank copula for
// the two components of a co-occurring failure, deterministic maintenance
// epochs, and terminal censoring.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "servipricer/distributions.hpp"
#include "servipricer/hazard.hpp"
#include "servipricer/parallel.hpp"
#include "servipricer/rng.hpp"
#include "servipricer/types.hpp"

namespace servipricer {

struct SimulateOptions {
  bool reset_tvc_at_overhaul = true;  // overhaul renews the machine, clearing x2
  bool reset_pm_phase_at_overhaul = true;  // restart the baseline sawtooth at overhaul
  double max_segment_horizon = kMaxSegmentHorizon;
};

// How observation windows are drawn: a fixed length, uniform on [lo, hi], or
// a mixture that gives the maximum length with probability p_max and a
// uniform draw otherwise.
struct ObservationLaw {
  enum class Kind { fixed, uniform, mixed };
  Kind kind = Kind::fixed;
  double fixed_years = 5.0;
  double lo = 3.0;
  double hi = 5.0;
  double p_max = 0.8;

  double draw(RngStream& rng) const {
    switch (kind) {
      case Kind::fixed: return fixed_years;
      case Kind::uniform: return lo + (hi - lo) * rng.uniform();
      case Kind::mixed: return rng.uniform() < p_max ? hi : lo + (hi - lo) * rng.uniform();
    }
    throw std::logic_error("bad observation law");
  }

  // "fixed:5" | "uniform:3:5" | "mixed:0.8:3:5"
  static ObservationLaw parse(const std::string& s);
};

inline ObservationLaw ObservationLaw::parse(const std::string& s) {
  auto fields = [&] {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      std::size_t next = s.find(':', pos);
      if (next == std::string::npos) next = s.size();
      out.push_back(s.substr(pos, next - pos));
      pos = next + 1;
    }
    return out;
  }();
  auto num = [&](const std::string& f) {
    std::size_t used = 0;
    double v = std::stod(f, &used);
    if (used != f.size()) throw std::invalid_argument("bad number in observation law: " + f);
    return v;
  };
  ObservationLaw law;
  if (fields.size() == 2 && fields[0] == "fixed") {
    law.kind = Kind::fixed;
    law.fixed_years = num(fields[1]);
    if (!(law.fixed_years > 0)) throw std::invalid_argument("observation length must be > 0");
    return law;
  }
  if (fields.size() == 3 && fields[0] == "uniform") {
    law.kind = Kind::uniform;
    law.lo = num(fields[1]);
    law.hi = num(fields[2]);
    if (!(0 < law.lo && law.lo <= law.hi)) throw std::invalid_argument("bad uniform bounds");
    return law;
  }
  if (fields.size() == 4 && fields[0] == "mixed") {
    law.kind = Kind::mixed;
    law.p_max = num(fields[1]);
    law.lo = num(fields[2]);
    law.hi = num(fields[3]);
    if (!(0 < law.lo && law.lo <= law.hi) || !(law.p_max >= 0 && law.p_max <= 1))
      throw std::invalid_argument("bad mixed observation law");
    return law;
  }
  throw std::invalid_argument("cannot parse observation law: " + s);
}

// end-of-window machine state, for simulating a follow-on observation window
// that continues where an earlier dataset stopped
struct ContinuationState {
  MachineProfile profile;  // fixed covariates plus the final x2 value
  double virtual_age = 0.0;
};

struct SimulationConfig {
  int n_machines = 0;
  ModelParams params;
  TariffPlan plan = TariffPlan::plan('c');
  ObservationLaw t_obs_law;
  std::uint64_t seed = 0;
  std::uint64_t profile_seed = 0;  // 0 = use `seed`; fixing it pins the machine population
  SimulateOptions options;
  std::vector<ContinuationState> continuation;  // when set, overrides profiles and ages

  void validate() const {
    if (continuation.empty() && n_machines < 1)
      throw std::invalid_argument("n_machines must be >= 1");
    params.validate();
  }
};

// stream tags for per-machine seed derivation
namespace seed_tag {
inline constexpr std::uint64_t profile = 1;
inline constexpr std::uint64_t t_obs = 2;
inline constexpr std::uint64_t events = 3;
}  // namespace seed_tag

inline double next_failure_uniform(RngStream& rng) { return rng.uniform(); }

// t = sample of the next failure time after t_previous given the current
// covariate state; delegates to the hazard inverse transform
inline double get_failure_time(const HazardContext& ctx, double t_previous, double u,
                               const HazardParams& p, const TariffPlan& plan,
                               double max_horizon = kMaxSegmentHorizon) {
  return sample_next_failure(t_previous, u, ctx, p, plan, max_horizon);
}

// subtype probabilities of Eq-style multinomial logit at covariates z
// (intercept + plan-selected fixed covariates); class 3 is the reference
inline std::array<double, kNumMinorTypes> minor_type_probabilities(
    const MachineProfile& profile, const TypeLogitParams& logit, const TariffPlan& plan) {
  std::array<double, kNumMinorTypes> probs{};
  double denom = 1.0;
  for (int c = 0; c < kNumMinorTypes - 1; ++c) {
    double lin = logit.alpha[c][0];
    for (int k = 0; k < kNumFixedCovariates; ++k)
      if (plan.z[k]) lin += logit.alpha[c][k + 1] * profile.fixed[k];
    probs[c] = std::exp(lin);
    denom += probs[c];
  }
  for (int c = 0; c < kNumMinorTypes - 1; ++c) probs[c] /= denom;
  probs[kNumMinorTypes - 1] = 1.0 / denom;
  return probs;
}

// two-stage type draw at a sampled failure time: minor vs catastrophic with
// probability proportional to the type-specific intensities, then the
// multinomial subtype for minor failures
inline EventType get_failure_type(const HazardContext& ctx, double t,
                                  const MachineProfile& profile, const ModelParams& params,
                                  const TariffPlan& plan, RngStream& rng) {
  const double lam_m = minor_intensity(t, ctx, params.hazard, plan);
  const double lam_c = catastrophic_intensity(t, ctx, params.hazard);
  const double total = lam_m + lam_c;
  assert(total > 0.0);
  if (rng.uniform() * total < lam_c) return EventType::catastrophic;
  const auto probs = minor_type_probabilities(profile, params.type_logit, plan);
  const double w = rng.uniform();
  if (w < probs[0]) return EventType::minor1;
  if (w < probs[0] + probs[1]) return EventType::minor2;
  return EventType::minor3;
}

struct FailureCost {
  double total = 0.0;
  double sub1 = 0.0;  // populated for co-occurring failures only
  double sub2 = 0.0;
};

inline FailureCost get_failure_costs(EventType y, const SeverityParams& sev, RngStream& rng) {
  FailureCost c;
  switch (y) {
    case EventType::minor1:
      c.total = rng.gamma(sev.minor1.shape, sev.minor1.scale);
      break;
    case EventType::minor2:
      c.total = rng.gamma(sev.minor2.shape, sev.minor2.scale);
      break;
    case EventType::minor3: {
      // Frank-coupled uniform pair mapped through the two gamma quantiles
      const auto [u, v] = frank_pair(rng.uniform(), rng.uniform(), sev.frank_theta);
      c.sub1 = gamma_quantile(u, sev.minor1.shape, sev.minor1.scale);
      c.sub2 = gamma_quantile(v, sev.minor2.shape, sev.minor2.scale);
      c.total = c.sub1 + c.sub2;
      break;
    }
    case EventType::catastrophic:
      c.total = rng.gamma(sev.catastrophic.shape, sev.catastrophic.scale);
      break;
    default:
      throw std::invalid_argument("get_failure_costs expects a failure type");
  }
  return c;
}

inline double get_maintenance_costs(const SeverityParams& sev, RngStream& rng) {
  return rng.gamma(sev.maintenance.shape, sev.maintenance.scale);
}

// One generated failure, as seen by the path walker.
struct GeneratedFailure {
  double t = 0.0;
  double t_prev = 0.0;  // previous failure or segment start
  EventType type = EventType::minor1;
  FailureCost cost;
  int x2_before = 0;
};

// Core failure-process walker shared by the dataset simulator and the pricing
// paths. Draws failures until the horizon, maintaining the renewal segment
// and the time-varying covariate. `failure_uniform` supplies the inverse
// transform draws (so pricing can use antithetic uniforms); `rng` drives type
// and cost draws. Costs are sampled only when `with_costs` is set.
template <typename Sink>
inline void walk_failures(const MachineProfile& profile, double horizon,
                          const ModelParams& params, const TariffPlan& plan,
                          const SimulateOptions& options,
                          const std::function<double()>& failure_uniform, RngStream& rng,
                          bool with_costs, Sink&& sink, double initial_virtual_age = 0.0) {
  double segment_origin = -initial_virtual_age;
  int x2 = profile.initial_tvc;
  double t_cur = 0.0;
  for (;;) {
    HazardContext ctx;
    ctx.segment_origin = segment_origin;
    ctx.baseline_origin = options.reset_pm_phase_at_overhaul ? segment_origin : 0.0;
    for (int k = 0; k < kNumFixedCovariates; ++k) ctx.fixed[k] = profile.fixed[k];
    ctx.tvc_initial = x2;

    const double t = get_failure_time(ctx, t_cur, failure_uniform(), params.hazard, plan,
                                      options.max_segment_horizon);
    if (!(t <= horizon)) break;

    GeneratedFailure f;
    f.t = t;
    f.t_prev = t_cur;
    f.x2_before = x2;
    f.type = get_failure_type(ctx, t, profile, params, plan, rng);
    if (with_costs) f.cost = get_failure_costs(f.type, params.severity, rng);
    sink(f);

    if (f.type == EventType::minor3) x2 = 1;
    if (f.type == EventType::catastrophic) {
      segment_origin = t;
      if (options.reset_tvc_at_overhaul) x2 = 0;
    }
    t_cur = t;
  }
}

// previous-maintenance reference restarts at a renewal boundary
inline double pm_segment_start(const std::vector<EventRecord>& failures, double t) {
  double start = 0.0;
  for (const auto& e : failures)
    if (e.type == EventType::catastrophic && e.t < t) start = e.t;
  return start;
}

// reconstruct the piecewise-constant x2 value immediately before time t
inline int x2_at_time(const std::vector<EventRecord>& failures, int initial,
                      const SimulateOptions& options, double t) {
  int x2 = initial;
  for (const auto& e : failures) {
    if (e.t >= t) break;
    if (e.type == EventType::minor3) x2 = 1;
    if (e.type == EventType::catastrophic && options.reset_tvc_at_overhaul) x2 = 0;
  }
  return x2;
}

// Full event timeline of one machine: sampled failures, maintenance events at
// multiples of the maintenance interval (the boundary epoch included), and
// the terminal censor record. Failure rows reference the previous failure,
// maintenance rows the previous maintenance, both within the current renewal
// segment.
inline Timeline simulate_machine(int machine_id, const MachineProfile& profile, double t_obs,
                                 const ModelParams& params, const TariffPlan& plan,
                                 std::uint64_t seed, const SimulateOptions& options = {},
                                 double initial_virtual_age = 0.0) {
  if (!(t_obs > 0)) throw std::invalid_argument("t_obs must be > 0");
  profile.validate();
  params.validate();

  RngStream rng(seed);
  Timeline tl;
  tl.machine_id = machine_id;
  tl.profile = profile;
  tl.observation_length = t_obs;

  double last_overhaul = 0.0;
  int x2_final = profile.initial_tvc;
  double last_failure = 0.0;
  walk_failures(profile, t_obs, params, plan, options, [&] { return rng.uniform(); }, rng,
                /*with_costs=*/true, [&](const GeneratedFailure& f) {
                  EventRecord e;
                  e.machine_id = machine_id;
                  e.t = f.t;
                  e.t_prev = f.t_prev;
                  e.observed = true;
                  e.type = f.type;
                  e.cost = f.cost.total;
                  e.cost_sub1 = f.cost.sub1;
                  e.cost_sub2 = f.cost.sub2;
                  e.x2 = f.x2_before;
                  tl.events.push_back(e);
                  last_failure = f.t;
                  if (f.type == EventType::catastrophic) {
                    last_overhaul = f.t;
                    x2_final = options.reset_tvc_at_overhaul ? 0 : x2_final;
                  } else if (f.type == EventType::minor3) {
                    x2_final = 1;
                  }
                },
                initial_virtual_age);

  // maintenance epochs; x2 at each epoch is reconstructed from the failures
  const double d = params.hazard.pm_interval;
  const long n_pm = static_cast<long>(std::floor(t_obs / d + 1e-12));
  double prev_pm = 0.0;
  for (long j = 1; j <= n_pm; ++j) {
    const double tj = static_cast<double>(j) * d;
    EventRecord e;
    e.machine_id = machine_id;
    e.t = tj;
    e.t_prev = std::max(prev_pm, pm_segment_start(tl.events, tj));
    e.observed = true;
    e.type = EventType::maintenance;
    e.cost = get_maintenance_costs(params.severity, rng);
    e.x2 = x2_at_time(tl.events, profile.initial_tvc, options, tj);
    tl.events.push_back(e);
    prev_pm = tj;
  }

  EventRecord censor;
  censor.machine_id = machine_id;
  censor.t = t_obs;
  censor.t_prev = last_failure;
  censor.observed = false;
  censor.type = EventType::censor;
  censor.cost = 0.0;
  censor.x2 = x2_final;
  tl.events.push_back(censor);

  std::stable_sort(tl.events.begin(), tl.events.end(),
                   [](const EventRecord& a, const EventRecord& b) {
                     auto rank = [](EventType y) {
                       if (y == EventType::maintenance) return 0;
                       if (y == EventType::censor) return 2;
                       return 1;
                     };
                     if (a.t != b.t) return a.t < b.t;
                     return rank(a.type) < rank(b.type);
                   });
  return tl;
}

// reconstruct the end-of-window state of every machine in a dataset
inline std::vector<ContinuationState> continuation_from(const PortfolioDataset& data) {
  std::vector<ContinuationState> out;
  out.reserve(data.timelines.size());
  for (const auto& tl : data.timelines) {
    ContinuationState st;
    st.profile.fixed = tl.profile.fixed;
    double last_overhaul = 0.0;
    for (const auto& e : tl.events) {
      if (e.type == EventType::catastrophic) last_overhaul = e.t;
      if (e.type == EventType::censor) st.profile.initial_tvc = e.x2;
    }
    st.virtual_age = tl.observation_length - last_overhaul;
    out.push_back(st);
  }
  return out;
}

// n independent machines; fixed covariates allocated i.i.d. with equal
// probability, per-machine streams derived from the master seed and the
// machine index, so the portfolio is invariant to worker scheduling. A fixed
// `profile_seed` keeps the machine population identical across windows with
// different event seeds; a continuation list reuses recorded machine states.
inline PortfolioDataset simulate_portfolio(const SimulationConfig& config) {
  config.validate();
  const std::uint64_t profile_seed = config.profile_seed ? config.profile_seed : config.seed;
  const int n = config.continuation.empty() ? config.n_machines
                                            : static_cast<int>(config.continuation.size());
  PortfolioDataset data;
  data.timelines.resize(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t idx) {
    const int machine_id = static_cast<int>(idx) + 1;
    MachineProfile profile;
    double age = 0.0;
    if (config.continuation.empty()) {
      RngStream rng(derive_seed(profile_seed, machine_id, seed_tag::profile));
      for (int k = 0; k < kNumFixedCovariates; ++k) profile.fixed[k] = rng.uniform() < 0.5;
      profile.initial_tvc = 0;
    } else {
      profile = config.continuation[idx].profile;
      age = config.continuation[idx].virtual_age;
    }
    double t_obs;
    {
      RngStream rng(derive_seed(profile_seed, machine_id, seed_tag::t_obs));
      t_obs = config.t_obs_law.draw(rng);
    }
    data.timelines[idx] =
        simulate_machine(machine_id, profile, t_obs, config.params, config.plan,
                         derive_seed(config.seed, machine_id, seed_tag::events), config.options,
                         age);
  });
  return data;
}

}  // namespace servipricer
