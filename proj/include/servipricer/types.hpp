#pragma once

// Domain types shared by the simulation, calibration, pricing and evaluation
// modules: machine profiles, event timelines, model parameters and tariff
// definitions. All types are immutable value types once constructed and can
// be shared freely across worker threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace servipricer {

inline constexpr int kNumFixedCovariates = 4;
inline constexpr int kNumMinorTypes = 3;  // type 3 = co-occurrence of types 1 and 2

enum class EventType : std::uint8_t {
  maintenance,   // periodic preventive maintenance (m)
  minor1,        // minor failure type 1
  minor2,        // minor failure type 2
  minor3,        // co-occurring type 1 + type 2 failure
  catastrophic,  // overhaul-triggering failure, resets virtual age
  censor,        // end of observation window
};

inline bool is_minor(EventType y) {
  return y == EventType::minor1 || y == EventType::minor2 || y == EventType::minor3;
}
inline bool is_failure(EventType y) {
  return is_minor(y) || y == EventType::catastrophic;
}

inline std::string event_type_label(EventType y) {
  switch (y) {
    case EventType::maintenance: return "m";
    case EventType::minor1: return "f1";
    case EventType::minor2: return "f2";
    case EventType::minor3: return "f3";
    case EventType::catastrophic: return "fc";
    case EventType::censor: return "censor";
  }
  throw std::logic_error("unknown event type");
}

inline EventType event_type_from_label(const std::string& s) {
  if (s == "m") return EventType::maintenance;
  if (s == "f1") return EventType::minor1;
  if (s == "f2") return EventType::minor2;
  if (s == "f3") return EventType::minor3;
  if (s == "fc") return EventType::catastrophic;
  if (s == "censor") return EventType::censor;
  throw std::invalid_argument("unknown event type label: " + s);
}

// Machine risk profile at contract/observation start: four binary fixed
// covariates plus the initial value of the time-varying covariate.
struct MachineProfile {
  std::array<int, kNumFixedCovariates> fixed{0, 0, 0, 0};
  int initial_tvc = 0;

  void validate() const {
    for (int v : fixed)
      if (v != 0 && v != 1) throw std::invalid_argument("fixed covariates must be 0/1");
    if (initial_tvc != 0 && initial_tvc != 1)
      throw std::invalid_argument("initial_tvc must be 0/1");
  }

  bool operator==(const MachineProfile&) const = default;
};

// All 2^4 x 2 = 32 profiles in lexicographic order of (x11,x12,x13,x14,x2).
inline std::vector<MachineProfile> enumerate_profiles() {
  std::vector<MachineProfile> out;
  out.reserve(32);
  for (int bits = 0; bits < 32; ++bits) {
    MachineProfile p;
    for (int k = 0; k < kNumFixedCovariates; ++k) p.fixed[k] = (bits >> (4 - k)) & 1;
    p.initial_tvc = bits & 1;
    out.push_back(p);
  }
  return out;
}

// One dataset row: a failure, a preventive maintenance, or the terminal
// censor record. `observed` is the censoring status c of the source schema
// (1 = observed event, 0 = censored). `t_prev` references the previous
// same-kind event within the current renewal segment. For co-occurring
// (type 3) failures the recorded cost is the sum of the two sub-costs.
struct EventRecord {
  int machine_id = 0;
  double t = 0.0;
  double t_prev = 0.0;
  bool observed = true;
  EventType type = EventType::censor;
  double cost = 0.0;
  double cost_sub1 = 0.0;  // type-3 component costs, zero otherwise
  double cost_sub2 = 0.0;
  int x2 = 0;  // time-varying covariate immediately before the event

  bool operator==(const EventRecord&) const = default;
};

struct Timeline {
  int machine_id = 0;
  MachineProfile profile;
  double observation_length = 0.0;
  std::vector<EventRecord> events;  // sorted by t, maintenance before failure on ties

  bool operator==(const Timeline&) const = default;

  void validate() const {
    profile.validate();
    if (observation_length <= 0) throw std::invalid_argument("observation_length must be > 0");
    if (events.empty() || events.back().type != EventType::censor ||
        events.back().t != observation_length)
      throw std::invalid_argument("timeline must end with a censor record at t_obs");
    double prev_t = 0.0;
    int x2_state = profile.initial_tvc;
    for (const auto& e : events) {
      if (e.machine_id != machine_id) throw std::invalid_argument("machine_id mismatch");
      if (e.t < prev_t) throw std::invalid_argument("events not sorted by t");
      if (e.t_prev > e.t) throw std::invalid_argument("t_prev > t");
      if (e.cost < 0) throw std::invalid_argument("negative cost");
      if (e.observed == (e.type == EventType::censor))
        throw std::invalid_argument("censoring flag inconsistent with event type");
      if (!e.observed && e.cost != 0) throw std::invalid_argument("censor record with cost");
      if (e.x2 < x2_state && is_failure(e.type))
        throw std::invalid_argument("x2 decreasing within a renewal segment");
      if (e.type == EventType::minor3) x2_state = 1;
      if (e.type == EventType::catastrophic) x2_state = 0;  // overhaul renews the machine
      prev_t = e.t;
    }
  }
};

struct PortfolioDataset {
  std::vector<Timeline> timelines;

  int n_machines() const { return static_cast<int>(timelines.size()); }

  bool operator==(const PortfolioDataset&) const = default;

  void validate() const {
    std::vector<bool> seen(timelines.size() + 1, false);
    for (const auto& tl : timelines) {
      if (tl.machine_id < 1 || tl.machine_id > n_machines() || seen[tl.machine_id])
        throw std::invalid_argument("machine ids must be unique in 1..n");
      seen[tl.machine_id] = true;
      tl.validate();
    }
  }
};

// Parameters of the failure-intensity model: imperfect-maintenance baseline
// (scale alpha0, improvement kappa0, intercept gamma0), proportional covariate
// effects beta1/beta2, the preventive-maintenance interval, and the Weibull
// intensity of the catastrophic mode.
struct HazardParams {
  double alpha0 = 0.0;
  double kappa0 = 0.0;
  double gamma0 = 0.0;
  std::array<double, kNumFixedCovariates> beta1{0, 0, 0, 0};
  double beta2 = 0.0;
  double pm_interval = 1.0;
  double alpha_c = 0.0;
  double kappa_c = 1.0;

  void validate() const {
    // alpha0 = 0 is the degenerate no-wear case used by constant-hazard reductions
    if (!(alpha0 >= 0)) throw std::invalid_argument("alpha0 must be >= 0");
    if (!(kappa0 >= 0 && kappa0 <= 1)) throw std::invalid_argument("kappa0 must be in [0,1]");
    if (!(gamma0 >= 0)) throw std::invalid_argument("gamma0 must be >= 0");
    if (!(pm_interval > 0)) throw std::invalid_argument("pm_interval must be > 0");
    if (!(alpha_c > 0)) throw std::invalid_argument("alpha_c must be > 0");
    if (!(kappa_c > 0)) throw std::invalid_argument("kappa_c must be > 0");
    for (double b : beta1)
      if (!std::isfinite(b)) throw std::invalid_argument("beta1 must be finite");
    if (!std::isfinite(beta2)) throw std::invalid_argument("beta2 must be finite");
  }
};

// Multinomial-logit coefficients for the minor failure subtypes. Two vectors
// (types 1 and 2), each of length 1 + 4 (intercept + fixed covariates); the
// co-occurrence type 3 is the reference class.
struct TypeLogitParams {
  std::array<std::array<double, 1 + kNumFixedCovariates>, kNumMinorTypes - 1> alpha{};

  void validate() const {
    for (const auto& v : alpha)
      for (double a : v)
        if (!std::isfinite(a)) throw std::invalid_argument("logit coefficients must be finite");
  }
};

struct GammaSeverity {
  double shape = 1.0;
  double scale = 1.0;

  double mean() const { return shape * scale; }
  double variance() const { return shape * scale * scale; }

  void validate() const {
    if (!(shape > 0) || !(scale > 0))
      throw std::invalid_argument("gamma shape and scale must be > 0");
  }
};

// Cost model: one gamma distribution per event class, plus the Frank-copula
// dependence parameter for the two component costs of a type-3 failure.
// A type-3 cost is the sum of one type-1 and one type-2 draw coupled by the
// copula, so its mean is minor1.mean() + minor2.mean().
struct SeverityParams {
  GammaSeverity maintenance;
  GammaSeverity minor1;
  GammaSeverity minor2;
  GammaSeverity catastrophic;
  double frank_theta = 0.0;

  void validate() const {
    maintenance.validate();
    minor1.validate();
    minor2.validate();
    catastrophic.validate();
    if (!std::isfinite(frank_theta)) throw std::invalid_argument("frank_theta must be finite");
  }

  double class_mean(EventType y) const {
    switch (y) {
      case EventType::maintenance: return maintenance.mean();
      case EventType::minor1: return minor1.mean();
      case EventType::minor2: return minor2.mean();
      case EventType::minor3: return minor1.mean() + minor2.mean();
      case EventType::catastrophic: return catastrophic.mean();
      default: return 0.0;
    }
  }
};

struct ModelParams {
  HazardParams hazard;
  TypeLogitParams type_logit;
  SeverityParams severity;

  void validate() const {
    hazard.validate();
    type_logit.validate();
    severity.validate();
  }
};

// Which covariate subsets enter each sub-model. Plan a uses none, plan b the
// four fixed covariates in the failure-time and failure-type models, plan c
// additionally the time-varying covariate in the failure-time model. The
// severity covariate sets (w, w_y, w_c) exist for custom plans but are empty
// in all three standard plans.
struct TariffPlan {
  char id = 'c';
  std::array<bool, kNumFixedCovariates> chi1{true, true, true, true};
  bool chi2 = true;
  std::array<bool, kNumFixedCovariates> z{true, true, true, true};
  std::array<bool, kNumFixedCovariates> w{false, false, false, false};
  std::array<bool, kNumFixedCovariates> w_y{false, false, false, false};
  std::array<bool, kNumFixedCovariates> w_c{false, false, false, false};

  static TariffPlan plan(char which) {
    TariffPlan p;
    p.id = which;
    switch (which) {
      case 'a':
        p.chi1 = {false, false, false, false};
        p.chi2 = false;
        p.z = {false, false, false, false};
        break;
      case 'b':
        p.chi1 = {true, true, true, true};
        p.chi2 = false;
        p.z = {true, true, true, true};
        break;
      case 'c':
        break;  // default-constructed = full plan
      default:
        throw std::invalid_argument(std::string("unknown tariff plan: ") + which);
    }
    return p;
  }

  int n_chi1() const {
    int n = 0;
    for (bool b : chi1) n += b;
    return n;
  }
  int n_z() const {
    int n = 0;
    for (bool b : z) n += b;
    return n;
  }
};

// Break-even quote for one machine profile: analytic component decomposition
// plus the full-path Monte-Carlo estimator used as a cross-check.
struct ContractQuote {
  MachineProfile profile;
  double duration = 0.0;
  double price = 0.0;
  long mc_paths = 0;
  double mc_std_error = 0.0;
  double catastrophic_term = 0.0;
  double minor_term = 0.0;
  double maintenance_term = 0.0;
  double path_cost_mean = 0.0;  // mean of simulated total contract cost
  double path_cost_std_error = 0.0;
};

}  // namespace servipricer
