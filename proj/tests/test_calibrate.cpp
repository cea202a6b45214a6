#include <algorithm>
#include <cmath>
#include <random>

#include "test_common.hpp"

#include "servipricer/calibrate.hpp"
#include "servipricer/simulate.hpp"

using namespace servipricer;

namespace {

PortfolioDataset simulated(int n, std::uint64_t seed, const char* law = "fixed:5") {
  SimulationConfig cfg;
  cfg.n_machines = n;
  cfg.params = truth_params();
  cfg.t_obs_law = ObservationLaw::parse(law);
  cfg.seed = seed;
  return simulate_portfolio(cfg);
}

}  // namespace

TEST_CASE("time-to-failure loglik basics", "[calibrate]") {
  const auto plan = TariffPlan::plan('c');
  CHECK(time_to_failure_loglik(truth_params().hazard, plan, PortfolioDataset{}) == 0.0);

  // single censored interval over (0, 1] with constant total hazard
  HazardParams p;
  p.alpha0 = 0.0;
  p.kappa0 = 1.0;
  p.gamma0 = 0.7;
  p.pm_interval = 1.0;
  p.alpha_c = 1e-12;
  p.kappa_c = 1.0;
  PortfolioDataset data;
  Timeline tl;
  tl.machine_id = 1;
  tl.observation_length = 1.0;
  EventRecord censor;
  censor.machine_id = 1;
  censor.t = 1.0;
  censor.t_prev = 0.0;
  censor.observed = false;
  censor.type = EventType::censor;
  tl.events.push_back(censor);
  data.timelines.push_back(tl);
  CHECK(time_to_failure_loglik(p, plan, data) == Catch::Approx(-0.7).margin(1e-9));
}

TEST_CASE("loglik at the truth beats a random perturbation neighborhood", "[calibrate]") {
  const auto data = simulated(1000, 808);
  const auto plan = TariffPlan::plan('c');
  const auto truth = truth_params().hazard;
  const double at_truth = time_to_failure_loglik(truth, plan, data);

  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  int better = 0;
  for (int i = 0; i < 100; ++i) {
    HazardParams p = truth;
    p.alpha0 *= 1.0 + 0.15 * uni(rng);
    p.kappa0 = std::clamp(p.kappa0 + 0.08 * uni(rng), 0.01, 0.99);
    p.gamma0 *= 1.0 + 0.15 * uni(rng);
    for (auto& b : p.beta1) b += 0.08 * uni(rng);
    p.beta2 += 0.08 * uni(rng);
    p.alpha_c *= 1.0 + 0.15 * uni(rng);
    p.kappa_c *= 1.0 + 0.15 * uni(rng);
    if (time_to_failure_loglik(p, plan, data) > at_truth) ++better;
  }
  CHECK(better <= 1);
}

TEST_CASE("loglik is invariant to dataset row order", "[calibrate]") {
  auto data = simulated(200, 909);
  const auto plan = TariffPlan::plan('c');
  const double a = time_to_failure_loglik(truth_params().hazard, plan, data);
  std::reverse(data.timelines.begin(), data.timelines.end());
  const double b = time_to_failure_loglik(truth_params().hazard, plan, data);
  CHECK(std::fabs(a - b) <= 1e-10 * std::fabs(a));
}

TEST_CASE("nested tariff plans order the fitted loglik", "[calibrate]") {
  const auto data = simulated(800, 111);
  const double la = fit_time_to_failure(data, TariffPlan::plan('a')).loglik;
  const double lb = fit_time_to_failure(data, TariffPlan::plan('b')).loglik;
  const double lc = fit_time_to_failure(data, TariffPlan::plan('c')).loglik;
  CHECK(la <= lb + 1e-6);
  CHECK(lb <= lc + 1e-6);
}

TEST_CASE("time-to-failure fit recovers the generating parameters", "[calibrate]") {
  const auto data = simulated(2000, 1212);
  const auto fit = fit_time_to_failure(data, TariffPlan::plan('c'));
  REQUIRE(fit.converged);
  REQUIRE(fit.params.size() == 10);

  const auto expect_near = [&](const char* name, double truth, double tol) {
    const auto* pe = fit.find(name);
    REQUIRE(pe != nullptr);
    CHECK(std::fabs(pe->estimate - truth) < tol);
    CHECK(pe->ci_lo < pe->estimate);
    CHECK(pe->estimate < pe->ci_hi);
  };
  expect_near("alpha0", 0.5, 0.08);
  expect_near("kappa0", 0.623, 0.08);
  expect_near("gamma0", 0.1, 0.04);
  expect_near("beta1_1", -0.2, 0.07);
  expect_near("beta1_2", 0.3, 0.07);
  expect_near("beta1_3", 0.4, 0.07);
  expect_near("beta1_4", -0.1, 0.07);
  expect_near("beta2", 0.1, 0.11);
  expect_near("alpha_c", 0.2, 0.01);
  expect_near("kappa_c", 2.0, 0.15);

  // stationarity at the reported optimum: scaled central-difference gradient
  const auto plan = TariffPlan::plan('c');
  const HazardParams opt = fit.estimates.hazard;
  const double f0 = time_to_failure_loglik(opt, plan, data);
  auto partial = [&](auto setter, double value, double h) {
    HazardParams lo = opt, hi = opt;
    setter(lo, value - h);
    setter(hi, value + h);
    return (time_to_failure_loglik(hi, plan, data) - time_to_failure_loglik(lo, plan, data)) /
           (2 * h);
  };
  const double h = 1e-5;
  const double g_alpha =
      partial([](HazardParams& p, double v) { p.alpha0 = v; }, opt.alpha0, h);
  const double g_beta =
      partial([](HazardParams& p, double v) { p.beta1[0] = v; }, opt.beta1[0], h);
  CHECK(std::fabs(g_alpha) / (std::fabs(f0) + 1.0) < 1e-4);
  CHECK(std::fabs(g_beta) / (std::fabs(f0) + 1.0) < 1e-4);
}

TEST_CASE("plan-a calibration has no covariates and still fits the Weibull", "[calibrate]") {
  const auto data = simulated(2000, 1212);
  const auto fit_a = fit_time_to_failure(data, TariffPlan::plan('a'));
  REQUIRE(fit_a.converged);
  REQUIRE(fit_a.params.size() == 5);  // alpha0, kappa0, gamma0, alpha_c, kappa_c

  // the catastrophic block does not depend on the chosen covariates
  const auto fit_c = fit_time_to_failure(data, TariffPlan::plan('c'));
  CHECK(fit_a.find("alpha_c")->estimate ==
        Catch::Approx(fit_c.find("alpha_c")->estimate).margin(0.002));
  CHECK(fit_a.find("kappa_c")->estimate ==
        Catch::Approx(fit_c.find("kappa_c")->estimate).margin(0.02));
}

TEST_CASE("no catastrophic failures flags the Weibull block", "[calibrate]") {
  ModelParams p = truth_params();
  p.hazard.alpha_c = 1e-9;  // essentially never fires
  SimulationConfig cfg;
  cfg.n_machines = 100;
  cfg.params = p;
  cfg.t_obs_law = ObservationLaw::parse("fixed:5");
  cfg.seed = 51;
  const auto data = simulate_portfolio(cfg);

  const auto fit = fit_time_to_failure(data, TariffPlan::plan('c'));
  CHECK_FALSE(fit.converged);
  REQUIRE_FALSE(fit.block_errors.empty());
  CHECK(fit.block_errors.front().find("Weibull") != std::string::npos);
  const auto* ac = fit.find("alpha_c");
  REQUIRE(ac != nullptr);
  CHECK_FALSE(ac->ok);
  // the minor block is still estimated
  CHECK(std::fabs(fit.find("alpha0")->estimate - 0.5) < 0.15);
}

TEST_CASE("intercept-only type fit matches the closed form", "[calibrate]") {
  const auto data = simulated(2000, 77);
  long n1 = 0, n2 = 0, n3 = 0;
  for (const auto& tl : data.timelines)
    for (const auto& e : tl.events) {
      n1 += e.type == EventType::minor1;
      n2 += e.type == EventType::minor2;
      n3 += e.type == EventType::minor3;
    }
  const auto fit = fit_failure_types(data, TariffPlan::plan('a'));
  REQUIRE(fit.converged);
  REQUIRE(fit.params.size() == 2);
  CHECK(fit.find("alpha1_0")->estimate ==
        Catch::Approx(std::log(double(n1) / double(n3))).margin(1e-4));
  CHECK(fit.find("alpha2_0")->estimate ==
        Catch::Approx(std::log(double(n2) / double(n3))).margin(1e-4));
}

TEST_CASE("full type fit recovers the logit coefficients", "[calibrate]") {
  const auto data = simulated(4000, 78);
  const auto fit = fit_failure_types(data, TariffPlan::plan('c'));
  REQUIRE(fit.converged);
  REQUIRE(fit.params.size() == 10);
  const auto truth = truth_params().type_logit;
  const char* names[] = {"alpha1_0", "alpha1_1", "alpha1_2", "alpha1_3", "alpha1_4",
                         "alpha2_0", "alpha2_1", "alpha2_2", "alpha2_3", "alpha2_4"};
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < 5; ++k) {
      const auto* pe = fit.find(names[c * 5 + k]);
      REQUIRE(pe != nullptr);
      CHECK(std::fabs(pe->estimate - truth.alpha[c][k]) < 0.25);
    }
}

TEST_CASE("severity fit recovers gamma margins and dependence", "[calibrate]") {
  const auto data = simulated(2000, 79);
  const auto fit = fit_severities(data, TariffPlan::plan('c'));
  REQUIRE(fit.converged);
  CHECK(std::fabs(fit.find("gamma_m_shape")->estimate - 20.0) < 1.2);
  CHECK(std::fabs(fit.find("gamma_m_scale")->estimate - 3.0) < 0.2);
  CHECK(std::fabs(fit.find("gamma_1_shape")->estimate - 20.0) < 2.5);
  CHECK(std::fabs(fit.find("gamma_2_shape")->estimate - 30.0) < 4.0);
  CHECK(std::fabs(fit.find("gamma_c_shape")->estimate - 20.0) < 3.0);
  const auto* theta = fit.find("theta");
  REQUIRE(theta != nullptr);
  CHECK(theta->ok);
  CHECK(std::fabs(theta->estimate - 0.5) < 0.45);
  CHECK(theta->ci_lo < theta->estimate);
  CHECK(theta->estimate < theta->ci_hi);
}

TEST_CASE("degenerate costs are flagged instead of fitted", "[calibrate]") {
  auto data = simulated(50, 80);
  for (auto& tl : data.timelines)
    for (auto& e : tl.events)
      if (e.type == EventType::maintenance) e.cost = 42.0;
  const auto fit = fit_severities(data, TariffPlan::plan('c'));
  CHECK_FALSE(fit.converged);
  bool flagged = false;
  for (const auto& err : fit.block_errors)
    flagged = flagged || err.find("gamma_m") != std::string::npos;
  CHECK(flagged);
}

TEST_CASE("fit_all composes the three independent blocks exactly", "[calibrate]") {
  const auto data = simulated(500, 81);
  const auto plan = TariffPlan::plan('c');
  const auto all = fit_all(data, plan);
  const auto ttf = fit_time_to_failure(data, plan);
  const auto types = fit_failure_types(data, plan);
  const auto sev = fit_severities(data, plan);

  CHECK(all.estimates.hazard.alpha0 == ttf.estimates.hazard.alpha0);
  CHECK(all.estimates.hazard.kappa_c == ttf.estimates.hazard.kappa_c);
  CHECK(all.estimates.type_logit.alpha == types.estimates.type_logit.alpha);
  CHECK(all.estimates.severity.frank_theta == sev.estimates.severity.frank_theta);
  CHECK(all.loglik == Catch::Approx(ttf.loglik + types.loglik + sev.loglik));
  CHECK(all.params.size() == ttf.params.size() + types.params.size() + sev.params.size());

  // severity block ignores the plan (its covariate sets are empty in a/b/c)
  const auto sev_a = fit_severities(data, TariffPlan::plan('a'));
  CHECK(sev_a.estimates.severity.maintenance.shape ==
        sev.estimates.severity.maintenance.shape);
  CHECK(sev_a.estimates.severity.frank_theta == sev.estimates.severity.frank_theta);
}

TEST_CASE("negative-Hessian at a converged optimum is positive definite", "[calibrate]") {
  const auto data = simulated(400, 82);
  const auto plan = TariffPlan::plan('b');
  const auto fit = fit_time_to_failure(data, plan);
  REQUIRE(fit.converged);

  // rebuild the transformed objective at the optimum and factor its Hessian
  const HazardParams opt = fit.estimates.hazard;
  ObjectiveFn neg = [&](const std::vector<double>& x) {
    HazardParams p = opt;
    p.alpha0 = std::exp(x[0]);
    p.kappa0 = 1.0 / (1.0 + std::exp(-x[1]));
    p.gamma0 = std::exp(x[2]);
    p.beta1 = {x[3], x[4], x[5], x[6]};
    p.alpha_c = std::exp(x[7]);
    p.kappa_c = std::exp(x[8]);
    return -time_to_failure_loglik(p, plan, data);
  };
  const std::vector<double> x{std::log(opt.alpha0),
                              std::log(opt.kappa0 / (1 - opt.kappa0)),
                              std::log(opt.gamma0),
                              opt.beta1[0],
                              opt.beta1[1],
                              opt.beta1[2],
                              opt.beta1[3],
                              std::log(opt.alpha_c),
                              std::log(opt.kappa_c)};
  const SymMatrix H = central_hessian(neg, x);
  SymMatrix L(H.size());
  CHECK(H.cholesky(L));
}
