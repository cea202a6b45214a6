#include <cmath>
#include <random>
#include <set>

#include "test_common.hpp"

#include "servipricer/pricing.hpp"

using namespace servipricer;

TEST_CASE("no hazards means maintenance-only pricing", "[pricing]") {
  ModelParams p = truth_params();
  p.hazard.alpha0 = 0.0;
  p.hazard.gamma0 = 0.0;
  p.hazard.beta1 = {0, 0, 0, 0};
  p.hazard.beta2 = 0.0;
  p.hazard.alpha_c = 1e-12;

  const auto ce = expected_counts({{0, 0, 0, 0}, 0}, 2.0, p, TariffPlan::plan('c'), 200, 5);
  CHECK(ce.minor_mean == 0.0);
  CHECK(ce.cat_mean == 0.0);

  const auto q = break_even_price({{0, 0, 0, 0}, 0}, 2.0, p, TariffPlan::plan('c'), 200, 5);
  CHECK(q.price == Catch::Approx(120.0).epsilon(1e-9));  // two maintenance visits at mean 60
  CHECK(q.maintenance_term == Catch::Approx(120.0).epsilon(1e-12));
  CHECK(q.catastrophic_term == 0.0);
  CHECK(q.minor_term == 0.0);
}

TEST_CASE("expected counts match the Poisson reduction", "[pricing]") {
  ModelParams p = truth_params();
  p.hazard.alpha0 = 0.0;
  p.hazard.kappa0 = 1.0;
  p.hazard.gamma0 = 0.9;
  p.hazard.beta1 = {0, 0, 0, 0};
  p.hazard.beta2 = 0.0;
  p.hazard.alpha_c = 1e-12;

  const double duration = 2.5;
  const auto ce =
      expected_counts({{0, 0, 0, 0}, 0}, duration, p, TariffPlan::plan('c'), 40000, 99);
  CHECK(std::fabs(ce.minor_mean - 0.9 * duration) < 3.0 * ce.minor_se);
  CHECK(ce.minor_se < 0.02);
  CHECK(ce.cat_mean == 0.0);
}

TEST_CASE("quotes are deterministic and decompose exactly", "[pricing]") {
  const auto p = truth_params();
  const auto plan = TariffPlan::plan('c');
  const MachineProfile profile{{1, 0, 1, 0}, 0};

  const auto q1 = break_even_price(profile, 2.0, p, plan, 20000, 77);
  const auto q2 = break_even_price(profile, 2.0, p, plan, 20000, 77);
  CHECK(q1.price == q2.price);
  CHECK(q1.path_cost_mean == q2.path_cost_mean);

  CHECK(q1.price ==
        Catch::Approx(q1.catastrophic_term + q1.minor_term + q1.maintenance_term).epsilon(1e-12));
  CHECK(q1.maintenance_term == Catch::Approx(2 * 20.0 * 3.0).epsilon(1e-12));
  CHECK(q1.price >= q1.maintenance_term);
  CHECK(q1.mc_std_error > 0.0);
  CHECK(q1.mc_paths == 20000);
}

TEST_CASE("component estimator agrees with the full-path estimator", "[pricing]") {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto profiles = enumerate_profiles();
  for (int rep = 0; rep < 5; ++rep) {
    ModelParams p = truth_params();
    p.hazard.alpha0 = 0.2 + 0.6 * uni(rng);
    p.hazard.kappa0 = 0.3 + 0.6 * uni(rng);
    p.hazard.gamma0 = 0.05 + 0.2 * uni(rng);
    p.hazard.alpha_c = 0.1 + 0.2 * uni(rng);
    p.hazard.kappa_c = 1.0 + 1.5 * uni(rng);
    p.severity.frank_theta = 4.0 * uni(rng) - 1.0;
    const auto profile = profiles[static_cast<std::size_t>(uni(rng) * 31.99)];
    const double duration = 1.0 + 3.0 * uni(rng);

    const auto q = break_even_price(profile, duration, p, TariffPlan::plan('c'), 20000,
                                    1000 + rep);
    const double combined =
        std::sqrt(q.mc_std_error * q.mc_std_error +
                  q.path_cost_std_error * q.path_cost_std_error);
    INFO("rep " << rep << " price " << q.price << " path " << q.path_cost_mean);
    CHECK(std::fabs(q.price - q.path_cost_mean) < 3.0 * combined);
  }
}

TEST_CASE("price table structure per tariff plan", "[pricing]") {
  const auto p = truth_params();
  const long paths = 6000;

  const auto table_a = price_table(p, TariffPlan::plan('a'), 2.0, paths, 4000);
  const auto table_b = price_table(p, TariffPlan::plan('b'), 2.0, paths, 4000);
  const auto table_c = price_table(p, TariffPlan::plan('c'), 2.0, paths, 4000);
  REQUIRE(table_a.size() == 32);
  REQUIRE(table_b.size() == 32);
  REQUIRE(table_c.size() == 32);

  auto distinct = [](const std::vector<ContractQuote>& quotes) {
    std::set<double> prices;
    for (const auto& q : quotes) prices.insert(q.price);
    return prices.size();
  };
  CHECK(distinct(table_a) == 1);
  CHECK(distinct(table_b) == 16);
  CHECK(distinct(table_c) == 32);

  // profiles differing only in x2 share the plan-b quote
  for (std::size_t i = 0; i < 32; i += 2) CHECK(table_b[i].price == table_b[i + 1].price);
}

TEST_CASE("price grows with the baseline intercept", "[pricing]") {
  const auto plan = TariffPlan::plan('c');
  const MachineProfile profile{{0, 0, 0, 0}, 0};
  double prev = 0.0;
  for (double gamma : {0.05, 0.1, 0.2, 0.4}) {
    ModelParams p = truth_params();
    p.hazard.gamma0 = gamma;
    const auto q = break_even_price(profile, 2.0, p, plan, 20000, 66);
    CHECK(q.price > prev);
    prev = q.price;
  }
}

TEST_CASE("prices are non-homogeneous in the contract duration", "[pricing]") {
  const auto p = truth_params();
  const auto plan = TariffPlan::plan('c');
  const MachineProfile profile{{0, 0, 0, 0}, 0};
  const auto q2 = break_even_price(profile, 2.0, p, plan, 40000, 21);
  const auto q4 = break_even_price(profile, 4.0, p, plan, 40000, 21);
  const double se = std::sqrt(q4.mc_std_error * q4.mc_std_error +
                              4.0 * q2.mc_std_error * q2.mc_std_error);
  CHECK(std::fabs(q4.price - 2.0 * q2.price) > 3.0 * se);
  CHECK(q4.price > 2.0 * q2.price);  // wear makes later years dearer
}
