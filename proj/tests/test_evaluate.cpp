#include <cmath>
#include <random>

#include "oracle.hpp"
#include "test_common.hpp"

#include "servipricer/evaluate.hpp"
#include "servipricer/simulate.hpp"

using namespace servipricer;

TEST_CASE("loss ratio basics", "[evaluate]") {
  const std::vector<double> prices{100, 200, 300};
  CHECK(loss_ratio(prices, prices) == Catch::Approx(1.0));

  std::vector<double> half{50, 100, 150};
  CHECK(loss_ratio(prices, half) == Catch::Approx(0.5));

  // scale equivariance: scaling prices by k scales the ratio by 1/k
  std::vector<double> scaled{300, 600, 900};
  CHECK(loss_ratio(scaled, prices) == Catch::Approx(loss_ratio(prices, prices) / 3.0));

  CHECK_THROWS_AS(loss_ratio({0, 0}, {1, 1}), std::invalid_argument);
}

TEST_CASE("loss ratio over time", "[evaluate]") {
  SimulationConfig cfg;
  cfg.n_machines = 400;
  cfg.params = truth_params();
  cfg.t_obs_law = ObservationLaw::parse("fixed:3");
  cfg.seed = 404;
  const auto data = simulate_portfolio(cfg);

  const double duration = 2.0;
  std::vector<double> costs;
  for (const auto& tl : data.timelines) {
    double c = 0;
    for (const auto& e : tl.events)
      if (e.observed && e.t <= duration) c += e.cost;
    costs.push_back(c);
  }
  std::vector<double> prices(costs.size(), 500.0);

  std::vector<double> grid{0.5, 1.0, 1.5, 2.0};
  const auto series = loss_ratio_over_time(data, prices, duration, grid);
  REQUIRE(series.size() == 4);
  CHECK(series.back().second == Catch::Approx(loss_ratio(prices, costs)).epsilon(1e-9));

  // zero costs: flat zero
  auto no_costs = data;
  for (auto& tl : no_costs.timelines)
    for (auto& e : tl.events) e.cost = 0.0;
  for (auto [t, r] : loss_ratio_over_time(no_costs, prices, duration, grid)) CHECK(r == 0.0);
}

TEST_CASE("quantile bins", "[evaluate]") {
  // perfectly sorted synthetic data: cost == price, strictly increasing
  std::vector<double> prices, costs;
  for (int i = 0; i < 100; ++i) {
    prices.push_back(10.0 + i);
    costs.push_back(10.0 + i);
  }
  const auto bins = quantile_bins(prices, costs, 10);
  REQUIRE(bins.size() == 10);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    CHECK(bins[b].avg_cost == Catch::Approx(bins[b].avg_price));
    if (b > 0) CHECK(bins[b].avg_cost > bins[b - 1].avg_cost);
  }

  // remainder spreads over the first bins
  std::vector<double> p23(prices.begin(), prices.begin() + 23);
  std::vector<double> c23(costs.begin(), costs.begin() + 23);
  const auto uneven = quantile_bins(p23, c23, 10);
  CHECK(uneven[0].count == 3);
  CHECK(uneven[2].count == 3);
  CHECK(uneven[3].count == 2);
  long total = 0;
  for (const auto& b : uneven) total += b.count;
  CHECK(total == 23);

  // bin totals reproduce the overall cost sum
  double sum = 0, direct = 0;
  for (const auto& b : uneven) sum += b.avg_cost * b.count;
  for (double c : c23) direct += c;
  CHECK(sum == Catch::Approx(direct).epsilon(1e-9));

  // constant prices sort by machine order and bins look like random splits
  std::mt19937_64 rng(10);
  std::vector<double> flat(5000, 100.0), rc(5000);
  std::normal_distribution<double> norm(50.0, 10.0);
  for (auto& c : rc) c = norm(rng);
  const auto flat_bins = quantile_bins(flat, rc, 10);
  for (const auto& b : flat_bins)
    CHECK(std::fabs(b.avg_cost - 50.0) < 3.0 * 10.0 / std::sqrt(500.0));

  CHECK_THROWS_AS(quantile_bins({1, 2}, {1, 2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(quantile_bins({1, 2}, {1, 2}, 3), std::invalid_argument);
}

TEST_CASE("lorenz curve and gini", "[evaluate]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(1.0, 2.0);

  // equal costs: the curve is the diagonal regardless of price order
  std::vector<double> prices(5000), costs(5000, 10.0);
  for (auto& p : prices) p = uni(rng);
  auto lr = lorenz_gini(prices, costs);
  CHECK(std::fabs(lr.gini) < 1e-12);
  CHECK(lr.points.front() == std::pair{0.0, 0.0});
  CHECK(lr.points.back().first == Catch::Approx(1.0).margin(1e-12));
  CHECK(lr.points.back().second == Catch::Approx(1.0).margin(1e-12));

  // prices unrelated to costs: near-zero gini at n = 5000
  std::vector<double> rc(5000);
  for (auto& c : rc) c = uni(rng);
  CHECK(std::fabs(lorenz_gini(prices, rc).gini) < 0.05);

  // all cost in the highest-priced contract
  const int n = 40;
  std::vector<double> sp(n), sc(n, 0.0);
  for (int i = 0; i < n; ++i) sp[i] = i;
  sc[n - 1] = 7.0;
  const auto conc = lorenz_gini(sp, sc);
  CHECK(conc.gini == Catch::Approx((n - 1.0) / n).epsilon(1e-12));
  CHECK(conc.gini == Catch::Approx(oracle::gini_brute_force(sp, sc)).epsilon(1e-12));

  // gini depends on the price ordering only
  std::vector<double> prices_scaled(prices);
  for (auto& p : prices_scaled) p *= 17.0;
  CHECK(lorenz_gini(prices_scaled, rc).gini ==
        Catch::Approx(lorenz_gini(prices, rc).gini).epsilon(1e-12));

  // oracle agreement on generic data
  CHECK(lorenz_gini(prices, rc).gini ==
        Catch::Approx(oracle::gini_brute_force(prices, rc)).epsilon(1e-9));
}

TEST_CASE("ordered lorenz curve", "[evaluate]") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> uni(1.0, 2.0);
  std::vector<double> x(1000), y(1000), costs(1000);
  for (auto& v : x) v = 100.0 * uni(rng);
  for (auto& v : y) v = 100.0 * uni(rng);
  for (auto& v : costs) v = 50.0 * uni(rng);

  // identical tariffs: every relativity is 1, the curve is the diagonal
  const auto same = ordered_lorenz(x, x, costs);
  CHECK(same.gini == Catch::Approx(0.0).margin(1e-12));
  for (auto [fp, fc] : same.points) CHECK(fp == Catch::Approx(fc).margin(1e-9));

  const auto ab = ordered_lorenz(x, y, costs);
  const auto ba = ordered_lorenz(y, x, costs);
  CHECK(std::isfinite(ab.gini));
  CHECK(std::isfinite(ba.gini));
  CHECK(ab.points.front() == std::pair{0.0, 0.0});
  CHECK(ab.points.back().first == Catch::Approx(1.0).margin(1e-12));
  CHECK(ab.points.back().second == Catch::Approx(1.0).margin(1e-12));

  std::vector<double> bad(x);
  bad[0] = 0.0;
  CHECK_THROWS_AS(ordered_lorenz(bad, y, costs), std::invalid_argument);
}

TEST_CASE("relative exposure", "[evaluate]") {
  PortfolioDataset one;
  Timeline tl;
  tl.machine_id = 1;
  tl.observation_length = 4.2;
  one.timelines.push_back(tl);
  CHECK(relative_exposure(one) == std::vector<double>{1.0});

  PortfolioDataset two = one;
  two.timelines[0].observation_length = 3.0;
  Timeline tl2;
  tl2.machine_id = 2;
  tl2.observation_length = 5.0;
  two.timelines.push_back(tl2);
  const auto shares = relative_exposure(two);
  CHECK(shares[0] == Catch::Approx(0.375));
  CHECK(shares[1] == Catch::Approx(0.625));
  CHECK(shares[0] + shares[1] == 1.0);

  // the mixed observation design concentrates exposure in the full windows
  SimulationConfig cfg;
  cfg.n_machines = 3000;
  cfg.params = truth_params();
  cfg.t_obs_law = ObservationLaw::parse("mixed:0.8:3:5");
  cfg.seed = 5005;
  const auto data = simulate_portfolio(cfg);
  const auto by_len = exposure_by_contract_length(data);
  CHECK(by_len.at(5.0) >= 0.8);
  double total = 0;
  for (const auto& [len, share] : by_len) total += share;
  CHECK(total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("empirical failure frequency", "[evaluate]") {
  // homogeneous Poisson reduction: frequency estimates the rate
  ModelParams p = truth_params();
  p.hazard.alpha0 = 0.0;
  p.hazard.kappa0 = 1.0;
  p.hazard.gamma0 = 0.6;
  p.hazard.beta1 = {0, 0, 0, 0};
  p.hazard.beta2 = 0.0;
  p.hazard.alpha_c = 1e-12;
  SimulationConfig cfg;
  cfg.n_machines = 2000;
  cfg.params = p;
  cfg.t_obs_law = ObservationLaw::parse("fixed:5");
  cfg.seed = 66;
  const auto data = simulate_portfolio(cfg);

  auto all = [](const MachineProfile&) { return true; };
  double rate = 0.0;
  for (EventType y : {EventType::minor1, EventType::minor2, EventType::minor3})
    rate += empirical_failure_frequency(data, all, y);
  const double se = std::sqrt(0.6 / (2000.0 * 5.0));
  CHECK(std::fabs(rate - 0.6) < 3.0 * se);

  CHECK(empirical_failure_frequency(data, all, EventType::catastrophic) == 0.0);
  CHECK_THROWS_AS(
      empirical_failure_frequency(data, [](const MachineProfile&) { return false; },
                                  EventType::minor1),
      std::invalid_argument);
}
