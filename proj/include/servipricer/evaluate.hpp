#pragma once

// Out-of-time tariff evaluation: loss ratios, quantile plot data, Lorenz
// curves with Gini indices, ordered Lorenz curves over price relativities,
// and the exposure / empirical-frequency summaries used for data exploration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "servipricer/numeric.hpp"
#include "servipricer/types.hpp"

namespace servipricer {

struct LorenzResult {
  std::vector<std::pair<double, double>> points;  // (cum population share, cum cost share)
  double gini = 0.0;
};

struct OrderedLorenzResult {
  std::vector<std::pair<double, double>> points;  // (F_P, F_C) in increasing relativity
  double gini = 0.0;
};

struct QuantileBin {
  long count = 0;
  double avg_price = 0.0;
  double avg_cost = 0.0;
};

struct EvaluationReport {
  double loss_ratio = 0.0;
  std::vector<std::pair<double, double>> loss_ratio_series;
  std::vector<QuantileBin> quantile_bins;
  LorenzResult lorenz;
  std::map<std::string, OrderedLorenzResult> ordered;  // keyed "x_vs_y"
};

// total actual costs over total collected fees
inline double loss_ratio(const std::vector<double>& prices, const std::vector<double>& costs) {
  if (prices.size() != costs.size()) throw std::invalid_argument("size mismatch");
  KahanAccumulator p, c;
  for (double v : prices) p.add(v);
  for (double v : costs) c.add(v);
  if (!(p.value() > 0)) throw std::invalid_argument("total premium must be positive");
  return c.value() / p.value();
}

// cumulative costs up to each grid time over premium earned pro-rata to the
// elapsed fraction of the contract duration
inline std::vector<std::pair<double, double>> loss_ratio_over_time(
    const PortfolioDataset& data, const std::vector<double>& prices, double duration,
    const std::vector<double>& grid) {
  if (prices.size() != data.timelines.size()) throw std::invalid_argument("size mismatch");
  double total_premium = 0.0;
  for (double v : prices) total_premium += v;
  if (!(total_premium > 0)) throw std::invalid_argument("total premium must be positive");

  std::vector<double> event_times, event_costs;
  for (const auto& tl : data.timelines)
    for (const auto& e : tl.events)
      if (e.observed && e.t <= duration) {
        event_times.push_back(e.t);
        event_costs.push_back(e.cost);
      }
  std::vector<std::size_t> order(event_times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return event_times[a] < event_times[b]; });

  std::vector<std::pair<double, double>> series;
  series.reserve(grid.size());
  KahanAccumulator cum;
  std::size_t idx = 0;
  for (double t : grid) {
    while (idx < order.size() && event_times[order[idx]] <= t) {
      cum.add(event_costs[order[idx]]);
      ++idx;
    }
    const double earned = total_premium * std::min(1.0, std::max(0.0, t / duration));
    series.emplace_back(t, earned > 0 ? cum.value() / earned : 0.0);
  }
  return series;
}

namespace detail {
// ascending by price, ties by position (machine order in the input)
inline std::vector<std::size_t> price_order(const std::vector<double>& prices) {
  std::vector<std::size_t> order(prices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return prices[a] < prices[b]; });
  return order;
}
}  // namespace detail

// equal-count bins in ascending price order; the remainder is spread over the
// first bins
inline std::vector<QuantileBin> quantile_bins(const std::vector<double>& prices,
                                              const std::vector<double>& costs, int n_bins) {
  if (prices.size() != costs.size()) throw std::invalid_argument("size mismatch");
  if (n_bins < 2) throw std::invalid_argument("n_bins must be >= 2");
  const long n = static_cast<long>(prices.size());
  if (n < n_bins) throw std::invalid_argument("need at least n_bins contracts");
  const auto order = detail::price_order(prices);

  std::vector<QuantileBin> bins(n_bins);
  const long base = n / n_bins;
  const long rem = n % n_bins;
  std::size_t pos = 0;
  for (int b = 0; b < n_bins; ++b) {
    const long count = base + (b < rem ? 1 : 0);
    KahanAccumulator sp, sc;
    for (long i = 0; i < count; ++i, ++pos) {
      sp.add(prices[order[pos]]);
      sc.add(costs[order[pos]]);
    }
    bins[b].count = count;
    bins[b].avg_price = sp.value() / count;
    bins[b].avg_cost = sc.value() / count;
  }
  return bins;
}

// Lorenz curve in ascending price order and its Gini index (twice the area
// between the curve and the line of equality, by the trapezoidal rule)
inline LorenzResult lorenz_gini(const std::vector<double>& prices,
                                const std::vector<double>& costs) {
  if (prices.size() != costs.size() || prices.empty())
    throw std::invalid_argument("need matching nonempty prices/costs");
  const auto order = detail::price_order(prices);
  const double n = static_cast<double>(prices.size());

  KahanAccumulator total;
  for (double c : costs) total.add(c);
  const double total_cost = total.value();
  if (!(total_cost > 0)) throw std::invalid_argument("total cost must be positive");

  LorenzResult res;
  res.points.reserve(prices.size() + 1);
  res.points.emplace_back(0.0, 0.0);
  KahanAccumulator cum;
  double area = 0.0;  // under the curve
  double prev_y = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    cum.add(costs[order[i]]);
    const double x = static_cast<double>(i + 1) / n;
    const double y = cum.value() / total_cost;
    res.points.emplace_back(x, y);
    area += 0.5 * (prev_y + y) / n;
    prev_y = y;
  }
  res.gini = 2.0 * (0.5 - area);
  return res;
}

// ordered Lorenz curve: contracts sorted by the relativity R_i = P_y,i/P_x,i,
// premium-weighted cumulative share of the current tariff x against the
// cost-weighted cumulative share; Gini is twice the signed area between the
// line of equality and the curve (positive when the curve lies below)
inline OrderedLorenzResult ordered_lorenz(const std::vector<double>& prices_x,
                                          const std::vector<double>& prices_y,
                                          const std::vector<double>& costs) {
  const std::size_t n = prices_x.size();
  if (prices_y.size() != n || costs.size() != n || n == 0)
    throw std::invalid_argument("need matching nonempty inputs");
  std::vector<double> rel(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(prices_x[i] > 0)) throw std::invalid_argument("current-tariff prices must be positive");
    rel[i] = prices_y[i] / prices_x[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rel[a] < rel[b]; });

  KahanAccumulator tp, tc;
  for (double v : prices_x) tp.add(v);
  for (double v : costs) tc.add(v);
  const double total_premium = tp.value();
  const double total_cost = tc.value();
  if (!(total_cost > 0)) throw std::invalid_argument("total cost must be positive");

  OrderedLorenzResult res;
  res.points.reserve(n + 1);
  res.points.emplace_back(0.0, 0.0);
  KahanAccumulator cp, cc;
  double signed_area = 0.0;
  double prev_x = 0.0, prev_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cp.add(prices_x[order[i]]);
    cc.add(costs[order[i]]);
    // contracts sharing a relativity enter the curve together
    if (i + 1 < n && rel[order[i + 1]] == rel[order[i]]) continue;
    const double x = cp.value() / total_premium;
    const double y = cc.value() / total_cost;
    res.points.emplace_back(x, y);
    // area between diagonal and curve over [prev_x, x]
    signed_area += 0.5 * ((prev_x - prev_y) + (x - y)) * (x - prev_x);
    prev_x = x;
    prev_y = y;
  }
  res.gini = 2.0 * signed_area;
  return res;
}

// per-machine exposure shares t_obs_i / sum(t_obs)
inline std::vector<double> relative_exposure(const PortfolioDataset& data) {
  if (data.timelines.empty()) throw std::invalid_argument("empty dataset");
  KahanAccumulator total;
  for (const auto& tl : data.timelines) total.add(tl.observation_length);
  std::vector<double> shares;
  shares.reserve(data.timelines.size());
  for (const auto& tl : data.timelines) shares.push_back(tl.observation_length / total.value());
  return shares;
}

// exposure share per distinct observation length
inline std::map<double, double> exposure_by_contract_length(const PortfolioDataset& data) {
  const auto shares = relative_exposure(data);
  std::map<double, double> by_len;
  for (std::size_t i = 0; i < shares.size(); ++i)
    by_len[data.timelines[i].observation_length] += shares[i];
  return by_len;
}

// exposure share of machines with fixed covariate k equal to 0 / 1
inline std::pair<double, double> exposure_by_fixed_covariate(const PortfolioDataset& data,
                                                             int k) {
  if (k < 0 || k >= kNumFixedCovariates) throw std::invalid_argument("bad covariate index");
  const auto shares = relative_exposure(data);
  double zero = 0.0, one = 0.0;
  for (std::size_t i = 0; i < shares.size(); ++i)
    (data.timelines[i].profile.fixed[k] ? one : zero) += shares[i];
  return {zero, one};
}

// time-weighted exposure share with the time-varying covariate at 0 / 1; the
// trajectory is reconstructed from the recorded per-event values
inline std::pair<double, double> exposure_by_tvc(const PortfolioDataset& data) {
  if (data.timelines.empty()) throw std::invalid_argument("empty dataset");
  double total = 0.0, at_one = 0.0;
  for (const auto& tl : data.timelines) {
    total += tl.observation_length;
    double prev_t = 0.0;
    for (const auto& e : tl.events) {
      // the recorded value holds over (t_prev_event, e.t]
      if (e.x2) at_one += e.t - prev_t;
      prev_t = e.t;
    }
  }
  return {(total - at_one) / total, at_one / total};
}

// count of matching observed failures over the matching machines' exposure
inline double empirical_failure_frequency(
    const PortfolioDataset& data, const std::function<bool(const MachineProfile&)>& filter,
    EventType failure_type) {
  double exposure = 0.0;
  long count = 0;
  long matched = 0;
  for (const auto& tl : data.timelines) {
    if (!filter(tl.profile)) continue;
    ++matched;
    exposure += tl.observation_length;
    for (const auto& e : tl.events)
      if (e.observed && e.type == failure_type) ++count;
  }
  if (matched == 0) throw std::invalid_argument("profile filter matches no machine");
  return static_cast<double>(count) / exposure;
}

}  // namespace servipricer
