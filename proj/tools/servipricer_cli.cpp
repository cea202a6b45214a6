// servipricer command line: simulate maintenance/failure portfolios, calibrate
// the pricing models, compute break-even price tables, evaluate tariff plans
// out of time, and run parameter-recovery studies.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
// non-convergence.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "servipricer/parallel.hpp"
#include "servipricer/servipricer.hpp"

namespace sp = servipricer;
using sp::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct CliError {
  int code;
  std::string message;
};

json manifest_for(const sp::SimulationConfig& cfg, const std::string& t_obs_law, long rows) {
  json m;
  m["seed"] = cfg.seed;
  if (cfg.profile_seed) m["profile_seed"] = cfg.profile_seed;
  m["n"] = cfg.continuation.empty() ? cfg.n_machines : static_cast<int>(cfg.continuation.size());
  m["t_obs"] = t_obs_law;
  m["plan"] = std::string(1, cfg.plan.id);
  m["params"] = sp::params_to_json(cfg.params);
  m["options"] = {{"reset_tvc_at_overhaul", cfg.options.reset_tvc_at_overhaul},
                  {"reset_pm_phase_at_overhaul", cfg.options.reset_pm_phase_at_overhaul}};
  m["rows"] = rows;
  return m;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::uint64_t seed_override, bool have_seed,
                 const std::string& continue_from) {
  json raw;
  sp::SimulationConfig cfg;
  try {
    raw = json::parse(sp::read_text_file(config_path));
    cfg = sp::config_from_json(raw);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (have_seed) cfg.seed = seed_override;
  try {
    if (!continue_from.empty())
      cfg.continuation = sp::continuation_from(sp::read_dataset_csv(continue_from));
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }

  const auto data = sp::simulate_portfolio(cfg);
  long rows = 0;
  for (const auto& tl : data.timelines) rows += static_cast<long>(tl.events.size());

  sp::write_text_file(out_path, sp::dataset_to_csv(data));
  sp::write_text_file(out_path + ".manifest.json",
                      manifest_for(cfg, raw.at("t_obs").get<std::string>(), rows).dump(2) + "\n");
  std::cout << "wrote " << rows << " rows for " << data.n_machines() << " machines to "
            << out_path << "\n";
  return kExitOk;
}

sp::PortfolioDataset read_dataset_or_throw(const std::string& path) {
  auto data = sp::read_dataset_csv(path);
  long events = 0;
  for (const auto& tl : data.timelines)
    for (const auto& e : tl.events) events += e.observed ? 1 : 0;
  if (events == 0) throw CliError{kExitData, path + ": no events in dataset"};
  return data;
}

int cmd_calibrate(const std::string& data_path, char plan_id, const std::string& out_path) {
  sp::PortfolioDataset data;
  try {
    data = read_dataset_or_throw(data_path);
  } catch (const CliError& e) {
    std::cerr << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }

  const auto fit = sp::fit_all(data, sp::TariffPlan::plan(plan_id));
  sp::write_text_file(out_path, sp::fit_to_json(fit, plan_id).dump(2) + "\n");

  for (const auto& err : fit.block_errors) std::cerr << "warning: " << err << "\n";
  std::printf("%-14s %12s %12s %12s %12s\n", "parameter", "estimate", "std.error", "ci.lo",
              "ci.hi");
  for (const auto& pe : fit.params)
    std::printf("%-14s %12.4f %12.4f %12.4f %12.4f\n", pe.name.c_str(), pe.estimate,
                pe.std_error, pe.ci_lo, pe.ci_hi);

  bool any_ok = false;
  for (const auto& pe : fit.params) any_ok = any_ok || pe.ok;
  return any_ok ? kExitOk : kExitNumerical;
}

int cmd_price(const std::string& params_path, char plan_id, double duration, long paths,
              std::uint64_t seed, const std::string& out_path) {
  sp::ModelParams params;
  try {
    json j = json::parse(sp::read_text_file(params_path));
    // accept both a bare parameter document and a calibration report
    params = sp::params_from_json(j.contains("params") ? j.at("params") : j);
  } catch (const std::exception& e) {
    std::cerr << "params error: " << e.what() << "\n";
    return kExitUsage;
  }

  const auto plan = sp::TariffPlan::plan(plan_id);
  const auto quotes = sp::price_table(params, plan, duration, paths, seed);

  json rows = json::array();
  for (const auto& q : quotes) rows.push_back(sp::quote_to_json(q));
  json report = {{"plan", std::string(1, plan_id)}, {"duration", duration},
                 {"n_paths", paths},               {"seed", seed},
                 {"rows", rows}};
  sp::write_text_file(out_path, report.dump(2) + "\n");

  std::printf("%-12s %10s %10s\n", "profile", "price", "mc.se");
  for (const auto& q : quotes)
    std::printf("(%d,%d,%d,%d,%d)  %10.2f %10.3f\n", q.profile.fixed[0], q.profile.fixed[1],
                q.profile.fixed[2], q.profile.fixed[3], q.profile.initial_tvc, q.price,
                q.mc_std_error);
  return kExitOk;
}

struct PlanEvaluation {
  char plan_id;
  sp::FitResult fit;
  std::vector<double> prices;
  sp::EvaluationReport report;
};

int cmd_evaluate(const std::string& in_time_path, const std::string& out_of_time_path,
                 const std::string& plans, double duration, int bins, long paths,
                 std::uint64_t seed, const std::string& out_path,
                 const std::string& plot_dir) {
  sp::PortfolioDataset train, test;
  try {
    train = read_dataset_or_throw(in_time_path);
    test = read_dataset_or_throw(out_of_time_path);
  } catch (const CliError& e) {
    std::cerr << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }

  // actual covered costs per test machine over the contract horizon
  std::vector<double> costs;
  costs.reserve(test.timelines.size());
  for (const auto& tl : test.timelines) {
    double c = 0.0;
    for (const auto& e : tl.events)
      if (e.observed && e.t <= duration) c += e.cost;
    costs.push_back(c);
  }

  std::vector<PlanEvaluation> evals;
  for (char plan_id : plans) {
    if (plan_id == ',') continue;
    PlanEvaluation pe;
    pe.plan_id = plan_id;
    const auto plan = sp::TariffPlan::plan(plan_id);
    pe.fit = sp::fit_all(train, plan);
    for (const auto& err : pe.fit.block_errors)
      std::cerr << "warning: plan " << plan_id << ": " << err << "\n";
    if (!pe.fit.converged && pe.fit.params.empty()) {
      std::cerr << "plan " << plan_id << ": calibration failed\n";
      return kExitNumerical;
    }

    // one quote per distinct plan-visible profile
    std::map<std::uint64_t, double> quote_cache;
    pe.prices.reserve(test.timelines.size());
    for (const auto& tl : test.timelines) {
      const auto key = sp::plan_visible_key(tl.profile, plan);
      auto it = quote_cache.find(key);
      if (it == quote_cache.end()) {
        const auto q =
            sp::break_even_price(tl.profile, duration, pe.fit.estimates, plan, paths, seed);
        it = quote_cache.emplace(key, q.price).first;
      }
      pe.prices.push_back(it->second);
    }

    pe.report.loss_ratio = sp::loss_ratio(pe.prices, costs);
    std::vector<double> grid;
    for (int i = 1; i <= 50; ++i) grid.push_back(duration * i / 50.0);
    pe.report.loss_ratio_series = sp::loss_ratio_over_time(test, pe.prices, duration, grid);
    pe.report.quantile_bins = sp::quantile_bins(pe.prices, costs, bins);
    pe.report.lorenz = sp::lorenz_gini(pe.prices, costs);
    evals.push_back(std::move(pe));
  }

  json report;
  report["duration"] = duration;
  report["n_paths"] = paths;
  report["seed"] = seed;
  for (auto& pe : evals) {
    json jp;
    jp["loss_ratio"] = pe.report.loss_ratio;
    json series = json::array();
    for (auto [t, r] : pe.report.loss_ratio_series) series.push_back({t, r});
    jp["loss_ratio_series"] = series;
    json qb = json::array();
    for (const auto& b : pe.report.quantile_bins)
      qb.push_back({{"count", b.count}, {"avg_price", b.avg_price}, {"avg_cost", b.avg_cost}});
    jp["quantile_bins"] = qb;
    jp["lorenz"] = sp::lorenz_to_json(pe.report.lorenz);
    jp["calibration"] = sp::fit_to_json(pe.fit, pe.plan_id);
    report["plans"][std::string(1, pe.plan_id)] = jp;
    std::printf("plan %c: loss ratio %.4f, gini %.4f\n", pe.plan_id, pe.report.loss_ratio,
                pe.report.lorenz.gini);
  }
  for (const auto& x : evals)
    for (const auto& y : evals) {
      if (x.plan_id == y.plan_id) continue;
      const auto ol = sp::ordered_lorenz(x.prices, y.prices, costs);
      const std::string key =
          std::string(1, x.plan_id) + "_vs_" + std::string(1, y.plan_id);
      report["ordered_lorenz"][key] = sp::ordered_lorenz_to_json(ol);
      std::printf("ordered gini %s: %.4f\n", key.c_str(), ol.gini);
    }
  sp::write_text_file(out_path, report.dump(2) + "\n");

  if (!plot_dir.empty()) {
    std::filesystem::create_directories(plot_dir);
    for (const auto& pe : evals) {
      const std::string tag(1, pe.plan_id);
      std::string lcsv = "population_share,cost_share\n";
      for (auto [x, y] : pe.report.lorenz.points)
        lcsv += sp::detail::fmt_double(x) + "," + sp::detail::fmt_double(y) + "\n";
      sp::write_text_file(plot_dir + "/lorenz_" + tag + ".csv", lcsv);
      std::string qcsv = "bin,avg_price,avg_cost\n";
      for (std::size_t b = 0; b < pe.report.quantile_bins.size(); ++b)
        qcsv += std::to_string(b + 1) + "," +
                sp::detail::fmt_double(pe.report.quantile_bins[b].avg_price) + "," +
                sp::detail::fmt_double(pe.report.quantile_bins[b].avg_cost) + "\n";
      sp::write_text_file(plot_dir + "/quantile_" + tag + ".csv", qcsv);
      std::string scsv = "t,loss_ratio\n";
      for (auto [t, r] : pe.report.loss_ratio_series)
        scsv += sp::detail::fmt_double(t) + "," + sp::detail::fmt_double(r) + "\n";
      sp::write_text_file(plot_dir + "/loss_ratio_" + tag + ".csv", scsv);
    }
  }
  return kExitOk;
}

int cmd_recover(const std::string& config_path, int replications, std::uint64_t seed_override,
                bool have_seed, const std::string& out_path) {
  sp::SimulationConfig cfg;
  try {
    cfg = sp::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (replications < 2) {
    std::cerr << "usage error: --replications must be >= 2\n";
    return kExitUsage;
  }
  if (have_seed) cfg.seed = seed_override;

  // truth values keyed by the fitted-parameter names
  std::map<std::string, double> truth;
  truth["alpha0"] = cfg.params.hazard.alpha0;
  truth["kappa0"] = cfg.params.hazard.kappa0;
  truth["gamma0"] = cfg.params.hazard.gamma0;
  for (int k = 0; k < sp::kNumFixedCovariates; ++k)
    truth["beta1_" + std::to_string(k + 1)] = cfg.params.hazard.beta1[k];
  truth["beta2"] = cfg.params.hazard.beta2;
  truth["alpha_c"] = cfg.params.hazard.alpha_c;
  truth["kappa_c"] = cfg.params.hazard.kappa_c;
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k <= sp::kNumFixedCovariates; ++k)
      truth["alpha" + std::to_string(c + 1) + "_" + std::to_string(k)] =
          cfg.params.type_logit.alpha[c][k];
  truth["gamma_m_shape"] = cfg.params.severity.maintenance.shape;
  truth["gamma_m_scale"] = cfg.params.severity.maintenance.scale;
  truth["gamma_1_shape"] = cfg.params.severity.minor1.shape;
  truth["gamma_1_scale"] = cfg.params.severity.minor1.scale;
  truth["gamma_2_shape"] = cfg.params.severity.minor2.shape;
  truth["gamma_2_scale"] = cfg.params.severity.minor2.scale;
  truth["gamma_c_shape"] = cfg.params.severity.catastrophic.shape;
  truth["gamma_c_scale"] = cfg.params.severity.catastrophic.scale;
  truth["theta"] = cfg.params.severity.frank_theta;

  std::vector<sp::FitResult> fits(replications);
  std::vector<int> failed(replications, 0);
  sp::parallel_for(static_cast<std::size_t>(replications), [&](std::size_t r) {
    sp::SimulationConfig rep_cfg = cfg;
    rep_cfg.seed = sp::derive_seed(cfg.seed, r + 1, 0x5ec);
    const auto data = sp::simulate_portfolio(rep_cfg);
    fits[r] = sp::fit_all(data, cfg.plan);
    if (!fits[r].converged) failed[r] = 1;
  });

  int n_failed = 0;
  for (int f : failed) n_failed += f;

  json rows = json::array();
  std::printf("%-14s %10s %10s %10s %10s %9s\n", "parameter", "truth", "mean.est", "rel.err",
              "emp.sd", "coverage");
  for (const auto& [name, tv] : truth) {
    std::vector<double> est;
    long covered = 0, with_ci = 0;
    for (int r = 0; r < replications; ++r) {
      if (failed[r]) continue;
      const auto* pe = fits[r].find(name);
      if (!pe || !std::isfinite(pe->estimate)) continue;
      est.push_back(pe->estimate);
      if (pe->ok) {
        ++with_ci;
        if (pe->ci_lo <= tv && tv <= pe->ci_hi) ++covered;
      }
    }
    if (est.empty()) continue;
    const auto mv = sp::mean_var(est);
    const double rel =
        tv != 0.0 ? (mv.mean - tv) / tv : mv.mean - tv;
    const double coverage = with_ci > 0 ? static_cast<double>(covered) / with_ci : 0.0;
    std::printf("%-14s %10.4f %10.4f %9.2f%% %10.4f %9.3f\n", name.c_str(), tv, mv.mean,
                100.0 * rel, std::sqrt(mv.variance), coverage);
    rows.push_back({{"name", name},
                    {"truth", tv},
                    {"mean_estimate", mv.mean},
                    {"relative_error", rel},
                    {"empirical_sd", std::sqrt(mv.variance)},
                    {"ci_coverage", coverage},
                    {"replications_used", est.size()}});
  }
  json report = {{"replications", replications},
                 {"failed", n_failed},
                 {"seed", cfg.seed},
                 {"parameters", rows}};
  sp::write_text_file(out_path, report.dump(2) + "\n");
  if (n_failed) std::cerr << n_failed << " replication(s) did not converge and were excluded\n";
  return n_failed < replications ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"full-service maintenance contract pricing toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_path, params_path, out_path, in_time, out_of_time;
  std::string continue_from, plot_dir, plans = "a,b,c";
  std::string plan = "c";
  double duration = 2.0;
  int bins = 10;
  long paths = 100000;
  int replications = 25;
  std::uint64_t seed = 0;

  auto* sim = app.add_subcommand("simulate", "generate a portfolio dataset");
  sim->add_option("--config", config_path, "simulation config (json)")->required();
  sim->add_option("--out", out_path, "output csv path")->required();
  auto* sim_seed = sim->add_option("--seed", seed, "override the config seed");
  sim->add_option("--continue-from", continue_from,
                  "csv dataset whose end-of-window machine states seed this window");

  auto* cal = app.add_subcommand("calibrate", "fit model parameters from a dataset");
  cal->add_option("--data", data_path, "dataset csv")->required();
  cal->add_option("--plan", plan, "tariff plan: a, b or c")->required();
  cal->add_option("--out", out_path, "output report (json)")->required();

  auto* pr = app.add_subcommand("price", "break-even price table over all machine profiles");
  pr->add_option("--params", params_path, "parameter json (config params or calibration report)")
      ->required();
  pr->add_option("--plan", plan, "tariff plan: a, b or c")->required();
  pr->add_option("--duration", duration, "contract duration in years")->required();
  pr->add_option("--paths", paths, "Monte-Carlo paths per quote");
  pr->add_option("--seed", seed, "Monte-Carlo seed");
  pr->add_option("--out", out_path, "output report (json)")->required();

  auto* ev = app.add_subcommand("evaluate", "out-of-time tariff evaluation");
  ev->add_option("--in-time", in_time, "training dataset csv")->required();
  ev->add_option("--out-of-time", out_of_time, "evaluation dataset csv")->required();
  ev->add_option("--plans", plans, "comma-separated tariff plans (default a,b,c)");
  ev->add_option("--duration", duration, "contract duration in years");
  ev->add_option("--bins", bins, "quantile bins");
  ev->add_option("--paths", paths, "Monte-Carlo paths per quote");
  ev->add_option("--seed", seed, "Monte-Carlo seed");
  ev->add_option("--out", out_path, "output report (json)")->required();
  ev->add_option("--plot-dir", plot_dir, "also write plot-ready csv files here");

  auto* rec = app.add_subcommand("recover", "simulate/calibrate replication study");
  rec->add_option("--config", config_path, "simulation config (json)")->required();
  rec->add_option("--replications", replications, "number of replications (>= 2)");
  auto* rec_seed = rec->add_option("--seed", seed, "override the config seed");
  rec->add_option("--out", out_path, "output report (json)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(config_path, out_path, seed, sim_seed->count() > 0, continue_from);
    if (cal->parsed()) return cmd_calibrate(data_path, plan.at(0), out_path);
    if (pr->parsed()) {
      if (!(duration > 0)) {
        std::cerr << "usage error: --duration must be > 0\n";
        return kExitUsage;
      }
      return cmd_price(params_path, plan.at(0), duration, paths, seed, out_path);
    }
    if (ev->parsed())
      return cmd_evaluate(in_time, out_of_time, plans, duration, bins, paths, seed, out_path,
                          plot_dir);
    if (rec->parsed())
      return cmd_recover(config_path, replications, seed, rec_seed->count() > 0, out_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
