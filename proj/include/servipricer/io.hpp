#pragma once

// Dataset CSV serialization, JSON configuration and report documents.
//
// CSV schema (one row per event):
//   machine_id,t,t_prev,censored,event_type,cost,cost_sub1,cost_sub2,
//   x1_1,x1_2,x1_3,x1_4,x2
// with event_type in {m,f1,f2,f3,fc,censor} and censored = 1 for observed
// events, 0 for the terminal censor row. Times and costs are written with 17
// significant digits so a written dataset parses back bit-identically. The
// two sub-cost columns carry the component costs of co-occurring (f3)
// failures and are zero elsewhere; they are what makes the cost-dependence
// model refittable from a round-tripped file.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "servipricer/calibrate.hpp"
#include "servipricer/evaluate.hpp"
#include "servipricer/simulate.hpp"
#include "servipricer/types.hpp"

namespace servipricer {

using json = nlohmann::json;

inline constexpr const char* kCsvHeader =
    "machine_id,t,t_prev,censored,event_type,cost,cost_sub1,cost_sub2,"
    "x1_1,x1_2,x1_3,x1_4,x2";

namespace detail {
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline std::string dataset_to_csv(const PortfolioDataset& data) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& tl : data.timelines)
    for (const auto& e : tl.events) {
      out += std::to_string(e.machine_id);
      out += ',';
      out += detail::fmt_double(e.t);
      out += ',';
      out += detail::fmt_double(e.t_prev);
      out += ',';
      out += e.observed ? '1' : '0';
      out += ',';
      out += event_type_label(e.type);
      out += ',';
      out += detail::fmt_double(e.cost);
      out += ',';
      out += detail::fmt_double(e.cost_sub1);
      out += ',';
      out += detail::fmt_double(e.cost_sub2);
      for (int k = 0; k < kNumFixedCovariates; ++k) {
        out += ',';
        out += std::to_string(tl.profile.fixed[k]);
      }
      out += ',';
      out += std::to_string(e.x2);
      out += '\n';
    }
  return out;
}

inline PortfolioDataset dataset_from_csv_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  long line_no = 0;

  auto fail = [&](const std::string& what) {
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": " + what);
  };

  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw std::runtime_error("csv: unexpected header");

  struct Raw {
    EventRecord event;
    std::array<int, kNumFixedCovariates> fixed;
  };
  std::map<int, std::vector<Raw>> by_machine;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      f.push_back(line.substr(pos, next - pos));
      pos = next + 1;
    }
    if (f.size() != 13) fail("expected 13 fields, got " + std::to_string(f.size()));
    auto to_num = [&](const std::string& s) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        fail("bad number: " + s);
      }
      if (used != s.size()) fail("bad number: " + s);
      return v;
    };
    Raw r;
    r.event.machine_id = static_cast<int>(to_num(f[0]));
    r.event.t = to_num(f[1]);
    r.event.t_prev = to_num(f[2]);
    r.event.observed = f[3] == "1";
    if (f[3] != "0" && f[3] != "1") fail("censored flag must be 0/1");
    r.event.type = event_type_from_label(f[4]);
    r.event.cost = to_num(f[5]);
    r.event.cost_sub1 = to_num(f[6]);
    r.event.cost_sub2 = to_num(f[7]);
    for (int k = 0; k < kNumFixedCovariates; ++k) {
      double v = to_num(f[8 + k]);
      if (v != 0 && v != 1) fail("fixed covariates must be 0/1");
      r.fixed[k] = static_cast<int>(v);
    }
    double x2 = to_num(f[12]);
    if (x2 != 0 && x2 != 1) fail("x2 must be 0/1");
    r.event.x2 = static_cast<int>(x2);
    by_machine[r.event.machine_id].push_back(r);
  }
  if (by_machine.empty()) throw std::runtime_error("csv: no events");

  PortfolioDataset data;
  for (auto& [id, rows] : by_machine) {
    Timeline tl;
    tl.machine_id = id;
    tl.profile.fixed = rows.front().fixed;
    tl.profile.initial_tvc = rows.front().event.x2;
    for (auto& r : rows) {
      if (r.fixed != tl.profile.fixed)
        throw std::runtime_error("machine " + std::to_string(id) +
                                 ": fixed covariates change between rows");
      tl.events.push_back(r.event);
      if (r.event.type == EventType::censor) tl.observation_length = r.event.t;
    }
    if (tl.observation_length <= 0)
      throw std::runtime_error("machine " + std::to_string(id) + ": missing censor row");
    data.timelines.push_back(std::move(tl));
  }
  return data;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_dataset_csv(const std::string& path, const PortfolioDataset& data) {
  write_text_file(path, dataset_to_csv(data));
}

inline PortfolioDataset read_dataset_csv(const std::string& path) {
  return dataset_from_csv_text(read_text_file(path));
}

// ---------------------------------------------------------------------------
// model parameters <-> JSON (flat, one key per model symbol)

inline json params_to_json(const ModelParams& p) {
  json j;
  j["alpha0"] = p.hazard.alpha0;
  j["kappa0"] = p.hazard.kappa0;
  j["gamma0"] = p.hazard.gamma0;
  j["beta1"] = p.hazard.beta1;
  j["beta2"] = p.hazard.beta2;
  j["pm_interval"] = p.hazard.pm_interval;
  j["alpha_c"] = p.hazard.alpha_c;
  j["kappa_c"] = p.hazard.kappa_c;
  j["alpha1"] = p.type_logit.alpha[0];
  j["alpha2"] = p.type_logit.alpha[1];
  j["gamma_m"] = {p.severity.maintenance.shape, p.severity.maintenance.scale};
  j["gamma_1"] = {p.severity.minor1.shape, p.severity.minor1.scale};
  j["gamma_2"] = {p.severity.minor2.shape, p.severity.minor2.scale};
  j["gamma_c"] = {p.severity.catastrophic.shape, p.severity.catastrophic.scale};
  j["theta"] = p.severity.frank_theta;
  return j;
}

inline ModelParams params_from_json(const json& j) {
  ModelParams p;
  try {
    p.hazard.alpha0 = j.at("alpha0").get<double>();
    p.hazard.kappa0 = j.at("kappa0").get<double>();
    p.hazard.gamma0 = j.at("gamma0").get<double>();
    p.hazard.beta1 = j.at("beta1").get<std::array<double, kNumFixedCovariates>>();
    p.hazard.beta2 = j.at("beta2").get<double>();
    p.hazard.pm_interval = j.value("pm_interval", 1.0);
    p.hazard.alpha_c = j.at("alpha_c").get<double>();
    p.hazard.kappa_c = j.at("kappa_c").get<double>();
    p.type_logit.alpha[0] = j.at("alpha1").get<std::array<double, 5>>();
    p.type_logit.alpha[1] = j.at("alpha2").get<std::array<double, 5>>();
    auto pair = [&](const char* key, GammaSeverity& g) {
      auto v = j.at(key).get<std::array<double, 2>>();
      g.shape = v[0];
      g.scale = v[1];
    };
    pair("gamma_m", p.severity.maintenance);
    pair("gamma_1", p.severity.minor1);
    pair("gamma_2", p.severity.minor2);
    pair("gamma_c", p.severity.catastrophic);
    p.severity.frank_theta = j.at("theta").get<double>();
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("params: ") + e.what());
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// simulation configuration

inline SimulationConfig config_from_json(const json& j) {
  SimulationConfig cfg;
  try {
    cfg.n_machines = j.at("n").get<int>();
    cfg.t_obs_law = ObservationLaw::parse(j.at("t_obs").get<std::string>());
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.profile_seed = j.value("profile_seed", std::uint64_t{0});
    cfg.plan = TariffPlan::plan(j.value("plan", std::string("c")).at(0));
    cfg.params = params_from_json(j.at("params"));
    if (j.contains("options")) {
      const auto& o = j.at("options");
      cfg.options.reset_tvc_at_overhaul = o.value("reset_tvc_at_overhaul", true);
      cfg.options.reset_pm_phase_at_overhaul = o.value("reset_pm_phase_at_overhaul", true);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline SimulationConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// reports

inline json fit_to_json(const FitResult& fit, char plan_id) {
  json j;
  j["plan"] = std::string(1, plan_id);
  j["converged"] = fit.converged;
  j["loglik"] = fit.loglik;
  j["iterations"] = fit.iterations;
  j["errors"] = fit.block_errors;
  j["params"] = params_to_json(fit.estimates);
  json table = json::array();
  for (const auto& pe : fit.params) {
    json row;
    row["name"] = pe.name;
    row["estimate"] = pe.estimate;
    row["std_error"] = pe.std_error;
    row["ci_lo"] = pe.ci_lo;
    row["ci_hi"] = pe.ci_hi;
    row["ok"] = pe.ok;
    table.push_back(row);
  }
  j["table"] = table;
  return j;
}

inline json quote_to_json(const ContractQuote& q) {
  json j;
  j["profile"] = {q.profile.fixed[0], q.profile.fixed[1], q.profile.fixed[2], q.profile.fixed[3],
                  q.profile.initial_tvc};
  j["duration"] = q.duration;
  j["price"] = q.price;
  j["mc_paths"] = q.mc_paths;
  j["mc_std_error"] = q.mc_std_error;
  j["components"] = {{"catastrophic", q.catastrophic_term},
                     {"minor", q.minor_term},
                     {"maintenance", q.maintenance_term}};
  j["path_cost_mean"] = q.path_cost_mean;
  j["path_cost_std_error"] = q.path_cost_std_error;
  return j;
}

inline json lorenz_to_json(const LorenzResult& l) {
  json pts = json::array();
  for (auto [x, y] : l.points) pts.push_back({x, y});
  return json{{"points", pts}, {"gini", l.gini}};
}

inline json ordered_lorenz_to_json(const OrderedLorenzResult& l) {
  json pts = json::array();
  for (auto [x, y] : l.points) pts.push_back({x, y});
  return json{{"points", pts}, {"gini", l.gini}};
}

}  // namespace servipricer
