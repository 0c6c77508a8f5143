#include "dihedral_shock/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <functional>
#include <sstream>

#include "dihedral_shock/errors.hpp"

namespace dshock {

namespace {

struct GroupResult {
  std::string group;
  std::vector<CheckResult> checks;
  Json data = Json::object();
  RunArtifacts artifacts;
  double seconds = 0.0;
};

using GroupTask = std::function<GroupResult()>;

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

GroupResult guarded(const std::string& group, const std::function<void(GroupResult&)>& body) {
  GroupResult g;
  g.group = group;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(g);
  } catch (const std::exception& e) {
    CheckResult c;
    c.name = group;
    c.detail = group + ": " + e.what();
    g.checks.push_back(c);
    g.data["error"] = e.what();
  }
  g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return g;
}

Json iteration_json(const IterationReport& rep) {
  Json sweeps = Json::array();
  for (const auto& s : rep.sweeps) {
    sweeps.push_back({{"sweep", s.m},
                      {"high_norm", s.high_norm},
                      {"difference", s.difference},
                      {"difference_abs", s.difference_abs},
                      {"ratio", s.ratio},
                      {"within_budget", s.within_budget},
                      {"residual_interior", s.residual.interior},
                      {"residual_boundary", s.residual.boundary}});
  }
  return Json{{"epsilon", rep.epsilon},
              {"converged", rep.converged},
              {"sweeps_used", rep.sweeps_used},
              {"sigma0", rep.sigma0},
              {"ratios", rep.ratios},
              {"final_residual", rep.final_residual},
              {"final_residual_relative", rep.final_residual_relative},
              {"shock_deviation", rep.shock_deviation},
              {"roundtrip_error", rep.roundtrip_error},
              {"dt", rep.dt},
              {"n_steps", rep.n_steps},
              {"sweeps", sweeps}};
}

GroupTask background_task(const RunConfig& cfg) {
  return [cfg] {
    return guarded("background", [&](GroupResult& g) {
      auto c = check_background_state(make_background(cfg.gas));
      c.id = 2;
      g.data = c.metrics;
      g.checks.push_back(std::move(c));
    });
  };
}

GroupTask identities_task(const RunConfig& cfg) {
  return [cfg] {
    return guarded("identities", [&](GroupResult& g) {
      const auto bg = make_background(cfg.gas);
      const WallSource walls = cfg.wall.random ? random_walls(cfg.wall.params.amplitude, cfg.seed)
                                               : WallSource([w = WallSpec(cfg.wall.params)](std::uint64_t) { return w; });
      IdentityOptions opt;
      opt.seed = cfg.seed;
      opt.upstream_epsilon = cfg.identity_upstream_epsilon;
      opt.samples = cfg.identity_samples;
      g.checks.push_back(check_identity_suite(bg, walls, opt));
      opt.samples = cfg.cross_check_samples;
      opt.seed = cfg.seed + 1;
      g.checks.push_back(check_cross_check(bg, walls, opt));
      g.data = {{"suite", g.checks[0].metrics}, {"cross_check", g.checks[1].metrics}};
    });
  };
}

GroupTask multipliers_task(const RunConfig& cfg) {
  return [cfg] {
    return guarded("multipliers", [&](GroupResult& g) {
      VerifyOptions opt;
      opt.samples = cfg.multiplier_samples;
      opt.seed = cfg.seed;
      g.checks.push_back(check_multipliers({make_background(cfg.gas)}, opt));
      g.data = g.checks.back().metrics;
    });
  };
}

GroupTask linear_task(const RunConfig& cfg) {
  return [cfg] {
    return guarded("linear", [&](GroupResult& g) {
      const auto v = linear_verification(make_background(cfg.gas), cfg.linear);
      g.checks.push_back(check_linear_solver(v));
      g.checks.push_back(check_energy_estimate(v));
      const auto& L = v.study.ledgers.back();
      std::vector<double> energy(L.times.size());
      for (std::size_t n = 0; n < L.times.size(); ++n) energy[n] = L.interior[0][n] + L.interior[1][n];
      Json conv = Json::array();
      for (std::size_t i = 0; i < v.study.levels.size(); ++i) {
        const auto& lv = v.study.levels[i];
        conv.push_back({{"n1", lv.n1}, {"h", lv.h}, {"error_l2", lv.error_l2},
                        {"order", i == 0 ? Json(nullptr) : Json(v.orders[i - 1])}});
      }
      g.data = {{"verification", g.checks[0].metrics},
                {"estimate", g.checks[1].metrics},
                {"convergence", conv},
                {"energy_series", {{"n1", v.study.levels.back().n1}, {"t", L.times}, {"energy", energy}}}};
    });
  };
}

GroupTask nonlinear_task(const RunConfig& cfg) {
  return [cfg] {
    return guarded("nonlinear", [&](GroupResult& g) {
      const auto bg = make_background(cfg.gas);
      const auto nl = make_nonlinear_config(cfg);
      Json deviation = Json::array();
      if (cfg.scaling) {
        const auto s = epsilon_scaling(bg, nl);
        g.checks.push_back(check_nonlinear(s, nl));
        g.data = {{"full", iteration_json(s.full)}, {"half", iteration_json(s.half)},
                  {"deviation_ratio", s.deviation_ratio}};
        deviation.push_back({{"epsilon", s.half.epsilon}, {"shock_deviation", s.half.shock_deviation}});
        deviation.push_back({{"epsilon", s.full.epsilon}, {"shock_deviation", s.full.shock_deviation}});
        g.artifacts.trace = s.full.trace;
        g.artifacts.sweeps = s.full.sweeps;
      } else {
        const auto rep = run_stability_experiment(bg, nl);
        CheckResult c;
        c.id = 8;
        c.name = "nonlinear stability";
        c.pass = rep.converged && rep.sigma0 < 0.9 && rep.final_residual <= nl.residual_tolerance;
        c.detail = "sigma0 " + csv_number(rep.sigma0) + ", sweeps " + std::to_string(rep.sweeps_used) +
                   ", residual " + csv_number(rep.final_residual);
        c.metrics = iteration_json(rep);
        g.checks.push_back(c);
        g.data = {{"full", c.metrics}};
        deviation.push_back({{"epsilon", rep.epsilon}, {"shock_deviation", rep.shock_deviation}});
        g.artifacts.trace = rep.trace;
        g.artifacts.sweeps = rep.sweeps;
      }
      g.data["deviation"] = deviation;
    });
  };
}

std::vector<std::pair<RunMode, GroupTask>> tasks_for(const RunConfig& cfg) {
  std::vector<std::pair<RunMode, GroupTask>> all{{RunMode::background, background_task(cfg)},
                                                 {RunMode::identities, identities_task(cfg)},
                                                 {RunMode::multipliers, multipliers_task(cfg)},
                                                 {RunMode::linear, linear_task(cfg)},
                                                 {RunMode::nonlinear, nonlinear_task(cfg)}};
  std::vector<std::pair<RunMode, GroupTask>> out;
  for (auto& t : all) {
    if (cfg.mode == RunMode::all || cfg.mode == t.first) out.push_back(std::move(t));
  }
  return out;
}

Json config_json(const RunConfig& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : parse_config_text(resolved_config_text(cfg), "resolved")) j[k] = v;
  j["eta.grid"] = cfg.eta_grid;
  return j;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError(p.string() + ": cannot write");
  os << text;
}

std::string eta_label(double eta) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", eta);
  return buf;
}

}  // namespace

RunOutcome execute_run(const RunConfig& cfg, int jobs) {
  if (jobs < 1) throw ConfigError("--jobs: must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  auto tasks = tasks_for(cfg);
  std::vector<GroupResult> results(tasks.size());
  for (std::size_t start = 0; start < tasks.size(); start += static_cast<std::size_t>(jobs)) {
    const std::size_t stop = std::min(tasks.size(), start + static_cast<std::size_t>(jobs));
    if (stop - start == 1) {
      results[start] = tasks[start].second();
      continue;
    }
    std::vector<std::future<GroupResult>> running;
    for (std::size_t i = start; i < stop; ++i) running.push_back(std::async(std::launch::async, tasks[i].second));
    for (std::size_t i = start; i < stop; ++i) results[i] = running[i - start].get();
  }

  RunOutcome out;
  Json& rep = out.report;
  rep["schema_version"] = kReportSchemaVersion;
  rep["run"] = {{"name", cfg.name}, {"mode", to_string(cfg.mode)}, {"seed", cfg.seed}};
  rep["config"] = config_json(cfg);
  Json res = Json::object();
  Json checks = Json::array();
  Json timings = Json::object();
  out.pass = !results.empty();
  for (auto& g : results) {
    res[g.group] = g.data;
    for (const auto& c : g.checks) {
      Json cj = to_json(c);
      cj.erase("metrics");
      cj["group"] = g.group;
      checks.push_back(cj);
      out.pass = out.pass && c.pass;
    }
    timings[g.group] = g.seconds;
    if (!g.artifacts.trace.empty()) out.artifacts = std::move(g.artifacts);
  }
  rep["results"] = res;
  rep["checks"] = checks;
  rep["pass"] = out.pass;
  timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep["timings"] = timings;
  return out;
}

Json deterministic_part(const Json& report) {
  Json j = report;
  j.erase("timings");
  return j;
}

std::map<std::string, std::string> emit_plot_data(const Json& report) {
  std::map<std::string, std::string> files;
  const Json empty = Json::object();
  const Json& results = report.contains("results") ? report["results"] : empty;
  const Json& linear = results.contains("linear") ? results["linear"] : empty;
  const Json& nonlinear = results.contains("nonlinear") ? results["nonlinear"] : empty;

  if (report.contains("config") && report["config"].contains("eta.grid")) {
    for (const auto& e : report["config"]["eta.grid"]) {
      const double eta = e.get<double>();
      std::string csv = "t,weighted_energy\n";
      if (linear.contains("energy_series")) {
        const auto& s = linear["energy_series"];
        for (std::size_t n = 0; n < s["t"].size(); ++n) {
          const double t = s["t"][n].get<double>();
          csv += csv_number(t) + "," + csv_number(std::exp(-2.0 * eta * t) * s["energy"][n].get<double>()) + "\n";
        }
      }
      files["energy_eta_" + eta_label(eta) + ".csv"] = csv;
    }
  }

  std::string contraction = "sweep,ratio\n";
  std::string deviation = "epsilon,shock_deviation\n";
  if (nonlinear.contains("full")) {
    for (const auto& s : nonlinear["full"]["sweeps"]) {
      if (s["sweep"].get<int>() == 0) continue;
      contraction += std::to_string(s["sweep"].get<int>()) + "," + csv_number(s["ratio"].get<double>()) + "\n";
    }
  }
  if (nonlinear.contains("deviation")) {
    for (const auto& d : nonlinear["deviation"]) {
      deviation += csv_number(d["epsilon"].get<double>()) + "," + csv_number(d["shock_deviation"].get<double>()) + "\n";
    }
  }
  files["contraction.csv"] = contraction;
  files["deviation.csv"] = deviation;

  std::string conv = "n1,h,error_l2,order\n";
  if (linear.contains("convergence")) {
    for (const auto& c : linear["convergence"]) {
      conv += std::to_string(c["n1"].get<int>()) + "," + csv_number(c["h"].get<double>()) + "," +
              csv_number(c["error_l2"].get<double>()) + "," +
              (c["order"].is_null() ? std::string() : csv_number(c["order"].get<double>())) + "\n";
    }
  }
  files["convergence.csv"] = conv;
  return files;
}

std::string write_run_bundle(const RunOutcome& outcome, const RunConfig& cfg, const std::string& out_root) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(out_root) / cfg.name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(dir.string() + ": cannot create output directory (" + ec.message() + ")");
  write_text(dir / "report.json", outcome.report.dump(2) + "\n");
  write_text(dir / "config.resolved", resolved_config_text(cfg));
  for (const auto& [name, csv] : emit_plot_data(outcome.report)) write_text(dir / name, csv);
  write_shock_trace_csv((dir / "shock_trace.csv").string(), outcome.artifacts.trace);
  write_sweep_csv((dir / "sweeps.csv").string(), outcome.artifacts.sweeps);
  return dir.string();
}

}  // namespace dshock
