#pragma once

#include <map>
#include <string>
#include <vector>

#include "dihedral_shock/acceptance.hpp"
#include "dihedral_shock/run_config.hpp"

namespace dshock {

inline constexpr int kReportSchemaVersion = 1;

// Outputs too large for the JSON report.
struct RunArtifacts {
  std::vector<ShockTracePoint> trace;
  std::vector<SweepRecord> sweeps;
};

struct RunOutcome {
  Json report;  // includes a separate "timings" section
  RunArtifacts artifacts;
  bool pass = false;
};

// Runs the groups selected by cfg.mode, at most `jobs` at a time. Module
// errors become failed checks carrying the group name.
RunOutcome execute_run(const RunConfig& cfg, int jobs = 1);

// Report without the timing section, the part that is reproducible.
Json deterministic_part(const Json& report);

// File name -> CSV text: energy vs t per eta, contraction ratio vs sweep,
// shock deviation vs epsilon and convergence triplets.
std::map<std::string, std::string> emit_plot_data(const Json& report);

// out_root/<run name>/{report.json, *.csv, config.resolved}; returns the directory.
std::string write_run_bundle(const RunOutcome& outcome, const RunConfig& cfg, const std::string& out_root);

}  // namespace dshock
