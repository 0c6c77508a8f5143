#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dihedral_shock/acceptance.hpp"
#include "dihedral_shock/coefficients.hpp"
#include "dihedral_shock/linear_solver.hpp"
#include "dihedral_shock/nonlinear_driver.hpp"
#include "dihedral_shock/wall_geometry.hpp"

namespace dshock {

// Flat key = value text. "[section]" lines prefix the keys that follow,
// '#' starts a comment, later assignments win.
using ConfigEntries = std::map<std::string, std::string>;

ConfigEntries parse_config_text(const std::string& text, const std::string& source = "config");
ConfigEntries read_config_file(const std::string& path);
// "key=value" with the same key rules as a config line.
void apply_override(ConfigEntries& entries, const std::string& assignment);

enum class RunMode { background, identities, multipliers, linear, nonlinear, all };
std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

struct GasConfig {
  double gamma = 1.4;
  std::optional<double> lambda;
  std::optional<double> q_minus;
  std::optional<double> rho_minus;
  std::optional<double> bernoulli;
};

struct WallConfig {
  bool random = false;  // random poly-bump walls, one per identity sample
  WallParams params;
};

struct RunConfig {
  std::string name = "run";
  RunMode mode = RunMode::all;
  std::uint64_t seed = 1;

  GasConfig gas;
  WallConfig wall;
  UpstreamParams upstream;
  GridSpec grid;
  std::vector<double> eta_grid{0.5, 1, 2, 4, 8, 16, 32};

  int identity_samples = 500;
  int cross_check_samples = 1000;
  double identity_upstream_epsilon = 0.05;
  int multiplier_samples = 10000;
  LinearCheckOptions linear;

  double epsilon = 1e-3;
  double wall_scale = 1.0;
  double upstream_scale = 1.0;
  int m_max = 30;
  double tol_fix = 1e-10;
  double residual_tolerance = 1e-8;
  double cfl_target = 0.45;
  double budget = 1.0;
  bool scaling = true;
};

// Every key is validated before anything is computed. Unknown keys and bad
// values raise ConfigError naming the key.
RunConfig build_run_config(const ConfigEntries& entries, const std::string& default_name = "run");

// key = value lines for every field, in a fixed order.
std::string resolved_config_text(const RunConfig& cfg);

ShockBackground make_background(const GasConfig& gas);
NonlinearConfig make_nonlinear_config(const RunConfig& cfg);

}  // namespace dshock
