#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dihedral_shock/errors.hpp"
#include "dihedral_shock/run_config.hpp"
#include "dihedral_shock/runner.hpp"

using namespace dshock;

namespace {

constexpr int kExitChecksFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

RunConfig load(const std::string& path, const std::vector<std::string>& sets, const std::optional<std::string>& mode,
               const std::optional<std::uint64_t>& seed) {
  ConfigEntries entries = read_config_file(path);
  for (const auto& s : sets) apply_override(entries, s);
  if (mode) entries["run.mode"] = *mode;
  if (seed) entries["run.seed"] = std::to_string(*seed);
  return build_run_config(entries, std::filesystem::path(path).stem().string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability experiments for a transonic shock in a dihedral wedge"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int jobs = 1;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file (key = value)")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "background, identities, multipliers, linear, nonlinear or all");
  run->add_option("--out", out_dir, "Output root; DIHEDRAL_SHOCK_OUT takes precedence")->capture_default_str();
  run->add_option("--seed", seed, "RNG seed for randomized samples");
  run->add_option("--jobs", jobs, "Number of independent groups run concurrently")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  run->add_option("--set", sets, "Override a config key, as key=value");

  auto* check = app.add_subcommand("check", "Validate a config file and print the resolved config");
  check->add_option("config", config_path, "Config file (key = value)")->required()->check(CLI::ExistingFile);
  check->add_option("--set", sets, "Override a config key, as key=value");

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  try {
    cfg = load(config_path, sets, mode, seed);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  if (check->parsed()) {
    std::cout << resolved_config_text(cfg);
    std::cerr << config_path << ": ok\n";
    return 0;
  }

  if (const char* env = std::getenv("DIHEDRAL_SHOCK_OUT"); env && *env) out_dir = env;

  try {
    const auto outcome = execute_run(cfg, jobs);
    const auto dir = write_run_bundle(outcome, cfg, out_dir);
    for (const auto& c : outcome.report["checks"]) {
      std::printf("%-12s %s  %s: %s\n", c["group"].get<std::string>().c_str(), c["pass"].get<bool>() ? "PASS" : "FAIL",
                  c["name"].get<std::string>().c_str(), c["detail"].get<std::string>().c_str());
    }
    std::printf("run %s (mode %s): %s, bundle in %s\n", cfg.name.c_str(), to_string(cfg.mode).c_str(),
                outcome.pass ? "all checks passed" : "checks failed", dir.c_str());
    return outcome.pass ? 0 : kExitChecksFailed;
  } catch (const Error& e) {
    std::cerr << "run " << cfg.name << " (mode " << to_string(cfg.mode) << "): " << e.what() << "\n";
    return kExitRuntimeError;
  }
}
