#include "dihedral_shock/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "dihedral_shock/errors.hpp"

namespace dshock {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  return std::all_of(k.begin(), k.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; });
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <class T, std::size_t N>
std::string join(const std::array<T, N>& a) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) s += (i ? ", " : "") + fmt(static_cast<double>(a[i]));
  return s;
}

std::string join(const std::vector<double>& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ", " : "") + fmt(a[i]);
  return s;
}

std::string join(const std::vector<int>& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ", " : "") + std::to_string(a[i]);
  return s;
}

class Reader {
 public:
  explicit Reader(const ConfigEntries& e) : entries_(e) {}

  const std::string* raw(const std::string& key) {
    used_.insert(key);
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  double number(const std::string& key, double fallback) {
    const auto* v = raw(key);
    return v ? parse_number(key, *v) : fallback;
  }

  std::optional<double> optional_number(const std::string& key) {
    const auto* v = raw(key);
    if (!v) return std::nullopt;
    return parse_number(key, *v);
  }

  int integer(const std::string& key, int fallback) {
    const auto* v = raw(key);
    return v ? parse_int(key, *v) : fallback;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const auto* v = raw(key);
    if (!v) return fallback;
    errno = 0;
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v->c_str(), &end, 10);
    if (v->empty() || *end != '\0' || errno != 0 || v->front() == '-') fail(key, "expected a non-negative integer, got '" + *v + "'");
    return x;
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto* v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    fail(key, "expected true or false, got '" + *v + "'");
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const auto* v = raw(key);
    return v ? *v : fallback;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const auto* v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split(*v)) out.push_back(parse_number(key, item));
    if (out.empty()) fail(key, "expected a comma-separated list");
    return out;
  }

  std::vector<int> integers(const std::string& key, std::vector<int> fallback) {
    const auto* v = raw(key);
    if (!v) return fallback;
    std::vector<int> out;
    for (const auto& item : split(*v)) out.push_back(parse_int(key, item));
    if (out.empty()) fail(key, "expected a comma-separated list");
    return out;
  }

  void reject_unknown() const {
    for (const auto& [k, v] : entries_) {
      if (!used_.count(k)) fail(k, "unknown key");
    }
  }

  [[noreturn]] static void fail(const std::string& key, const std::string& msg) { throw ConfigError(key + ": " + msg); }

 private:
  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
  }

  static double parse_number(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || errno != 0 || !std::isfinite(x)) fail(key, "expected a finite number, got '" + v + "'");
    return x;
  }

  static int parse_int(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0' || errno != 0 || x < -1000000000L || x > 1000000000L) {
      fail(key, "expected an integer, got '" + v + "'");
    }
    return static_cast<int>(x);
  }

  const ConfigEntries& entries_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) Reader::fail(key, msg);
}

}  // namespace

ConfigEntries parse_config_text(const std::string& text, const std::string& source) {
  ConfigEntries out;
  std::istringstream is(text);
  std::string line, section;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(number);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!section.empty() && !valid_key(section)) throw ConfigError(where + ": bad section name '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(where + ": bad key '" + key + "'");
    if (!section.empty()) key = section + "." + key;
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigEntries read_config_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_override(ConfigEntries& entries, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set " + assignment + ": expected key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (!valid_key(key)) throw ConfigError("--set " + assignment + ": bad key '" + key + "'");
  entries[key] = trim(assignment.substr(eq + 1));
}

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::background: return "background";
    case RunMode::identities: return "identities";
    case RunMode::multipliers: return "multipliers";
    case RunMode::linear: return "linear";
    case RunMode::nonlinear: return "nonlinear";
    case RunMode::all: return "all";
  }
  return "all";
}

RunMode run_mode_from_string(const std::string& s) {
  for (RunMode m : {RunMode::background, RunMode::identities, RunMode::multipliers, RunMode::linear,
                    RunMode::nonlinear, RunMode::all}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("run.mode: unknown mode '" + s +
                    "' (expected background, identities, multipliers, linear, nonlinear, all)");
}

ShockBackground make_background(const GasConfig& gas) {
  if (gas.lambda) return lambda_background(*gas.lambda, gas.gamma);
  return solve_jump(GasConstants{gas.gamma, gas.bernoulli}, *gas.q_minus, *gas.rho_minus);
}

RunConfig build_run_config(const ConfigEntries& entries, const std::string& default_name) {
  Reader r(entries);
  RunConfig c;
  const NonlinearConfig nl;
  c.grid = nl.grid;
  c.wall.params = nl.perturbation.wall;
  c.wall.params.amplitude = 1e-2;
  c.upstream = nl.perturbation.upstream;

  c.name = r.text("run.name", default_name);
  require(!c.name.empty() && c.name.find('/') == std::string::npos && c.name != "." && c.name != "..", "run.name",
          "must be a plain directory name");
  c.mode = run_mode_from_string(r.text("run.mode", "all"));
  c.seed = r.unsigned_integer("run.seed", c.seed);

  c.gas.gamma = r.number("gas.gamma", c.gas.gamma);
  require(c.gas.gamma > 1.0, "gas.gamma", "must exceed 1");
  c.gas.lambda = r.optional_number("gas.lambda");
  c.gas.q_minus = r.optional_number("gas.q_minus");
  c.gas.rho_minus = r.optional_number("gas.rho_minus");
  c.gas.bernoulli = r.optional_number("gas.bernoulli");
  if (c.gas.lambda) {
    require(!c.gas.q_minus && !c.gas.rho_minus && !c.gas.bernoulli, "gas.lambda",
            "give either gas.lambda or (gas.q_minus, gas.rho_minus), not both");
    require(*c.gas.lambda > 1.0, "gas.lambda", "must exceed 1");
  } else if (c.gas.q_minus || c.gas.rho_minus) {
    require(c.gas.q_minus.has_value(), "gas.q_minus", "required together with gas.rho_minus");
    require(c.gas.rho_minus.has_value(), "gas.rho_minus", "required together with gas.q_minus");
    require(*c.gas.q_minus > 0.0, "gas.q_minus", "must be positive");
    require(*c.gas.rho_minus > 0.0, "gas.rho_minus", "must be positive");
  } else {
    c.gas.lambda = 1.7;
  }

  const std::string kind = r.text("wall.kind", to_string(c.wall.params.kind));
  c.wall.random = kind == "random";
  if (!c.wall.random) c.wall.params.kind = wall_kind_from_string(kind);
  auto& w = c.wall.params;
  w.amplitude = r.number("wall.amplitude", w.amplitude);
  w.center_x1 = r.number("wall.center_x1", w.center_x1);
  w.radius_x1 = r.number("wall.radius_x1", w.radius_x1);
  w.radius_x2 = r.number("wall.radius_x2", w.radius_x2);
  w.a1 = r.number("wall.a1", w.a1);
  w.a2 = r.number("wall.a2", w.a2);
  w.b1 = r.number("wall.b1", w.b1);
  w.c11 = r.number("wall.c11", w.c11);
  require(w.amplitude >= 0.0, "wall.amplitude", "must be non-negative");
  require(w.amplitude <= 0.1, "wall.amplitude", "must not exceed 0.1 (small-wall regime)");
  require(w.radius_x1 > 0.0, "wall.radius_x1", "must be positive");
  require(w.radius_x2 > 0.0, "wall.radius_x2", "must be positive");
  require(w.center_x1 - w.radius_x1 >= 0.0, "wall.center_x1", "wall support must lie in x1 >= 0");

  auto& u = c.upstream;
  u.center_x1 = r.number("upstream.center_x1", u.center_x1);
  u.radius_x1 = r.number("upstream.radius_x1", u.radius_x1);
  u.radius_x2 = r.number("upstream.radius_x2", u.radius_x2);
  u.ramp_time = r.number("upstream.ramp_time", u.ramp_time);
  u.wall_layer = r.number("upstream.wall_layer", u.wall_layer);
  require(u.radius_x1 > 0.0, "upstream.radius_x1", "must be positive");
  require(u.radius_x2 > 0.0, "upstream.radius_x2", "must be positive");
  require(u.ramp_time > 0.0, "upstream.ramp_time", "must be positive");
  require(u.wall_layer >= 0.0, "upstream.wall_layer", "must be non-negative");

  auto& g = c.grid;
  const auto extent = r.numbers("grid.extent", {g.extent[0], g.extent[1], g.extent[2]});
  require(extent.size() == 3, "grid.extent", "expected three values");
  for (double e : extent) require(e > 0.0, "grid.extent", "extents must be positive");
  g.extent = {extent[0], extent[1], extent[2]};
  const auto n = r.integers("grid.n", {g.n[0], g.n[1], g.n[2]});
  require(n.size() == 3, "grid.n", "expected three values");
  for (int v : n) require(v >= 4 && v <= 512, "grid.n", "resolutions must lie in [4, 512]");
  g.n = {n[0], n[1], n[2]};
  g.dt = r.number("grid.dt", g.dt);
  require(g.dt >= 0.0, "grid.dt", "must be non-negative (0 selects the CFL step)");
  g.t_final = r.number("grid.t_final", g.t_final);
  require(g.t_final > 0.0, "grid.t_final", "must be positive");
  g.cfl_safety = r.number("grid.cfl_safety", g.cfl_safety);
  require(g.cfl_safety > 0.0 && g.cfl_safety <= 1.0, "grid.cfl_safety", "must lie in (0, 1]");
  g.window_margin = r.integer("grid.window_margin", g.window_margin);
  require(g.window_margin >= 0 && 2 * g.window_margin <= std::min(g.n[0], g.n[1]), "grid.window_margin",
          "must be non-negative and leave interior nodes");

  c.eta_grid = r.numbers("eta.grid", c.eta_grid);
  for (double e : c.eta_grid) require(e > 0.0, "eta.grid", "weights must be positive");
  require(std::is_sorted(c.eta_grid.begin(), c.eta_grid.end()), "eta.grid", "must be increasing");

  c.identity_samples = r.integer("identities.samples", c.identity_samples);
  require(c.identity_samples >= 1, "identities.samples", "must be positive");
  c.cross_check_samples = r.integer("identities.cross_check_samples", c.cross_check_samples);
  require(c.cross_check_samples >= 1, "identities.cross_check_samples", "must be positive");
  c.identity_upstream_epsilon = r.number("identities.upstream_epsilon", c.identity_upstream_epsilon);
  require(c.identity_upstream_epsilon >= 0.0 && c.identity_upstream_epsilon <= 0.1, "identities.upstream_epsilon",
          "must lie in [0, 0.1]");

  c.multiplier_samples = r.integer("multipliers.samples", c.multiplier_samples);
  require(c.multiplier_samples >= 0, "multipliers.samples", "must be non-negative");

  auto& l = c.linear;
  l.n1_levels = r.integers("linear.n1_levels", l.n1_levels);
  require(l.n1_levels.size() >= 2, "linear.n1_levels", "need at least two levels");
  for (std::size_t i = 0; i < l.n1_levels.size(); ++i) {
    require(l.n1_levels[i] >= 8 && l.n1_levels[i] <= 256, "linear.n1_levels", "levels must lie in [8, 256]");
    if (i > 0) require(l.n1_levels[i] == 2 * l.n1_levels[i - 1], "linear.n1_levels", "each level must double");
  }
  l.perturbation = r.number("linear.perturbation", l.perturbation);
  require(l.perturbation >= 0.0 && l.perturbation <= 0.2, "linear.perturbation", "must lie in [0, 0.2]");
  l.t_final = r.number("linear.t_final", l.t_final);
  require(l.t_final > 0.0, "linear.t_final", "must be positive");
  l.leakage_n = r.integer("linear.leakage_n", l.leakage_n);
  require(l.leakage_n >= 8 && l.leakage_n <= 256, "linear.leakage_n", "must lie in [8, 256]");
  l.leakage_t = r.number("linear.leakage_t_final", l.leakage_t);
  require(l.leakage_t > 0.0, "linear.leakage_t_final", "must be positive");
  l.leakage_radius = r.number("linear.leakage_radius", l.leakage_radius);
  require(l.leakage_radius > 0.0 && l.leakage_radius < 0.5, "linear.leakage_radius", "must lie in (0, 0.5)");
  l.eta_candidates = c.eta_grid;

  c.epsilon = r.number("nonlinear.epsilon", c.epsilon);
  require(c.epsilon >= 0.0 && c.epsilon <= 1e-2, "nonlinear.epsilon", "must lie in [0, 1e-2]");
  c.wall_scale = r.number("nonlinear.wall_scale", c.wall_scale);
  c.upstream_scale = r.number("nonlinear.upstream_scale", c.upstream_scale);
  require(c.wall_scale >= 0.0, "nonlinear.wall_scale", "must be non-negative");
  require(c.upstream_scale >= 0.0, "nonlinear.upstream_scale", "must be non-negative");
  c.m_max = r.integer("nonlinear.m_max", c.m_max);
  require(c.m_max >= 1 && c.m_max <= 1000, "nonlinear.m_max", "must lie in [1, 1000]");
  c.tol_fix = r.number("nonlinear.tol_fix", c.tol_fix);
  require(c.tol_fix > 0.0, "nonlinear.tol_fix", "must be positive");
  c.residual_tolerance = r.number("nonlinear.residual_tolerance", c.residual_tolerance);
  require(c.residual_tolerance > 0.0, "nonlinear.residual_tolerance", "must be positive");
  c.cfl_target = r.number("nonlinear.cfl_target", c.cfl_target);
  require(c.cfl_target > 0.0 && c.cfl_target <= c.grid.cfl_safety, "nonlinear.cfl_target",
          "must lie in (0, grid.cfl_safety]");
  c.budget = r.number("nonlinear.budget", c.budget);
  require(c.budget > 0.0, "nonlinear.budget", "must be positive");
  c.scaling = r.boolean("nonlinear.scaling", c.scaling);

  r.reject_unknown();

  try {
    const auto bg = make_background(c.gas);
    (void)bg;
  } catch (const Error& e) {
    throw ConfigError(std::string("gas: ") + e.what());
  }
  return c;
}

std::string resolved_config_text(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << "\n"; };
  kv("run.name", c.name);
  kv("run.mode", to_string(c.mode));
  kv("run.seed", std::to_string(c.seed));
  kv("gas.gamma", fmt(c.gas.gamma));
  if (c.gas.lambda) kv("gas.lambda", fmt(*c.gas.lambda));
  if (c.gas.q_minus) kv("gas.q_minus", fmt(*c.gas.q_minus));
  if (c.gas.rho_minus) kv("gas.rho_minus", fmt(*c.gas.rho_minus));
  if (c.gas.bernoulli) kv("gas.bernoulli", fmt(*c.gas.bernoulli));
  const auto& w = c.wall.params;
  kv("wall.kind", c.wall.random ? "random" : to_string(w.kind));
  kv("wall.amplitude", fmt(w.amplitude));
  kv("wall.center_x1", fmt(w.center_x1));
  kv("wall.radius_x1", fmt(w.radius_x1));
  kv("wall.radius_x2", fmt(w.radius_x2));
  kv("wall.a1", fmt(w.a1));
  kv("wall.a2", fmt(w.a2));
  kv("wall.b1", fmt(w.b1));
  kv("wall.c11", fmt(w.c11));
  const auto& u = c.upstream;
  kv("upstream.center_x1", fmt(u.center_x1));
  kv("upstream.radius_x1", fmt(u.radius_x1));
  kv("upstream.radius_x2", fmt(u.radius_x2));
  kv("upstream.ramp_time", fmt(u.ramp_time));
  kv("upstream.wall_layer", fmt(u.wall_layer));
  kv("grid.extent", join(c.grid.extent));
  kv("grid.n", join(c.grid.n));
  kv("grid.dt", fmt(c.grid.dt));
  kv("grid.t_final", fmt(c.grid.t_final));
  kv("grid.cfl_safety", fmt(c.grid.cfl_safety));
  kv("grid.window_margin", std::to_string(c.grid.window_margin));
  kv("eta.grid", join(c.eta_grid));
  kv("identities.samples", std::to_string(c.identity_samples));
  kv("identities.cross_check_samples", std::to_string(c.cross_check_samples));
  kv("identities.upstream_epsilon", fmt(c.identity_upstream_epsilon));
  kv("multipliers.samples", std::to_string(c.multiplier_samples));
  kv("linear.n1_levels", join(c.linear.n1_levels));
  kv("linear.perturbation", fmt(c.linear.perturbation));
  kv("linear.t_final", fmt(c.linear.t_final));
  kv("linear.leakage_n", std::to_string(c.linear.leakage_n));
  kv("linear.leakage_t_final", fmt(c.linear.leakage_t));
  kv("linear.leakage_radius", fmt(c.linear.leakage_radius));
  kv("nonlinear.epsilon", fmt(c.epsilon));
  kv("nonlinear.wall_scale", fmt(c.wall_scale));
  kv("nonlinear.upstream_scale", fmt(c.upstream_scale));
  kv("nonlinear.m_max", std::to_string(c.m_max));
  kv("nonlinear.tol_fix", fmt(c.tol_fix));
  kv("nonlinear.residual_tolerance", fmt(c.residual_tolerance));
  kv("nonlinear.cfl_target", fmt(c.cfl_target));
  kv("nonlinear.budget", fmt(c.budget));
  kv("nonlinear.scaling", c.scaling ? "true" : "false");
  return os.str();
}

NonlinearConfig make_nonlinear_config(const RunConfig& c) {
  NonlinearConfig n;
  n.grid = c.grid;
  n.perturbation.epsilon = c.epsilon;
  n.perturbation.wall = c.wall.params;
  if (c.wall.random) n.perturbation.wall = NonlinearConfig().perturbation.wall;
  n.perturbation.upstream = c.upstream;
  n.perturbation.wall_scale = c.wall_scale;
  n.perturbation.upstream_scale = c.upstream_scale;
  n.m_max = c.m_max;
  n.tol_fix = c.tol_fix;
  n.residual_tolerance = c.residual_tolerance;
  n.cfl_target = c.cfl_target;
  n.budget = c.budget;
  return n;
}

}  // namespace dshock
