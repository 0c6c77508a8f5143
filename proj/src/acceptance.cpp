#include "dihedral_shock/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "dihedral_shock/coefficients.hpp"
#include "dihedral_shock/errors.hpp"

namespace dshock {

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

template <class F>
CheckResult timed(int id, std::string name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r = body();
  r.id = id;
  r.name = std::move(name);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Json matrix_json(const Eigen::Matrix4d& m) {
  Json rows = Json::array();
  for (int i = 0; i < 4; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2), m(i, 3)});
  return rows;
}

Json stability_json(const StabilityReport& s) {
  return Json{{"value", s.value}, {"stable", s.stable}, {"entropy", s.entropy}, {"transonic", s.transonic}};
}

std::array<double, 3> sampling_box(const WallSpec& wall) {
  if (wall.is_flat()) return {0.2, 1.0, 0.5};
  return wall.support_box();
}

}  // namespace

Json to_json(const CheckResult& c, bool with_timing) {
  Json j{{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}, {"metrics", c.metrics}};
  if (with_timing) j["seconds"] = c.seconds;
  return j;
}

std::vector<LambdaFamilyCheck> lambda_family_checks(const std::vector<double>& lambdas,
                                                    const std::vector<double>& gammas) {
  std::vector<LambdaFamilyCheck> out;
  const double golden = 0.5 * (1.0 + std::sqrt(5.0));
  for (double gamma : gammas) {
    for (double lambda : lambdas) {
      LambdaFamilyCheck c;
      c.lambda = lambda;
      c.gamma = gamma;
      const auto fam = lambda_family(lambda, gamma);
      const auto bg = solve_jump(GasConstants{gamma, std::nullopt}, fam.q_minus, fam.rho_minus);
      c.jump_rel_error = std::max(rel(bg.q_plus, fam.q_plus), rel(bg.rho_plus, fam.rho_plus));
      const auto st = check_stability_condition(bg);
      const double expected = (lambda * lambda - lambda - 1.0) * fam.rho_minus;
      c.stability_rel_error = rel(st.value, expected);
      c.sign_ok = lambda < golden ? st.value < 0.0 && !st.stable : st.value > 0.0 && st.stable;
      out.push_back(c);
    }
  }
  return out;
}

CheckResult check_lambda_family(const std::vector<double>& lambdas, const std::vector<double>& gammas) {
  return timed(1, "lambda family jump and stability value", [&] {
    CheckResult r;
    r.pass = true;
    double jump = 0.0, stab = 0.0;
    Json cases = Json::array();
    for (const auto& c : lambda_family_checks(lambdas, gammas)) {
      jump = std::max(jump, c.jump_rel_error);
      stab = std::max(stab, c.stability_rel_error);
      r.pass = r.pass && c.jump_rel_error <= 1e-10 && c.stability_rel_error <= 1e-12 && c.sign_ok;
      cases.push_back({{"lambda", c.lambda},
                       {"gamma", c.gamma},
                       {"jump_rel_error", c.jump_rel_error},
                       {"stability_rel_error", c.stability_rel_error},
                       {"sign_ok", c.sign_ok}});
    }
    r.metrics = {{"max_jump_rel_error", jump}, {"max_stability_rel_error", stab}, {"cases", cases}};
    r.detail = "jump " + num(jump) + " <= 1e-10, stability value " + num(stab) + " <= 1e-12";
    return r;
  });
}

BackgroundTable background_table(const ShockBackground& bg) {
  BackgroundTable t;
  const auto s = background_sample(bg);
  const auto b = eval_interior(bg, s);
  t.a_tilde = b.a_tilde;
  t.a2 = b.a2;
  t.a3 = b.a3;
  const double d = bg.jump(), c2 = bg.c_plus_sq(), q = bg.q_plus;
  t.closed_form(0, 0) = 1.0 / (d * d);
  t.closed_form(0, 1) = t.closed_form(1, 0) = q / d;
  t.closed_form(1, 1) = q * q - c2;
  t.closed_form(2, 2) = t.closed_form(3, 3) = -c2 / (d * d);
  const double scale = t.closed_form.cwiseAbs().maxCoeff();
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      const double e = t.closed_form(i, j);
      const double err = e != 0.0 ? rel(t.a_tilde(i, j), e) : std::abs(t.a_tilde(i, j)) / scale;
      t.table_rel_error = std::max(t.table_rel_error, err);
    }
  }
  t.table_rel_error = std::max({t.table_rel_error, std::abs(t.a2) / scale, std::abs(t.a3) / scale});
  const UpstreamField up(bg.q_minus, WallSpec::flat());
  t.b = linearize_G(bg, WallSpec::flat(), up, s);
  t.b_closed = background_boundary_formulas(bg);
  t.boundary_rel_error = std::max(rel(t.b[1], t.b_closed.b0), rel(t.b[2], t.b_closed.b1));
  return t;
}

CheckResult check_background_table(const ShockBackground& bg) {
  return timed(2, "background coefficient table", [&] {
    CheckResult r;
    const auto t = background_table(bg);
    const bool signs = t.b[1] < 0.0 && t.b[2] > 0.0;
    r.pass = t.table_rel_error <= 1e-12 && t.boundary_rel_error <= 1e-12 && signs;
    r.metrics = {{"table_rel_error", t.table_rel_error},
                 {"boundary_rel_error", t.boundary_rel_error},
                 {"a_tilde", matrix_json(t.a_tilde)},
                 {"b", t.b},
                 {"b0_closed", t.b_closed.b0},
                 {"b1_closed", t.b_closed.b1}};
    r.detail = "table " + num(t.table_rel_error) + ", b0/b1 " + num(t.boundary_rel_error) +
               (signs ? ", b0 < 0 < b1" : ", sign pattern broken");
    return r;
  });
}

CheckResult check_background_state(const ShockBackground& bg) {
  return timed(0, "configured background", [&] {
    CheckResult r;
    const auto st = check_stability_condition(bg);
    r.metrics = {{"q_minus", bg.q_minus}, {"rho_minus", bg.rho_minus}, {"q_plus", bg.q_plus},
                 {"rho_plus", bg.rho_plus}, {"c_plus", bg.c_plus},   {"bernoulli", bg.bernoulli},
                 {"stability", stability_json(st)}};
    r.pass = st.stable && st.entropy && st.transonic;
    if (r.pass) {
      const auto t = background_table(bg);
      r.metrics["table_rel_error"] = t.table_rel_error;
      r.metrics["boundary_rel_error"] = t.boundary_rel_error;
      r.metrics["a_tilde"] = matrix_json(t.a_tilde);
      r.metrics["b"] = t.b;
      r.pass = t.table_rel_error <= 1e-12 && t.boundary_rel_error <= 1e-12;
    }
    r.detail = "stability value " + num(st.value) + (st.stable ? " > 0" : " <= 0, background refused");
    return r;
  });
}

WallSource random_walls(double amplitude, std::uint64_t seed) {
  return [amplitude, seed](std::uint64_t i) { return WallSpec::random(amplitude, seed * 7919 + i); };
}

IdentitySuite identity_suite(const ShockBackground& bg, const WallSource& walls, const IdentityOptions& opt,
                             bool wall_samples, bool cross_samples) {
  IdentitySuite rep;
  rep.samples = opt.samples;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  for (int n = 0; n < opt.samples; ++n) {
    const WallSpec wall = walls(static_cast<std::uint64_t>(n));
    UpstreamParams up_params;
    up_params.epsilon = opt.upstream_epsilon * unit(rng);
    up_params.center_x1 = 0.2 + 0.4 * unit(rng);
    up_params.radius_x1 = 0.6;
    up_params.radius_x2 = 1.2;
    up_params.ramp_time = 0.3;
    const UpstreamField up(bg.q_minus, wall, up_params);
    const auto box = sampling_box(wall);
    const double u = box[0] + (box[1] - box[0]) * unit(rng);
    const double y2 = 0.8 * box[2] * sym(rng);
    const double t = 0.25 * unit(rng);
    const double u1 = (1.0 + 0.1 * sym(rng)) / bg.jump();
    const std::array<double, 4> du_free{0.05 * sym(rng), u1, 0.05 * sym(rng), 0.05 * sym(rng)};
    const double y3_free = 0.3 * unit(rng);

    if (wall_samples) {
      std::array<double, 4> du = du_free;
      const auto x2 = inverse_map(wall, HodographPoint{t, 0.0, y2, 0.0}, u)[1];
      du[3] = -wall.local(u, x2).n.value();
      const auto s = make_sample(wall, up, t, y2, 0.0, u, du);
      const auto b = eval_interior(bg, s);
      const auto ops = linearize_G(bg, wall, up, s);
      const double scale = b.a_tilde.cwiseAbs().maxCoeff();
      const double v = std::max({std::abs(b.a_tilde(0, 3)), std::abs(b.a_tilde(1, 3)), std::abs(b.a_tilde(2, 3)),
                                 std::abs(ops[4])});
      rep.vanishing_max = std::max(rep.vanishing_max, v / scale);
      rep.slip_max = std::max(rep.slip_max, std::abs(up.slip_residual(t, s.x[0], s.x[1])));

      const std::array<double, 3> xw{s.x[0], s.x[1], wall(s.x[0], s.x[1])};
      const auto l = wall.local(xw[0], xw[1]);
      const auto p = weight_p(wall, xw);
      const double w1 = l.w.d1(0), w2 = l.w.d1(1);
      const double c1 = w1 * p.grad[0] + w2 * (p.grad[1] + 1.0) - p.grad[2];
      const double c2 = p.grad[2] * (1.0 + w2 * w2) - p.grad[0] * w1 - w2;
      rep.p_condition_max = std::max({rep.p_condition_max, std::abs(c1), std::abs(c2)});
    }
    if (cross_samples) {
      const auto s = make_sample(wall, up, t, y2, y3_free, u, du_free);
      EvalOptions eo;
      eo.cross_check = true;
      const auto b = eval_interior(bg, s, eo);
      rep.cross_check_max = std::max(rep.cross_check_max, b.cross_check_defect);
    }
  }
  return rep;
}

CheckResult check_identity_suite(const ShockBackground& bg, const WallSource& walls, const IdentityOptions& opt) {
  return timed(3, "wall identity suite", [&] {
    CheckResult r;
    const auto s = identity_suite(bg, walls, opt, true, false);
    r.pass = s.vanishing_max <= 1e-10 && s.p_condition_max <= 1e-12;
    r.metrics = {{"samples", s.samples},
                 {"vanishing_max", s.vanishing_max},
                 {"p_condition_max", s.p_condition_max},
                 {"slip_max", s.slip_max}};
    r.detail = std::to_string(s.samples) + " walls: vanishing " + num(s.vanishing_max) + " <= 1e-10, p " +
               num(s.p_condition_max) + " <= 1e-12";
    return r;
  });
}

CheckResult check_cross_check(const ShockBackground& bg, const WallSource& walls, const IdentityOptions& opt) {
  return timed(4, "closed form against J^T A J", [&] {
    CheckResult r;
    const auto s = identity_suite(bg, walls, opt, false, true);
    r.pass = s.cross_check_max <= 1e-10;
    r.metrics = {{"samples", s.samples}, {"cross_check_max", s.cross_check_max}};
    r.detail = std::to_string(s.samples) + " samples: " + num(s.cross_check_max) + " <= 1e-10";
    return r;
  });
}

MultiplierCertificate multiplier_certificate(const ShockBackground& bg, const std::string& label,
                                             const VerifyOptions& opt) {
  MultiplierCertificate c;
  c.label = label;
  const auto s = background_coefficients(bg);
  c.qd = build_Qd(s.r);
  c.qe = build_Qe(s.r);
  c.rd = verify_forms(s, c.qd, opt);
  c.re = verify_forms(s, c.qe, opt);
  c.min_margin = std::numeric_limits<double>::infinity();
  c.delta_star = std::numeric_limits<double>::infinity();
  for (const auto* rep : {&c.rd, &c.re}) {
    double scale = 0.0;
    for (int i : {0, 1, 3}) scale = std::max(scale, form_matrix(s.r, rep->q.q, i).cwiseAbs().maxCoeff());
    for (const auto& b : rep->bounds) {
      c.min_margin = std::min(c.min_margin, b.lambda_min / scale);
      c.delta_star = std::min(c.delta_star, b.delta_threshold);
    }
  }
  return c;
}

std::vector<ShockBackground> admissible_test_states() {
  std::vector<ShockBackground> out;
  for (double gamma : {1.4, 5.0 / 3.0}) {
    for (double lambda : {1.65, 1.7, 1.8, 2.0}) out.push_back(lambda_background(lambda, gamma));
  }
  return out;
}

CheckResult check_multipliers(const std::vector<ShockBackground>& states, const VerifyOptions& opt) {
  return timed(5, "multiplier certificates", [&] {
    CheckResult r;
    r.pass = !states.empty();
    double margin = std::numeric_limits<double>::infinity();
    double delta = std::numeric_limits<double>::infinity();
    Json certs = Json::array();
    for (const auto& bg : states) {
      const std::string label = "q-=" + num(bg.q_minus) + ",gamma=" + num(bg.gamma);
      const auto c = multiplier_certificate(bg, label, opt);
      const bool ok = c.rd.certified && c.re.certified && c.min_margin >= 1e-3 && c.delta_star > 0.0;
      r.pass = r.pass && ok;
      margin = std::min(margin, c.min_margin);
      delta = std::min(delta, c.delta_star);
      Json bounds = Json::array();
      for (const auto* rep : {&c.rd, &c.re}) {
        for (const auto& b : rep->bounds) {
          bounds.push_back({{"kind", to_string(rep->q.kind)},
                            {"form", b.name},
                            {"lambda_min", b.lambda_min},
                            {"c1", b.c1},
                            {"c2", b.c2},
                            {"sampled_slack", b.sampled_slack},
                            {"lipschitz", b.lipschitz},
                            {"delta_threshold", b.delta_threshold}});
        }
      }
      certs.push_back({{"state", label},
                       {"q_dirichlet", c.qd.q},
                       {"q_extension", c.qe.q},
                       {"extension_coefficients", c.re.displayed_coefficients},
                       {"min_margin", c.min_margin},
                       {"delta_star", c.delta_star},
                       {"certified", ok},
                       {"bounds", bounds}});
    }
    r.metrics = {{"min_margin", margin}, {"delta_star", delta}, {"certificates", certs}};
    r.detail = std::to_string(states.size()) + " states: margin " + num(margin) + " >= 1e-3, delta* " + num(delta);
    return r;
  });
}

LinearVerification linear_verification(const ShockBackground& bg, const LinearCheckOptions& opt) {
  LinearVerification v;
  ManufacturedOptions mo;
  mo.perturbation = opt.perturbation;
  v.study = manufactured_refinement(bg, mo, opt.n1_levels, opt.t_final);
  for (double q : v.study.error_ratios) v.orders.push_back(std::log2(q));
  v.leakage = finite_speed_leakage(bg, opt.leakage_n, opt.leakage_t, opt.leakage_radius);
  for (int s = 1; s <= 2; ++s) v.estimate[s - 1] = find_eta0(v.study.ledgers.back(), s, opt.eta_candidates);
  return v;
}

CheckResult check_linear_solver(const LinearVerification& v) {
  CheckResult r;
  r.id = 6;
  r.name = "linear solver verification";
  const auto& st = v.study;
  bool orders_ok = !v.orders.empty();
  for (double o : v.orders) orders_ok = orders_ok && std::abs(o - 2.0) <= 0.2;
  bool neumann_ok = !st.neumann_orders.empty();
  for (double o : st.neumann_orders) neumann_ok = neumann_ok && o >= 1.8;
  bool even_ok = st.evenness_at_roundoff;
  if (!even_ok) {
    even_ok = !st.evenness_orders.empty();
    for (double o : st.evenness_orders) even_ok = even_ok && o >= 1.8;
  }
  const bool leak_ok = v.leakage.leakage <= 1e-10;
  r.pass = orders_ok && neumann_ok && even_ok && leak_ok;
  Json levels = Json::array();
  for (const auto& lv : st.levels) {
    levels.push_back({{"n1", lv.n1},
                      {"h", lv.h},
                      {"steps", lv.steps},
                      {"error_l2", lv.error_l2},
                      {"trace_error", lv.trace_error},
                      {"evenness", lv.evenness},
                      {"neumann", lv.neumann}});
  }
  r.metrics = {{"levels", levels},
               {"orders", v.orders},
               {"trace_orders", st.trace_orders},
               {"neumann_orders", st.neumann_orders},
               {"evenness_orders", st.evenness_orders},
               {"evenness_at_roundoff", st.evenness_at_roundoff},
               {"leakage", v.leakage.leakage},
               {"leakage_inflated_radius", v.leakage.inflated_radius}};
  std::string ord;
  for (double o : v.orders) ord += (ord.empty() ? "" : "/") + num(o);
  std::string neu;
  for (double o : st.neumann_orders) neu += (neu.empty() ? "" : "/") + num(o);
  r.detail = "orders " + ord + " in [1.8, 2.2], Neumann " + neu + " >= 1.8, evenness " +
             (st.evenness_at_roundoff ? std::string("at round-off") : std::string("by order")) + ", leakage " +
             num(v.leakage.leakage) + " <= 1e-10";
  return r;
}

CheckResult check_energy_estimate(const LinearVerification& v) {
  CheckResult r;
  r.id = 7;
  r.name = "energy estimate ratio";
  r.pass = true;
  Json by_s = Json::array();
  std::string detail;
  for (int s = 1; s <= 2; ++s) {
    const auto& e = v.estimate[s - 1];
    r.pass = r.pass && e.bounded && e.spread <= 3.0;
    Json pts = Json::array();
    for (const auto& p : e.points) pts.push_back({{"eta", p.eta}, {"lhs", p.lhs}, {"rhs", p.rhs}, {"ratio", p.ratio}});
    by_s.push_back({{"s", s}, {"eta0", e.eta0}, {"spread", e.spread}, {"points", pts}});
    detail += (detail.empty() ? "" : ", ") + std::string("s = ") + std::to_string(s) + ": eta0 " + num(e.eta0) +
              ", spread " + num(e.spread);
  }
  r.metrics = {{"estimates", by_s}};
  r.detail = detail + " <= 3";
  return r;
}

CheckResult check_nonlinear(const ScalingStudy& s, const NonlinearConfig& cfg) {
  CheckResult r;
  r.id = 8;
  r.name = "nonlinear stability";
  auto run_ok = [&](const IterationReport& rep) {
    return rep.converged && rep.sweeps_used <= cfg.m_max && rep.sigma0 < 0.9 &&
           rep.final_residual <= cfg.residual_tolerance;
  };
  const bool ratio_ok = s.deviation_ratio >= 1.8 && s.deviation_ratio <= 2.2;
  r.pass = run_ok(s.full) && run_ok(s.half) && ratio_ok;
  auto run_json = [](const IterationReport& rep) {
    return Json{{"epsilon", rep.epsilon},         {"converged", rep.converged},
                {"sweeps_used", rep.sweeps_used}, {"sigma0", rep.sigma0},
                {"final_residual", rep.final_residual}, {"shock_deviation", rep.shock_deviation},
                {"roundtrip_error", rep.roundtrip_error}};
  };
  r.metrics = {{"full", run_json(s.full)}, {"half", run_json(s.half)}, {"deviation_ratio", s.deviation_ratio}};
  r.detail = "sigma0 " + num(std::max(s.full.sigma0, s.half.sigma0)) + " < 0.9, sweeps " +
             std::to_string(std::max(s.full.sweeps_used, s.half.sweeps_used)) + ", residual " +
             num(std::max(s.full.final_residual, s.half.final_residual)) + " <= " + num(cfg.residual_tolerance) +
             ", deviation ratio " + num(s.deviation_ratio) + " in [1.8, 2.2]";
  return r;
}

CheckResult check_negative_controls() {
  return timed(9, "negative controls", [] {
    CheckResult r;
    const auto bad = lambda_background(1.3, 1.4);
    const auto st = check_stability_condition(bad);
    bool refused = false;
    try {
      NonlinearConfig cfg;
      cfg.grid.n = {8, 4, 8};
      run_stability_experiment(bad, cfg);
    } catch (const InadmissibleBackground&) {
      refused = true;
    }

    const auto good = lambda_background(1.7, 1.4);
    GridSpec gs;
    gs.extent = {1.0, 0.25, 1.0};
    gs.n = {12, 4, 12};
    gs.t_final = 0.2;
    bool vanishing = false;
    try {
      ManufacturedOptions o;
      o.inject_b3 = 1e-3;
      solve_lp(ManufacturedProblem(good, o), gs);
    } catch (const VanishingViolation&) {
      vanishing = true;
    }
    bool incompatible_linear = false;
    try {
      ManufacturedOptions o;
      o.inject_g = 1e-3;
      build_compatible_data(ManufacturedProblem(good, o), gs);
    } catch (const IncompatibleData&) {
      incompatible_linear = true;
    }
    bool incompatible_seed = false;
    try {
      GridSpec ns;
      ns.extent = {1.2, 0.8, 0.8};
      ns.n = {8, 4, 8};
      const Grid g(ns);
      const WallSpec wall = WallSpec::flat();
      const UpstreamField up(good.q_minus, wall);
      const double slope = 1.0 / good.jump();
      build_seed(good, wall, up, g, [slope](const std::array<double, 3>& y) { return 1.05 * slope * y[0]; },
                 [](const std::array<double, 3>&) { return 0.0; });
    } catch (const IncompatibleData&) {
      incompatible_seed = true;
    }
    r.pass = !st.stable && refused && vanishing && incompatible_linear && incompatible_seed;
    r.metrics = {{"stability", stability_json(st)},
                 {"inadmissible_refused", refused},
                 {"b3_vanishing_violation", vanishing},
                 {"incompatible_boundary_data", incompatible_linear},
                 {"incompatible_seed", incompatible_seed}};
    r.detail = std::string("lambda = 1.3 flag ") + (st.stable ? "true" : "false") + ", refused " +
               (refused ? "yes" : "no") + ", VanishingViolation " + (vanishing ? "yes" : "no") +
               ", IncompatibleData " + (incompatible_linear && incompatible_seed ? "yes" : "no");
    return r;
  });
}

}  // namespace dshock
