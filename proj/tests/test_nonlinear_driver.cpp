#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "dihedral_shock/errors.hpp"
#include "dihedral_shock/nonlinear_driver.hpp"
#include "dihedral_shock/stability_analysis.hpp"

using namespace dshock;

namespace {

const ShockBackground& bg17() {
  static const ShockBackground bg = lambda_background(1.7, 1.4);
  return bg;
}

WallSpec test_wall(double amplitude) {
  WallParams p;
  p.kind = WallKind::polynomial;
  p.amplitude = amplitude;
  p.center_x1 = 0.8;
  p.radius_x1 = 0.6;
  p.radius_x2 = 0.6;
  return WallSpec(p);
}

UpstreamField test_upstream(const WallSpec& wall, double eps) {
  UpstreamParams u;
  u.epsilon = eps;
  u.radius_x1 = 0.5;
  u.radius_x2 = 1.5;
  u.wall_layer = 0.3;
  return UpstreamField(bg17().q_minus, wall, u);
}

GridSpec small_spec() {
  GridSpec gs;
  gs.extent = {1.2, 0.8, 0.8};
  gs.n = {12, 4, 12};
  gs.t_final = 0.2;
  return gs;
}

NonlinearConfig small_config(double eps) {
  NonlinearConfig c;
  c.grid.n = {16, 4, 16};
  c.perturbation.epsilon = eps;
  return c;
}

const ScalarField zero_field = [](const std::array<double, 3>&) { return 0.0; };

}  // namespace

TEST_CASE("F grouping equals the rearranged transformed equation") {
  using J4 = Jet<4, 2>;
  const auto& bg = bg17();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    const WallSpec wall = test_wall(0.02 + 0.05 * unit(rng));
    const UpstreamField up = test_upstream(wall, 0.03 * unit(rng));
    const double t = 0.2 * unit(rng);
    const double y1 = 0.15 + 0.7 * unit(rng);
    const double y2 = 0.4 * sym(rng);
    const double y3 = 0.25 * unit(rng);

    // ubar = y1 / Delta + quadratic perturbation in (y0, y1, y2, y3)
    const J4 Y0 = J4::variable(0, t), Y1 = J4::variable(1, y1), Y2 = J4::variable(2, y2), Y3 = J4::variable(3, y3);
    const double c0 = 0.05 * sym(rng), c1 = 0.05 * sym(rng), c2 = 0.05 * sym(rng), c3 = 0.05 * sym(rng);
    const J4 ub = Y1 / bg.jump() + c0 * Y0 * Y1 + c1 * Y2 * Y2 + c2 * Y1 * Y3 + c3 * Y0 * Y0;

    const auto kj = kappa_jet(wall, ub.value(), y2, y3);
    const J4 U = compose(kj.jet, std::array<J4, 3>{ub, Y2, Y3}, std::array<double, 3>{ub.value(), y2, y3});

    const std::array<double, 4> dub{ub.d1(0), ub.d1(1), ub.d1(2), ub.d1(3)};
    const auto ns = evaluate_node(bg, wall, up, t, {y1, y2, y3}, ub.value(), dub);
    for (int i = 0; i < 4; ++i) CHECK(ns.du[i] == doctest::Approx(U.d1(i)).epsilon(1e-10));

    double transformed = ns.bundle.a2 * ns.du[2] + ns.bundle.a3 * ns.du[3] - ns.bundle.f_rhs;
    double reformulated = -ns.F;
    double scale = std::abs(ns.F);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        transformed += ns.bundle.a_tilde(i, j) * U.d2(i, j);
        reformulated += ns.r(i, j) * ub.d2(i, j);
        scale += std::abs(ns.bundle.a_tilde(i, j) * U.d2(i, j));
      }
    }
    worst = std::max(worst, std::abs(transformed - reformulated) / std::max(scale, 1e-300));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("kappa principal factor is one on the wall") {
  const WallSpec wall = test_wall(0.05);
  const UpstreamField up = test_upstream(wall, 0.0);
  const auto ns = evaluate_node(bg17(), wall, up, 0.0, {0.5, 0.1, 0.0}, 0.5 / bg17().jump(),
                                {0.0, 1.0 / bg17().jump(), 0.0, 0.0});
  CHECK(ns.kappa.d_ubar == doctest::Approx(1.0).epsilon(1e-14));
  const double scale = ns.r.cwiseAbs().maxCoeff();
  CHECK(std::abs(ns.r(0, 3)) <= 1e-10 * scale);
  CHECK(std::abs(ns.r(1, 3)) <= 1e-10 * scale);
  CHECK(std::abs(ns.r(2, 3)) <= 1e-10 * scale);
}

TEST_CASE("field derivatives are exact on even quadratics") {
  const Grid g(small_spec());
  std::vector<double> f(g.dihedral_size());
  auto poly = [](double a, double b, double c) { return 1.0 + 2.0 * a - b + 0.5 * a * a + 0.3 * a * b + 0.7 * c * c - b * b; };
  for (int i = 0; i <= g.n1(); ++i)
    for (int j = 0; j <= g.n2(); ++j)
      for (int k = 0; k <= g.n3(); ++k) f[g.dih(i, j, k)] = poly(g.y1(i), g.y2(j), g.y3(k));
  const auto d = field_derivatives(g, f);
  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= g.n3(); ++k) {
        const std::size_t p = g.dih(i, j, k);
        const double a = g.y1(i), b = g.y2(j), c = g.y3(k);
        REQUIRE(d.d1[0][p] == doctest::Approx(2.0 + a + 0.3 * b));
        REQUIRE(d.d1[1][p] == doctest::Approx(-1.0 + 0.3 * a - 2.0 * b));
        REQUIRE(d.d1[2][p] == doctest::Approx(1.4 * c).epsilon(1e-9));
        REQUIRE(d.d2[hessian_slot(1, 1)][p] == doctest::Approx(1.0));
        REQUIRE(d.d2[hessian_slot(1, 2)][p] == doctest::Approx(0.3));
        REQUIRE(std::abs(d.d2[hessian_slot(1, 3)][p]) < 1e-9);
        REQUIRE(d.d2[hessian_slot(2, 2)][p] == doctest::Approx(-2.0));
        REQUIRE(d.d2[hessian_slot(3, 3)][p] == doctest::Approx(1.4));
      }
    }
  }
}

TEST_CASE("seed at the background fixed point") {
  const Grid g(small_spec());
  const WallSpec wall = WallSpec::flat();
  const UpstreamField up = test_upstream(wall, 0.0);
  const auto seed = build_seed(bg17(), wall, up, g, wall_adapted_background(bg17(), wall), zero_field);
  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= g.n3(); ++k) {
        const std::size_t p = g.dih(i, j, k);
        REQUIRE(seed.ubar[0][p] == g.y1(i) / bg17().jump());
        REQUIRE(seed.ubar[1][p] == 0.0);
        REQUIRE(std::abs(seed.ubar[2][p]) < 1e-12);
      }
    }
  }
  CHECK(seed.min_principal > 0.0);
}

TEST_CASE("flat wall seed keeps u0") {
  const Grid g(small_spec());
  const WallSpec wall = WallSpec::flat();
  const UpstreamField up = test_upstream(wall, 0.0);
  const double slope = 1.0 / bg17().jump();
  const ScalarField u0 = [slope](const std::array<double, 3>& y) {
    const double s = (y[0] - 0.6) / 0.3, r = y[2] / 0.4;
    return slope * y[0] + 1e-3 * quartic_bump(s) * quartic_bump(r);
  };
  const auto seed = build_seed(bg17(), wall, up, g, u0, zero_field);
  for (int i = 0; i <= g.n1(); ++i)
    for (int j = 0; j <= g.n2(); ++j)
      for (int k = 0; k <= g.n3(); ++k) {
        const std::size_t p = g.dih(i, j, k);
        REQUIRE(seed.ubar[0][p] == u0({g.y1(i), g.y2(j), g.y3(k)}));
      }
  bool forced = false;
  for (double x : seed.ubar[2]) forced = forced || std::abs(x) > 1e-6;
  CHECK(forced);
}

TEST_CASE("psi reproduces the traces on a curved wall") {
  const Grid g(small_spec());
  const WallSpec wall = test_wall(1e-3);
  const UpstreamField up = test_upstream(wall, 1e-3);
  const auto seed = build_seed(bg17(), wall, up, g, wall_adapted_background(bg17(), wall), zero_field);
  for (std::size_t p = 0; p < g.dihedral_size(); ++p) {
    REQUIRE(seed.psi(0.0, p) == seed.ubar[0][p]);
    REQUIRE(seed.psi_t(0.0, p) == seed.ubar[1][p]);
    const double h = 1e-3;
    const double second = (seed.psi(2 * h, p) - 2 * seed.psi(h, p) + seed.psi(0.0, p)) / (h * h);
    REQUIRE(second == doctest::Approx(seed.ubar[2][p]).epsilon(1e-6).scale(1.0));
  }
  for (int i = 0; i <= g.n1(); ++i)
    for (int j = 0; j <= g.n2(); ++j) {
      CHECK(std::abs(seed.ubar[0][g.dih(i, j, 0)] - g.y1(i) / bg17().jump()) < 1e-10);
    }
}

TEST_CASE("incompatible seeds are refused") {
  const Grid g(small_spec());
  const WallSpec wall = WallSpec::flat();
  const UpstreamField up = test_upstream(wall, 0.0);
  const double slope = 1.0 / bg17().jump();
  SUBCASE("Neumann trace") {
    const ScalarField u0 = [slope](const std::array<double, 3>& y) { return slope * y[0] + 1e-3 * y[2]; };
    CHECK_THROWS_AS(build_seed(bg17(), wall, up, g, u0, zero_field), IncompatibleData);
  }
  SUBCASE("shock condition") {
    const ScalarField u0 = [slope](const std::array<double, 3>& y) { return 1.05 * slope * y[0]; };
    CHECK_THROWS_AS(build_seed(bg17(), wall, up, g, u0, zero_field), IncompatibleData);
  }
}

TEST_CASE("states outside the admissible region exit the regime") {
  const WallSpec wall = WallSpec::flat();
  const UpstreamField up = test_upstream(wall, 0.0);
  CHECK_THROWS_AS(evaluate_node(bg17(), wall, up, 0.0, {0.3, 0.0, 0.1}, 0.4, {0.0, 1e-10, 0.0, 0.0}), RegimeExit);
}

TEST_CASE("zero perturbation is a fixed point") {
  const auto rep = run_stability_experiment(bg17(), small_config(0.0));
  CHECK(rep.converged);
  CHECK(rep.sweeps_used <= 2);
  CHECK(rep.shock_deviation < 1e-12);
  for (const auto& p : rep.trace) REQUIRE(std::abs(p.X) < 1e-12);
  CHECK(rep.final_residual < 1e-12);
}

TEST_CASE("zero iterate sweep returns round-off at the background") {
  NonlinearContext ctx;
  ctx.bg = bg17();
  ctx.wall = WallSpec::flat();
  ctx.up = test_upstream(ctx.wall, 0.0);
  ctx.spec = small_spec();
  ctx.spec.dt = 0.2 / 20;
  ctx.b_background = background_coefficients(bg17()).b;
  const Grid g(ctx.spec);
  ctx.seed = build_seed(ctx.bg, ctx.wall, ctx.up, g, wall_adapted_background(ctx.bg, ctx.wall), zero_field);
  const auto r = picard_sweep(ctx, Iterate{}, 41);
  REQUIRE(r.next.w.size() == 41);
  double mx = 0.0;
  for (const auto& lv : r.next.w)
    for (double x : lv) mx = std::max(mx, std::abs(x));
  CHECK(mx < 1e-12);
}

TEST_CASE("inadmissible background is refused before any solve") {
  const auto bad = lambda_background(1.3, 1.4);
  CHECK_FALSE(check_stability_condition(bad).stable);
  CHECK_THROWS_AS(run_stability_experiment(bad, small_config(1e-3)), InadmissibleBackground);
}

TEST_CASE("wall-only perturbation contracts") {
  NonlinearConfig cfg = small_config(1e-3);
  cfg.perturbation.upstream_scale = 0.0;
  const auto rep = run_stability_experiment(bg17(), cfg);
  REQUIRE(rep.ratios.size() >= 1);
  CHECK(rep.ratios[0] < 1.0);
  CHECK(rep.converged);
}

TEST_CASE("Picard iteration at small amplitude") {
  const auto full = run_stability_experiment(bg17(), small_config(1e-3));
  const auto half = run_stability_experiment(bg17(), small_config(5e-4));
  for (const auto* rep : {&full, &half}) {
    CHECK(rep->converged);
    CHECK(rep->sweeps_used <= 30);
    CHECK(rep->sigma0 < 0.9);
    CHECK(rep->final_residual <= 1e-8);
    CHECK(rep->final_residual_relative <= 10.0 * 1e-10);
    CHECK(rep->roundtrip_error < 1e-10);
    for (const auto& s : rep->sweeps) {
      CHECK(s.within_budget);
      CHECK(s.high_norm <= 1.01 * rep->sweeps.front().high_norm);
    }
    for (std::size_t m = 0; m < rep->ratios.size(); ++m) {
      CHECK(rep->ratios[m] == rep->sweeps[m + 1].difference_abs / rep->sweeps[m].difference_abs);
    }
  }
  CHECK(half.sigma0 <= full.sigma0 + 0.05);
  const double ratio = full.shock_deviation / half.shock_deviation;
  MESSAGE("deviation ratio " << ratio << ", sigma0 " << full.sigma0);
  CHECK(ratio > 1.0);

  const std::string path = "test_nonlinear_trace.csv";
  write_shock_trace_csv(path, full.trace);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,x2,x3,X");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == static_cast<int>(full.trace.size()));
  std::remove(path.c_str());
}
