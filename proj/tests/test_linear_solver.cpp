#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "dihedral_shock/errors.hpp"
#include "dihedral_shock/linear_solver.hpp"
#include "dihedral_shock/stability_analysis.hpp"

using namespace dshock;

namespace {

const ShockBackground& bg17() {
  static const ShockBackground bg = lambda_background(1.7, 1.4);
  return bg;
}

GridSpec small_grid() {
  GridSpec gs;
  gs.extent = {1.0, 0.25, 1.0};
  gs.n = {12, 4, 12};
  gs.t_final = 0.2;
  return gs;
}

class ZeroProblem : public LinearProblem {
 public:
  explicit ZeroProblem(const ShockBackground& bg) : base_(bg, ManufacturedOptions{}) {}
  InteriorCoefficients interior(double t, const std::array<double, 3>& y) const override {
    auto c = base_.interior(t, y);
    c.f = 0.0;
    return c;
  }
  BoundaryCoefficients boundary(double t, double y2, double y3) const override {
    auto b = base_.boundary(t, y2, y3);
    b.g = 0.0;
    return b;
  }

 private:
  ManufacturedProblem base_;
};

class WeakB1Problem : public ManufacturedProblem {
 public:
  using ManufacturedProblem::ManufacturedProblem;
  BoundaryCoefficients boundary(double t, double y2, double y3) const override {
    auto b = ManufacturedProblem::boundary(t, y2, y3);
    if (y3 > 0.5) b.b[2] *= 0.3;
    return b;
  }
};

class NanSourceProblem : public ManufacturedProblem {
 public:
  using ManufacturedProblem::ManufacturedProblem;
  InteriorCoefficients interior(double t, const std::array<double, 3>& y) const override {
    auto c = ManufacturedProblem::interior(t, y);
    if (t > 0.05 && y[0] > 0.4 && y[0] < 0.6) c.f = std::numeric_limits<double>::quiet_NaN();
    return c;
  }
};

ManufacturedOptions perturbed(double delta = 0.05) {
  ManufacturedOptions o;
  o.perturbation = delta;
  return o;
}

}  // namespace

TEST_CASE("zero data gives the zero solution and a zero estimate") {
  const ZeroProblem p(bg17());
  const auto r = solve_lp(p, small_grid());
  for (double x : r.solution.w) REQUIRE(x == 0.0);
  for (const auto& st : r.steps) CHECK(st.interior_l2 == 0.0);
  const auto rep = measure_estimate(r.ledger, 1.0, 1);
  for (const auto& pt : rep.points) {
    CHECK(pt.lhs == 0.0);
    CHECK(pt.rhs == 0.0);
    CHECK(pt.ratio == 0.0);
  }
  CHECK(rep.bounded);
}

TEST_CASE("background extension is trivial and odd fields vanish") {
  const ManufacturedProblem p(bg17(), ManufacturedOptions{});
  const GridSpec gs = small_grid();
  const Grid g(gs);
  CoefficientSlice d;
  p.fill(0.1, g, d);
  const auto e = extend_problem(g, d);
  for (int f = 0; f < kF; ++f) {
    const auto& v = e.interior[f];
    for (double x : v) {
      if (is_odd(static_cast<InteriorField>(f))) {
        REQUIRE(x == 0.0);
      } else {
        REQUIRE(x == v.front());
      }
    }
  }
  for (double x : e.boundary[kB3]) REQUIRE(x == 0.0);
}

TEST_CASE("perturbed extension has exact parity") {
  const ManufacturedProblem p(bg17(), perturbed());
  const Grid g(small_grid());
  CoefficientSlice d;
  p.fill(0.13, g, d);
  const auto e = extend_problem(g, d);
  double odd_max = 0.0;
  for (int f = 0; f < kInteriorFieldCount; ++f) {
    const bool odd = is_odd(static_cast<InteriorField>(f));
    for (int i = 0; i <= g.n1(); ++i) {
      for (int j = 0; j <= g.n2(); ++j) {
        for (int k = 0; k <= g.n3(); ++k) {
          const double a = e.interior[f][g.ext(i, j, g.n3() + k)];
          const double b = e.interior[f][g.ext(i, j, g.n3() - k)];
          REQUIRE(a == (odd ? -b : b));
          if (odd) odd_max = std::max(odd_max, std::abs(a));
        }
      }
    }
  }
  CHECK(odd_max > 1e-3);
}

TEST_CASE("b3 on the wall triggers VanishingViolation") {
  ManufacturedOptions o;
  o.inject_b3 = 1e-3;
  const ManufacturedProblem p(bg17(), o);
  CHECK_THROWS_AS(solve_lp(p, small_grid()), VanishingViolation);
  const Grid g(small_grid());
  CoefficientSlice d;
  p.fill(0.0, g, d);
  CHECK_THROWS_AS(extend_problem(g, d), VanishingViolation);
}

TEST_CASE("explicit step above the CFL bound is refused") {
  const ManufacturedProblem p(bg17(), ManufacturedOptions{});
  GridSpec gs = small_grid();
  gs.dt = 0.05;
  gs.t_final = 0.2;
  CHECK_THROWS_AS(solve_lp(p, gs), CflViolation);
}

TEST_CASE("weak oblique coefficient is refused") {
  const WeakB1Problem p(bg17(), ManufacturedOptions{});
  SolveOptions opt;
  opt.boundary_b1_reference = std::abs(background_coefficients(bg17()).b[2]);
  CHECK_THROWS_AS(solve_lp(p, small_grid(), opt), BoundarySolveDegenerate);
}

TEST_CASE("non-finite values abort the run") {
  const NanSourceProblem p(bg17(), ManufacturedOptions{});
  CHECK_THROWS_AS(solve_lp(p, small_grid()), NonFiniteField);
}

TEST_CASE("CFL number stays within the safety factor") {
  const ManufacturedProblem p(bg17(), perturbed());
  const auto r = solve_lp(p, small_grid());
  REQUIRE(!r.steps.empty());
  const Grid g(small_grid());
  CHECK(r.dt * r.v_max / g.h_min() <= 0.5 + 1e-12);
  for (const auto& st : r.steps) CHECK(st.cfl <= 0.5 + 1e-12);
  const double s1 = bg17().jump() * (bg17().q_plus + bg17().c_plus);
  CHECK(r.v_max >= s1);
}

TEST_CASE("manufactured solution converges at second order") {
  const auto st = manufactured_refinement(bg17(), perturbed(), {16, 32, 64});
  REQUIRE(st.error_ratios.size() == 2);
  for (double q : st.error_ratios) {
    MESSAGE("interior error ratio " << q);
    CHECK(q >= 3.5);
    CHECK(q <= 4.5);
  }
  for (double o : st.trace_orders) CHECK(o >= 1.5);
  for (double o : st.neumann_orders) CHECK(o >= 1.8);
  CHECK(st.evenness_at_roundoff);

  SUBCASE("energy ratio is bounded across the eta grid") {
    for (int s : {1, 2}) {
      const auto rep = find_eta0(st.ledgers.back(), s, {0.5, 1, 2, 4, 8, 16, 32});
      MESSAGE("s = " << s << " eta0 = " << rep.eta0 << " spread = " << rep.spread);
      CHECK(rep.bounded);
      CHECK(rep.spread <= 3.0);
      for (std::size_t k = 1; k < rep.points.size(); ++k) {
        CHECK(rep.points[k].ratio <= 3.0 * rep.points[k - 1].ratio);
      }
    }
  }
}

TEST_CASE("even data at the background stays even to round-off") {
  const auto st = manufactured_refinement(bg17(), ManufacturedOptions{}, {16, 32});
  CHECK(st.evenness_at_roundoff);
  for (const auto& lv : st.levels) CHECK(lv.evenness <= 1e-12 * lv.solution_max);
}

TEST_CASE("travelling profile matches the characteristic solution") {
  const auto st = travelling_wave_refinement(bg17(), {16, 32, 64});
  REQUIRE(st.ratios.size() == 2);
  CHECK(st.ratios.back() >= 3.5);
  CHECK(st.ratios.back() <= 4.5);
  CHECK(st.errors.back() < 2e-3);
}

TEST_CASE("finite speed of propagation") {
  const auto rep = finite_speed_leakage(bg17(), 64, 0.2, 0.4);
  MESSAGE("leakage " << rep.leakage << " outside radius " << rep.inflated_radius);
  CHECK(rep.inside_max > 0.1);
  CHECK(rep.leakage <= 1e-10);
}

TEST_CASE("ledger accumulators are nonnegative and partial sums are monotone") {
  const ManufacturedProblem p(bg17(), perturbed());
  const auto r = solve_lp(p, small_grid());
  const auto& L = r.ledger;
  REQUIRE(L.times.size() == static_cast<std::size_t>(r.n_steps));
  for (int s = 0; s <= EnergyLedger::s_max; ++s) {
    double run = 0.0;
    for (std::size_t n = 0; n < L.times.size(); ++n) {
      REQUIRE(L.interior[s][n] >= 0.0);
      REQUIRE(L.trace[s][n] >= 0.0);
      const double next = run + L.dt * (L.interior[s][n] + L.trace[s][n]);
      REQUIRE(next >= run);
      run = next;
    }
    CHECK(L.slice_sup[s] >= L.slice_final[s]);
  }
}

TEST_CASE("weighted energy of free waves does not grow with eta beyond a threshold") {
  const BallDataProblem p(bg17(), {0.5, 0.0, 0.0}, 0.3);
  GridSpec gs;
  gs.extent = {1.0, 0.6, 0.6};
  gs.n = {24, 28, 14};
  gs.t_final = 0.2;
  const auto r = solve_lp(p, gs);
  const auto& L = r.ledger;
  auto energy = [&](double eta) {
    double e = 0.0;
    for (std::size_t n = 0; n < L.times.size(); ++n) {
      e += eta * L.dt * std::exp(-2.0 * eta * L.times[n]) * (L.interior[0][n] + L.interior[1][n]);
    }
    return e / (L.interior[0][0] + L.interior[1][0]);
  };
  const std::vector<double> etas{1, 2, 4, 8, 16, 32};
  int threshold = -1;
  for (std::size_t a = 0; a < etas.size() && threshold < 0; ++a) {
    bool ok = true;
    for (std::size_t b = a + 1; b < etas.size(); ++b) ok = ok && energy(etas[b]) <= energy(etas[b - 1]);
    if (ok) threshold = static_cast<int>(a);
  }
  MESSAGE("non-increasing from eta = " << (threshold >= 0 ? etas[threshold] : -1.0));
  CHECK(threshold >= 0);
  CHECK(threshold < static_cast<int>(etas.size()) - 1);
}

TEST_CASE("compatibility builder") {
  const GridSpec gs = small_grid();
  SUBCASE("zero data with f vanishing at t = 0") {
    const ManufacturedProblem p(bg17(), perturbed());
    const auto rep = build_compatible_data(p, gs);
    CHECK(rep.points_checked > 0);
    for (const auto& pt : rep.points) {
      CHECK(std::abs(pt.w_t[0]) < 1e-14);
      CHECK(std::abs(pt.w_t[1]) < 1e-14);
      CHECK(std::abs(pt.w_t[2]) < 1e-8);
    }
  }
  SUBCASE("traces of a manufactured solution are compatible") {
    ManufacturedOptions o = perturbed();
    o.sin4_profile = false;
    const ManufacturedProblem p(bg17(), o);
    const auto rep = build_compatible_data(p, gs);
    CHECK(rep.max_boundary_defect < 1e-8);
    CHECK(rep.max_wall_defect < 1e-8);
    double w2_err = 0.0;
    for (const auto& pt : rep.points) {
      double w;
      Eigen::Vector4d dw;
      Eigen::Matrix4d d2w;
      p.exact_derivs(0.0, pt.y, w, dw, d2w);
      w2_err = std::max(w2_err, std::abs(pt.w_t[2] - d2w(0, 0)));
      CHECK(pt.w_t[1] == doctest::Approx(dw(0)).epsilon(1e-12));
    }
    CHECK(w2_err < 1e-6);
  }
  SUBCASE("injected boundary mismatch") {
    ManufacturedOptions o;
    o.inject_g = 1e-3;
    const ManufacturedProblem p(bg17(), o);
    CHECK_THROWS_AS(build_compatible_data(p, gs), IncompatibleData);
  }
}

TEST_CASE("step CSV has a header and one row per step") {
  const ManufacturedProblem p(bg17(), ManufacturedOptions{});
  const auto r = solve_lp(p, small_grid());
  const std::string path = "test_linear_solver_steps.csv";
  write_step_csv(path, r.steps);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "step,t,interior_l2,boundary_trace_l2,evenness_defect,neumann_residual,cfl");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == r.n_steps);
  std::remove(path.c_str());
}
