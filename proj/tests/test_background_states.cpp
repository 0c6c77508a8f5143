#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dihedral_shock/background_states.hpp"
#include "dihedral_shock/errors.hpp"

using namespace dshock;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Plain bisection on the Bernoulli residual, kept separate from solve_jump.
double oracle_rho_plus(double gamma, double q, double rho) {
  const double flux = q * rho;
  const double b0 = 0.5 * q * q + (std::pow(rho, gamma - 1) - 1) / (gamma - 1);
  auto f = [&](double r) {
    const double v = flux / r;
    return 0.5 * v * v + (std::pow(r, gamma - 1) - 1) / (gamma - 1) - b0;
  };
  double lo = std::pow(flux * flux, 1.0 / (gamma + 1));
  double hi = std::pow((gamma - 1) * b0 + 1, 1.0 / (gamma - 1));
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("lambda family recovered at lambda = 1.3") {
  const auto s = lambda_family(1.3, 1.4);
  CHECK(s.rho_minus == doctest::Approx(1.7375).epsilon(5e-4));
  CHECK(s.rho_plus == doctest::Approx(2.2587).epsilon(5e-4));
  const auto bg = solve_jump(GasConstants{1.4, std::nullopt}, s.q_minus, s.rho_minus);
  CHECK(rel(bg.q_plus, 1.0) < 1e-10);
  CHECK(rel(bg.rho_plus, s.rho_plus) < 1e-10);
  CHECK(rel(bg.rho_plus, oracle_rho_plus(1.4, s.q_minus, s.rho_minus)) < 1e-12);
}

TEST_CASE("jump residuals vanish and flags hold over a sweep") {
  for (double gamma : {1.2, 1.4, 5.0 / 3.0, 2.0}) {
    for (double lambda = 1.05; lambda < 2.0; lambda += 0.05) {
      const auto s = lambda_family(lambda, gamma);
      const auto bg = solve_jump(GasConstants{gamma, std::nullopt}, s.q_minus, s.rho_minus);
      const double flux = bg.rho_minus * bg.q_minus;
      CHECK(std::abs(flux - bg.rho_plus * bg.q_plus) <= 1e-12 * flux);
      const double bm = 0.5 * bg.q_minus * bg.q_minus + enthalpy(gamma, bg.rho_minus);
      const double bp = 0.5 * bg.q_plus * bg.q_plus + enthalpy(gamma, bg.rho_plus);
      CHECK(std::abs(bm - bp) <= 1e-12 * std::abs(bm));
      CHECK(bg.entropy);
      CHECK(bg.transonic);
      CHECK(bg.u_b_slope > 0.0);
      const auto rep = check_stability_condition(bg);
      const double expected = (lambda * lambda - lambda - 1.0) * s.rho_minus;
      CHECK(std::abs(rep.value - expected) <= 1e-12 * std::max(std::abs(expected), s.rho_minus) * 10);
    }
  }
}

TEST_CASE("stability sign across the golden ratio") {
  CHECK_FALSE(check_stability_condition(lambda_background(1.3, 1.4)).stable);
  const auto bg = lambda_background(1.7, 1.4);
  const auto rep = check_stability_condition(bg);
  CHECK(rep.stable);
  CHECK(rep.transonic);
  CHECK(rep.entropy);
  CHECK(bg.rho_minus == doctest::Approx(3.228).epsilon(1e-3));
  CHECK(bg.c_plus_sq() == doctest::Approx(1.976).epsilon(1e-3));
}

TEST_CASE("golden ratio boundary is not strictly stable") {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  const auto s = lambda_family(phi, 1.4);
  ShockBackground bg;
  bg.q_minus = s.q_minus;
  bg.q_plus = s.q_plus;
  bg.rho_minus = s.rho_minus;
  bg.rho_plus = s.rho_plus;
  const auto rep = check_stability_condition(bg);
  CHECK(std::abs(rep.value) < 1e-13 * s.rho_minus);
  // hand-built state whose value is exactly zero
  bg.q_minus = 1.0;
  bg.q_plus = 0.0;
  bg.rho_plus = 1.0;
  bg.rho_minus = 0.0;
  CHECK(check_stability_condition(bg).value == 0.0);
  CHECK_FALSE(check_stability_condition(bg).stable);
}

TEST_CASE("continuity in the upstream speed") {
  const auto s = lambda_family(1.3, 1.4);
  const auto a = solve_jump(GasConstants{1.4, std::nullopt}, s.q_minus, s.rho_minus);
  const auto b = solve_jump(GasConstants{1.4, std::nullopt}, s.q_minus + 1e-6, s.rho_minus);
  CHECK(std::abs(a.rho_plus - b.rho_plus) < 1e-3);
  CHECK(std::abs(a.rho_plus - b.rho_plus) > 0.0);
}

TEST_CASE("downstream re-solve is an involution") {
  for (double lambda : {1.1, 1.3, 1.5, 1.7}) {
    const auto bg = lambda_background(lambda, 1.4);
    const auto back = solve_jump_from_downstream(GasConstants{1.4, std::nullopt}, bg.q_plus, bg.rho_plus);
    CHECK(rel(back.rho_minus, bg.rho_minus) < 1e-10);
    CHECK(rel(back.q_minus, bg.q_minus) < 1e-10);
  }
}

TEST_CASE("explicit Bernoulli constant is honoured or rejected") {
  const auto s = lambda_family(1.3, 1.4);
  const double b0 = 0.5 * s.q_minus * s.q_minus + enthalpy(1.4, s.rho_minus);
  const auto bg = solve_jump(GasConstants{1.4, b0}, s.q_minus, s.rho_minus);
  CHECK(bg.bernoulli == b0);
  CHECK_THROWS_AS(solve_jump(GasConstants{1.4, b0 + 0.1}, s.q_minus, s.rho_minus), NoDownstreamState);
}

TEST_CASE("subsonic input is refused") {
  CHECK_THROWS_AS(solve_jump(GasConstants{1.4, std::nullopt}, 0.5, 1.0), NotSupersonic);
  CHECK_THROWS_AS(solve_jump(GasConstants{1.4, std::nullopt}, -1.0, 1.0), NotSupersonic);
}

TEST_CASE("density floor raises instead of clamping") {
  CHECK(density_from_potential(1.4, 0.0, 0.0, 0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(density_from_potential(1.4, 0.0, 10.0, 0.0), DegenerateSample);
}
