#include "dihedral_shock/background_states.hpp"

#include <cmath>
#include <string>

#include "dihedral_shock/errors.hpp"

namespace dshock {

namespace {

constexpr int kMaxBisection = 200;
constexpr int kNewtonPolish = 6;

struct JumpResidual {
  double gamma;
  double flux;
  double bernoulli;

  double operator()(double rho) const {
    const double q = flux / rho;
    return 0.5 * q * q + enthalpy(gamma, rho) - bernoulli;
  }
  double slope(double rho) const {
    return (std::pow(rho, gamma + 1.0) - flux * flux) / (rho * rho * rho);
  }
};

double bisect_then_polish(const JumpResidual& r, double lo, double hi) {
  double f_lo = r(lo);
  double f_hi = r(hi);
  if (!(f_lo * f_hi < 0.0)) {
    throw NoDownstreamState("no sign change of the Bernoulli residual on [" + std::to_string(lo) +
                            ", " + std::to_string(hi) + "]");
  }
  for (int it = 0; it < kMaxBisection; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = r(mid);
    if (f_mid == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * hi) break;
  }
  double rho = 0.5 * (lo + hi);
  for (int it = 0; it < kNewtonPolish; ++it) {
    const double s = r.slope(rho);
    if (s == 0.0) break;
    double step = r(rho) / s;
    double trial = rho - step;
    // damped: never leave the final bracket
    while (trial <= lo * (1.0 - 1e-12) || trial >= hi * (1.0 + 1e-12)) {
      step *= 0.5;
      trial = rho - step;
      if (std::abs(step) < 1e-300) break;
    }
    rho = trial;
  }
  return rho;
}

ShockBackground assemble(double gamma, double bernoulli, double qm, double rm, double qp, double rp) {
  ShockBackground bg;
  bg.gamma = gamma;
  bg.bernoulli = bernoulli;
  bg.q_minus = qm;
  bg.rho_minus = rm;
  bg.q_plus = qp;
  bg.rho_plus = rp;
  bg.c_minus = std::pow(rm, 0.5 * (gamma - 1.0));
  bg.c_plus = std::pow(rp, 0.5 * (gamma - 1.0));
  bg.u_b_slope = 1.0 / (qm - qp);
  bg.entropy = rm < rp;
  bg.transonic = qm * qm > bg.c_minus * bg.c_minus && qp * qp < bg.c_plus * bg.c_plus;
  return bg;
}

double resolve_bernoulli(const GasConstants& gas, double q, double rho) {
  const double derived = 0.5 * q * q + enthalpy(gas.gamma, rho);
  if (!gas.bernoulli) return derived;
  if (std::abs(*gas.bernoulli - derived) > 1e-12 * std::max(1.0, std::abs(derived))) {
    throw NoDownstreamState("Bernoulli constant " + std::to_string(*gas.bernoulli) +
                            " inconsistent with the supplied state (" + std::to_string(derived) + ")");
  }
  return *gas.bernoulli;
}

}  // namespace

double enthalpy(double gamma, double rho) { return (std::pow(rho, gamma - 1.0) - 1.0) / (gamma - 1.0); }

double density_from_potential(double gamma, double bernoulli, double phi_t, double grad_sq) {
  const double base = (gamma - 1.0) * (bernoulli - phi_t - 0.5 * grad_sq) + 1.0;
  if (!(base >= 1e-8)) {
    throw DegenerateSample("density base " + std::to_string(base) + " below floor 1e-8");
  }
  return std::pow(base, 1.0 / (gamma - 1.0));
}

ShockBackground solve_jump(const GasConstants& gas, double q_minus, double rho_minus) {
  const double g = gas.gamma;
  if (!(g > 1.0)) throw NotSupersonic("gamma must exceed 1");
  if (!(q_minus > 0.0) || !(rho_minus > 0.0)) throw NotSupersonic("q_minus and rho_minus must be positive");
  if (!(q_minus * q_minus > std::pow(rho_minus, g - 1.0))) {
    throw NotSupersonic("upstream state is not supersonic: q^2 = " + std::to_string(q_minus * q_minus) +
                        ", c^2 = " + std::to_string(std::pow(rho_minus, g - 1.0)));
  }
  const double b0 = resolve_bernoulli(gas, q_minus, rho_minus);
  const double base_max = (g - 1.0) * b0 + 1.0;
  if (!(base_max > 0.0)) throw NoDownstreamState("Bernoulli constant admits no positive density");
  const double rho_max = std::pow(base_max, 1.0 / (g - 1.0));
  const double flux = rho_minus * q_minus;
  const double rho_sonic = std::pow(flux * flux, 1.0 / (g + 1.0));

  JumpResidual r{g, flux, b0};
  const double lo = std::max(rho_sonic, rho_minus * (1.0 + 1e-12));
  const double rho_plus = bisect_then_polish(r, lo, rho_max);
  if (!(rho_plus > rho_minus)) throw NoDownstreamState("root does not satisfy rho+ > rho-");
  return assemble(g, b0, q_minus, rho_minus, flux / rho_plus, rho_plus);
}

ShockBackground solve_jump_from_downstream(const GasConstants& gas, double q_plus, double rho_plus) {
  const double g = gas.gamma;
  if (!(q_plus > 0.0) || !(rho_plus > 0.0)) throw NoDownstreamState("q_plus and rho_plus must be positive");
  if (!(q_plus * q_plus < std::pow(rho_plus, g - 1.0))) {
    throw NoDownstreamState("downstream state is not subsonic");
  }
  const double b0 = resolve_bernoulli(gas, q_plus, rho_plus);
  const double flux = rho_plus * q_plus;
  const double rho_sonic = std::pow(flux * flux, 1.0 / (g + 1.0));
  JumpResidual r{g, flux, b0};
  // the residual blows up like flux^2/(2 rho^2) as rho -> 0
  double lo = rho_sonic * 0.5;
  while (r(lo) <= 0.0 && lo > 1e-300) lo *= 0.5;
  const double hi = std::min(rho_sonic, rho_plus * (1.0 - 1e-12));
  const double rho_minus = bisect_then_polish(r, lo, hi);
  return assemble(g, b0, flux / rho_minus, rho_minus, q_plus, rho_plus);
}

StabilityReport check_stability_condition(const ShockBackground& bg) {
  StabilityReport rep;
  rep.value = bg.q_minus * bg.rho_plus - bg.q_plus * bg.rho_minus - bg.rho_plus;
  rep.stable = rep.value > 0.0;
  rep.entropy = bg.entropy;
  rep.transonic = bg.transonic;
  return rep;
}

JumpFamilyState lambda_family(double lambda, double gamma) {
  const double gm1 = gamma - 1.0;
  const double rho_minus =
      std::pow(gm1 * (lambda * lambda - 1.0) / (2.0 * (std::pow(lambda, gm1) - 1.0)), 1.0 / gm1);
  return {lambda, rho_minus, 1.0, lambda * rho_minus};
}

ShockBackground lambda_background(double lambda, double gamma) {
  const auto s = lambda_family(lambda, gamma);
  return solve_jump(GasConstants{gamma, std::nullopt}, s.q_minus, s.rho_minus);
}

}  // namespace dshock
