#pragma once

#include <optional>

namespace dshock {

struct GasConstants {
  double gamma = 1.4;
  // Derived from the upstream state when absent.
  std::optional<double> bernoulli;
};

struct ShockBackground {
  double gamma = 1.4;
  double bernoulli = 0.0;
  double q_minus = 0.0;
  double q_plus = 0.0;
  double rho_minus = 0.0;
  double rho_plus = 0.0;
  double c_minus = 0.0;
  double c_plus = 0.0;
  double u_b_slope = 0.0;

  bool entropy = false;
  bool transonic = false;

  double jump() const { return q_minus - q_plus; }
  double c_plus_sq() const { return c_plus * c_plus; }
};

struct StabilityReport {
  double value = 0.0;  // q- rho+ - q+ rho- - rho+
  bool stable = false;
  bool entropy = false;
  bool transonic = false;
};

// Specific enthalpy i(rho) = (rho^{gamma-1} - 1)/(gamma - 1).
double enthalpy(double gamma, double rho);

// Density from the Bernoulli law given Phi_t and |grad Phi|^2. Throws
// DegenerateSample when the base of the 1/(gamma-1) power is below 1e-8.
double density_from_potential(double gamma, double bernoulli, double phi_t, double grad_sq);

ShockBackground solve_jump(const GasConstants& gas, double q_minus, double rho_minus);

// Inverse direction: recover the supersonic state from a subsonic one.
ShockBackground solve_jump_from_downstream(const GasConstants& gas, double q_plus, double rho_plus);

StabilityReport check_stability_condition(const ShockBackground& bg);

// The explicit one-parameter family with q+ = 1 and q- = lambda.
struct JumpFamilyState {
  double q_minus, rho_minus, q_plus, rho_plus;
};
JumpFamilyState lambda_family(double lambda, double gamma);

// Background built from the lambda family through solve_jump.
ShockBackground lambda_background(double lambda, double gamma);

}  // namespace dshock
