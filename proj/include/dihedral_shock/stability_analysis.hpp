#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dihedral_shock/background_states.hpp"

namespace dshock {

// Coefficients of L' = sum r_ij d_ij + sum r_i d_i + r and B = sum b_i d_i + b at one point.
struct CoefficientSample {
  Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
  std::array<double, 4> r_first{};
  double r0 = 0.0;
  std::array<double, 5> b{};  // (b, b0, b1, b2, b3)
  bool on_wall = false;       // sample lies on y3 = 0
};

CoefficientSample background_coefficients(const ShockBackground& bg);

enum class MultiplierKind { first_order, dirichlet, extension };
std::string to_string(MultiplierKind k);

struct MultiplierVector {
  std::array<double, 4> q{};
  MultiplierKind kind = MultiplierKind::dirichlet;
};

// Matrix S with xi^T S xi = H_i(xi; Q) = 2 (r_i . xi)(Q . xi) - Q_i xi^T R xi.
Eigen::Matrix4d form_matrix(const Eigen::Matrix4d& r, const std::array<double, 4>& q, int i);
double form_value(const Eigen::Matrix4d& r, const std::array<double, 4>& q, int i, const Eigen::Vector4d& xi);

// Certificate for  F(xi) >= C1 |xi_P|^2 - C2 |xi_A|^2 with xi supported on P u A.
struct FormBound {
  std::string name;
  std::vector<int> positive;
  std::vector<int> allowance;
  double lambda_min = 0.0;  // smallest eigenvalue of F restricted to P
  double c1 = 0.0;
  double c2 = 0.0;
  bool certified = false;
  double sampled_min = 0.0;       // min over sampled xi of F(xi) / |xi|^2
  double sampled_slack = 0.0;     // min over samples of (F - C1|xi_P|^2 + C2|xi_A|^2) / |xi|^2
  double lipschitz = 0.0;         // K with |d lambda_min| <= K sup|dR|
  double delta_threshold = 0.0;   // lambda_min / K
};

FormBound constrained_bound(const Eigen::Matrix4d& form, std::vector<int> positive, std::vector<int> allowance);

// The three coefficients of the diagonal lower bound for H0 with an extension multiplier.
std::array<double, 3> extension_coefficients(const Eigen::Matrix4d& r, const std::array<double, 4>& q);

struct QuadraticFormReport {
  MultiplierVector q;
  std::vector<FormBound> bounds;
  std::vector<double> displayed_coefficients;  // extension kind: the three coefficients of the lower bound
  int sample_count = 0;
  std::uint64_t seed = 0;
  bool certified = false;
};

struct VerifyOptions {
  int samples = 10000;
  std::uint64_t seed = 20240917;
};

// The inequality set follows q.kind. The first-order set uses s.b to restrict -H1 to the kernel of B.
QuadraticFormReport verify_forms(const CoefficientSample& s, const MultiplierVector& q, const VerifyOptions& opt = {});

// Searches a small grid of scalings of the seed and returns the best certified one.
MultiplierVector build_Qd(const Eigen::Matrix4d& r, std::array<double, 4> seed = {1.0, 1.0, 0.0, 1.0});
MultiplierVector build_Qe(const Eigen::Matrix4d& r, double q1 = -1.0, double q2 = 0.0, double q3 = 1.0,
                          double factor = 1.1);
// Q = B~ + nu (B~ - N) + |nu r01 / B~_0| B~ with B~_0 the d0 coefficient of B~.
MultiplierVector build_Q_first_order(const CoefficientSample& s);

struct H4Values {
  double b1_abs = 0.0;
  double second = 0.0;        // r11 b0 / b1 - r01, evaluated directly
  double second_closed = 0.0; // c+^2 (rho+ - rho-) / (Delta^2 rho+)
  double second_chain = 0.0;  // last equality of the printed chain
  double chain_bound = 0.0;   // q+ / (Delta rho+) (q- rho+ - q+ rho- - rho+)
  double third = 0.0;         // sum r^{ij} Bt_i Bt_j
  double third_closed = 0.0;  // r^{00} (r11 b0 / b1 - r01)^2
};

H4Values h4_values(const CoefficientSample& s);
H4Values h4_background_formulas(const ShockBackground& bg);

struct HypothesisReport {
  // H1
  bool h1_sign_pattern = false;
  double h1_wall_max = 0.0;  // max |r32|, |r31|, |r30|, |r2| over wall samples
  bool h1_hyperbolic = false;
  // H2
  double h2_wall_b3_max = 0.0;
  double h2_background_max = 0.0;  // max |b|, |b2|, |b3| at background
  // H3
  double h3_measure = 0.0;
  double h3_delta = 0.0;
  bool h3_ok = false;
  // H4
  H4Values h4;
  double gamma0 = 0.0;  // min of the three H4 quantities
  double scale = 1.0;   // natural scale for the margin test
  bool h4_ok = false;
  bool extra_condition = false;  // q- rho+ - q+ rho- - rho+ > 0
  int samples = 0;
  int wall_samples = 0;
};

HypothesisReport check_hypotheses(const ShockBackground& bg, const std::vector<CoefficientSample>& field, double delta,
                                  double h3_measure);

}  // namespace dshock
