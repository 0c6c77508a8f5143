#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "dihedral_shock/background_states.hpp"
#include "dihedral_shock/jet.hpp"
#include "dihedral_shock/wall_geometry.hpp"

namespace dshock {

struct UpstreamParams {
  double epsilon = 0.0;      // amplitude of the upstream perturbation
  double center_x1 = 0.0;    // bump centre in x1
  double radius_x1 = 0.35;
  double radius_x2 = 1.5;
  double ramp_time = 0.2;    // tau(t) = sin^4(pi t / (2 ramp_time))
  double wall_layer = 0.0;   // cutoff width of the slip correction, 0 for none
};

// Phi^- = Psi + (x3 - W) M chi(x3 - W) with Psi = q- x1 + eps tau(t) A(x1, x2),
// M = (Psi_1 W_1 + Psi_2 W_2) / (1 + |grad W|^2) and chi = 1 or the quartic
// cutoff of width wall_layer, which makes the slip condition hold exactly on x3 = W.
class UpstreamField {
 public:
  UpstreamField() = default;
  UpstreamField(double q_minus, WallSpec wall, UpstreamParams params = {});

  // Taylor data of Phi^- around (t, x) in the variables (t, x1, x2, x3).
  Jet<4, 2> jet(double t, const std::array<double, 3>& x) const;
  std::array<double, 4> gradient(double t, const std::array<double, 3>& x) const;

  // d3 Phi - W1 d1 Phi - W2 d2 Phi at (t, x1, x2, W(x1, x2)).
  double slip_residual(double t, double x1, double x2) const;

  // sup over the sample box of e^{-eta t} |D Phi^- - (0, q-, 0, 0)|.
  double decay_weight_bound(double eta, double t_final, int samples_per_axis = 8) const;

  double q_minus() const { return q_minus_; }
  const UpstreamParams& params() const { return params_; }
  const WallSpec& wall() const { return wall_; }

 private:
  double q_minus_ = 1.0;
  WallSpec wall_;
  UpstreamParams params_;
};

// Pointwise bundle at a hodograph point.
struct StateSample {
  double t = 0.0;
  double y2 = 0.0, y3 = 0.0;
  std::array<double, 3> x{};      // physical point, x1 = u
  std::array<double, 4> du{};     // (u0, u1, u2, u3)
  Jet<4, 2> phi_minus;            // Phi^- around (t, x)
  WallLocal wall;                 // around (x1, x2)
  Jet<3, 2> p;                    // p around x
};

StateSample make_sample(const WallSpec& wall, const UpstreamField& up, double t, double y2, double y3,
                        double u, const std::array<double, 4>& du);

// Sample at the background: flat wall, Phi^- = q- x1, u = y1 / (q- - q+).
StateSample background_sample(const ShockBackground& bg, double y1 = 0.0);

MapDerivs<double> map_derivs(const StateSample& s);

struct CoefficientBundle {
  Eigen::Matrix4d a_tilde = Eigen::Matrix4d::Zero();
  double a2 = 0.0;
  double a3 = 0.0;
  // rows 1..3 of sum a_ij (-u2 p_ij + u3 W_ij) / u1, then the (zero) time row
  std::array<double, 4> s_terms{};
  double f_rhs = 0.0;  // -u1^3 sum a_ij d_ij Phi^-
  double a12_p12_term = 0.0;  // a12 p_{x1x2} u1^3, reported for the grouping comparison
  std::array<double, 5> b_ops{};  // (b, b0, b1, b2, b3)
  double rho = 0.0;
  double c2 = 0.0;
  std::array<double, 4> dphi{};
  std::array<double, 4> dPhi{};
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  double cross_check_defect = 0.0;  // relative gap to J^T A J, when requested
};

struct EvalOptions {
  double du1_floor = 1e-8;
  bool cross_check = false;
};

// Symmetric 4x4 a_ij of the potential equation for the given D Phi and c^2.
Eigen::Matrix4d potential_matrix(const std::array<double, 4>& dPhi, double c2);

CoefficientBundle eval_interior(const ShockBackground& bg, const StateSample& s, const EvalOptions& opt = {});

// Oracle for the closed form: J^T A J by matrix product.
Eigen::Matrix4d a_tilde_product(const ShockBackground& bg, const StateSample& s);

template <class T>
T density_of(const ShockBackground& bg, const std::array<T, 4>& dPhi) {
  using std::pow;
  const T base = (bg.gamma - 1.0) * (bg.bernoulli - dPhi[0] -
                                     0.5 * (dPhi[1] * dPhi[1] + dPhi[2] * dPhi[2] + dPhi[3] * dPhi[3])) + 1.0;
  if (!(value_of(base) >= 1e-8)) {
    throw DegenerateSample("density base " + std::to_string(value_of(base)) + " below floor 1e-8");
  }
  return pow(base, 1.0 / (bg.gamma - 1.0));
}

// G = (rho+ - rho-)(phi_t + grad phi . grad Phi^-) - |grad phi|^2 rho+.
template <class T>
T shock_functional(const ShockBackground& bg, const std::array<T, 4>& du, const MapDerivs<T>& g,
                   const std::array<T, 4>& dPhi_minus, double floor = 1e-8) {
  if (!(std::abs(value_of(du[1])) >= floor)) throw DegenerateSample("|du/dy1| below floor");
  const auto dphi = dphi_from_du(g, du, floor);
  std::array<T, 4> plus;
  for (int i = 0; i < 4; ++i) plus[i] = dPhi_minus[i] - dphi[i];
  const T rho_m = density_of(bg, dPhi_minus);
  const T rho_p = density_of(bg, plus);
  const T transport = dphi[0] + dphi[1] * dPhi_minus[1] + dphi[2] * dPhi_minus[2] + dphi[3] * dPhi_minus[3];
  const T grad2 = dphi[1] * dphi[1] + dphi[2] * dphi[2] + dphi[3] * dphi[3];
  return (rho_p - rho_m) * transport - grad2 * rho_p;
}

double eval_G(const ShockBackground& bg, const StateSample& s);
// [rho][Phi_t] + sum_i [Phi_i][rho Phi_i] with [m] = m(Phi^- - phi) - m(Phi^-).
double eval_G_four_bracket(const ShockBackground& bg, const StateSample& s);

// (b, b0, b1, b2, b3) = dG/d(u, u0, u1, u2, u3), with the u-dependence
// entering through x = P^{-1}(y) at fixed (t, y2, y3).
std::array<double, 5> linearize_G(const ShockBackground& bg, const WallSpec& wall, const UpstreamField& up,
                                  const StateSample& s);

// Background values of the boundary linearization.
struct BackgroundBoundary {
  double b0 = 0.0, b1 = 0.0;
};
BackgroundBoundary background_boundary_formulas(const ShockBackground& bg);

}  // namespace dshock
