#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "dihedral_shock/errors.hpp"
#include "dihedral_shock/jet.hpp"

namespace dshock {

enum class WallKind { flat, bump, poly_bump, polynomial };

std::string to_string(WallKind k);
WallKind wall_kind_from_string(const std::string& s);

struct WallParams {
  WallKind kind = WallKind::flat;
  double amplitude = 0.0;  // sup-norm bound of W
  double center_x1 = 0.7;
  double radius_x1 = 0.4;
  double radius_x2 = 0.6;
  // W = A (1 + a1 xi + a2 xi^2 + b1 eta^2 + c11 xi eta^2) B(xi) B(eta), with
  // B = (1 - s^2)^4 for the polynomial kind and the smooth bump otherwise
  double a1 = 0.0, a2 = 0.0, b1 = 0.0, c11 = 0.0;
};

// C-infinity bump exp(1 - 1/(1 - s^2)), supported on |s| < 1 with B(0) = 1.
template <class T>
T smooth_bump(const T& s) {
  if (std::abs(value_of(s)) >= 1.0) return T(0.0);
  using std::exp;
  return exp(1.0 - 1.0 / (1.0 - s * s));
}

// (1 - s^2)^4 on |s| < 1, three times continuously differentiable.
template <class T>
T quartic_bump(const T& s) {
  if (std::abs(value_of(s)) >= 1.0) return T(0.0);
  const T a = 1.0 - s * s;
  const T a2 = a * a;
  return a2 * a2;
}

// Local wall data around a point (x1, x2).
struct WallLocal {
  double x1 = 0.0, x2 = 0.0;
  Jet<2, 3> w;   // W
  Jet<2, 2> w1;  // dW/dx1
  Jet<2, 2> w2;  // dW/dx2
  Jet<2, 2> m;   // W2 / (1 + |grad W|^2)
  Jet<2, 2> n;   // W1 / (1 + |grad W|^2)
};

class WallSpec {
 public:
  WallSpec() = default;
  explicit WallSpec(const WallParams& params);

  static WallSpec flat() { return WallSpec(); }
  // Random poly-bump wall with sup|W| <= amplitude, deterministic in seed.
  static WallSpec random(double amplitude, std::uint64_t seed);

  const WallParams& params() const { return params_; }
  double amplitude() const { return params_.kind == WallKind::flat ? 0.0 : params_.amplitude; }
  bool is_flat() const { return amplitude() == 0.0; }

  template <class T>
  T eval(const T& x1, const T& x2) const {
    if (is_flat()) return T(0.0);
    const T xi = (x1 - params_.center_x1) / params_.radius_x1;
    const T eta = x2 / params_.radius_x2;
    if (std::abs(value_of(xi)) >= 1.0 || std::abs(value_of(eta)) >= 1.0) return T(0.0);
    const T eta2 = eta * eta;
    const T poly = 1.0 + params_.a1 * xi + params_.a2 * xi * xi + params_.b1 * eta2 + params_.c11 * xi * eta2;
    if (params_.kind == WallKind::polynomial) return scale_ * poly * quartic_bump(xi) * quartic_bump(eta);
    return scale_ * poly * smooth_bump(xi) * smooth_bump(eta);
  }

  double operator()(double x1, double x2) const { return eval(x1, x2); }

  // Taylor data of W to third order and of W1, W2, m, N to second order.
  WallLocal local(double x1, double x2) const;

  // Support box [x1_lo, x1_hi] x [-x2_half, x2_half]; empty for flat walls.
  bool in_support(double x1, double x2) const;
  std::array<double, 3> support_box() const;

 private:
  WallParams params_;
  double scale_ = 0.0;
};

// p(x) = m(x1, x2) (x3 - W(x1, x2)) with its derivatives.
struct WeightP {
  double p = 0.0;
  std::array<double, 3> grad{};
  std::array<std::array<double, 3>, 3> hess{};
};

Jet<3, 2> weight_p_jet(const WallLocal& local, double x3);
WeightP weight_p(const WallSpec& wall, const std::array<double, 3>& x);
WeightP weight_p(const WallLocal& local, double x3);

struct HodographPoint {
  double y0 = 0.0, y1 = 0.0, y2 = 0.0, y3 = 0.0;
};

HodographPoint forward_map(const WallSpec& wall, double t, const std::array<double, 3>& x, double phi);

// Given the hodograph point and u = x1, recover (x2, x3). Newton on
// x2 + y3 m(u, x2) = y2 with damping on non-decrease.
std::array<double, 3> inverse_map(const WallSpec& wall, const HodographPoint& y, double u);

// Derivatives of the map entering the Dphi formulas.
template <class T>
struct MapDerivs {
  T w1{}, w2{};
  T p1{}, p2{}, p3{};
};

// Exact solution of the linear system d/dy_j (phi o P^{-1}) = delta_{1j}.
template <class T>
std::array<T, 4> dphi_from_du(const MapDerivs<T>& g, const std::array<T, 4>& du, double floor = 1e-8) {
  if (!(std::abs(value_of(du[1])) >= floor) || !std::isfinite(value_of(du[1]))) {
    throw DegenerateMap("|du/dy1| = " + std::to_string(std::abs(value_of(du[1]))) + " below floor " +
                        std::to_string(floor));
  }
  const T inv = 1.0 / du[1];
  std::array<T, 4> d;
  d[0] = -du[0] * inv;
  d[1] = (1.0 - g.p1 * du[2] + g.w1 * du[3]) * inv;
  d[2] = (g.w2 * du[3] - (1.0 + g.p2) * du[2]) * inv;
  d[3] = -(g.p3 * du[2] + du[3]) * inv;
  return d;
}

// The printed variant, with p3 W2 in place of -p2 in the x2 component. It
// coincides with the exact form where p2 = -p3 W2, i.e. on the wall.
template <class T>
std::array<T, 4> dphi_from_du_display(const MapDerivs<T>& g, const std::array<T, 4>& du,
                                      double floor = 1e-8) {
  if (!(std::abs(value_of(du[1])) >= floor)) {
    throw DegenerateMap("|du/dy1| below floor");
  }
  const T inv = 1.0 / du[1];
  std::array<T, 4> d;
  d[0] = -du[0] * inv;
  d[1] = -(g.p1 * du[2] - g.w1 * du[3] - 1.0) * inv;
  d[2] = (g.p3 * g.w2 * du[2] + g.w2 * du[3] - du[2]) * inv;
  d[3] = -(g.p3 * du[2] + du[3]) * inv;
  return d;
}

// M = d(y0, y)/d(t, x).
Eigen::Matrix4d hodograph_jacobian(const MapDerivs<double>& g, const std::array<double, 4>& dphi);

// J = u1 M^T, exact.
Eigen::Matrix4d matrix_J(const MapDerivs<double>& g, const std::array<double, 4>& du);
// J as printed, see dphi_from_du_display.
Eigen::Matrix4d matrix_J_display(const MapDerivs<double>& g, const std::array<double, 4>& du);

struct KappaJet {
  double value = 0.0;
  double d_ubar = 0.0, d_y2 = 0.0, d_y3 = 0.0;
  double d_ubar_ubar = 0.0, d_ubar_y2 = 0.0, d_ubar_y3 = 0.0;
  double d_y2y2 = 0.0, d_y2y3 = 0.0, d_y3y3 = 0.0;
  double x2 = 0.0;     // physical x2 at the point
  double x3 = 0.0;     // physical x3 at the point
  double jacobian_floor = 1.0;  // 1 + y3 (dN/dx1 + dm/dx2) at the point
  Jet<3, 2> jet;       // kappa in (ubar, y2, y3)
};

struct KappaOptions {
  int max_iterations = 100;
  double tolerance = 1e-12;
  double validity_floor = 0.5;
};

// u = kappa(ubar, y2, y3) solving ubar = u + y3 N(u, x2), y2 = x2 + y3 m(u, x2).
KappaJet kappa_jet(const WallSpec& wall, double u_bar, double y2, double y3, const KappaOptions& opt = {});

// First derivatives from the printed closed forms, which take the x2
// relation as y2 = x2 + y3 N. They agree with kappa_jet on y3 = 0.
std::array<double, 3> kappa_first_display(const WallSpec& wall, double u, double x2, double y3);

}  // namespace dshock
