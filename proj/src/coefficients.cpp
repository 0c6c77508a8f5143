#include "dihedral_shock/coefficients.hpp"

#include <algorithm>
#include <numbers>

#include "dihedral_shock/errors.hpp"

namespace dshock {

UpstreamField::UpstreamField(double q_minus, WallSpec wall, UpstreamParams params)
    : q_minus_(q_minus), wall_(std::move(wall)), params_(params) {
  if (!(params_.ramp_time > 0.0)) throw ConfigError("upstream.ramp_time must be positive");
  if (!(params_.radius_x1 > 0.0) || !(params_.radius_x2 > 0.0)) {
    throw ConfigError("upstream radii must be positive");
  }
}

Jet<4, 2> UpstreamField::jet(double t, const std::array<double, 3>& x) const {
  using J4 = Jet<4, 2>;
  using J3 = Jet<3, 3>;
  const J4 X1 = J4::variable(1, x[0]);
  if (params_.epsilon == 0.0 && wall_.is_flat()) return q_minus_ * X1;

  const J3 T = J3::variable(0, t), Y1 = J3::variable(1, x[0]), Y2 = J3::variable(2, x[1]);
  J3 psi = q_minus_ * Y1;
  if (params_.epsilon != 0.0) {
    const double omega = std::numbers::pi / (2.0 * params_.ramp_time);
    const J3 s = sin(omega * T);
    const J3 s2 = s * s;
    const J3 bump = smooth_bump(J3((Y1 - params_.center_x1) / params_.radius_x1)) *
                    smooth_bump(J3(Y2 / params_.radius_x2));
    psi += params_.epsilon * s2 * s2 * bump;
  }
  const std::array<int, 3> slots{0, 1, 2};
  if (wall_.is_flat()) return embed<4>(truncate<2>(psi), slots);

  const auto l = wall_.local(x[0], x[1]);
  const J3 w = embed<3>(l.w, std::array<int, 2>{1, 2});
  const J3 w1 = w.partial(1), w2 = w.partial(2);
  const J3 m = (psi.partial(1) * w1 + psi.partial(2) * w2) / (1.0 + w1 * w1 + w2 * w2);
  const J4 X3 = J4::variable(3, x[2]);
  const J4 z = X3 - embed<4>(truncate<2>(w), slots);
  J4 layer = z * embed<4>(truncate<2>(m), slots);
  if (params_.wall_layer > 0.0) layer = layer * quartic_bump(J4(z / params_.wall_layer));
  return embed<4>(truncate<2>(psi), slots) + layer;
}

std::array<double, 4> UpstreamField::gradient(double t, const std::array<double, 3>& x) const {
  const auto j = jet(t, x);
  return {j.d1(0), j.d1(1), j.d1(2), j.d1(3)};
}

double UpstreamField::slip_residual(double t, double x1, double x2) const {
  const double w = wall_(x1, x2);
  const auto g = gradient(t, {x1, x2, w});
  const auto l = wall_.local(x1, x2);
  return g[3] - l.w1.value() * g[1] - l.w2.value() * g[2];
}

double UpstreamField::decay_weight_bound(double eta, double t_final, int samples_per_axis) const {
  const int n = std::max(samples_per_axis, 2);
  double sup = 0.0;
  for (int it = 0; it < n; ++it) {
    const double t = t_final * it / (n - 1);
    const double weight = std::exp(-eta * t);
    for (int i1 = 0; i1 < n; ++i1) {
      const double x1 = -1.0 + 3.0 * i1 / (n - 1);
      for (int i2 = 0; i2 < n; ++i2) {
        const double x2 = -params_.radius_x2 + 2.0 * params_.radius_x2 * i2 / (n - 1);
        for (int i3 = 0; i3 < n; ++i3) {
          const double x3 = wall_(x1, x2) + static_cast<double>(i3) / (n - 1);
          const auto g = gradient(t, {x1, x2, x3});
          const double d = std::hypot(g[0], g[1] - q_minus_, g[2]) + std::abs(g[3]);
          sup = std::max(sup, weight * d);
        }
      }
    }
  }
  return sup;
}

StateSample make_sample(const WallSpec& wall, const UpstreamField& up, double t, double y2, double y3,
                        double u, const std::array<double, 4>& du) {
  StateSample s;
  s.t = t;
  s.y2 = y2;
  s.y3 = y3;
  s.du = du;
  s.x = inverse_map(wall, HodographPoint{t, 0.0, y2, y3}, u);
  s.wall = wall.local(s.x[0], s.x[1]);
  s.p = weight_p_jet(s.wall, s.x[2]);
  s.phi_minus = up.jet(t, s.x);
  return s;
}

StateSample background_sample(const ShockBackground& bg, double y1) {
  StateSample s;
  const double delta = bg.jump();
  s.x = {y1 / delta, 0.0, 0.0};
  s.du = {0.0, 1.0 / delta, 0.0, 0.0};
  s.wall.x1 = s.x[0];
  s.phi_minus = bg.q_minus * Jet<4, 2>::variable(1, s.x[0]);
  return s;
}

MapDerivs<double> map_derivs(const StateSample& s) {
  MapDerivs<double> g;
  g.w1 = s.wall.w1.value();
  g.w2 = s.wall.w2.value();
  g.p1 = s.p.d1(0);
  g.p2 = s.p.d1(1);
  g.p3 = s.p.d1(2);
  return g;
}

Eigen::Matrix4d potential_matrix(const std::array<double, 4>& dPhi, double c2) {
  const Eigen::Vector4d v(1.0, dPhi[1], dPhi[2], dPhi[3]);
  Eigen::Matrix4d a = v * v.transpose();
  for (int i = 1; i < 4; ++i) a(i, i) -= c2;
  return a;
}

namespace {

struct Kinematics {
  MapDerivs<double> g;
  std::array<double, 4> dphi{}, dPhi{};
  double rho = 0.0, c2 = 0.0;
};

Kinematics kinematics(const ShockBackground& bg, const StateSample& s, double floor) {
  Kinematics k;
  k.g = map_derivs(s);
  if (!(std::abs(s.du[1]) >= floor)) {
    throw DegenerateSample("|du/dy1| = " + std::to_string(std::abs(s.du[1])) + " below floor");
  }
  k.dphi = dphi_from_du(k.g, s.du, floor);
  for (int i = 0; i < 4; ++i) k.dPhi[i] = s.phi_minus.d1(i) - k.dphi[i];
  k.rho = density_of(bg, k.dPhi);
  k.c2 = std::pow(k.rho, bg.gamma - 1.0);
  return k;
}

}  // namespace

CoefficientBundle eval_interior(const ShockBackground& bg, const StateSample& s, const EvalOptions& opt) {
  const auto k = kinematics(bg, s, opt.du1_floor);
  const auto& g = k.g;
  const double u0 = s.du[0], u1 = s.du[1], u2 = s.du[2], u3 = s.du[3];
  const double F1 = k.dPhi[1], F2 = k.dPhi[2], F3 = k.dPhi[3];

  // Spatial rows of the columns of J = u1 M^T.
  const double e1 = 1.0 - g.p1 * u2 + g.w1 * u3;
  const double e2 = g.w2 * u3 - (1.0 + g.p2) * u2;
  const double e3 = -(g.p3 * u2 + u3);
  const std::array<std::array<double, 3>, 4> col{{{0.0, 0.0, 0.0},
                                                   {e1, e2, e3},
                                                   {u1 * g.p1, u1 * (1.0 + g.p2), u1 * g.p3},
                                                   {-u1 * g.w1, -u1 * g.w2, u1}}};
  const std::array<double, 4> top{u1, -u0, 0.0, 0.0};

  std::array<double, 4> sv{};
  for (int i = 0; i < 4; ++i) sv[i] = top[i] + F1 * col[i][0] + F2 * col[i][1] + F3 * col[i][2];

  CoefficientBundle b;
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      const double gij = col[i][0] * col[j][0] + col[i][1] * col[j][1] + col[i][2] * col[j][2];
      const double v = sv[i] * sv[j] - k.c2 * gij;
      b.a_tilde(i, j) = v;
      b.a_tilde(j, i) = v;
    }
  }

  b.a = potential_matrix(k.dPhi, k.c2);
  const double u1sq = u1 * u1;
  double sum_p = 0.0, sum_w = 0.0, sum_phi = 0.0;
  for (int i = 1; i < 4; ++i) {
    double row = 0.0;
    for (int j = 1; j < 4; ++j) {
      const double pij = s.p.d2(i - 1, j - 1);
      const double wij = (i < 3 && j < 3) ? s.wall.w.d2(i - 1, j - 1) : 0.0;
      sum_p += b.a(i, j) * pij;
      sum_w += b.a(i, j) * wij;
      row += b.a(i, j) * (-u2 * pij + u3 * wij);
    }
    b.s_terms[i - 1] = row / u1;
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) sum_phi += b.a(i, j) * s.phi_minus.d2(i, j);
  }
  b.a2 = u1sq * sum_p;
  b.a3 = -u1sq * sum_w;
  b.f_rhs = -u1sq * u1 * sum_phi;
  b.a12_p12_term = b.a(1, 2) * s.p.d2(0, 1) * u1sq * u1;
  b.rho = k.rho;
  b.c2 = k.c2;
  b.dphi = k.dphi;
  b.dPhi = k.dPhi;

  if (opt.cross_check) {
    const Eigen::Matrix4d prod = a_tilde_product(bg, s);
    const double scale = std::max(1.0, prod.cwiseAbs().maxCoeff());
    b.cross_check_defect = (prod - b.a_tilde).cwiseAbs().maxCoeff() / scale;
  }
  return b;
}

Eigen::Matrix4d a_tilde_product(const ShockBackground& bg, const StateSample& s) {
  const auto k = kinematics(bg, s, 1e-8);
  const Eigen::Matrix4d j = matrix_J(k.g, s.du);
  return j.transpose() * potential_matrix(k.dPhi, k.c2) * j;
}

double eval_G(const ShockBackground& bg, const StateSample& s) {
  const std::array<double, 4> dm{s.phi_minus.d1(0), s.phi_minus.d1(1), s.phi_minus.d1(2), s.phi_minus.d1(3)};
  return shock_functional(bg, s.du, map_derivs(s), dm);
}

double eval_G_four_bracket(const ShockBackground& bg, const StateSample& s) {
  const auto g = map_derivs(s);
  if (!(std::abs(s.du[1]) >= 1e-8)) throw DegenerateSample("|du/dy1| below floor");
  const auto dphi = dphi_from_du(g, s.du);
  std::array<double, 4> minus{}, plus{};
  for (int i = 0; i < 4; ++i) {
    minus[i] = s.phi_minus.d1(i);
    plus[i] = minus[i] - dphi[i];
  }
  const double rp = density_of(bg, plus), rm = density_of(bg, minus);
  double out = (rp - rm) * (plus[0] - minus[0]);
  for (int i = 1; i < 4; ++i) out += (plus[i] - minus[i]) * (rp * plus[i] - rm * minus[i]);
  return out;
}

std::array<double, 5> linearize_G(const ShockBackground& bg, const WallSpec& wall, const UpstreamField& up,
                                  const StateSample& s) {
  using D = Jet<5, 1>;
  const double x1 = s.x[0], x2 = s.x[1], x3 = s.x[2];
  const D U = D::variable(0, x1);
  std::array<D, 4> du;
  for (int i = 0; i < 4; ++i) du[i] = D::variable(1 + i, s.du[i]);

  D X2(x2), X3(x3);
  MapDerivs<D> g;
  std::array<D, 4> dm;
  if (wall.is_flat()) {
    g.w1 = g.w2 = g.p1 = g.p2 = g.p3 = D(0.0);
  } else {
    const auto& l = s.wall;
    const double dx2 = -s.y3 * l.m.d1(0) / (1.0 + s.y3 * l.m.d1(1));
    X2 = x2 + dx2 * (U - x1);
    const std::array<D, 2> a2{U, X2};
    const std::array<double, 2> b2{x1, x2};
    X3 = s.y3 + compose(l.w, a2, b2);
    g.w1 = compose(l.w1, a2, b2);
    g.w2 = compose(l.w2, a2, b2);
    const std::array<D, 3> a3{U, X2, X3};
    const std::array<double, 3> b3{x1, x2, x3};
    g.p1 = compose(s.p.partial(0), a3, b3);
    g.p2 = compose(s.p.partial(1), a3, b3);
    g.p3 = compose(s.p.partial(2), a3, b3);
  }
  const std::array<D, 4> a4{D(s.t), U, X2, X3};
  const std::array<double, 4> b4{s.t, x1, x2, x3};
  const bool uniform = up.params().epsilon == 0.0 && wall.is_flat();
  for (int i = 0; i < 4; ++i) {
    dm[i] = uniform ? D(s.phi_minus.d1(i)) : compose(s.phi_minus.partial(i), a4, b4);
  }
  const D G = shock_functional(bg, du, g, dm);
  return {G.d1(0), G.d1(1), G.d1(2), G.d1(3), G.d1(4)};
}

BackgroundBoundary background_boundary_formulas(const ShockBackground& bg) {
  const double d = bg.jump();
  const double c2 = bg.c_plus_sq();
  BackgroundBoundary r;
  r.b0 = d * (-(bg.rho_plus * bg.q_plus / c2) * d - (bg.rho_plus - bg.rho_minus));
  r.b1 = d * d * (-(bg.q_plus * bg.q_plus * bg.rho_plus / c2) * d + bg.rho_plus * d);
  return r;
}

}  // namespace dshock
