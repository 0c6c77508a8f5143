#include "dihedral_shock/wall_geometry.hpp"

#include <algorithm>
#include <random>

namespace dshock {

std::string to_string(WallKind k) {
  switch (k) {
    case WallKind::flat: return "flat";
    case WallKind::bump: return "bump";
    case WallKind::poly_bump: return "poly_bump";
    case WallKind::polynomial: return "polynomial";
  }
  return "flat";
}

WallKind wall_kind_from_string(const std::string& s) {
  if (s == "flat") return WallKind::flat;
  if (s == "bump") return WallKind::bump;
  if (s == "poly_bump") return WallKind::poly_bump;
  if (s == "polynomial") return WallKind::polynomial;
  throw ConfigError("wall.kind: unknown wall kind '" + s + "' (expected flat, bump, poly_bump, polynomial)");
}

WallSpec::WallSpec(const WallParams& params) : params_(params) {
  if (params_.kind == WallKind::bump || params_.kind == WallKind::polynomial) {
    params_.a1 = params_.a2 = params_.b1 = params_.c11 = 0.0;
  }
  const double norm = 1.0 + std::abs(params_.a1) + std::abs(params_.a2) + std::abs(params_.b1) +
                      std::abs(params_.c11);
  scale_ = params_.kind == WallKind::flat ? 0.0 : params_.amplitude / norm;
}

WallSpec WallSpec::random(double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  WallParams p;
  p.kind = WallKind::poly_bump;
  p.amplitude = amplitude * (0.2 + 0.8 * unit(rng));
  p.center_x1 = 0.3 + 0.5 * unit(rng);
  p.radius_x1 = 0.3 + 0.3 * unit(rng);
  p.radius_x2 = 0.3 + 0.5 * unit(rng);
  p.a1 = sym(rng);
  p.a2 = sym(rng);
  p.b1 = sym(rng);
  p.c11 = sym(rng);
  return WallSpec(p);
}

WallLocal WallSpec::local(double x1, double x2) const {
  WallLocal l;
  l.x1 = x1;
  l.x2 = x2;
  if (is_flat()) return l;
  const auto X1 = Jet<2, 3>::variable(0, x1);
  const auto X2 = Jet<2, 3>::variable(1, x2);
  l.w = eval(X1, X2);
  l.w1 = truncate<2>(l.w.partial(0));
  l.w2 = truncate<2>(l.w.partial(1));
  const Jet<2, 2> denom = 1.0 + l.w1 * l.w1 + l.w2 * l.w2;
  const Jet<2, 2> inv = reciprocal(denom);
  l.m = l.w2 * inv;
  l.n = l.w1 * inv;
  return l;
}

bool WallSpec::in_support(double x1, double x2) const {
  if (is_flat()) return false;
  return std::abs(x1 - params_.center_x1) < params_.radius_x1 && std::abs(x2) < params_.radius_x2;
}

std::array<double, 3> WallSpec::support_box() const {
  return {params_.center_x1 - params_.radius_x1, params_.center_x1 + params_.radius_x1, params_.radius_x2};
}

Jet<3, 2> weight_p_jet(const WallLocal& local, double x3) {
  const auto m = embed<3>(local.m, std::array<int, 2>{0, 1});
  const auto w = embed<3>(truncate<2>(local.w), std::array<int, 2>{0, 1});
  const auto X3 = Jet<3, 2>::variable(2, x3);
  return m * (X3 - w);
}

WeightP weight_p(const WallLocal& local, double x3) {
  const auto j = weight_p_jet(local, x3);
  WeightP r;
  r.p = j.value();
  for (int i = 0; i < 3; ++i) {
    r.grad[i] = j.d1(i);
    for (int k = 0; k < 3; ++k) r.hess[i][k] = j.d2(i, k);
  }
  return r;
}

WeightP weight_p(const WallSpec& wall, const std::array<double, 3>& x) {
  return weight_p(wall.local(x[0], x[1]), x[2]);
}

HodographPoint forward_map(const WallSpec& wall, double t, const std::array<double, 3>& x, double phi) {
  const auto l = wall.local(x[0], x[1]);
  const double w = wall.is_flat() ? 0.0 : l.w.value();
  const double p = l.m.value() * (x[2] - w);
  return {t, phi, x[1] + p, x[2] - w};
}

std::array<double, 3> inverse_map(const WallSpec& wall, const HodographPoint& y, double u) {
  if (wall.is_flat()) return {u, y.y2, y.y3};
  double x2 = y.y2;
  auto residual = [&](double z) { return z + y.y3 * wall.local(u, z).m.value() - y.y2; };
  double r = residual(x2);
  for (int it = 0; it < 100 && std::abs(r) > 1e-14 * (1.0 + std::abs(y.y2)); ++it) {
    const auto l = wall.local(u, x2);
    const double slope = 1.0 + y.y3 * l.m.d1(1);
    double step = r / slope;
    double trial = x2 - step;
    double r_trial = residual(trial);
    int damp = 0;
    while (std::abs(r_trial) >= std::abs(r) && damp < 30) {
      step *= 0.5;
      trial = x2 - step;
      r_trial = residual(trial);
      ++damp;
    }
    x2 = trial;
    r = r_trial;
  }
  if (std::abs(r) > 1e-12 * (1.0 + std::abs(y.y2))) {
    throw ImplicitSolveFailed("inverse map did not converge, residual " + std::to_string(r));
  }
  return {u, x2, y.y3 + wall(u, x2)};
}

Eigen::Matrix4d hodograph_jacobian(const MapDerivs<double>& g, const std::array<double, 4>& dphi) {
  Eigen::Matrix4d m;
  m << 1.0, 0.0, 0.0, 0.0,
       dphi[0], dphi[1], dphi[2], dphi[3],
       0.0, g.p1, 1.0 + g.p2, g.p3,
       0.0, -g.w1, -g.w2, 1.0;
  return m;
}

Eigen::Matrix4d matrix_J(const MapDerivs<double>& g, const std::array<double, 4>& du) {
  return du[1] * hodograph_jacobian(g, dphi_from_du(g, du)).transpose();
}

Eigen::Matrix4d matrix_J_display(const MapDerivs<double>& g, const std::array<double, 4>& du) {
  const double u0 = du[0], u1 = du[1], u2 = du[2], u3 = du[3];
  Eigen::Matrix4d j;
  j << u1, -u0, 0.0, 0.0,
       0.0, g.w1 * u3 - g.p1 * u2 + 1.0, g.p1 * u1, -g.w1 * u1,
       0.0, (g.p3 * g.w2 - 1.0) * u2 + u3 * g.w2, (g.p2 + 1.0) * u1, -g.w2 * u1,
       0.0, -g.p3 * u2 - u3, g.p3 * u1, u1;
  return j;
}

KappaJet kappa_jet(const WallSpec& wall, double u_bar, double y2, double y3, const KappaOptions& opt) {
  KappaJet k;
  using J3 = Jet<3, 2>;
  if (wall.is_flat()) {
    k.value = u_bar;
    k.d_ubar = 1.0;
    k.x2 = y2;
    k.x3 = y3;
    k.jet = J3::variable(0, u_bar);
    return k;
  }

  // Newton on (u, x2) in double precision.
  double u = u_bar, x2 = y2;
  auto eval = [&](double uu, double zz, WallLocal& l) {
    l = wall.local(uu, zz);
    return std::array<double, 2>{uu + y3 * l.n.value() - u_bar, zz + y3 * l.m.value() - y2};
  };
  WallLocal l;
  auto f = eval(u, x2, l);
  auto norm = [](const std::array<double, 2>& v) { return std::max(std::abs(v[0]), std::abs(v[1])); };
  int it = 0;
  const double scale = 1.0 + std::abs(u_bar) + std::abs(y2);
  while (norm(f) > opt.tolerance * scale) {
    if (++it > opt.max_iterations) {
      throw ImplicitSolveFailed("kappa solve did not converge at (ubar, y2, y3) = (" + std::to_string(u_bar) +
                                ", " + std::to_string(y2) + ", " + std::to_string(y3) + ")");
    }
    const double a = 1.0 + y3 * l.n.d1(0), b = y3 * l.n.d1(1);
    const double c = y3 * l.m.d1(0), d = 1.0 + y3 * l.m.d1(1);
    const double det = a * d - b * c;
    double du = (d * f[0] - b * f[1]) / det;
    double dx = (-c * f[0] + a * f[1]) / det;
    WallLocal lt;
    auto ft = eval(u - du, x2 - dx, lt);
    int damp = 0;
    while (norm(ft) >= norm(f) && damp < 30) {
      du *= 0.5;
      dx *= 0.5;
      ft = eval(u - du, x2 - dx, lt);
      ++damp;
    }
    u -= du;
    x2 -= dx;
    f = ft;
    l = lt;
  }

  for (int polish = 0; polish < 2; ++polish) {
    const double a = 1.0 + y3 * l.n.d1(0), b = y3 * l.n.d1(1);
    const double c = y3 * l.m.d1(0), d = 1.0 + y3 * l.m.d1(1);
    const double det = a * d - b * c;
    WallLocal lt;
    const double un = u - (d * f[0] - b * f[1]) / det;
    const double xn = x2 - (-c * f[0] + a * f[1]) / det;
    const auto ft = eval(un, xn, lt);
    if (norm(ft) >= norm(f)) break;
    u = un;
    x2 = xn;
    f = ft;
    l = lt;
  }

  const double a = 1.0 + y3 * l.n.d1(0), b = y3 * l.n.d1(1);
  const double c = y3 * l.m.d1(0), d = 1.0 + y3 * l.m.d1(1);
  const double det = a * d - b * c;
  k.jacobian_floor = det;
  if (!(det > opt.validity_floor)) {
    throw ImplicitSolveFailed("kappa Jacobian " + std::to_string(det) + " below validity floor");
  }

  // Chord iteration on jets; each pass gains one order.
  const J3 UB = J3::variable(0, u_bar), Y2 = J3::variable(1, y2), Y3 = J3::variable(2, y3);
  J3 U(u), X2(x2);
  const std::array<double, 2> base{u, x2};
  for (int pass = 0; pass < 3; ++pass) {
    const std::array<J3, 2> args{U, X2};
    const J3 n = compose(l.n, args, base);
    const J3 m = compose(l.m, args, base);
    const J3 f0 = U + Y3 * n - UB;
    const J3 f1 = X2 + Y3 * m - Y2;
    U -= (d * f0 - b * f1) / det;
    X2 -= (-c * f0 + a * f1) / det;
  }
  k.jet = U;
  k.value = U.value();
  k.d_ubar = U.d1(0);
  k.d_y2 = U.d1(1);
  k.d_y3 = U.d1(2);
  k.d_ubar_ubar = U.d2(0, 0);
  k.d_ubar_y2 = U.d2(0, 1);
  k.d_ubar_y3 = U.d2(0, 2);
  k.d_y2y2 = U.d2(1, 1);
  k.d_y2y3 = U.d2(1, 2);
  k.d_y3y3 = U.d2(2, 2);
  k.x2 = x2;
  k.x3 = y3 + l.w.value();
  return k;
}

std::array<double, 3> kappa_first_display(const WallSpec& wall, double u, double x2, double y3) {
  if (wall.is_flat()) return {1.0, 0.0, 0.0};
  const auto l = wall.local(u, x2);
  const double n1 = l.n.d1(0), n2 = l.n.d1(1);
  const double den = 1.0 + y3 * (n1 + n2);
  return {(1.0 + y3 * n2) / den, -y3 * n2 / den, -l.n.value() / den};
}

}  // namespace dshock
