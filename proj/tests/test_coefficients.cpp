#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dihedral_shock/coefficients.hpp"
#include "dihedral_shock/errors.hpp"

using namespace dshock;

namespace {

const ShockBackground& bg17() {
  static const ShockBackground bg = lambda_background(1.7, 1.4);
  return bg;
}

struct RandomCase {
  WallSpec wall;
  UpstreamField up;
  StateSample s;
};

UpstreamParams perturbed_upstream(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  UpstreamParams p;
  p.epsilon = 0.05 * unit(rng);
  p.center_x1 = 0.2 + 0.4 * unit(rng);
  p.radius_x1 = 0.6;
  p.radius_x2 = 1.2;
  p.ramp_time = 0.3;
  return p;
}

RandomCase random_case(std::uint64_t seed, bool on_wall) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  RandomCase c;
  c.wall = WallSpec::random(0.15, seed * 7 + 1);
  c.up = UpstreamField(bg17().q_minus, c.wall, perturbed_upstream(rng));
  const auto box = c.wall.support_box();
  const double u = box[0] + (box[1] - box[0]) * unit(rng);
  const double y2 = 0.8 * box[2] * sym(rng);
  const double y3 = on_wall ? 0.0 : 0.3 * unit(rng);
  const double t = 0.25 * unit(rng);
  const double u1 = (1.0 + 0.1 * sym(rng)) / bg17().jump();
  std::array<double, 4> du{0.05 * sym(rng), u1, 0.05 * sym(rng), 0.05 * sym(rng)};
  if (on_wall) {
    const auto x2 = inverse_map(c.wall, HodographPoint{t, 0.0, y2, 0.0}, u)[1];
    du[3] = -c.wall.local(u, x2).n.value();
  }
  c.s = make_sample(c.wall, c.up, t, y2, y3, u, du);
  return c;
}

}  // namespace

TEST_CASE("background coefficients take the tabulated values") {
  const auto& bg = bg17();
  const auto s = background_sample(bg);
  const auto b = eval_interior(bg, s);
  const double d = bg.jump(), c2 = bg.c_plus_sq(), q = bg.q_plus;
  Eigen::Matrix4d expect = Eigen::Matrix4d::Zero();
  expect(0, 0) = 1.0 / (d * d);
  expect(0, 1) = expect(1, 0) = q / d;
  expect(1, 1) = q * q - c2;
  expect(2, 2) = expect(3, 3) = -c2 / (d * d);
  CHECK((b.a_tilde - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(b.a2 == 0.0);
  CHECK(b.a3 == 0.0);
  CHECK(b.f_rhs == 0.0);
  CHECK(b.a_tilde(1, 1) < 0.0);
  CHECK(b.a_tilde(2, 2) < 0.0);
  CHECK(b.a_tilde(3, 3) < 0.0);
  CHECK(b.a_tilde(0, 0) > 0.0);
  CHECK(b.a_tilde(0, 1) > 0.0);
  CHECK(std::abs(b.rho - bg.rho_plus) < 1e-12 * bg.rho_plus);
  CHECK(std::abs(eval_G(bg, s)) < 1e-12);
}

TEST_CASE("closed-form a_tilde agrees with the J^T A J product") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto c = random_case(seed, false);
    EvalOptions opt;
    opt.cross_check = true;
    const auto b = eval_interior(bg17(), c.s, opt);
    CHECK(b.cross_check_defect < 1e-10);
    CHECK((b.a_tilde - b.a_tilde.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("transformed equation holds for an exact change of variables") {
  using J4 = Jet<4, 2>;
  const auto& bg = bg17();
  for (std::uint64_t seed = 11; seed <= 60; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    const WallSpec wall = WallSpec::random(0.15, seed);
    const UpstreamField up(bg.q_minus, wall, perturbed_upstream(rng));
    const auto box = wall.support_box();
    const double t = 0.2 * unit(rng);
    const double x1 = box[0] + (box[1] - box[0]) * unit(rng);
    const double x2 = 0.7 * box[2] * sym(rng);
    const double x3 = wall(x1, x2) + 0.2 * unit(rng);
    const std::array<double, 4> z0{t, x1, x2, x3};

    // phi(t, x) = Delta x1 + a sin(t + k1 x1) cos(k2 x2) (1 + x3^2)
    const double amp = 0.1 * sym(rng), k1 = 1.0 + unit(rng), k2 = 1.0 + unit(rng);
    const J4 T = J4::variable(0, t), X1 = J4::variable(1, x1), X2 = J4::variable(2, x2), X3 = J4::variable(3, x3);
    const J4 phi = bg.jump() * X1 + amp * sin(T + k1 * X1) * cos(k2 * X2) * (1.0 + X3 * X3);

    const auto l = wall.local(x1, x2);
    const auto pj = embed<4>(weight_p_jet(l, x3), std::array<int, 3>{1, 2, 3});
    const auto wj = embed<4>(truncate<2>(l.w), std::array<int, 2>{1, 2});
    const std::array<J4, 4> P{T, phi, X2 + pj, X3 - wj};
    std::array<double, 4> y0{};
    Eigen::Matrix4d M;
    for (int i = 0; i < 4; ++i) {
      y0[i] = P[i].value();
      for (int j = 0; j < 4; ++j) M(i, j) = P[i].d1(j);
    }
    const Eigen::Matrix4d Minv = M.inverse();

    // Series reversion of P around z0.
    std::array<J4, 4> Q;
    std::array<J4, 4> Y;
    for (int i = 0; i < 4; ++i) {
      Q[i] = J4(z0[i]);
      Y[i] = J4::variable(i, y0[i]);
    }
    for (int pass = 0; pass < 4; ++pass) {
      std::array<J4, 4> res;
      for (int i = 0; i < 4; ++i) res[i] = Y[i] - compose(P[i], Q, z0);
      std::array<J4, 4> next = Q;
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) next[i] += Minv(i, j) * res[j];
      }
      Q = next;
    }
    const J4& u = Q[1];

    StateSample s;
    s.t = t;
    s.y2 = y0[2];
    s.y3 = y0[3];
    s.x = {x1, x2, x3};
    s.du = {u.d1(0), u.d1(1), u.d1(2), u.d1(3)};
    s.wall = l;
    s.p = weight_p_jet(l, x3);
    s.phi_minus = up.jet(t, s.x);
    const auto b = eval_interior(bg, s);

    for (int i = 0; i < 4; ++i) CHECK(std::abs(b.dphi[i] - phi.d1(i)) < 1e-11);

    double lhs = b.a2 * s.du[2] + b.a3 * s.du[3];
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) lhs += b.a_tilde(i, j) * u.d2(i, j);
    }
    const J4 Phi = s.phi_minus - phi;
    double rhs = 0.0, scale = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        rhs += b.a(i, j) * Phi.d2(i, j);
        scale += std::abs(b.a(i, j) * Phi.d2(i, j)) + std::abs(b.a(i, j) * phi.d2(i, j));
      }
    }
    const double u1c = s.du[1] * s.du[1] * s.du[1];
    CHECK(std::abs(lhs - b.f_rhs - u1c * rhs) < 1e-10 * std::abs(u1c) * std::max(scale, 1.0));
  }
}

TEST_CASE("wall coefficients vanish on y3 = 0 under the Neumann relation") {
  double worst = 0.0;
  for (std::uint64_t seed = 1000; seed < 1500; ++seed) {
    const auto c = random_case(seed, true);
    const auto b = eval_interior(bg17(), c.s);
    const auto ops = linearize_G(bg17(), c.wall, c.up, c.s);
    const double scale = b.a_tilde.cwiseAbs().maxCoeff();
    const double v = std::max({std::abs(b.a_tilde(0, 3)), std::abs(b.a_tilde(1, 3)), std::abs(b.a_tilde(2, 3)),
                               std::abs(ops[4])});
    worst = std::max(worst, v / scale);
    CHECK(std::abs(c.up.slip_residual(c.s.t, c.s.x[0], c.s.x[1])) < 1e-12);
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("off-wall samples do not satisfy the vanishing") {
  const auto c = random_case(77, false);
  const auto b = eval_interior(bg17(), c.s);
  CHECK(std::abs(b.a_tilde(2, 3)) + std::abs(b.a_tilde(1, 3)) > 1e-6);
}

TEST_CASE("compact G is minus the literal four-bracket expansion") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto c = random_case(seed, false);
    const double g = eval_G(bg17(), c.s);
    const double lit = eval_G_four_bracket(bg17(), c.s);
    CHECK(std::abs(g + lit) <= 1e-10 * std::max(std::abs(g), 1e-3));
  }
}

TEST_CASE("G vanishes on an oblique Rankine-Hugoniot state") {
  const double gamma = 1.4, q_minus = 2.4, rho_minus = 1.0;
  for (double theta : {0.0, 0.2, 0.4}) {
    const double qn = q_minus * std::cos(theta);
    const auto normal = solve_jump(GasConstants{gamma, std::nullopt}, qn, rho_minus);
    ShockBackground bg = normal;
    bg.bernoulli = 0.5 * q_minus * q_minus + enthalpy(gamma, rho_minus);
    const double dn = qn - normal.q_plus;
    StateSample s;
    s.x = {0.0, 0.0, 0.0};
    s.phi_minus = q_minus * Jet<4, 2>::variable(1, 0.0);
    s.du = {0.0, 1.0 / (dn * std::cos(theta)), -std::tan(theta), 0.0};
    const double g = eval_G(bg, s);
    CHECK(std::abs(g) < 1e-10 * rho_minus * q_minus * q_minus);
  }
}

TEST_CASE("background boundary linearization matches the closed forms") {
  const auto& bg = bg17();
  const auto s = background_sample(bg);
  const UpstreamField up(bg.q_minus, WallSpec::flat());
  const auto ops = linearize_G(bg, WallSpec::flat(), up, s);
  const auto ref = background_boundary_formulas(bg);
  CHECK(std::abs(ops[1] - ref.b0) < 1e-12 * std::abs(ref.b0));
  CHECK(std::abs(ops[2] - ref.b1) < 1e-12 * std::abs(ref.b1));
  CHECK(std::abs(ops[0]) < 1e-12);
  CHECK(std::abs(ops[3]) < 1e-12);
  CHECK(std::abs(ops[4]) < 1e-12);
  CHECK(ops[1] < 0.0);
  CHECK(ops[2] > 0.0);
}

TEST_CASE("boundary linearization matches central differences of G") {
  const double h = 1e-5;
  const auto central = [h](auto&& f) { return (8.0 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12.0 * h); };
  for (std::uint64_t seed = 300; seed < 340; ++seed) {
    const auto c = random_case(seed, false);
    const auto ops = linearize_G(bg17(), c.wall, c.up, c.s);
    const double fd_u = central([&](double e) {
      return eval_G(bg17(), make_sample(c.wall, c.up, c.s.t, c.s.y2, c.s.y3, c.s.x[0] + e, c.s.du));
    });
    CHECK(std::abs(ops[0] - fd_u) < 1e-6 * std::max(1.0, std::abs(fd_u)));
    for (int k = 0; k < 4; ++k) {
      const double fd = central([&](double e) {
        auto sk = c.s;
        sk.du[k] += e;
        return eval_G(bg17(), sk);
      });
      CHECK(std::abs(ops[1 + k] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("upstream field: uniform case and derivative checks") {
  const UpstreamField flat(2.0, WallSpec::flat());
  const auto j = flat.jet(0.3, {0.1, 0.2, 0.3});
  CHECK(j.d1(0) == 0.0);
  CHECK(j.d1(1) == 2.0);
  CHECK(j.d1(2) == 0.0);
  CHECK(j.d1(3) == 0.0);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) CHECK(j.d2(a, b) == 0.0);
  }
  CHECK(flat.decay_weight_bound(1.0, 1.0) == 0.0);

  std::mt19937_64 rng(5);
  const WallSpec wall = WallSpec::random(0.2, 9);
  const UpstreamField up(2.0, wall, perturbed_upstream(rng));
  const std::array<double, 4> z{0.15, wall.params().center_x1, 0.1, wall(wall.params().center_x1, 0.1) + 0.05};
  const auto jz = up.jet(z[0], {z[1], z[2], z[3]});
  const double h = 1e-5;
  for (int k = 0; k < 4; ++k) {
    auto zp = z, zm = z;
    zp[k] += h;
    zm[k] -= h;
    const double fp = up.jet(zp[0], {zp[1], zp[2], zp[3]}).value();
    const double fm = up.jet(zm[0], {zm[1], zm[2], zm[3]}).value();
    CHECK(std::abs((fp - fm) / (2 * h) - jz.d1(k)) < 1e-8);
    const double gp = up.jet(zp[0], {zp[1], zp[2], zp[3]}).d1(1);
    const double gm = up.jet(zm[0], {zm[1], zm[2], zm[3]}).d1(1);
    CHECK(std::abs((gp - gm) / (2 * h) - jz.d2(1, k)) < 1e-7);
  }
  CHECK(up.decay_weight_bound(0.0, 0.3) > 0.0);
}

TEST_CASE("degenerate samples are refused") {
  auto s = background_sample(bg17());
  s.du[1] = 1e-10;
  CHECK_THROWS_AS(eval_interior(bg17(), s), DegenerateSample);
  s = background_sample(bg17());
  s.du[0] = 50.0;
  CHECK_THROWS_AS(eval_interior(bg17(), s), DegenerateSample);
}
