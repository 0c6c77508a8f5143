#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dihedral_shock/wall_geometry.hpp"

using namespace dshock;

namespace {

std::array<double, 3> sample_point(const WallSpec& wall, std::mt19937_64& rng, double y3_max) {
  const auto box = wall.support_box();
  std::uniform_real_distribution<double> ux(box[0], box[1]);
  std::uniform_real_distribution<double> uy(-box[2], box[2]);
  std::uniform_real_distribution<double> uz(0.0, y3_max);
  const double x1 = ux(rng), x2 = uy(rng);
  return {x1, x2, wall(x1, x2) + uz(rng)};
}

}  // namespace

TEST_CASE("flat wall gives vanishing weight and identity maps") {
  const WallSpec wall = WallSpec::flat();
  const auto p = weight_p(wall, {0.3, 0.1, 0.2});
  CHECK(p.p == 0.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(p.grad[i] == 0.0);
    for (int j = 0; j < 3; ++j) CHECK(p.hess[i][j] == 0.0);
  }
  const auto k = kappa_jet(wall, 0.4, 0.1, 0.2);
  CHECK(k.value == 0.4);
  CHECK(k.d_ubar == 1.0);
  CHECK(k.d_y2 == 0.0);
  CHECK(k.d_y3 == 0.0);
  CHECK(k.d_ubar_ubar == 0.0);
  CHECK(k.d_y3y3 == 0.0);
}

TEST_CASE("background forward map") {
  const double dq = 0.7;
  const auto y = forward_map(WallSpec::flat(), 0.5, {0.2, 0.3, 0.4}, dq * 0.2);
  CHECK(y.y0 == 0.5);
  CHECK(y.y1 == doctest::Approx(0.14));
  CHECK(y.y2 == 0.3);
  CHECK(y.y3 == 0.4);
}

TEST_CASE("walls are even in x2 and compactly supported") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto wall = WallSpec::random(1e-2, seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int k = 0; k < 20; ++k) {
      const double x1 = u(rng), x2 = u(rng);
      CHECK(wall(x1, x2) == doctest::Approx(wall(x1, -x2)).epsilon(1e-15));
      CHECK(std::abs(wall(x1, x2)) <= wall.amplitude() * (1 + 1e-12));
      const auto l = wall.local(x1, 0.0);
      CHECK(l.w.d1(1) == doctest::Approx(0.0).scale(1e-14));
      const auto p = weight_p(wall, {x1, 0.0, 0.3});
      CHECK(std::abs(p.p) < 1e-16);
      if (!wall.in_support(x1, x2)) CHECK(wall(x1, x2) == 0.0);
    }
  }
}

TEST_CASE("wall and weight derivatives match central differences") {
  const double h = 1e-4;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto wall = WallSpec::random(1e-2, seed);
    std::mt19937_64 rng(seed + 100);
    for (int k = 0; k < 10; ++k) {
      const auto x = sample_point(wall, rng, 0.5);
      const auto l = wall.local(x[0], x[1]);
      const double fd1 = (wall(x[0] + h, x[1]) - wall(x[0] - h, x[1])) / (2 * h);
      const double fd2 = (wall(x[0], x[1] + h) - wall(x[0], x[1] - h)) / (2 * h);
      CHECK(l.w.d1(0) == doctest::Approx(fd1).scale(1).epsilon(1e-7));
      CHECK(l.w.d1(1) == doctest::Approx(fd2).scale(1).epsilon(1e-7));
      // third derivative against fourth-order differences of the second
      auto w11 = [&](double s) { return wall.local(x[0] + s, x[1]).w.d2(0, 0); };
      const double hh = 2e-4;
      const double fd3 = (8 * (w11(hh) - w11(-hh)) - (w11(2 * hh) - w11(-2 * hh))) / (12 * hh);
      CHECK(std::abs(l.w.derivative({3, 0}) - fd3) <= 1e-6 * (1.0 + std::abs(fd3)));

      const auto p = weight_p(wall, x);
      for (int i = 0; i < 3; ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double pp = weight_p(wall, xp).p, pm = weight_p(wall, xm).p;
        CHECK(std::abs(p.grad[i] - (pp - pm) / (2 * h)) <= 1e-6);
        auto grad_at = [&](double s, int j) {
          auto xs = x;
          xs[i] += s;
          return weight_p(wall, xs).grad[j];
        };
        const double hh = 2e-4;
        for (int j = 0; j < 3; ++j) {
          const double fd = (8 * (grad_at(hh, j) - grad_at(-hh, j)) - (grad_at(2 * hh, j) - grad_at(-2 * hh, j))) /
                            (12 * hh);
          CHECK(std::abs(p.hess[i][j] - fd) <= 1e-6 * (1.0 + std::abs(fd)));
        }
      }
    }
  }
}

TEST_CASE("p conditions hold on the wall") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto wall = WallSpec::random(1e-2, seed);
    std::mt19937_64 rng(seed);
    const auto x = sample_point(wall, rng, 0.0);
    const auto l = wall.local(x[0], x[1]);
    const auto p = weight_p(wall, x);
    const double w1 = l.w.d1(0), w2 = l.w.d1(1);
    const double c1 = w1 * p.grad[0] + w2 * (p.grad[1] + 1.0) - p.grad[2];
    const double c2 = p.grad[2] * (1.0 + w2 * w2) - p.grad[0] * w1 - w2;
    CHECK(std::abs(c1) <= 1e-12);
    CHECK(std::abs(c2) <= 1e-12);
  }
}

TEST_CASE("dphi formulas invert the hodograph Jacobian") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> s(-0.1, 0.1);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto wall = WallSpec::random(1e-2, seed);
    const auto x = sample_point(wall, rng, 0.4);
    const auto l = wall.local(x[0], x[1]);
    const auto p = weight_p(wall, x);
    MapDerivs<double> g{l.w.d1(0), l.w.d1(1), p.grad[0], p.grad[1], p.grad[2]};
    const std::array<double, 4> du{s(rng), 1.0 / 0.7 + s(rng), s(rng), s(rng)};
    const auto dphi = dphi_from_du(g, du);
    const Eigen::Matrix4d m = hodograph_jacobian(g, dphi);
    // numeric inverse of the Jacobian: row 1 of M^{-1} holds du
    const Eigen::Matrix4d minv = m.inverse();
    for (int j = 0; j < 4; ++j) CHECK(minv(1, j) == doctest::Approx(du[j]).epsilon(1e-12).scale(1));
    CHECK((m * minv - Eigen::Matrix4d::Identity()).norm() < 1e-10);
    const Eigen::Matrix4d jm = matrix_J(g, du);
    CHECK((jm - du[1] * m.transpose()).norm() < 1e-14);
  }
}

TEST_CASE("printed dphi and J agree with the exact ones on the wall only") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> s(-0.1, 0.1);
  double interior_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto wall = WallSpec::random(1e-2, seed);
    const std::array<double, 4> du{s(rng), 1.4 + s(rng), 0.3 + s(rng), s(rng)};
    for (double lift : {0.0, 0.3}) {
      auto x = sample_point(wall, rng, 0.0);
      x[2] += lift;
      const auto l = wall.local(x[0], x[1]);
      const auto p = weight_p(wall, x);
      MapDerivs<double> g{l.w.d1(0), l.w.d1(1), p.grad[0], p.grad[1], p.grad[2]};
      const auto a = dphi_from_du(g, du);
      const auto b = dphi_from_du_display(g, du);
      const double gap = (matrix_J(g, du) - matrix_J_display(g, du)).norm();
      if (lift == 0.0) {
        for (int i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13).scale(1));
        CHECK(gap < 1e-13);
      } else {
        interior_gap = std::max(interior_gap, gap);
      }
    }
  }
  CHECK(interior_gap > 1e-8);
}

TEST_CASE("degenerate map raises") {
  MapDerivs<double> g{};
  CHECK_THROWS_AS(dphi_from_du(g, {0.1, 1e-12, 0.0, 0.0}), DegenerateMap);
}

TEST_CASE("forward map composed with inversion is the identity") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 1000; ++k) {
    const auto wall = WallSpec::random(1e-2, 1 + k % 37);
    const auto x = sample_point(wall, rng, 0.5);
    const double phi = 0.7 * x[0];
    const auto y = forward_map(wall, 0.1, x, phi);
    const auto back = inverse_map(wall, y, x[0]);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(back[i] - x[i]) < 1e-9);
    CHECK(std::abs(forward_map(wall, 0.1, {x[0], x[1], wall(x[0], x[1])}, phi).y3) < 1e-15);
  }
}

TEST_CASE("kappa first derivatives match differences of the implicit solve") {
  const double h = 1e-5;
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto wall = WallSpec::random(1e-2, seed);
    const auto box = wall.support_box();
    std::uniform_real_distribution<double> ub(box[0], box[1]), y2d(-box[2], box[2]), y3d(0.0, 0.4);
    const double u = ub(rng), y2 = y2d(rng), y3 = y3d(rng);
    const auto k = kappa_jet(wall, u, y2, y3);
    // defining relations hold at the solution
    const auto l = wall.local(k.value, k.x2);
    CHECK(std::abs(k.value + y3 * l.n.value() - u) < 1e-12);
    CHECK(std::abs(k.x2 + y3 * l.m.value() - y2) < 1e-12);
    const double fu = (kappa_jet(wall, u + h, y2, y3).value - kappa_jet(wall, u - h, y2, y3).value) / (2 * h);
    const double f2 = (kappa_jet(wall, u, y2 + h, y3).value - kappa_jet(wall, u, y2 - h, y3).value) / (2 * h);
    const double f3 = (kappa_jet(wall, u, y2, y3 + h).value - kappa_jet(wall, u, y2, y3 - h).value) / (2 * h);
    CHECK(std::abs(k.d_ubar - fu) < 1e-6);
    CHECK(std::abs(k.d_y2 - f2) < 1e-6);
    CHECK(std::abs(k.d_y3 - f3) < 1e-6);
    // second derivatives as differences of first derivatives
    const auto kp = kappa_jet(wall, u, y2 + h, y3), km = kappa_jet(wall, u, y2 - h, y3);
    CHECK(std::abs(k.d_ubar_y2 - (kp.d_ubar - km.d_ubar) / (2 * h)) < 1e-6);
    CHECK(std::abs(k.d_y2y2 - (kp.d_y2 - km.d_y2) / (2 * h)) < 1e-6);
    const auto k3p = kappa_jet(wall, u, y2, y3 + h), k3m = kappa_jet(wall, u, y2, y3 - h);
    CHECK(std::abs(k.d_ubar_y3 - (k3p.d_ubar - k3m.d_ubar) / (2 * h)) < 1e-6);
    CHECK(std::abs(k.d_y3y3 - (k3p.d_y3 - k3m.d_y3) / (2 * h)) < 1e-6);
    const auto kup = kappa_jet(wall, u + h, y2, y3), kum = kappa_jet(wall, u - h, y2, y3);
    CHECK(std::abs(k.d_ubar_ubar - (kup.d_ubar - kum.d_ubar) / (2 * h)) < 1e-6);
  }
}

TEST_CASE("kappa on the wall: unit slope, no y2 dependence, -N in y3") {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto wall = WallSpec::random(1e-2, seed);
    const auto box = wall.support_box();
    std::uniform_real_distribution<double> ub(box[0], box[1]), y2d(-box[2], box[2]);
    const double u = ub(rng), y2 = y2d(rng);
    const auto k = kappa_jet(wall, u, y2, 0.0);
    CHECK(k.d_ubar == 1.0);
    CHECK(k.d_y2 == 0.0);
    CHECK(k.d_y3 == doctest::Approx(-wall.local(u, y2).n.value()).epsilon(1e-14).scale(1));
    const auto disp = kappa_first_display(wall, u, y2, 0.0);
    CHECK(disp[0] == k.d_ubar);
    CHECK(disp[1] == doctest::Approx(k.d_y2).scale(1));
    CHECK(disp[2] == doctest::Approx(k.d_y3).epsilon(1e-14).scale(1));
    // positivity of the slope away from the wall
    CHECK(kappa_jet(wall, u, y2, 0.3).d_ubar > 0.0);
  }
}
