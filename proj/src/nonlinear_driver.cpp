#include "dihedral_shock/nonlinear_driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <utility>

#include "dihedral_shock/errors.hpp"
#include "dihedral_shock/stability_analysis.hpp"

namespace dshock {

namespace {

constexpr std::array<std::pair<int, int>, 10> kPairs{
    {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 3}}};

std::string fmt_num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string where(double t, const std::array<double, 3>& y) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), " at t = %.6g, y = (%.6g, %.6g, %.6g)", t, y[0], y[1], y[2]);
  return buf;
}

int axis_count(const Grid& g, int axis) { return axis == 0 ? g.n1() : axis == 1 ? g.n2() : g.n3(); }

// Index of node (i, j, k) shifted by s along axis; k is reflected through 0.
std::size_t shifted(const Grid& g, int i, int j, int k, int axis, int s) {
  if (axis == 0) i += s;
  if (axis == 1) j += s;
  if (axis == 2) k = std::abs(k + s);
  return g.dih(i, j, k);
}

// First derivative of an even-in-y3 field along one axis.
std::vector<double> diff1(const Grid& g, const std::vector<double>& f, int axis) {
  std::vector<double> out(f.size(), 0.0);
  const double h = g.h(axis);
  const int n = axis_count(g, axis);
  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= g.n3(); ++k) {
        const int c = axis == 0 ? i : axis == 1 ? j : k;
        auto at = [&](int s) { return f[shifted(g, i, j, k, axis, s)]; };
        double d;
        if (c == n) {
          d = (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
        } else if (c == 0 && axis != 2) {
          d = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        } else {
          d = (at(1) - at(-1)) / (2.0 * h);
        }
        out[g.dih(i, j, k)] = d;
      }
    }
  }
  return out;
}

std::vector<double> diff2(const Grid& g, const std::vector<double>& f, int axis) {
  std::vector<double> out(f.size(), 0.0);
  const double h2 = g.h(axis) * g.h(axis);
  const int n = axis_count(g, axis);
  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= g.n3(); ++k) {
        const int c = axis == 0 ? i : axis == 1 ? j : k;
        auto at = [&](int s) { return f[shifted(g, i, j, k, axis, s)]; };
        double d;
        if (c == n) {
          d = (2.0 * at(0) - 5.0 * at(-1) + 4.0 * at(-2) - at(-3)) / h2;
        } else if (c == 0 && axis != 2) {
          d = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2;
        } else {
          d = ((at(1) + at(-1)) - 2.0 * at(0)) / h2;
        }
        out[g.dih(i, j, k)] = d;
      }
    }
  }
  return out;
}

WallSpec scaled_wall(const PerturbationSpec& p) {
  WallParams w = p.wall;
  w.amplitude = p.epsilon * p.wall_scale;
  if (w.amplitude == 0.0) w.kind = WallKind::flat;
  return WallSpec(w);
}

UpstreamParams scaled_upstream(const PerturbationSpec& p) {
  UpstreamParams u = p.upstream;
  u.epsilon = p.epsilon * p.upstream_scale;
  return u;
}

double node_value(const std::vector<std::vector<double>>& levels, std::size_t n, std::size_t node) {
  return levels.empty() ? 0.0 : levels[n][node];
}

// Difference norm at s = 1 with the e^{-eta t} weight over the half-step levels.
double weighted_h1(const Grid& g, double dt, double eta, const Iterate& a, const Iterate* b) {
  const double hv = g.h(0) * g.h(1) * g.h(2);
  const std::size_t levels = a.w.size();
  double total = 0.0;
  std::vector<double> w(g.dihedral_size()), v(g.dihedral_size());
  for (std::size_t n = 0; n < levels; ++n) {
    for (std::size_t p = 0; p < w.size(); ++p) {
      w[p] = a.w[n][p] - (b && !b->w.empty() ? b->w[n][p] : 0.0);
      v[p] = a.v[n][p] - (b && !b->v.empty() ? b->v[n][p] : 0.0);
    }
    std::array<std::vector<double>, 3> d;
    for (int ax = 0; ax < 3; ++ax) d[ax] = diff1(g, w, ax);
    double s = 0.0;
    for (std::size_t p = 0; p < w.size(); ++p) {
      s += w[p] * w[p] + v[p] * v[p] + d[0][p] * d[0][p] + d[1][p] * d[1][p] + d[2][p] * d[2][p];
    }
    const double t = 0.5 * dt * n;
    const double weight = (n == 0 || n + 1 == levels) ? 0.25 * dt : 0.5 * dt;
    total += weight * std::exp(-2.0 * eta * t) * hv * s;
  }
  return std::sqrt(total);
}

double slice_data_norm(const Grid& g, double dt, const std::vector<CoefficientSlice>& slices) {
  const double hv = g.h(0) * g.h(1) * g.h(2);
  const double hf = g.h(1) * g.h(2);
  double s = 0.0;
  for (const auto& sl : slices) {
    for (double x : sl.interior[kF]) s += 0.5 * dt * hv * x * x;
    for (double x : sl.boundary[kG]) s += 0.5 * dt * hf * x * x;
  }
  return std::sqrt(s);
}

}  // namespace

int hessian_slot(int i, int j) {
  if (i > j) std::swap(i, j);
  static const int slot[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return slot[i - 1][j - 1];
}

FieldDerivatives field_derivatives(const Grid& g, const std::vector<double>& f, bool second) {
  FieldDerivatives d;
  for (int a = 0; a < 3; ++a) d.d1[a] = diff1(g, f, a);
  if (second) {
    d.d2[hessian_slot(1, 1)] = diff2(g, f, 0);
    d.d2[hessian_slot(2, 2)] = diff2(g, f, 1);
    d.d2[hessian_slot(3, 3)] = diff2(g, f, 2);
    d.d2[hessian_slot(1, 2)] = diff1(g, d.d1[1], 0);
    d.d2[hessian_slot(1, 3)] = diff1(g, d.d1[0], 2);
    d.d2[hessian_slot(2, 3)] = diff1(g, d.d1[1], 2);
  }
  return d;
}

double assemble_F(const CoefficientBundle& b, const KappaJet& k, const std::array<double, 4>& dubar,
                  const std::array<double, 4>& du) {
  const double kuy[4] = {0.0, 0.0, k.d_ubar_y2, k.d_ubar_y3};
  const double kyy[4][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, k.d_y2y2, k.d_y2y3}, {0, 0, k.d_y2y3, k.d_y3y3}};
  double chain = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double K = k.d_ubar_ubar * dubar[i] * dubar[j] + kuy[j] * dubar[i] + kuy[i] * dubar[j] + kyy[i][j];
      chain += b.a_tilde(i, j) * K;
    }
  }
  return b.f_rhs - (b.a2 * du[2] + b.a3 * du[3]) - chain;
}

NodeState evaluate_node(const ShockBackground& bg, const WallSpec& wall, const UpstreamField& up, double t,
                        const std::array<double, 3>& y, double ubar, const std::array<double, 4>& dubar) {
  NodeState s;
  try {
    s.kappa = kappa_jet(wall, ubar, y[1], y[2]);
  } catch (const ImplicitSolveFailed& e) {
    throw RegimeExit(std::string("kappa: ") + e.what() + where(t, y));
  }
  const auto& k = s.kappa;
  s.u = k.value;
  s.dubar = dubar;
  s.du = {k.d_ubar * dubar[0], k.d_ubar * dubar[1], k.d_ubar * dubar[2] + k.d_y2, k.d_ubar * dubar[3] + k.d_y3};
  try {
    s.sample = make_sample(wall, up, t, y[1], y[2], s.u, s.du);
    s.bundle = eval_interior(bg, s.sample);
  } catch (const DegenerateSample& e) {
    throw RegimeExit(std::string("state: ") + e.what() + where(t, y));
  } catch (const DegenerateMap& e) {
    throw RegimeExit(std::string("map: ") + e.what() + where(t, y));
  }
  s.r = k.d_ubar * s.bundle.a_tilde;
  s.F = assemble_F(s.bundle, k, dubar, s.du);
  return s;
}

double evaluate_G(const ShockBackground& bg, const WallSpec& wall, const UpstreamField& up, double t, double y2,
                  double y3, double ubar, const std::array<double, 4>& dubar) {
  const auto s = evaluate_node(bg, wall, up, t, {0.0, y2, y3}, ubar, dubar);
  return eval_G(bg, s.sample);
}

double TaylorSeed::psi(double t, std::size_t node) const {
  return ubar[0][node] + t * ubar[1][node] + 0.5 * t * t * ubar[2][node];
}

double TaylorSeed::psi_t(double t, std::size_t node) const { return ubar[1][node] + t * ubar[2][node]; }

ScalarField wall_adapted_background(const ShockBackground& bg, const WallSpec& wall) {
  const double slope = 1.0 / bg.jump();
  return [wall, slope](const std::array<double, 3>& y) { return kappa_jet(wall, slope * y[0], y[1], y[2]).value; };
}

TaylorSeed build_seed(const ShockBackground& bg, const WallSpec& wall, const UpstreamField& up, const Grid& g,
                      const ScalarField& u0, const ScalarField& u1, const SeedOptions& opt) {
  if (opt.k_max != 2) throw ConfigError("seed.k_max must be 2");
  TaylorSeed seed;
  seed.k_max = opt.k_max;
  const std::size_t N = g.dihedral_size();
  for (auto& f : seed.ubar) f.assign(N, 0.0);

  auto ubar_at = [&](const std::array<double, 3>& y, int order) {
    const double u = u0(y);
    const double x2 = inverse_map(wall, HodographPoint{0.0, 0.0, y[1], y[2]}, u)[1];
    const auto l = wall.local(u, x2);
    if (order == 0) return u + y[2] * l.n.value();
    const double dx2du = -y[2] * l.m.d1(0) / (1.0 + y[2] * l.m.d1(1));
    const double dNdu = l.n.d1(0) + l.n.d1(1) * dx2du;
    return u1(y) * (1.0 + y[2] * dNdu);
  };

  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= g.n3(); ++k) {
        const std::array<double, 3> y{g.y1(i), g.y2(j), g.y3(k)};
        seed.ubar[0][g.dih(i, j, k)] = ubar_at(y, 0);
        seed.ubar[1][g.dih(i, j, k)] = ubar_at(y, 1);
      }
    }
  }

  // Neumann traces of ubar_0 and ubar_1 on y3 = 0 from off-grid samples.
  const double delta = 1e-3;
  const double c5[5] = {-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25};
  double slope_scale = 1.0 / bg.jump();
  for (int order = 0; order < 2; ++order) {
    for (int i = 0; i <= g.n1(); ++i) {
      for (int j = 0; j <= g.n2(); ++j) {
        double d3 = 0.0;
        for (int s = 0; s < 5; ++s) d3 += c5[s] * ubar_at({g.y1(i), g.y2(j), s * delta}, order);
        d3 /= delta;
        if (std::abs(d3) > opt.compatibility_tolerance * slope_scale) {
          throw IncompatibleData("d3 ubar_" + std::to_string(order) + " = " + fmt_num(d3) +
                                 " on y3 = 0" + where(0.0, {g.y1(i), g.y2(j), 0.0}));
        }
      }
    }
  }

  seed.d[0] = field_derivatives(g, seed.ubar[0]);
  seed.d[1] = field_derivatives(g, seed.ubar[1], false);

  double min_principal = std::numeric_limits<double>::infinity();
  const double G_scale = bg.rho_plus * bg.jump() * bg.jump();
  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= g.n3(); ++k) {
        const std::size_t p = g.dih(i, j, k);
        const std::array<double, 3> y{g.y1(i), g.y2(j), g.y3(k)};
        const std::array<double, 4> dub{seed.ubar[1][p], seed.d[0].d1[0][p], seed.d[0].d1[1][p],
                                        seed.d[0].d1[2][p]};
        const auto ns = evaluate_node(bg, wall, up, 0.0, y, seed.ubar[0][p], dub);
        if (i == 0) {
          const double G = eval_G(bg, ns.sample);
          if (std::abs(G) > opt.compatibility_tolerance * G_scale) {
            throw IncompatibleData("G = " + fmt_num(G) + " on y1 = 0" + where(0.0, y));
          }
        }
        double rest = 0.0;
        for (int a = 1; a < 4; ++a) {
          for (int b = 1; b < 4; ++b) rest += ns.r(a, b) * seed.d[0].d2[hessian_slot(a, b)][p];
          rest += 2.0 * ns.r(0, a) * seed.d[1].d1[a - 1][p];
        }
        const double r00 = ns.r(0, 0);
        min_principal = std::min(min_principal, r00);
        if (!(r00 > 1e-8 * ns.r.cwiseAbs().maxCoeff())) {
          throw SeedDegenerate("kappa_ubar a_tilde_00 = " + fmt_num(r00) + where(0.0, y));
        }
        seed.ubar[2][p] = (ns.F - rest) / r00;
      }
    }
  }
  seed.min_principal = min_principal;
  seed.d[2] = field_derivatives(g, seed.ubar[2]);
  return seed;
}

FrozenProblem::FrozenProblem(double dt, std::vector<CoefficientSlice> slices) : dt_(dt), slices_(std::move(slices)) {}

std::size_t FrozenProblem::level(double t) const {
  const long long n = std::llround(2.0 * t / dt_);
  if (n < 0 || static_cast<std::size_t>(n) >= slices_.size() || std::abs(n * 0.5 * dt_ - t) > 1e-9 * dt_) {
    throw ConfigError("no frozen coefficient level at t = " + fmt_num(t));
  }
  return static_cast<std::size_t>(n);
}

InteriorCoefficients FrozenProblem::interior(double, const std::array<double, 3>&) const {
  throw ConfigError("frozen coefficients exist only on the grid");
}

BoundaryCoefficients FrozenProblem::boundary(double, double, double) const {
  throw ConfigError("frozen coefficients exist only on the grid");
}

void FrozenProblem::fill(double t, const Grid& grid, CoefficientSlice& slice) const {
  slice = slices_[level(t)];
  if (slice.interior[0].size() != grid.dihedral_size()) throw ConfigError("frozen slice does not match the grid");
  slice.t = t;
}

std::vector<CoefficientSlice> assemble_sweep(const NonlinearContext& ctx, const Iterate& it, int n_levels) {
  const Grid g(ctx.spec);
  const double dt = ctx.spec.dt;
  const auto& seed = ctx.seed;
  const std::size_t N = g.dihedral_size();
  std::vector<CoefficientSlice> out(n_levels);

  std::vector<double> kappa_face(g.face_dihedral_size());
  for (int j = 0; j <= g.n2(); ++j) {
    for (int k = 0; k <= g.n3(); ++k) {
      kappa_face[g.face_dih(j, k)] = kappa_jet(ctx.wall, 0.0, g.y2(j), g.y3(k)).d_ubar;
    }
  }

  std::vector<double> ubar(N), wt(N), vt(N);
  for (int n = 0; n < n_levels; ++n) {
    const double t = 0.5 * dt * n;
    for (std::size_t p = 0; p < N; ++p) {
      wt[p] = node_value(it.w, n, p);
      vt[p] = node_value(it.v, n, p);
      ubar[p] = wt[p] + seed.psi(t, p);
    }
    const auto du = field_derivatives(g, ubar, false);
    const auto dw = field_derivatives(g, wt, false);
    auto& sl = out[n];
    sl.resize(g, false);
    sl.t = t;
    for (int i = 0; i <= g.n1(); ++i) {
      for (int j = 0; j <= g.n2(); ++j) {
        for (int k = 0; k <= g.n3(); ++k) {
          const std::size_t p = g.dih(i, j, k);
          const std::array<double, 3> y{g.y1(i), g.y2(j), g.y3(k)};
          const std::array<double, 4> dub{vt[p] + seed.psi_t(t, p), du.d1[0][p], du.d1[1][p], du.d1[2][p]};
          const auto ns = evaluate_node(ctx.bg, ctx.wall, ctx.up, t, y, ubar[p], dub);

          double psi_term = ns.r(0, 0) * seed.ubar[2][p];
          for (int a = 1; a < 4; ++a) {
            psi_term += 2.0 * ns.r(0, a) * (seed.d[1].d1[a - 1][p] + t * seed.d[2].d1[a - 1][p]);
            for (int b = 1; b < 4; ++b) {
              const int h = hessian_slot(a, b);
              psi_term += ns.r(a, b) * (seed.d[0].d2[h][p] + 0.5 * t * t * seed.d[2].d2[h][p]);
            }
          }
          for (int q = 0; q < 10; ++q) sl.interior[q][p] = ns.r(kPairs[q].first, kPairs[q].second);
          sl.interior[kF][p] = ns.F - psi_term;

          if (i == 0) {
            const std::size_t f = g.face_dih(j, k);
            const double kb = kappa_face[f];
            std::array<double, 5> b;
            for (int a = 0; a < 5; ++a) b[a] = kb * ctx.b_background[a];
            const double Bw = b[0] * wt[p] + b[1] * vt[p] + b[2] * dw.d1[0][p] + b[3] * dw.d1[1][p] +
                              b[4] * dw.d1[2][p];
            double G;
            try {
              G = eval_G(ctx.bg, ns.sample);
            } catch (const DegenerateSample& e) {
              throw RegimeExit(std::string("shock state: ") + e.what() + where(t, y));
            }
            for (int a = 0; a < 5; ++a) sl.boundary[a][f] = b[a];
            sl.boundary[kG][f] = Bw - G;
          }
        }
      }
    }
  }
  return out;
}

namespace {

SolveOptions sweep_options(const NonlinearContext& ctx) {
  SolveOptions opt;
  opt.store_history = true;
  opt.record_ledger = true;
  opt.boundary_b1_reference = std::abs(ctx.b_background[2]);
  return opt;
}

}  // namespace

SweepResult picard_sweep(const NonlinearContext& ctx, const Iterate& current, int n_levels) {
  FrozenProblem problem(ctx.spec.dt, assemble_sweep(ctx, current, n_levels));
  SweepResult r;
  r.lp = solve_lp(problem, ctx.spec, sweep_options(ctx));
  r.next.w = std::move(r.lp.solution.w_history);
  r.next.v = std::move(r.lp.solution.v_history);
  return r;
}

ResidualNorms discrete_residual(const Grid& g, double dt, const Iterate& it, const std::vector<CoefficientSlice>& used,
                                const std::vector<CoefficientSlice>& produced) {
  ResidualNorms res;
  const double hv = g.h(0) * g.h(1) * g.h(2);
  const double hf = g.h(1) * g.h(2);
  for (std::size_t n = 0; n < produced.size(); ++n) {
    const auto dw = field_derivatives(g, it.w[n]);
    const auto dv = field_derivatives(g, it.v[n], false);
    const auto& U = used[n];
    const auto& P = produced[n];
    for (int i = 1; i < g.n1(); ++i) {
      for (int j = 1; j < g.n2(); ++j) {
        for (int k = 0; k < g.n3(); ++k) {
          const std::size_t p = g.dih(i, j, k);
          auto spatial = [&](const CoefficientSlice& s) {
            double acc = s.interior[kF][p];
            for (int q = 1; q < 10; ++q) {
              const int a = kPairs[q].first, b = kPairs[q].second;
              const double r = s.interior[q][p];
              if (a == 0) {
                acc -= 2.0 * r * dv.d1[b - 1][p];
              } else {
                acc -= (a == b ? 1.0 : 2.0) * r * dw.d2[hessian_slot(a, b)][p];
              }
            }
            return acc;
          };
          const double d = spatial(P) - P.interior[kR00][p] / U.interior[kR00][p] * spatial(U);
          res.interior += 0.5 * dt * hv * d * d;
        }
      }
    }
    for (int j = 1; j < g.n2(); ++j) {
      for (int k = 0; k < g.n3(); ++k) {
        const std::size_t f = g.face_dih(j, k);
        const double d = P.boundary[kG][f] - U.boundary[kG][f];
        res.boundary += 0.5 * dt * hf * d * d;
      }
    }
  }
  res.interior = std::sqrt(res.interior);
  res.boundary = std::sqrt(res.boundary);
  return res;
}

NonlinearConfig::NonlinearConfig() {
  grid.extent = {1.2, 0.8, 0.8};
  grid.n = {32, 8, 32};
  grid.t_final = 0.2;
  grid.cfl_safety = 0.5;
  perturbation.wall.kind = WallKind::polynomial;
  perturbation.wall.center_x1 = 0.8;
  perturbation.wall.radius_x1 = 0.6;
  perturbation.wall.radius_x2 = 0.6;
  perturbation.upstream.center_x1 = 0.0;
  perturbation.upstream.radius_x1 = 0.35;
  perturbation.upstream.radius_x2 = 1.5;
  perturbation.upstream.ramp_time = 0.2;
  perturbation.upstream.wall_layer = 0.3;
}

IterationReport run_stability_experiment(const ShockBackground& bg, const NonlinearConfig& cfg) {
  IterationReport rep;
  rep.epsilon = cfg.perturbation.epsilon;
  rep.stability = check_stability_condition(bg);
  if (!rep.stability.entropy || !rep.stability.transonic || !rep.stability.stable) {
    throw InadmissibleBackground("background refused: stability value " + fmt_num(rep.stability.value) +
                                 ", stable = " + (rep.stability.stable ? "true" : "false") +
                                 ", entropy = " + (rep.stability.entropy ? "true" : "false") +
                                 ", transonic = " + (rep.stability.transonic ? "true" : "false"));
  }
  if (cfg.m_max < 1) throw ConfigError("nonlinear.m_max must be positive");
  if (!(cfg.tol_fix > 0.0)) throw ConfigError("nonlinear.tol_fix must be positive");

  NonlinearContext ctx;
  ctx.bg = bg;
  ctx.wall = scaled_wall(cfg.perturbation);
  ctx.up = UpstreamField(bg.q_minus, ctx.wall, scaled_upstream(cfg.perturbation));
  ctx.b_background = background_coefficients(bg).b;
  ctx.spec = cfg.grid;
  const Grid g(ctx.spec);

  // Fixed step from the background speed so that the half-step levels agree across sweeps.
  {
    CoefficientSlice bgs;
    bgs.resize(g, false);
    const auto c = background_coefficients(bg);
    for (int q = 0; q < 10; ++q) {
      std::fill(bgs.interior[q].begin(), bgs.interior[q].end(), c.r(kPairs[q].first, kPairs[q].second));
    }
    const double v = max_characteristic_speed(extend_problem(g, bgs));
    const double target = cfg.cfl_target * g.h_min() / v;
    rep.n_steps = static_cast<int>(std::ceil(cfg.grid.t_final / target - 1e-12));
    ctx.spec.dt = cfg.grid.t_final / rep.n_steps;
    rep.dt = ctx.spec.dt;
  }
  const int n_levels = 2 * rep.n_steps + 1;

  ctx.seed = build_seed(bg, ctx.wall, ctx.up, g, wall_adapted_background(bg, ctx.wall),
                        [](const std::array<double, 3>&) { return 0.0; });

  Iterate current;
  std::vector<CoefficientSlice> slices = assemble_sweep(ctx, current, n_levels);
  double prev_d = 0.0;
  int above_one = 0;
  for (int m = 0; m < cfg.m_max; ++m) {
    FrozenProblem problem(ctx.spec.dt, slices);
    LpResult lp = solve_lp(problem, ctx.spec, sweep_options(ctx));
    Iterate next;
    next.w = std::move(lp.solution.w_history);
    next.v = std::move(lp.solution.v_history);

    SweepRecord rec;
    rec.m = m;
    rec.high_norm = estimate_at(lp.ledger, cfg.eta, 2).lhs;
    rec.within_budget = rec.high_norm <= cfg.budget;
    const double norm_next = weighted_h1(g, ctx.spec.dt, cfg.eta, next, nullptr);
    rec.difference_abs = weighted_h1(g, ctx.spec.dt, cfg.eta, next, &current);
    rec.difference = (norm_next <= cfg.absolute_floor || rec.difference_abs <= cfg.absolute_floor)
                         ? 0.0
                         : rec.difference_abs / norm_next;
    if (m > 0) {
      rec.ratio = prev_d > 0.0 ? rec.difference_abs / prev_d : 0.0;
      rep.ratios.push_back(rec.ratio);
      rep.sigma0 = std::max(rep.sigma0, rec.ratio);
      above_one = rec.ratio > 1.0 ? above_one + 1 : 0;
    }
    prev_d = rec.difference_abs;

    std::vector<CoefficientSlice> produced = assemble_sweep(ctx, next, n_levels);
    rec.residual = discrete_residual(g, ctx.spec.dt, next, slices, produced);
    rep.sweeps.push_back(rec);
    rep.sweeps_used = m + 1;
    current = std::move(next);
    slices = std::move(produced);

    if (above_one >= cfg.no_contraction_limit) {
      throw NoContraction("contraction ratio above 1 for " + std::to_string(above_one) + " consecutive sweeps, last " +
                          fmt_num(rec.ratio));
    }
    if (rec.difference < cfg.tol_fix) {
      rep.converged = true;
      break;
    }
  }

  const auto& last = rep.sweeps.back();
  rep.final_residual = last.residual.total();
  const double data = slice_data_norm(g, ctx.spec.dt, slices);
  rep.final_residual_relative = data > 0.0 ? rep.final_residual / data : 0.0;

  for (int n = 0; n < n_levels; n += 2) {
    const double t = 0.5 * ctx.spec.dt * n;
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= g.n3(); ++k) {
        const std::size_t p = g.dih(0, j, k);
        const double ub = current.w[n][p] + ctx.seed.psi(t, p);
        const auto kj = kappa_jet(ctx.wall, ub, g.y2(j), g.y3(k));
        ShockTracePoint tp{t, kj.x2, kj.x3, kj.value};
        rep.trace.push_back(tp);
        const int margin = ctx.spec.window_margin;
        if (j >= margin && j <= g.n2() - margin && k <= g.n3() - margin) {
          rep.shock_deviation = std::max(rep.shock_deviation, std::abs(kj.value));
        }
        const auto back = forward_map(ctx.wall, t, {kj.value, kj.x2, kj.x3}, 0.0);
        rep.roundtrip_error =
            std::max({rep.roundtrip_error, std::abs(back.y2 - g.y2(j)), std::abs(back.y3 - g.y3(k))});
      }
    }
  }
  return rep;
}

void write_shock_trace_csv(const std::string& path, const std::vector<ShockTracePoint>& trace) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  os << "t,x2,x3,X\n";
  char buf[160];
  for (const auto& p : trace) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", p.t, p.x2, p.x3, p.X);
    os << buf;
  }
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& sweeps) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  os << "sweep,high_norm,difference,ratio,residual_interior,residual_boundary\n";
  char buf[224];
  for (const auto& s : sweeps) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.m, s.high_norm, s.difference, s.ratio,
                  s.residual.interior, s.residual.boundary);
    os << buf;
  }
}

ScalingStudy epsilon_scaling(const ShockBackground& bg, const NonlinearConfig& cfg) {
  ScalingStudy st;
  st.full = run_stability_experiment(bg, cfg);
  NonlinearConfig half = cfg;
  half.perturbation.epsilon = 0.5 * cfg.perturbation.epsilon;
  st.half = run_stability_experiment(bg, half);
  st.deviation_ratio = st.half.shock_deviation > 0.0 ? st.full.shock_deviation / st.half.shock_deviation : 0.0;
  return st;
}

}  // namespace dshock
