#include "dihedral_shock/linear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <utility>

#include "dihedral_shock/stability_analysis.hpp"

namespace dshock {

namespace {

constexpr std::array<std::pair<int, int>, 10> kPairs{
    {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 3}}};

std::string point_string(double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "(%.6g, %.6g)", a, b);
  return buf;
}

std::string number_string(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  for (int a = 0; a < 3; ++a) {
    if (spec.n[a] < 3) throw ConfigError("grid.n" + std::to_string(a + 1) + " must be at least 3");
    if (!(spec.extent[a] > 0.0)) throw ConfigError("grid.extent" + std::to_string(a + 1) + " must be positive");
  }
  if (!(spec.t_final >= 0.0)) throw ConfigError("grid.t_final must be nonnegative");
  if (!(spec.cfl_safety > 0.0 && spec.cfl_safety <= 1.0)) throw ConfigError("grid.cfl_safety must lie in (0, 1]");
  if (spec.dt < 0.0) throw ConfigError("grid.dt must be nonnegative");
  h_[0] = spec.extent[0] / spec.n[0];
  h_[1] = 2.0 * spec.extent[1] / spec.n[1];
  h_[2] = spec.extent[2] / spec.n[2];
}

double Grid::h_min() const { return std::min({h_[0], h_[1], h_[2]}); }

bool is_odd(InteriorField f) { return f == kR03 || f == kR13 || f == kR23 || f == kRd3; }
bool is_odd(BoundaryField f) { return f == kB3; }

std::string field_name(InteriorField f) {
  static const char* names[] = {"r00", "r01", "r02", "r03", "r11", "r12", "r13", "r22",
                                "r23", "r33", "r_0", "r_1", "r_2", "r_3", "r", "f"};
  return names[f];
}

std::string field_name(BoundaryField f) {
  static const char* names[] = {"b", "b0", "b1", "b2", "b3", "g"};
  return names[f];
}

void CoefficientSlice::resize(const Grid& g, bool ext) {
  extended = ext;
  const std::size_t n = ext ? g.extended_size() : g.dihedral_size();
  const std::size_t nf = ext ? g.face_extended_size() : g.face_dihedral_size();
  for (auto& v : interior) v.assign(n, 0.0);
  for (auto& v : boundary) v.assign(nf, 0.0);
}

void LinearProblem::fill(double t, const Grid& g, CoefficientSlice& s) const {
  s.resize(g, false);
  s.t = t;
  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= g.n3(); ++k) {
        const auto c = interior(t, {g.y1(i), g.y2(j), g.y3(k)});
        const std::size_t idx = g.dih(i, j, k);
        for (int p = 0; p < 10; ++p) s.interior[p][idx] = c.r(kPairs[p].first, kPairs[p].second);
        for (int a = 0; a < 4; ++a) s.interior[kRd0 + a][idx] = c.r_first[a];
        s.interior[kRz][idx] = c.r0;
        s.interior[kF][idx] = c.f;
      }
    }
  }
  for (int j = 0; j <= g.n2(); ++j) {
    for (int k = 0; k <= g.n3(); ++k) {
      const auto b = boundary(t, g.y2(j), g.y3(k));
      const std::size_t idx = g.face_dih(j, k);
      for (int a = 0; a < 5; ++a) s.boundary[a][idx] = b.b[a];
      s.boundary[kG][idx] = b.g;
    }
  }
}

CoefficientSlice extend_problem(const Grid& g, const CoefficientSlice& d) {
  if (d.extended) return d;
  if (d.interior[0].size() != g.dihedral_size() || d.boundary[0].size() != g.face_dihedral_size()) {
    throw ConfigError("coefficient slice does not match the grid");
  }
  double scale_r = 0.0;
  for (int p = 0; p < 10; ++p) {
    for (double x : d.interior[p]) scale_r = std::max(scale_r, std::abs(x));
  }
  double scale_b = 0.0;
  for (int a = kB; a <= kB3; ++a) {
    for (double x : d.boundary[a]) scale_b = std::max(scale_b, std::abs(x));
  }
  const int n3 = g.n3();
  CoefficientSlice e;
  e.resize(g, true);
  e.t = d.t;
  for (int f = 0; f < kInteriorFieldCount; ++f) {
    const bool odd = is_odd(static_cast<InteriorField>(f));
    const auto& src = d.interior[f];
    auto& dst = e.interior[f];
    for (int i = 0; i <= g.n1(); ++i) {
      for (int j = 0; j <= g.n2(); ++j) {
        for (int k = 0; k <= n3; ++k) {
          double v = src[g.dih(i, j, k)];
          if (odd && k == 0) {
            if (std::abs(v) > 1e-8 * scale_r) {
              throw VanishingViolation(field_name(static_cast<InteriorField>(f)) + " = " + number_string(v) +
                                       " on y3 = 0 at (y1, y2) = " + point_string(g.y1(i), g.y2(j)) +
                                       " exceeds 1e-8 x " + number_string(scale_r));
            }
            v = 0.0;
          }
          dst[g.ext(i, j, n3 + k)] = v;
          dst[g.ext(i, j, n3 - k)] = odd ? -v : v;
        }
      }
    }
  }
  for (int f = 0; f < kBoundaryFieldCount; ++f) {
    const bool odd = is_odd(static_cast<BoundaryField>(f));
    const auto& src = d.boundary[f];
    auto& dst = e.boundary[f];
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= n3; ++k) {
        double v = src[g.face_dih(j, k)];
        if (odd && k == 0) {
          if (std::abs(v) > 1e-8 * scale_b) {
            throw VanishingViolation(field_name(static_cast<BoundaryField>(f)) + " = " + number_string(v) +
                                     " on the edge at y2 = " + number_string(g.y2(j)) + " exceeds 1e-8 x " +
                                     number_string(scale_b));
          }
          v = 0.0;
        }
        dst[g.face_ext(j, n3 + k)] = v;
        dst[g.face_ext(j, n3 - k)] = odd ? -v : v;
      }
    }
  }
  return e;
}

double characteristic_speed(const CoefficientSlice& s, std::size_t n) {
  const double r00 = s.interior[kR00][n];
  if (!(r00 > 0.0)) return std::numeric_limits<double>::infinity();
  const double a = s.interior[kR01][n], b = s.interior[kR02][n], c = s.interior[kR03][n];
  const double cross = std::sqrt(a * a + b * b + c * c);
  const double r11 = s.interior[kR11][n], r12 = s.interior[kR12][n], r13 = s.interior[kR13][n];
  const double r22 = s.interior[kR22][n], r23 = s.interior[kR23][n], r33 = s.interior[kR33][n];
  const double norm = std::max({std::abs(r11) + std::abs(r12) + std::abs(r13),
                                std::abs(r12) + std::abs(r22) + std::abs(r23),
                                std::abs(r13) + std::abs(r23) + std::abs(r33)});
  return (cross + std::sqrt(cross * cross + r00 * norm)) / r00;
}

double max_characteristic_speed(const CoefficientSlice& s) {
  double v = 0.0;
  const std::size_t n = s.interior[kR00].size();
  for (std::size_t i = 0; i < n; ++i) v = std::max(v, characteristic_speed(s, i));
  return v;
}

namespace {

// Index ranges of the measurement window on the dihedral part.
struct Window {
  int i_hi = 0;
  int j_lo = 0, j_hi = 0;
  int k_hi = 0;
};

Window make_window(const Grid& g) {
  const int m = std::max(1, g.spec().window_margin);
  Window w;
  w.i_hi = std::max(0, g.n1() - m);
  if (2 * m <= g.n2()) {
    w.j_lo = m;
    w.j_hi = g.n2() - m;
  } else {
    w.j_lo = w.j_hi = g.n2() / 2;
  }
  w.k_hi = std::max(0, g.n3() - m);
  return w;
}

class Stepper {
 public:
  Stepper(const Grid& g, double b1_ref) : g_(g), b1_ref_(b1_ref), ghost_(g.face_extended_size(), 0.0) {
    si_ = std::size_t(g.n2() + 1) * g.nk();
    sj_ = g.nk();
  }

  void check_boundary(const CoefficientSlice& s) const {
    const auto& b1 = s.boundary[kB1];
    for (int j = 0; j <= g_.n2(); ++j) {
      for (int k = 0; k < g_.nk(); ++k) {
        const double v = b1[g_.face_ext(j, k)];
        if (!(std::abs(v) >= 0.5 * b1_ref_)) {
          throw BoundarySolveDegenerate("|b1| = " + number_string(std::abs(v)) + " at (y2, y3) = " +
                                        point_string(g_.y2(j), g_.y3_ext(k)) + " below half of " +
                                        number_string(b1_ref_) + " at t = " + number_string(s.t));
        }
      }
    }
  }

  // dw = v, dv = a on the update nodes; zero elsewhere.
  void rhs(const CoefficientSlice& s, const std::vector<double>& w, const std::vector<double>& v,
           std::vector<double>& dw, std::vector<double>& dv) {
    build_ghost(s, w, v);
    const int n1 = g_.n1(), n2 = g_.n2(), nk = g_.nk();
    const double i1 = 1.0 / (2.0 * g_.h(0)), i2 = 1.0 / (2.0 * g_.h(1)), i3 = 1.0 / (2.0 * g_.h(2));
    const double i11 = 1.0 / (g_.h(0) * g_.h(0)), i22 = 1.0 / (g_.h(1) * g_.h(1)),
                 i33 = 1.0 / (g_.h(2) * g_.h(2));
    const double i12 = i1 * i2, i13 = i1 * i3, i23 = i2 * i3;
    std::fill(dw.begin(), dw.end(), 0.0);
    std::fill(dv.begin(), dv.end(), 0.0);
    const auto& C = s.interior;
    for (int i = 0; i < n1; ++i) {
      for (int j = 1; j < n2; ++j) {
        for (int k = 1; k < nk - 1; ++k) {
          const std::size_t n = g_.ext(i, j, k);
          auto W = [&](int di, int dj, int dk) -> double {
            if (i + di < 0) return ghost_[g_.face_ext(j + dj, k + dk)];
            return w[n + di * si_ + dj * sj_ + dk];
          };
          const double wc = w[n];
          const double wxp = W(1, 0, 0), wxm = W(-1, 0, 0);
          const double d1w = (wxp - wxm) * i1;
          const double d2w = (W(0, 1, 0) - W(0, -1, 0)) * i2;
          const double d3w = (W(0, 0, 1) - W(0, 0, -1)) * i3;
          const double d11 = (wxp - 2.0 * wc + wxm) * i11;
          const double d22 = (W(0, 1, 0) - 2.0 * wc + W(0, -1, 0)) * i22;
          const double d33 = ((W(0, 0, 1) + W(0, 0, -1)) - 2.0 * wc) * i33;
          const double d12 = ((W(1, 1, 0) - W(-1, 1, 0)) - (W(1, -1, 0) - W(-1, -1, 0))) * i12;
          const double d13 = ((W(1, 0, 1) - W(-1, 0, 1)) - (W(1, 0, -1) - W(-1, 0, -1))) * i13;
          const double d23 = ((W(0, 1, 1) - W(0, -1, 1)) - (W(0, 1, -1) - W(0, -1, -1))) * i23;
          const double d1v = i == 0 ? (-3.0 * v[n] + 4.0 * v[n + si_] - v[n + 2 * si_]) * i1
                                    : (v[n + si_] - v[n - si_]) * i1;
          const double d2v = (v[n + sj_] - v[n - sj_]) * i2;
          const double d3v = (v[n + 1] - v[n - 1]) * i3;
          const double rest = 2.0 * (C[kR01][n] * d1v + C[kR02][n] * d2v + C[kR03][n] * d3v) +
                              C[kR11][n] * d11 + C[kR22][n] * d22 + C[kR33][n] * d33 +
                              2.0 * (C[kR12][n] * d12 + C[kR13][n] * d13 + C[kR23][n] * d23) +
                              C[kRd0][n] * v[n] + C[kRd1][n] * d1w + C[kRd2][n] * d2w + C[kRd3][n] * d3w +
                              C[kRz][n] * wc;
          dw[n] = v[n];
          dv[n] = (C[kF][n] - rest) / C[kR00][n];
        }
      }
    }
  }

  // Linear extrapolation onto y1 = L1, |y2| = L2 and |y3| = L3.
  void extrapolate(std::vector<double>& x) const {
    const int n1 = g_.n1(), n2 = g_.n2(), nk = g_.nk();
    for (int j = 0; j <= n2; ++j) {
      for (int k = 0; k < nk; ++k) {
        x[g_.ext(n1, j, k)] = 2.0 * x[g_.ext(n1 - 1, j, k)] - x[g_.ext(n1 - 2, j, k)];
      }
    }
    for (int i = 0; i <= n1; ++i) {
      for (int k = 0; k < nk; ++k) {
        x[g_.ext(i, 0, k)] = 2.0 * x[g_.ext(i, 1, k)] - x[g_.ext(i, 2, k)];
        x[g_.ext(i, n2, k)] = 2.0 * x[g_.ext(i, n2 - 1, k)] - x[g_.ext(i, n2 - 2, k)];
      }
    }
    for (int i = 0; i <= n1; ++i) {
      for (int j = 0; j <= n2; ++j) {
        const std::size_t b = g_.ext(i, j, 0);
        x[b] = 2.0 * x[b + 1] - x[b + 2];
        x[b + nk - 1] = 2.0 * x[b + nk - 2] - x[b + nk - 3];
      }
    }
  }

 private:
  void build_ghost(const CoefficientSlice& s, const std::vector<double>& w, const std::vector<double>& v) {
    const int n2 = g_.n2(), nk = g_.nk();
    const double h1 = g_.h(0);
    const double i2 = 1.0 / (2.0 * g_.h(1)), i3 = 1.0 / (2.0 * g_.h(2));
    const auto& B = s.boundary;
    for (int j = 1; j < n2; ++j) {
      for (int k = 1; k < nk - 1; ++k) {
        const std::size_t f = g_.face_ext(j, k);
        const std::size_t n = g_.ext(0, j, k);
        const double d2w = (w[n + sj_] - w[n - sj_]) * i2;
        const double d3w = (w[n + 1] - w[n - 1]) * i3;
        const double resid = B[kG][f] - B[kB0][f] * v[n] - B[kB2][f] * d2w - B[kB3][f] * d3w - B[kB][f] * w[n];
        ghost_[f] = w[n + si_] - 2.0 * h1 * resid / B[kB1][f];
      }
    }
    for (int k = 1; k < nk - 1; ++k) {
      ghost_[g_.face_ext(0, k)] = 2.0 * ghost_[g_.face_ext(1, k)] - ghost_[g_.face_ext(2, k)];
      ghost_[g_.face_ext(n2, k)] = 2.0 * ghost_[g_.face_ext(n2 - 1, k)] - ghost_[g_.face_ext(n2 - 2, k)];
    }
    for (int j = 0; j <= n2; ++j) {
      const std::size_t b = g_.face_ext(j, 0);
      ghost_[b] = 2.0 * ghost_[b + 1] - ghost_[b + 2];
      ghost_[b + nk - 1] = 2.0 * ghost_[b + nk - 2] - ghost_[b + nk - 3];
    }
  }

  const Grid& g_;
  double b1_ref_;
  std::vector<double> ghost_;
  std::size_t si_ = 0, sj_ = 0;
};

// Finite differences on the extended grid, second order, one-sided at y1 = 0.
struct Differ {
  const Grid& g;
  std::size_t si, sj;
  explicit Differ(const Grid& grid)
      : g(grid), si(std::size_t(grid.n2() + 1) * grid.nk()), sj(grid.nk()) {}

  std::size_t stride(int axis) const { return axis == 0 ? si : (axis == 1 ? sj : 1); }

  double d1(const std::vector<double>& x, int i, std::size_t n, int axis) const {
    const double h = g.h(axis);
    if (axis == 0 && i == 0) return (-3.0 * x[n] + 4.0 * x[n + si] - x[n + 2 * si]) / (2.0 * h);
    const std::size_t s = stride(axis);
    return (x[n + s] - x[n - s]) / (2.0 * h);
  }

  double d2(const std::vector<double>& x, int i, std::size_t n, int a, int b) const {
    if (a == b) {
      const double h = g.h(a);
      if (a == 0 && i == 0) return (2.0 * x[n] - 5.0 * x[n + si] + 4.0 * x[n + 2 * si] - x[n + 3 * si]) / (h * h);
      const std::size_t s = stride(a);
      return (x[n + s] - 2.0 * x[n] + x[n - s]) / (h * h);
    }
    if (b == 0) std::swap(a, b);
    const std::size_t sb = stride(b);
    const double hb = g.h(b);
    if (a == 0) {
      return (d1(x, i, n + sb, 0) - d1(x, i, n - sb, 0)) / (2.0 * hb);
    }
    const std::size_t sa = stride(a);
    const double ha = g.h(a);
    return ((x[n + sa + sb] - x[n - sa + sb]) - (x[n + sa - sb] - x[n - sa - sb])) / (4.0 * ha * hb);
  }
};

// Sums over |alpha| = s of |D^alpha w|^2 on the window and on its y1 = 0 face.
void accumulate_orders(const Grid& g, const Window& win, const std::vector<double>& w,
                       const std::vector<double>& v, const std::vector<double>& a,
                       std::array<double, 3>& vol, std::array<double, 3>& trace) {
  const Differ D(g);
  vol.fill(0.0);
  trace.fill(0.0);
  const double hv = g.h(0) * g.h(1) * g.h(2);
  const double hf = g.h(1) * g.h(2);
  for (int i = 0; i <= win.i_hi; ++i) {
    for (int j = win.j_lo; j <= win.j_hi; ++j) {
      for (int kd = 0; kd <= win.k_hi; ++kd) {
        const std::size_t n = g.ext(i, j, g.n3() + kd);
        const double wk = kd == 0 ? 0.5 : 1.0;
        std::array<double, 3> o{};
        o[0] = w[n] * w[n];
        o[1] = v[n] * v[n];
        o[2] = a[n] * a[n];
        for (int ax = 0; ax < 3; ++ax) {
          const double dw = D.d1(w, i, n, ax);
          const double dv = D.d1(v, i, n, ax);
          o[1] += dw * dw;
          o[2] += dv * dv;
          for (int bx = ax; bx < 3; ++bx) {
            const double dd = D.d2(w, i, n, ax, bx);
            o[2] += dd * dd;
          }
        }
        const double wt = hv * wk * (i == 0 ? 0.5 : 1.0);
        for (int s = 0; s < 3; ++s) vol[s] += wt * o[s];
        if (i == 0) {
          for (int s = 0; s < 3; ++s) trace[s] += hf * wk * o[s];
        }
      }
    }
  }
}

// |f|^2 and |D f|^2 (time by the centred difference of the neighbouring levels).
void data_norms(const Grid& g, const Window& win, const CoefficientSlice& s0, const CoefficientSlice& sh,
                const CoefficientSlice& s1, double dt, std::array<double, 2>& fn, std::array<double, 2>& gn) {
  const Differ D(g);
  fn.fill(0.0);
  gn.fill(0.0);
  const double hv = g.h(0) * g.h(1) * g.h(2);
  const double hf = g.h(1) * g.h(2);
  const auto& f = sh.interior[kF];
  for (int i = 0; i <= win.i_hi; ++i) {
    for (int j = win.j_lo; j <= win.j_hi; ++j) {
      for (int kd = 0; kd <= win.k_hi; ++kd) {
        const std::size_t n = g.ext(i, j, g.n3() + kd);
        const double wt = hv * (kd == 0 ? 0.5 : 1.0) * (i == 0 ? 0.5 : 1.0);
        const double ft = (s1.interior[kF][n] - s0.interior[kF][n]) / dt;
        double d = ft * ft;
        for (int ax = 0; ax < 3; ++ax) {
          const double q = D.d1(f, i, n, ax);
          d += q * q;
        }
        fn[0] += wt * f[n] * f[n];
        fn[1] += wt * d;
      }
    }
  }
  const auto& gg = sh.boundary[kG];
  for (int j = win.j_lo; j <= win.j_hi; ++j) {
    for (int kd = 0; kd <= win.k_hi; ++kd) {
      const std::size_t n = g.face_ext(j, g.n3() + kd);
      const double wt = hf * (kd == 0 ? 0.5 : 1.0);
      const double gt = (s1.boundary[kG][n] - s0.boundary[kG][n]) / dt;
      const double g2 = (gg[n + g.nk()] - gg[n - g.nk()]) / (2.0 * g.h(1));
      const double g3 = (gg[n + 1] - gg[n - 1]) / (2.0 * g.h(2));
      gn[0] += wt * gg[n] * gg[n];
      gn[1] += wt * (gt * gt + g2 * g2 + g3 * g3);
    }
  }
}

std::vector<double> restrict_to_dihedral(const Grid& g, const std::vector<double>& x) {
  std::vector<double> out(g.dihedral_size());
  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= g.n3(); ++k) out[g.dih(i, j, k)] = x[g.ext(i, j, g.n3() + k)];
    }
  }
  return out;
}

double evenness_defect(const Grid& g, const std::vector<double>& w) {
  double d = 0.0;
  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) {
      const std::size_t b = g.ext(i, j, 0);
      for (int k = 1; k <= g.n3(); ++k) d = std::max(d, std::abs(w[b + g.n3() + k] - w[b + g.n3() - k]));
    }
  }
  return d;
}

double neumann_residual(const Grid& g, const Window& win, const std::vector<double>& w) {
  double r = 0.0;
  for (int i = 0; i <= win.i_hi; ++i) {
    for (int j = win.j_lo; j <= win.j_hi; ++j) {
      const std::size_t n = g.ext(i, j, g.n3());
      r = std::max(r, std::abs(-3.0 * w[n] + 4.0 * w[n + 1] - w[n + 2]) / (2.0 * g.h(2)));
    }
  }
  return r;
}

void check_finite(const std::vector<double>& x, int step, double t) {
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw NonFiniteField("non-finite solution value at step " + std::to_string(step) + ", t = " + number_string(t));
    }
  }
}

}  // namespace

LpResult solve_lp(const LinearProblem& problem, const GridSpec& spec, const SolveOptions& opt) {
  const Grid g(spec);
  const Window win = make_window(g);
  LpResult out;

  auto slice_at = [&](double t) {
    CoefficientSlice d;
    problem.fill(t, g, d);
    return extend_problem(g, d);
  };

  CoefficientSlice s0 = slice_at(0.0);
  double b1_ref = opt.boundary_b1_reference;
  if (!(b1_ref > 0.0)) {
    for (double x : s0.boundary[kB1]) b1_ref = std::max(b1_ref, std::abs(x));
  }
  Stepper stepper(g, b1_ref);
  stepper.check_boundary(s0);

  const double h = g.h_min();
  double v_max = max_characteristic_speed(s0);
  if (spec.t_final > 0.0) {
    v_max = std::max(v_max, max_characteristic_speed(slice_at(0.5 * spec.t_final)));
    v_max = std::max(v_max, max_characteristic_speed(slice_at(spec.t_final)));
  }
  if (!std::isfinite(v_max)) throw CflViolation("principal symbol has no finite speed bound");
  out.v_max = v_max;
  double dt = spec.dt;
  int n_steps = 0;
  if (spec.t_final > 0.0) {
    if (dt == 0.0) {
      const double target = spec.cfl_safety * h / (1.02 * std::max(v_max, 1e-300));
      n_steps = static_cast<int>(std::ceil(spec.t_final / target - 1e-12));
      dt = spec.t_final / n_steps;
    } else {
      n_steps = static_cast<int>(std::llround(spec.t_final / dt));
      if (std::abs(n_steps * dt - spec.t_final) > 1e-9 * spec.t_final) {
        throw ConfigError("grid.dt does not divide grid.t_final");
      }
    }
    if (dt * v_max / h > spec.cfl_safety * (1.0 + 1e-12)) {
      throw CflViolation("dt = " + number_string(dt) + " gives CFL number " + number_string(dt * v_max / h) +
                         " above " + number_string(spec.cfl_safety));
    }
  }
  out.dt = dt;
  out.n_steps = n_steps;

  const std::size_t N = g.extended_size();
  std::vector<double> w(N, 0.0), v(N, 0.0);
  if (problem.has_initial_data()) {
    for (int i = 0; i <= g.n1(); ++i) {
      for (int j = 0; j <= g.n2(); ++j) {
        for (int k = 0; k < g.nk(); ++k) {
          const std::array<double, 3> y{g.y1(i), g.y2(j), std::abs(g.y3_ext(k))};
          w[g.ext(i, j, k)] = problem.initial_w(y);
          v[g.ext(i, j, k)] = problem.initial_v(y);
        }
      }
    }
  }

  auto& sol = out.solution;
  auto& led = out.ledger;
  led.dt = dt;
  led.t_final = spec.t_final;
  if (opt.store_history) {
    sol.history_times.push_back(0.0);
    sol.w_history.push_back(restrict_to_dihedral(g, w));
    sol.v_history.push_back(restrict_to_dihedral(g, v));
  }

  std::vector<double> k1w(N), k1v(N), k2w(N), k2v(N), k3w(N), k3v(N), k4w(N), k4v(N), tw(N), tv(N);
  std::vector<double> wm(N), vm(N), am(N), scratch(N);
  const double hv = g.h(0) * g.h(1) * g.h(2);
  const double hf = g.h(1) * g.h(2);

  for (int n = 0; n < n_steps; ++n) {
    const double t = n * dt;
    CoefficientSlice sh = slice_at(t + 0.5 * dt);
    CoefficientSlice s1 = slice_at(t + dt);
    stepper.check_boundary(sh);
    stepper.check_boundary(s1);
    const double cfl = dt * std::max(max_characteristic_speed(sh), max_characteristic_speed(s1)) / h;
    if (cfl > spec.cfl_safety * (1.0 + 1e-12)) {
      throw CflViolation("CFL number " + number_string(cfl) + " above " + number_string(spec.cfl_safety) +
                         " at t = " + number_string(t));
    }

    stepper.rhs(s0, w, v, k1w, k1v);
    for (std::size_t p = 0; p < N; ++p) {
      tw[p] = w[p] + 0.5 * dt * k1w[p];
      tv[p] = v[p] + 0.5 * dt * k1v[p];
    }
    stepper.extrapolate(tw);
    stepper.extrapolate(tv);
    stepper.rhs(sh, tw, tv, k2w, k2v);
    for (std::size_t p = 0; p < N; ++p) {
      tw[p] = w[p] + 0.5 * dt * k2w[p];
      tv[p] = v[p] + 0.5 * dt * k2v[p];
    }
    stepper.extrapolate(tw);
    stepper.extrapolate(tv);
    stepper.rhs(sh, tw, tv, k3w, k3v);
    for (std::size_t p = 0; p < N; ++p) {
      tw[p] = w[p] + dt * k3w[p];
      tv[p] = v[p] + dt * k3v[p];
    }
    stepper.extrapolate(tw);
    stepper.extrapolate(tv);
    stepper.rhs(s1, tw, tv, k4w, k4v);
    for (std::size_t p = 0; p < N; ++p) {
      tw[p] = w[p] + dt / 6.0 * (k1w[p] + 2.0 * k2w[p] + 2.0 * k3w[p] + k4w[p]);
      tv[p] = v[p] + dt / 6.0 * (k1v[p] + 2.0 * k2v[p] + 2.0 * k3v[p] + k4v[p]);
    }
    stepper.extrapolate(tw);
    stepper.extrapolate(tv);
    check_finite(tw, n + 1, t + dt);
    check_finite(tv, n + 1, t + dt);

    if (opt.record_ledger || opt.store_history) {
      for (std::size_t p = 0; p < N; ++p) {
        wm[p] = 0.5 * (w[p] + tw[p]) + dt * (v[p] - tv[p]) / 8.0;
        vm[p] = 1.5 * (tw[p] - w[p]) / dt - 0.25 * (v[p] + tv[p]);
      }
    }
    if (opt.record_ledger) {
      stepper.rhs(sh, wm, vm, scratch, am);
      std::array<double, 3> vol{}, tr{};
      accumulate_orders(g, win, wm, vm, am, vol, tr);
      std::array<double, 2> fn{}, gn{};
      data_norms(g, win, s0, sh, s1, dt, fn, gn);
      led.times.push_back(t + 0.5 * dt);
      for (int s = 0; s <= EnergyLedger::s_max; ++s) {
        led.interior[s].push_back(vol[s]);
        led.trace[s].push_back(tr[s]);
        led.slice_sup[s] = std::max(led.slice_sup[s], vol[s]);
      }
      for (int s = 0; s < EnergyLedger::s_max; ++s) {
        led.f_norm[s].push_back(fn[s]);
        led.g_norm[s].push_back(gn[s]);
      }
    }
    if (opt.store_history) {
      sol.history_times.push_back(t + 0.5 * dt);
      sol.w_history.push_back(restrict_to_dihedral(g, wm));
      sol.v_history.push_back(restrict_to_dihedral(g, vm));
      sol.history_times.push_back(t + dt);
      sol.w_history.push_back(restrict_to_dihedral(g, tw));
      sol.v_history.push_back(restrict_to_dihedral(g, tv));
    }

    w.swap(tw);
    v.swap(tv);
    s0 = std::move(s1);

    StepRecord rec;
    rec.step = n + 1;
    rec.t = t + dt;
    rec.cfl = cfl;
    double il = 0.0, tl = 0.0;
    for (int i = 0; i <= win.i_hi; ++i) {
      for (int j = win.j_lo; j <= win.j_hi; ++j) {
        for (int kd = 0; kd <= win.k_hi; ++kd) {
          const double x = w[g.ext(i, j, g.n3() + kd)];
          const double wk = kd == 0 ? 0.5 : 1.0;
          il += hv * wk * (i == 0 ? 0.5 : 1.0) * x * x;
          if (i == 0) tl += hf * wk * x * x;
        }
      }
    }
    rec.interior_l2 = std::sqrt(il);
    rec.trace_l2 = std::sqrt(tl);
    rec.evenness_defect = evenness_defect(g, w);
    rec.neumann_residual = neumann_residual(g, win, w);
    out.steps.push_back(rec);
  }

  if (opt.record_ledger) {
    stepper.rhs(s0, w, v, scratch, am);
    std::array<double, 3> vol{}, tr{};
    accumulate_orders(g, win, w, v, am, vol, tr);
    for (int s = 0; s <= EnergyLedger::s_max; ++s) {
      led.slice_final[s] = vol[s];
      led.slice_sup[s] = std::max(led.slice_sup[s], vol[s]);
    }
  }

  sol.w = restrict_to_dihedral(g, w);
  sol.v = restrict_to_dihedral(g, v);
  sol.trace_shock.resize(g.face_dihedral_size());
  for (int j = 0; j <= g.n2(); ++j) {
    for (int k = 0; k <= g.n3(); ++k) sol.trace_shock[g.face_dih(j, k)] = sol.w[g.dih(0, j, k)];
  }
  sol.trace_wall.resize(std::size_t(g.n1() + 1) * (g.n2() + 1));
  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) sol.trace_wall[std::size_t(i) * (g.n2() + 1) + j] = sol.w[g.dih(i, j, 0)];
  }
  sol.evenness_defect = evenness_defect(g, w);
  sol.neumann_residual = neumann_residual(g, win, w);
  return out;
}

void write_step_csv(const std::string& path, const std::vector<StepRecord>& steps) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << "step,t,interior_l2,boundary_trace_l2,evenness_defect,neumann_residual,cfl\n";
  char buf[256];
  for (const auto& r : steps) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.t, r.interior_l2,
                  r.trace_l2, r.evenness_defect, r.neumann_residual, r.cfl);
    os << buf;
  }
}

EstimatePoint estimate_at(const EnergyLedger& led, double eta, int s) {
  EstimatePoint p;
  p.eta = eta;
  s = std::clamp(s, 0, EnergyLedger::s_max);
  const int sd = std::max(s - 1, 0);
  double lhs = 0.0, f = 0.0, gsum = 0.0;
  for (std::size_t n = 0; n < led.times.size(); ++n) {
    const double wt = led.dt * std::exp(-2.0 * eta * led.times[n]);
    for (int o = 0; o <= s; ++o) lhs += wt * (eta * led.interior[o][n] + led.trace[o][n]);
    for (int o = 0; o <= sd; ++o) {
      f += wt * led.f_norm[o][n];
      gsum += wt * led.g_norm[o][n];
    }
  }
  for (int o = 0; o <= s; ++o) lhs += std::exp(-2.0 * eta * led.t_final) * led.slice_sup[o];
  const double coef = led.coefficient_norm * std::exp(2.0 * eta * led.t_final) * f;
  p.lhs = lhs;
  p.rhs = (f + coef) / eta + gsum;
  if (p.rhs > 0.0) {
    p.ratio = p.lhs / p.rhs;
  } else {
    p.ratio = p.lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return p;
}

EstimateReport measure_estimate(const EnergyLedger& led, double eta0, int s, double max_spread) {
  EstimateReport rep;
  rep.s = s;
  rep.eta0 = eta0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double m : {1.0, 2.0, 4.0, 8.0}) {
    rep.points.push_back(estimate_at(led, m * eta0, s));
    lo = std::min(lo, rep.points.back().ratio);
    hi = std::max(hi, rep.points.back().ratio);
  }
  if (hi == 0.0) {
    rep.spread = 1.0;
  } else {
    rep.spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  }
  rep.bounded = std::isfinite(rep.spread) && rep.spread <= max_spread;
  return rep;
}

EstimateReport find_eta0(const EnergyLedger& led, int s, const std::vector<double>& candidates, double max_spread) {
  EstimateReport last;
  for (double e : candidates) {
    last = measure_estimate(led, e, s, max_spread);
    if (last.bounded) return last;
  }
  return last;
}

namespace {

void flip_odd(InteriorCoefficients& c) {
  for (int a = 0; a < 3; ++a) {
    c.r(a, 3) = -c.r(a, 3);
    c.r(3, a) = -c.r(3, a);
  }
  c.r_first[3] = -c.r_first[3];
}

template <class F>
double fd1(const F& f, double x, double d) {
  return (f(x - 2 * d) - 8.0 * f(x - d) + 8.0 * f(x + d) - f(x + 2 * d)) / (12.0 * d);
}

template <class F>
double fd2(const F& f, double x, double d) {
  return (-f(x - 2 * d) + 16.0 * f(x - d) - 30.0 * f(x) + 16.0 * f(x + d) - f(x + 2 * d)) / (12.0 * d * d);
}

template <class F>
double fd_forward(const F& f, double x, double d) {
  return (-25.0 * f(x) + 48.0 * f(x + d) - 36.0 * f(x + 2 * d) + 16.0 * f(x + 3 * d) - 3.0 * f(x + 4 * d)) /
         (12.0 * d);
}

using Point = std::array<double, 3>;
using ScalarField = std::function<double(const Point&)>;

double partial(const ScalarField& f, const Point& y, int a, double d) {
  return fd1([&](double s) { Point z = y; z[a] = s; return f(z); }, y[a], d);
}

double second_partial(const ScalarField& f, const Point& y, int a, int b, double d) {
  if (a == b) return fd2([&](double s) { Point z = y; z[a] = s; return f(z); }, y[a], d);
  return fd1([&](double s) { Point z = y; z[b] = s; return partial(f, z, a, d); }, y[b], d);
}

}  // namespace

CompatibilityReport build_compatible_data(const LinearProblem& p, const GridSpec& spec,
                                          const CompatibilityOptions& opt) {
  if (opt.order < 0 || opt.order > 2) throw ConfigError("compatibility order must lie in [0, 2]");
  const Grid g(spec);
  const double d = opt.step;
  auto coef = [&](double t, Point y) {
    const bool neg = y[2] < 0.0;
    if (neg) y[2] = -y[2];
    auto c = p.interior(t, y);
    if (neg) flip_odd(c);
    return c;
  };
  auto bnd = [&](double t, double y2, double y3) {
    auto b = p.boundary(t, y2, std::abs(y3));
    if (y3 < 0.0) b.b[4] = -b.b[4];
    return b;
  };
  const ScalarField w0 = [&](const Point& y) { return p.initial_w({y[0], y[1], std::abs(y[2])}); };
  const ScalarField w1 = [&](const Point& y) { return p.initial_v({y[0], y[1], std::abs(y[2])}); };
  auto w2 = [&](const Point& y) {
    const auto c = coef(0.0, y);
    double rest = c.r_first[0] * w1(y) + c.r0 * w0(y);
    for (int a = 1; a <= 3; ++a) {
      rest += 2.0 * c.r(0, a) * partial(w1, {y[0], y[1], y[2]}, a - 1, d);
      rest += c.r_first[a] * partial(w0, y, a - 1, d);
      for (int b = 1; b <= 3; ++b) rest += c.r(a, b) * second_partial(w0, y, a - 1, b - 1, d);
    }
    return (c.f - rest) / c.r(0, 0);
  };

  CompatibilityReport rep;
  rep.order = opt.order;
  const int ns = std::max(2, opt.samples_per_axis);
  auto lin = [&](double lo, double hi, int m) { return lo + (hi - lo) * m / (ns - 1); };
  const double L1 = spec.extent[0], L2 = spec.extent[1], L3 = spec.extent[2];

  for (int a = 0; a < ns; ++a) {
    for (int b = 0; b < ns; ++b) {
      const double y2 = lin(-0.5 * L2, 0.5 * L2, a), y3 = lin(0.0, 0.5 * L3, b);
      const Point y{0.0, y2, y3};
      CompatibilityPoint cp;
      cp.y = y;
      cp.w_t[0] = w0(y);
      cp.w_t[1] = w1(y);
      if (opt.order >= 2) cp.w_t[2] = w2(y);
      rep.points.push_back(cp);
      ++rep.points_checked;
      const auto B = bnd(0.0, y2, y3);
      std::array<double, 4> g0, g1{};
      for (int ax = 0; ax < 3; ++ax) g0[ax + 1] = partial(w0, y, ax, d);
      if (opt.order >= 1) {
        const double terms[] = {B.b[1] * cp.w_t[1], B.b[2] * g0[1], B.b[3] * g0[2], B.b[4] * g0[3],
                                B.b[0] * cp.w_t[0], B.g};
        double defect = terms[0] + terms[1] + terms[2] + terms[3] + terms[4] - terms[5];
        double scale = 1.0;
        for (double x : terms) scale = std::max(scale, std::abs(x));
        rep.max_boundary_defect = std::max(rep.max_boundary_defect, std::abs(defect) / scale);
        if (std::abs(defect) > opt.tolerance * scale) {
          throw IncompatibleData("order 0 identity B w - g = 0 on y1 = 0 fails at (y2, y3) = " +
                                 point_string(y2, y3) + " with defect " + number_string(defect));
        }
      }
      if (opt.order >= 2) {
        for (int ax = 0; ax < 3; ++ax) g1[ax + 1] = partial(w1, y, ax, d);
        std::array<double, 5> bt{};
        for (int m = 0; m < 5; ++m) {
          bt[m] = fd_forward([&](double t) { return bnd(t, y2, y3).b[m]; }, 0.0, d);
        }
        const double gt = fd_forward([&](double t) { return bnd(t, y2, y3).g; }, 0.0, d);
        const double terms[] = {bt[1] * cp.w_t[1], B.b[1] * cp.w_t[2], bt[0] * cp.w_t[0], B.b[0] * cp.w_t[1],
                                bt[2] * g0[1],     B.b[2] * g1[1],     bt[3] * g0[2],     B.b[3] * g1[2],
                                bt[4] * g0[3],     B.b[4] * g1[3],     gt};
        double defect = -terms[10];
        double scale = 1.0;
        for (int m = 0; m < 10; ++m) defect += terms[m];
        for (double x : terms) scale = std::max(scale, std::abs(x));
        rep.max_boundary_defect = std::max(rep.max_boundary_defect, std::abs(defect) / scale);
        if (std::abs(defect) > opt.tolerance * scale) {
          throw IncompatibleData("order 1 identity d0 (B w - g) = 0 on y1 = 0 fails at (y2, y3) = " +
                                 point_string(y2, y3) + " with defect " + number_string(defect));
        }
      }
    }
  }

  for (int a = 0; a < ns; ++a) {
    for (int b = 0; b < ns; ++b) {
      const double y1 = lin(0.0, 0.5 * L1, a), y2 = lin(-0.5 * L2, 0.5 * L2, b);
      for (int m = 0; m < opt.order; ++m) {
        const ScalarField& wm = m == 0 ? w0 : w1;
        const double d3 = fd_forward([&](double s) { return wm({y1, y2, s}); }, 0.0, d);
        const double scale = std::max(1.0, std::abs(partial(wm, {y1, y2, 0.5 * L3}, 2, d)));
        rep.max_wall_defect = std::max(rep.max_wall_defect, std::abs(d3) / scale);
        if (std::abs(d3) > opt.tolerance * scale) {
          throw IncompatibleData("Neumann identity d3 d0^" + std::to_string(m) + " w = 0 on y3 = 0 fails at " +
                                 "(y1, y2) = " + point_string(y1, y2) + " with defect " + number_string(d3));
        }
      }
      ++rep.points_checked;
    }
  }
  return rep;
}

double poly_bump(double s, int derivative) {
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  switch (derivative) {
    case 0: return std::pow(q, 6);
    case 1: return -12.0 * s * std::pow(q, 5);
    default: return -12.0 * std::pow(q, 5) + 120.0 * s * s * std::pow(q, 4);
  }
}

ManufacturedProblem::ManufacturedProblem(const ShockBackground& bg, const ManufacturedOptions& opt)
    : bg_(bg), opt_(opt) {
  const auto c = background_coefficients(bg);
  r_bg_ = c.r;
  b_bg_ = c.b;
}

void ManufacturedProblem::exact_derivs(double t, const std::array<double, 3>& y, double& w, Eigen::Vector4d& dw,
                                       Eigen::Matrix4d& d2w) const {
  const double om = opt_.omega;
  double tau, tau1, tau2;
  if (opt_.sin4_profile) {
    const double s = std::sin(om * t), c = std::cos(om * t);
    tau = s * s * s * s;
    tau1 = 4.0 * om * s * s * s * c;
    tau2 = 4.0 * om * om * s * s * (3.0 * c * c - s * s);
  } else {
    tau = std::sin(om * t);
    tau1 = om * std::cos(om * t);
    tau2 = -om * om * std::sin(om * t);
  }
  const double s1 = (y[0] - opt_.center_y1) / opt_.radius_y1, s3 = y[2] / opt_.radius_y3;
  const double A = poly_bump(s1), A1 = poly_bump(s1, 1) / opt_.radius_y1,
               A2 = poly_bump(s1, 2) / (opt_.radius_y1 * opt_.radius_y1);
  const double C = poly_bump(s3), C1 = poly_bump(s3, 1) / opt_.radius_y3,
               C2 = poly_bump(s3, 2) / (opt_.radius_y3 * opt_.radius_y3);
  w = tau * A * C;
  dw << tau1 * A * C, tau * A1 * C, 0.0, tau * A * C1;
  d2w.setZero();
  d2w(0, 0) = tau2 * A * C;
  d2w(0, 1) = d2w(1, 0) = tau1 * A1 * C;
  d2w(0, 3) = d2w(3, 0) = tau1 * A * C1;
  d2w(1, 1) = tau * A2 * C;
  d2w(1, 3) = d2w(3, 1) = tau * A1 * C1;
  d2w(3, 3) = tau * A * C2;
}

double ManufacturedProblem::exact(double t, const std::array<double, 3>& y) const {
  double w;
  Eigen::Vector4d dw;
  Eigen::Matrix4d d2w;
  exact_derivs(t, y, w, dw, d2w);
  return w;
}

double ManufacturedProblem::initial_v(const std::array<double, 3>& y) const {
  double w;
  Eigen::Vector4d dw;
  Eigen::Matrix4d d2w;
  exact_derivs(0.0, y, w, dw, d2w);
  return dw(0);
}

InteriorCoefficients ManufacturedProblem::operator_at(double t, const std::array<double, 3>& y) const {
  InteriorCoefficients c;
  c.r = r_bg_;
  const double delta = opt_.perturbation;
  if (delta == 0.0) return c;
  const double e = delta * (1.0 + 0.5 * std::sin(1.3 * t)) * std::cos(0.9 * y[0] + 0.4) * std::cos(0.8 * y[2]);
  const double o = delta * y[2] * (0.7 + 0.3 * std::cos(1.1 * y[0])) * (1.0 + 0.2 * t);
  const double sc = r_bg_.cwiseAbs().maxCoeff();
  c.r(0, 0) *= 1.0 + e;
  c.r(1, 1) *= 1.0 + 0.5 * e;
  c.r(2, 2) *= 1.0 - 0.3 * e;
  c.r(3, 3) *= 1.0 + 0.4 * e;
  c.r(0, 1) *= 1.0 - 0.6 * e;
  c.r(1, 0) = c.r(0, 1);
  c.r(0, 2) = c.r(2, 0) = 0.3 * sc * e;
  c.r(1, 2) = c.r(2, 1) = 0.2 * sc * e;
  c.r(0, 3) = c.r(3, 0) = 0.4 * sc * o;
  c.r(1, 3) = c.r(3, 1) = 0.3 * sc * o;
  c.r(2, 3) = c.r(3, 2) = 0.2 * sc * o;
  c.r_first = {0.5 * e, 0.3 * e, 0.2 * e, 0.6 * o};
  c.r0 = 0.1 * e;
  return c;
}

BoundaryCoefficients ManufacturedProblem::boundary_operator_at(double t, double /*y2*/, double y3) const {
  BoundaryCoefficients b;
  b.b = b_bg_;
  const double delta = opt_.perturbation;
  const double b1 = std::abs(b_bg_[2]);
  if (delta != 0.0) {
    const double e = delta * (1.0 + 0.5 * std::sin(1.3 * t)) * std::cos(0.4) * std::cos(0.8 * y3);
    const double o = delta * y3 * (1.0 + 0.2 * t);
    b.b[0] += 0.2 * b1 * e;
    b.b[1] *= 1.0 + 0.5 * e;
    b.b[2] *= 1.0 - 0.4 * e;
    b.b[3] += 0.3 * b1 * e;
    b.b[4] += 0.5 * b1 * o;
  }
  b.b[4] += opt_.inject_b3;
  return b;
}

InteriorCoefficients ManufacturedProblem::interior(double t, const std::array<double, 3>& y) const {
  auto c = operator_at(t, y);
  double w;
  Eigen::Vector4d dw;
  Eigen::Matrix4d d2w;
  exact_derivs(t, y, w, dw, d2w);
  c.f = (c.r.array() * d2w.array()).sum() + c.r0 * w;
  for (int a = 0; a < 4; ++a) c.f += c.r_first[a] * dw(a);
  return c;
}

BoundaryCoefficients ManufacturedProblem::boundary(double t, double y2, double y3) const {
  auto b = boundary_operator_at(t, y2, y3);
  double w;
  Eigen::Vector4d dw;
  Eigen::Matrix4d d2w;
  exact_derivs(t, {0.0, y2, y3}, w, dw, d2w);
  b.g = b.b[0] * w + b.b[1] * dw(0) + b.b[2] * dw(1) + b.b[3] * dw(2) + b.b[4] * dw(3) + opt_.inject_g;
  return b;
}

TravellingWaveProblem::TravellingWaveProblem(const ShockBackground& bg, double center, double radius, double speed)
    : bg_(bg), center_(center), radius_(radius), speed_(speed) {
  const auto c = background_coefficients(bg);
  r_bg_ = c.r;
  b_bg_ = c.b;
}

double TravellingWaveProblem::profile(double s, int derivative) const {
  const double x = (s - center_) / radius_;
  return poly_bump(x, derivative) / std::pow(radius_, derivative);
}

double TravellingWaveProblem::exact(double t, const std::array<double, 3>& y) const {
  return profile(y[0] - speed_ * t, 0);
}

double TravellingWaveProblem::initial_v(const std::array<double, 3>& y) const {
  return -speed_ * profile(y[0], 1);
}

InteriorCoefficients TravellingWaveProblem::interior(double, const std::array<double, 3>&) const {
  InteriorCoefficients c;
  c.r = r_bg_;
  return c;
}

BoundaryCoefficients TravellingWaveProblem::boundary(double t, double, double) const {
  BoundaryCoefficients b;
  b.b = b_bg_;
  const double s = -speed_ * t;
  b.g = b.b[0] * profile(s, 0) + (b.b[2] - speed_ * b.b[1]) * profile(s, 1);
  return b;
}

BallDataProblem::BallDataProblem(const ShockBackground& bg, std::array<double, 3> center, double radius, int power)
    : center_(center), radius_(radius), power_(power) {
  const auto c = background_coefficients(bg);
  r_bg_ = c.r;
  b_bg_ = c.b;
}

InteriorCoefficients BallDataProblem::interior(double, const std::array<double, 3>&) const {
  InteriorCoefficients c;
  c.r = r_bg_;
  return c;
}

BoundaryCoefficients BallDataProblem::boundary(double, double, double) const {
  BoundaryCoefficients b;
  b.b = b_bg_;
  return b;
}

double BallDataProblem::initial_w(const std::array<double, 3>& y) const {
  double r2 = 0.0;
  for (int a = 0; a < 3; ++a) r2 += (y[a] - center_[a]) * (y[a] - center_[a]);
  const double q = 1.0 - r2 / (radius_ * radius_);
  return q > 0.0 ? std::pow(q, power_) : 0.0;
}

ErrorNorms solution_error(const Grid& g, const std::vector<double>& w,
                          const std::function<double(const std::array<double, 3>&)>& reference) {
  const Window win = make_window(g);
  ErrorNorms e;
  const double hv = g.h(0) * g.h(1) * g.h(2);
  const double hf = g.h(1) * g.h(2);
  double il = 0.0, tl = 0.0;
  for (int i = 0; i <= win.i_hi; ++i) {
    for (int j = win.j_lo; j <= win.j_hi; ++j) {
      for (int k = 0; k <= win.k_hi; ++k) {
        const double d = w[g.dih(i, j, k)] - reference({g.y1(i), g.y2(j), g.y3(k)});
        const double wk = k == 0 ? 0.5 : 1.0;
        il += hv * wk * (i == 0 ? 0.5 : 1.0) * d * d;
        if (i == 0) tl += hf * wk * d * d;
        e.max_abs = std::max(e.max_abs, std::abs(d));
      }
    }
  }
  e.interior_l2 = std::sqrt(il);
  e.trace_l2 = std::sqrt(tl);
  return e;
}

namespace {

double order_of(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace

RefinementStudy manufactured_refinement(const ShockBackground& bg, const ManufacturedOptions& opt,
                                        const std::vector<int>& n1_levels, double t_final) {
  const ManufacturedProblem mp(bg, opt);
  RefinementStudy st;
  for (int n : n1_levels) {
    GridSpec gs;
    gs.extent = {1.0, 0.25, 1.0};
    gs.n = {n, 4, n};
    gs.t_final = t_final;
    const auto r = solve_lp(mp, gs);
    const Grid g(gs);
    const auto e = solution_error(g, r.solution.w, [&](const std::array<double, 3>& y) { return mp.exact(t_final, y); });
    RefinementLevel lv;
    lv.n1 = n;
    lv.h = g.h(0);
    lv.steps = r.n_steps;
    lv.error_l2 = e.interior_l2;
    lv.trace_error = e.trace_l2;
    lv.evenness = r.solution.evenness_defect;
    lv.neumann = r.solution.neumann_residual;
    for (double x : r.solution.w) lv.solution_max = std::max(lv.solution_max, std::abs(x));
    st.levels.push_back(lv);
    st.ledgers.push_back(r.ledger);
  }
  st.evenness_at_roundoff = true;
  for (const auto& lv : st.levels) {
    st.evenness_at_roundoff = st.evenness_at_roundoff && lv.evenness <= 1e-12 * std::max(lv.solution_max, 1e-300);
  }
  for (std::size_t l = 1; l < st.levels.size(); ++l) {
    const auto& a = st.levels[l - 1];
    const auto& b = st.levels[l];
    st.error_ratios.push_back(a.error_l2 / b.error_l2);
    st.trace_orders.push_back(order_of(a.trace_error, b.trace_error));
    st.neumann_orders.push_back(order_of(a.neumann, b.neumann));
    if (!st.evenness_at_roundoff) st.evenness_orders.push_back(order_of(a.evenness, b.evenness));
  }
  return st;
}

LeakageReport finite_speed_leakage(const ShockBackground& bg, int n_per_unit, double t_final, double radius) {
  const double c1 = 0.55;
  const BallDataProblem bp(bg, {c1, 0.0, 0.0}, radius, 8);
  const double reach = radius + 2.3 * t_final + 0.1;
  GridSpec gs;
  gs.extent = {c1 + reach, reach, reach};
  gs.n = {static_cast<int>(std::lround(n_per_unit * gs.extent[0])),
          static_cast<int>(std::lround(2.0 * n_per_unit * reach)), static_cast<int>(std::lround(n_per_unit * reach))};
  gs.t_final = t_final;
  const auto r = solve_lp(bp, gs);
  const Grid g(gs);
  LeakageReport rep;
  rep.n = n_per_unit;
  rep.t_final = t_final;
  rep.radius = radius;
  rep.v_max = r.v_max;
  rep.inflated_radius = radius + r.v_max * t_final + 2.0 * g.h_min();
  for (int i = 0; i <= g.n1(); ++i) {
    for (int j = 0; j <= g.n2(); ++j) {
      for (int k = 0; k <= g.n3(); ++k) {
        const double d = std::sqrt((g.y1(i) - c1) * (g.y1(i) - c1) + g.y2(j) * g.y2(j) + g.y3(k) * g.y3(k));
        const double x = std::abs(r.solution.w[g.dih(i, j, k)]);
        if (d > rep.inflated_radius) {
          rep.leakage = std::max(rep.leakage, x);
        } else {
          rep.inside_max = std::max(rep.inside_max, x);
        }
      }
    }
  }
  return rep;
}

TravellingWaveStudy travelling_wave_refinement(const ShockBackground& bg, const std::vector<int>& n1_levels,
                                               double t_final) {
  TravellingWaveStudy st;
  st.speed = bg.jump() * (bg.q_plus + bg.c_plus);
  const TravellingWaveProblem tw(bg, 0.5, 0.3, st.speed);
  for (int n : n1_levels) {
    GridSpec gs;
    gs.extent = {1.5, 0.25, 0.25};
    gs.n = {(3 * n) / 2, 4, 4};
    gs.t_final = t_final;
    const auto r = solve_lp(tw, gs);
    const Grid g(gs);
    const auto e = solution_error(g, r.solution.w, [&](const std::array<double, 3>& y) { return tw.exact(t_final, y); });
    st.n1.push_back(n);
    st.errors.push_back(e.interior_l2);
    if (st.errors.size() > 1) st.ratios.push_back(st.errors[st.errors.size() - 2] / e.interior_l2);
  }
  return st;
}

}  // namespace dshock
