#pragma once

// Truncated multivariate Taylor polynomials.
//
// Jet<NV, K> holds the Taylor coefficients of a function of NV variables
// up to total degree K around a base point. Arithmetic on jets propagates
// exact derivatives, so closed-form expressions written once in templated
// code give their derivatives for free.

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace dshock {

namespace detail {

constexpr int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

template <int NV, int K>
struct MonomialTable {
  static constexpr int size = binomial(NV + K, K);
  static constexpr int max_products = size * size;

  std::array<std::array<int, NV>, size> exps{};
  std::array<int, size> degree{};
  std::array<std::array<int, size>, NV> raise{};  // index of e + unit_i, or -1
  std::array<int, max_products> prod_a{};
  std::array<int, max_products> prod_b{};
  std::array<int, max_products> prod_c{};
  int n_products = 0;

  constexpr int find(const std::array<int, NV>& e) const {
    int d = 0;
    for (int v = 0; v < NV; ++v) d += e[v];
    if (d > K) return -1;
    for (int m = 0; m < size; ++m) {
      if (degree[m] != d) continue;
      bool same = true;
      for (int v = 0; v < NV; ++v) same = same && exps[m][v] == e[v];
      if (same) return m;
    }
    return -1;
  }

  constexpr MonomialTable() {
    int total = 1;
    for (int v = 0; v < NV; ++v) total *= (K + 1);
    int idx = 0;
    for (int d = 0; d <= K; ++d) {
      for (int code = 0; code < total; ++code) {
        std::array<int, NV> e{};
        int rem = code;
        int s = 0;
        for (int v = 0; v < NV; ++v) {
          e[v] = rem % (K + 1);
          rem /= (K + 1);
          s += e[v];
        }
        if (s != d) continue;
        exps[idx] = e;
        degree[idx] = d;
        ++idx;
      }
    }
    for (int v = 0; v < NV; ++v) {
      for (int m = 0; m < size; ++m) {
        auto e = exps[m];
        e[v] += 1;
        raise[v][m] = find(e);
      }
    }
    for (int a = 0; a < size; ++a) {
      for (int b = 0; b < size; ++b) {
        if (degree[a] + degree[b] > K) continue;
        std::array<int, NV> e{};
        for (int v = 0; v < NV; ++v) e[v] = exps[a][v] + exps[b][v];
        prod_a[n_products] = a;
        prod_b[n_products] = b;
        prod_c[n_products] = find(e);
        ++n_products;
      }
    }
  }
};

template <int NV, int K>
inline constexpr MonomialTable<NV, K> monomial_table{};

constexpr double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace detail

template <int NV, int K>
class Jet {
 public:
  static constexpr int num_vars = NV;
  static constexpr int order = K;
  static constexpr int size = detail::binomial(NV + K, K);
  using Exponent = std::array<int, NV>;

  std::array<double, size> c{};

  Jet() = default;
  Jet(double v) { c[0] = v; }  // NOLINT: implicit scalar promotion is intended

  static Jet variable(int i, double v) {
    Jet r(v);
    if constexpr (K >= 1) r.c[1 + i] = 1.0;
    return r;
  }

  static const detail::MonomialTable<NV, K>& table() { return detail::monomial_table<NV, K>; }

  double value() const { return c[0]; }

  static int index(const Exponent& e) { return table().find(e); }

  double coeff(const Exponent& e) const {
    const int m = index(e);
    return m < 0 ? 0.0 : c[m];
  }

  // Partial derivative D^e at the base point.
  double derivative(const Exponent& e) const {
    double f = 1.0;
    for (int v = 0; v < NV; ++v) f *= detail::factorial(e[v]);
    return coeff(e) * f;
  }

  double d1(int i) const {
    if constexpr (K < 1) return 0.0;
    return c[1 + i];
  }

  double d2(int i, int j) const {
    Exponent e{};
    e[i] += 1;
    e[j] += 1;
    return derivative(e);
  }

  // Jet of the partial derivative in variable i. The top-degree
  // coefficients of the result are unknown and set to zero, so the
  // result is only exact through degree K-1.
  Jet partial(int i) const {
    Jet r;
    const auto& t = table();
    for (int m = 0; m < size; ++m) {
      const int up = t.raise[i][m];
      if (up < 0) continue;
      r.c[m] = (t.exps[m][i] + 1) * c[up];
    }
    return r;
  }

  Jet& operator+=(const Jet& o) {
    for (int m = 0; m < size; ++m) c[m] += o.c[m];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int m = 0; m < size; ++m) c[m] -= o.c[m];
    return *this;
  }
  Jet& operator+=(double s) {
    c[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
  Jet& operator/=(double s) {
    for (auto& x : c) x /= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
  }
  Jet& operator/=(const Jet& o) {
    *this = *this / o;
    return *this;
  }

  Jet operator-() const {
    Jet r;
    for (int m = 0; m < size; ++m) r.c[m] = -c[m];
    return r;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    const auto& t = table();
    for (int k = 0; k < t.n_products; ++k) r.c[t.prod_c[k]] += a.c[t.prod_a[k]] * b.c[t.prod_b[k]];
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

  // f(a) where derivs[k] = f^{(k)}(a.value()).
  static Jet apply(const Jet& a, const std::array<double, K + 1>& derivs) {
    Jet delta = a;
    delta.c[0] = 0.0;
    Jet r(derivs[K] / detail::factorial(K));
    for (int k = K - 1; k >= 0; --k) {
      r = r * delta;
      r.c[0] += derivs[k] / detail::factorial(k);
    }
    return r;
  }

  friend Jet reciprocal(const Jet& a) {
    const double x = a.c[0];
    std::array<double, K + 1> d{};
    double p = 1.0 / x;
    for (int k = 0; k <= K; ++k) {
      d[k] = p;
      p *= -(k + 1) / x;
    }
    return apply(a, d);
  }

  friend Jet exp(const Jet& a) {
    std::array<double, K + 1> d{};
    d.fill(std::exp(a.c[0]));
    return apply(a, d);
  }

  friend Jet log(const Jet& a) {
    const double x = a.c[0];
    std::array<double, K + 1> d{};
    d[0] = std::log(x);
    double p = 1.0 / x;
    for (int k = 1; k <= K; ++k) {
      d[k] = p;
      p *= -k / x;
    }
    return apply(a, d);
  }

  friend Jet pow(const Jet& a, double e) {
    const double x = a.c[0];
    std::array<double, K + 1> d{};
    double coef = 1.0;
    for (int k = 0; k <= K; ++k) {
      d[k] = coef * std::pow(x, e - k);
      coef *= (e - k);
    }
    return apply(a, d);
  }

  friend Jet sqrt(const Jet& a) { return pow(a, 0.5); }

  friend Jet sin(const Jet& a) {
    const double s = std::sin(a.c[0]);
    const double co = std::cos(a.c[0]);
    std::array<double, K + 1> d{};
    for (int k = 0; k <= K; ++k) {
      switch (k % 4) {
        case 0: d[k] = s; break;
        case 1: d[k] = co; break;
        case 2: d[k] = -s; break;
        default: d[k] = -co; break;
      }
    }
    return apply(a, d);
  }

  friend Jet cos(const Jet& a) {
    const double s = std::sin(a.c[0]);
    const double co = std::cos(a.c[0]);
    std::array<double, K + 1> d{};
    for (int k = 0; k <= K; ++k) {
      switch (k % 4) {
        case 0: d[k] = co; break;
        case 1: d[k] = -s; break;
        case 2: d[k] = -co; break;
        default: d[k] = s; break;
      }
    }
    return apply(a, d);
  }

  friend Jet integer_pow(const Jet& a, int n) {
    Jet r(1.0);
    for (int k = 0; k < n; ++k) r = r * a;
    return r;
  }
};

template <class T>
struct is_jet : std::false_type {};
template <int NV, int K>
struct is_jet<Jet<NV, K>> : std::true_type {};

inline double value_of(double x) { return x; }
template <int NV, int K>
double value_of(const Jet<NV, K>& x) {
  return x.value();
}

inline double integer_pow(double a, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= a;
  return r;
}

// Evaluate the polynomial f at increments (args[i] - base_i), where base_i is
// the point f was expanded around. Exact through degree min(K, K2) when each
// argument's value equals the corresponding base coordinate.
template <int NS, int K, std::size_t N, int NV, int K2>
Jet<NV, K2> compose(const Jet<NS, K>& f, const std::array<Jet<NV, K2>, N>& args,
                    const std::array<double, N>& base) {
  static_assert(static_cast<int>(N) == NS);
  std::array<std::array<Jet<NV, K2>, K + 1>, NS> powers;
  for (int i = 0; i < NS; ++i) {
    Jet<NV, K2> delta = args[i];
    delta.c[0] -= base[i];
    powers[i][0] = Jet<NV, K2>(1.0);
    for (int p = 1; p <= K; ++p) powers[i][p] = powers[i][p - 1] * delta;
  }
  const auto& t = Jet<NS, K>::table();
  Jet<NV, K2> r;
  for (int m = 0; m < Jet<NS, K>::size; ++m) {
    if (f.c[m] == 0.0) continue;
    Jet<NV, K2> term(f.c[m]);
    for (int i = 0; i < NS; ++i) {
      if (t.exps[m][i] > 0) term = term * powers[i][t.exps[m][i]];
    }
    r += term;
  }
  return r;
}

// Restrict to a lower truncation order.
template <int K2, int NV, int K>
Jet<NV, K2> truncate(const Jet<NV, K>& a) {
  static_assert(K2 <= K);
  Jet<NV, K2> r;
  const auto& t = Jet<NV, K2>::table();
  for (int m = 0; m < Jet<NV, K2>::size; ++m) r.c[m] = a.coeff(t.exps[m]);
  return r;
}

// Embed a jet in fewer variables into one with more, mapping source
// variable i onto target variable slot[i].
template <int NV2, int NV, int K>
Jet<NV2, K> embed(const Jet<NV, K>& a, const std::type_identity_t<std::array<int, NV>>& slot) {
  Jet<NV2, K> r;
  const auto& t = Jet<NV, K>::table();
  for (int m = 0; m < Jet<NV, K>::size; ++m) {
    typename Jet<NV2, K>::Exponent e{};
    for (int v = 0; v < NV; ++v) e[slot[v]] += t.exps[m][v];
    r.c[Jet<NV2, K>::index(e)] += a.c[m];
  }
  return r;
}

}  // namespace dshock
