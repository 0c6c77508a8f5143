#include "dihedral_shock/stability_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dihedral_shock/coefficients.hpp"
#include "dihedral_shock/errors.hpp"

namespace dshock {

std::string to_string(MultiplierKind k) {
  switch (k) {
    case MultiplierKind::first_order: return "first_order";
    case MultiplierKind::dirichlet: return "dirichlet";
    case MultiplierKind::extension: return "extension";
  }
  return "dirichlet";
}

CoefficientSample background_coefficients(const ShockBackground& bg) {
  const auto s = background_sample(bg);
  CoefficientSample c;
  c.r = eval_interior(bg, s).a_tilde;
  c.b = linearize_G(bg, WallSpec::flat(), UpstreamField(bg.q_minus, WallSpec::flat()), s);
  c.on_wall = true;
  return c;
}

Eigen::Matrix4d form_matrix(const Eigen::Matrix4d& r, const std::array<double, 4>& q, int i) {
  const Eigen::Vector4d qv(q[0], q[1], q[2], q[3]);
  const Eigen::Vector4d ri = r.row(i).transpose();
  return ri * qv.transpose() + qv * ri.transpose() - q[i] * r;
}

double form_value(const Eigen::Matrix4d& r, const std::array<double, 4>& q, int i, const Eigen::Vector4d& xi) {
  const Eigen::Vector4d qv(q[0], q[1], q[2], q[3]);
  return 2.0 * r.row(i).dot(xi) * qv.dot(xi) - q[i] * xi.dot(r * xi);
}

namespace {

Eigen::MatrixXd block(const Eigen::Matrix4d& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd b(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) b(i, j) = m(rows[i], cols[j]);
  }
  return b;
}

double min_eigen(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigen(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(m.rows() - 1);
}

std::vector<Eigen::Vector4d> sphere_samples(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Eigen::Vector4d> out;
  out.reserve(n);
  while (static_cast<int>(out.size()) < n) {
    Eigen::Vector4d v(g(rng), g(rng), g(rng), g(rng));
    const double nv = v.norm();
    if (nv > 1e-12) out.push_back(v / nv);
  }
  return out;
}

void sample_bound(FormBound& fb, const Eigen::Matrix4d& form, const std::vector<Eigen::Vector4d>& xs) {
  std::array<bool, 4> keep{};
  for (int i : fb.positive) keep[i] = true;
  for (int i : fb.allowance) keep[i] = true;
  double smin = 1e300, slack = 1e300;
  for (const auto& x0 : xs) {
    Eigen::Vector4d x = x0;
    for (int i = 0; i < 4; ++i) {
      if (!keep[i]) x(i) = 0.0;
    }
    const double n2 = x.squaredNorm();
    if (n2 < 1e-12) continue;
    const double f = x.dot(form * x);
    double p2 = 0.0, a2 = 0.0;
    for (int i : fb.positive) p2 += x(i) * x(i);
    for (int i : fb.allowance) a2 += x(i) * x(i);
    smin = std::min(smin, f / n2);
    slack = std::min(slack, (f - fb.c1 * p2 + fb.c2 * a2) / n2);
  }
  fb.sampled_min = smin;
  fb.sampled_slack = slack;
}

// K from the exact linear dependence of the form on the symmetric pairs (r_kl, r_lk).
double lipschitz_constant(const std::array<double, 4>& q, int i, double sign, const std::vector<int>& positive,
                          const Eigen::MatrixXd* basis) {
  double k = 0.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = a; b < 4; ++b) {
      Eigen::Matrix4d e = Eigen::Matrix4d::Zero();
      e(a, b) = 1.0;
      e(b, a) = 1.0;
      const Eigen::Matrix4d d = sign * form_matrix(e, q, i);
      Eigen::MatrixXd dp = basis ? Eigen::MatrixXd(basis->transpose() * d * *basis) : block(d, positive, positive);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dp, Eigen::EigenvaluesOnly);
      k += es.eigenvalues().cwiseAbs().maxCoeff();
    }
  }
  return k;
}

}  // namespace

FormBound constrained_bound(const Eigen::Matrix4d& form, std::vector<int> positive, std::vector<int> allowance) {
  FormBound fb;
  fb.positive = std::move(positive);
  fb.allowance = std::move(allowance);
  const Eigen::MatrixXd fpp = block(form, fb.positive, fb.positive);
  fb.lambda_min = min_eigen(fpp);
  fb.c1 = 0.5 * fb.lambda_min;
  fb.certified = fb.lambda_min > 0.0;
  if (fb.certified && !fb.allowance.empty()) {
    const Eigen::MatrixXd fap = block(form, fb.allowance, fb.positive);
    const Eigen::MatrixXd faa = block(form, fb.allowance, fb.allowance);
    const Eigen::MatrixXd shifted = fpp - fb.c1 * Eigen::MatrixXd::Identity(fpp.rows(), fpp.cols());
    const Eigen::MatrixXd schur = fap * shifted.ldlt().solve(fap.transpose()) - faa;
    const double need = max_eigen(0.5 * (schur + schur.transpose()));
    fb.c2 = std::max(0.0, need) * (1.0 + 1e-12) + 1e-14;
  }
  return fb;
}

std::array<double, 3> extension_coefficients(const Eigen::Matrix4d& r, const std::array<double, 4>& q) {
  const double r10 = r(1, 0);
  return {2.0 * r10 * q[1] - r(1, 1) * q[0] - r10 * std::abs(q[2]) - r10 * q[3],
          -q[0] * r(2, 2) - r10 * std::abs(q[2]), -q[0] * r(3, 3) - r10 * q[3]};
}

QuadraticFormReport verify_forms(const CoefficientSample& s, const MultiplierVector& q, const VerifyOptions& opt) {
  QuadraticFormReport rep;
  rep.q = q;
  rep.sample_count = opt.samples;
  rep.seed = opt.seed;
  const auto xs = sphere_samples(opt.samples, opt.seed);
  const Eigen::Matrix4d h0 = form_matrix(s.r, q.q, 0);
  const Eigen::Matrix4d h1 = form_matrix(s.r, q.q, 1);
  const Eigen::Matrix4d h3 = form_matrix(s.r, q.q, 3);

  auto add = [&](std::string name, const Eigen::Matrix4d& f, int i, double sign, std::vector<int> p,
                 std::vector<int> a) {
    FormBound fb = constrained_bound(f, std::move(p), std::move(a));
    fb.name = std::move(name);
    sample_bound(fb, f, xs);
    fb.lipschitz = lipschitz_constant(q.q, i, sign, fb.positive, nullptr);
    fb.delta_threshold = fb.lipschitz > 0.0 ? std::max(0.0, fb.lambda_min) / fb.lipschitz : 0.0;
    rep.bounds.push_back(fb);
  };

  switch (q.kind) {
    case MultiplierKind::dirichlet:
      add("H0 >= C1|grad_y w|^2 - C2|w_0|^2", h0, 0, 1.0, {1, 2, 3}, {0});
      add("-H1 >= C1|w_1|^2 - C2(|w_0|^2 + |w_2|^2 + |w_3|^2)", -h1, 1, -1.0, {1}, {0, 2, 3});
      add("-H3 >= C|w_3|^2 on y3 = 0 when w = 0 there", -h3, 3, -1.0, {3}, {});
      break;
    case MultiplierKind::extension: {
      add("H0 >= C1|grad_y w|^2 - C2|w_0|^2", h0, 0, 1.0, {1, 2, 3}, {0});
      add("-H1 >= C1|w_3|^2 - C2(|w_0|^2 + |w_1|^2 + |w_2|^2)", -h1, 1, -1.0, {3}, {0, 1, 2});
      add("-H3 >= C|w_3|^2 on y3 = 0", -h3, 3, -1.0, {3}, {});
      const auto c = extension_coefficients(s.r, q.q);
      rep.displayed_coefficients.assign(c.begin(), c.end());
      break;
    }
    case MultiplierKind::first_order: {
      add("H0 >= C|Dw|^2", h0, 0, 1.0, {0, 1, 2, 3}, {});
      // -H1 on the kernel of (b0, b1, b2, b3).
      const Eigen::Vector4d bv(s.b[1], s.b[2], s.b[3], s.b[4]);
      Eigen::JacobiSVD<Eigen::Matrix<double, 1, 4>> svd(bv.transpose(), Eigen::ComputeFullV);
      const Eigen::MatrixXd basis = svd.matrixV().rightCols(3);
      FormBound fb;
      fb.name = "-H1 >= C|Dw|^2 on ker B";
      fb.positive = {0, 1, 2, 3};
      const Eigen::MatrixXd restricted = basis.transpose() * (-h1) * basis;
      fb.lambda_min = min_eigen(restricted);
      fb.c1 = 0.5 * fb.lambda_min;
      fb.certified = fb.lambda_min > 0.0;
      double smin = 1e300;
      for (const auto& x : xs) {
        const Eigen::Vector4d y = basis * (basis.transpose() * x);
        if (y.squaredNorm() < 1e-12) continue;
        smin = std::min(smin, -y.dot(h1 * y) / y.squaredNorm());
      }
      fb.sampled_min = smin;
      fb.sampled_slack = smin - fb.c1;
      fb.lipschitz = lipschitz_constant(q.q, 1, -1.0, fb.positive, &basis);
      fb.delta_threshold = fb.lipschitz > 0.0 ? std::max(0.0, fb.lambda_min) / fb.lipschitz : 0.0;
      rep.bounds.push_back(fb);
      break;
    }
  }
  rep.certified = std::all_of(rep.bounds.begin(), rep.bounds.end(), [](const FormBound& b) { return b.certified; });
  for (double c : rep.displayed_coefficients) rep.certified = rep.certified && c > 0.0;
  return rep;
}

namespace {

double qd_score(const CoefficientSample& s, const MultiplierVector& q) {
  VerifyOptions opt;
  opt.samples = 0;
  const auto rep = verify_forms(s, q, opt);
  if (!rep.certified) return -1.0;
  double worst = 1e300;
  for (const auto& b : rep.bounds) worst = std::min(worst, b.lambda_min);
  const double norm = std::sqrt(q.q[0] * q.q[0] + q.q[1] * q.q[1] + q.q[2] * q.q[2] + q.q[3] * q.q[3]);
  return worst / norm;
}

}  // namespace

MultiplierVector build_Qd(const Eigen::Matrix4d& r, std::array<double, 4> seed) {
  CoefficientSample s;
  s.r = r;
  MultiplierVector best{seed, MultiplierKind::dirichlet};
  double best_score = -1.0;
  for (double a : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    for (double c : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      MultiplierVector q{{seed[0] * a, seed[1], seed[2], seed[3] * c}, MultiplierKind::dirichlet};
      const double sc = qd_score(s, q);
      if (sc > best_score) {
        best_score = sc;
        best = q;
      }
    }
  }
  if (!(best_score > 0.0)) {
    throw FormNotCoercive("no Dirichlet multiplier candidate certifies the interior and boundary forms");
  }
  return best;
}

MultiplierVector build_Qe(const Eigen::Matrix4d& r, double q1, double q2, double q3, double factor) {
  const double r10 = r(1, 0);
  const double m = std::max({(-2.0 * r10 * q1 + r10 * std::abs(q2) + r10 * q3) / (-r(1, 1)),
                             r10 * std::abs(q2) / (-r(2, 2)), r10 * q3 / (-r(3, 3))});
  MultiplierVector q{{factor * m, q1, q2, q3}, MultiplierKind::extension};
  CoefficientSample s;
  s.r = r;
  VerifyOptions opt;
  opt.samples = 0;
  if (!verify_forms(s, q, opt).certified) {
    throw FormNotCoercive("extension multiplier with Q0 = " + std::to_string(q.q[0]) + " is not certified");
  }
  return q;
}

MultiplierVector build_Q_first_order(const CoefficientSample& s) {
  const double b1 = s.b[2];
  if (!(std::abs(b1) > 0.0)) throw FormNotCoercive("b1 vanishes; first-order multiplier undefined");
  std::array<double, 4> bt{}, nn{};
  for (int j = 0; j < 4; ++j) {
    bt[j] = s.r(1, 1) * s.b[1 + j] / b1 - s.r(j, 1);
    nn[j] = -s.r(j, 1);
  }
  const Eigen::Matrix4d rinv = s.r.inverse();
  double nu = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) nu += rinv(i, j) * bt[i] * bt[j];
  }
  if (!(std::abs(bt[0]) > 0.0)) throw FormNotCoercive("B~_0 vanishes; first-order multiplier undefined");
  const double w = std::abs(nu * s.r(0, 1) / bt[0]);
  MultiplierVector q;
  q.kind = MultiplierKind::first_order;
  for (int j = 0; j < 4; ++j) q.q[j] = bt[j] + nu * (bt[j] - nn[j]) + w * bt[j];
  return q;
}

H4Values h4_values(const CoefficientSample& s) {
  H4Values h;
  const double b1 = s.b[2];
  h.b1_abs = std::abs(b1);
  h.second = s.r(1, 1) * s.b[1] / b1 - s.r(0, 1);
  const Eigen::Matrix4d rinv = s.r.inverse();
  std::array<double, 4> bt{};
  for (int i = 0; i < 4; ++i) bt[i] = s.r(1, 1) * s.b[1 + i] / b1 - s.r(i, 1);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) h.third += rinv(i, j) * bt[i] * bt[j];
  }
  h.third_closed = rinv(0, 0) * h.second * h.second;
  return h;
}

H4Values h4_background_formulas(const ShockBackground& bg) {
  H4Values h;
  const double d = bg.jump(), c2 = bg.c_plus_sq(), q = bg.q_plus, qm = bg.q_minus;
  const double rp = bg.rho_plus, rm = bg.rho_minus;
  const auto bb = background_boundary_formulas(bg);
  h.b1_abs = std::abs(bb.b1);
  h.second_closed = c2 * (rp - rm) / (d * d * rp);
  h.second = h.second_closed;
  h.second_chain = (-q * rp - c2 * (rm - rp) - q * (q - qm) * rp) / (d * rp);
  h.chain_bound = q / (d * rp) * (qm * rp - q * rm - rp);
  const double r00_inv = d * d * (c2 - q * q) / c2;
  h.third_closed = r00_inv * h.second_closed * h.second_closed;
  h.third = h.third_closed;
  return h;
}

HypothesisReport check_hypotheses(const ShockBackground& bg, const std::vector<CoefficientSample>& field, double delta,
                                  double h3_measure) {
  HypothesisReport rep;
  const auto base = background_coefficients(bg);
  const auto& r = base.r;
  const double tiny = 1e-12 * r.cwiseAbs().maxCoeff();
  rep.h1_sign_pattern = r(1, 0) > 0 && std::abs(r(1, 2)) <= tiny && std::abs(r(0, 2)) <= tiny &&
                        std::abs(r(3, 3) - r(2, 2)) <= tiny && r(3, 3) < 0 && std::abs(r(3, 0)) <= tiny &&
                        std::abs(r(3, 1)) <= tiny && std::abs(r(3, 2)) <= tiny && r(1, 1) < 0;

  bool hyperbolic = true;
  for (const auto& s : field) {
    ++rep.samples;
    const double sc = std::max(1.0, s.r.cwiseAbs().maxCoeff());
    if (std::abs(s.r.determinant()) < 1e-12 * sc * sc * sc * sc) {
      throw SingularPrincipalPart("principal part is singular at a sample");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(s.r, Eigen::EigenvaluesOnly);
    const auto ev = es.eigenvalues();
    hyperbolic = hyperbolic && ev(0) < 0 && ev(1) < 0 && ev(2) < 0 && ev(3) > 0 && s.r(0, 0) > 0;
    if (s.on_wall) {
      ++rep.wall_samples;
      rep.h1_wall_max = std::max({rep.h1_wall_max, std::abs(s.r(3, 2)), std::abs(s.r(3, 1)), std::abs(s.r(3, 0)),
                                  std::abs(s.r_first[2])});
      rep.h2_wall_b3_max = std::max(rep.h2_wall_b3_max, std::abs(s.b[4]));
    }
  }
  rep.h1_hyperbolic = hyperbolic;
  rep.h2_background_max = std::max({std::abs(base.b[0]), std::abs(base.b[3]), std::abs(base.b[4])});
  rep.h3_measure = h3_measure;
  rep.h3_delta = delta;
  rep.h3_ok = h3_measure < delta;

  rep.h4 = h4_values(base);
  const auto closed = h4_background_formulas(bg);
  rep.h4.second_closed = closed.second_closed;
  rep.h4.second_chain = closed.second_chain;
  rep.h4.chain_bound = closed.chain_bound;
  rep.gamma0 = std::min({rep.h4.b1_abs, rep.h4.second, rep.h4.third});
  rep.scale = std::max({rep.h4.b1_abs, std::abs(rep.h4.second), std::abs(rep.h4.third)});
  rep.h4_ok = rep.gamma0 > 1e-3 * rep.scale;
  rep.extra_condition = check_stability_condition(bg).stable;
  return rep;
}

}  // namespace dshock
