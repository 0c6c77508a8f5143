#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dihedral_shock/background_states.hpp"
#include "dihedral_shock/coefficients.hpp"
#include "dihedral_shock/linear_solver.hpp"
#include "dihedral_shock/wall_geometry.hpp"

namespace dshock {

// One node of the reformulated problem: u = kappa(ubar, y2, y3) with the
// frozen principal part kappa_ubar a_tilde and the first-order remainder F.
struct NodeState {
  KappaJet kappa;
  double u = 0.0;
  std::array<double, 4> du{};     // derivatives of u in (y0, y1, y2, y3)
  std::array<double, 4> dubar{};  // derivatives of ubar
  CoefficientBundle bundle;
  Eigen::Matrix4d r = Eigen::Matrix4d::Zero();  // kappa_ubar a_tilde
  double F = 0.0;
  StateSample sample;
};

// F(ubar, D ubar) grouped as the kappa chain-rule terms, the first-order
// a_tilde terms and the upstream source.
double assemble_F(const CoefficientBundle& b, const KappaJet& k, const std::array<double, 4>& dubar,
                  const std::array<double, 4>& du);

// Throws RegimeExit when the state leaves the admissible region.
NodeState evaluate_node(const ShockBackground& bg, const WallSpec& wall, const UpstreamField& up, double t,
                        const std::array<double, 3>& y, double ubar, const std::array<double, 4>& dubar);

// G(kappa(ubar), D kappa(ubar)) at a node of y1 = 0.
double evaluate_G(const ShockBackground& bg, const WallSpec& wall, const UpstreamField& up, double t, double y2,
                  double y3, double ubar, const std::array<double, 4>& dubar);

// Finite differences of dihedral fields through the even reflection across
// y3 = 0, central inside and one-sided (second order) on the other faces.
struct FieldDerivatives {
  std::array<std::vector<double>, 3> d1;      // d/dy1, d/dy2, d/dy3
  std::array<std::vector<double>, 6> d2;      // 11, 12, 13, 22, 23, 33
};
FieldDerivatives field_derivatives(const Grid& grid, const std::vector<double>& f, bool second = true);
int hessian_slot(int i, int j);  // spatial indices 1..3

// Time-derivative traces of ubar at y0 = 0 and the quadratic Taylor polynomial psi.
struct TaylorSeed {
  int k_max = 2;
  std::array<std::vector<double>, 3> ubar;  // ubar_0, ubar_1, ubar_2 on the dihedral grid
  std::array<FieldDerivatives, 3> d;        // spatial derivatives of each trace
  double min_principal = 0.0;               // min of kappa_ubar a_tilde_00 over the grid

  // psi and its y0 derivatives at one node.
  double psi(double t, std::size_t node) const;
  double psi_t(double t, std::size_t node) const;
};

using ScalarField = std::function<double(const std::array<double, 3>&)>;

// u0 with ubar_0 = u_b: the background carried through kappa.
ScalarField wall_adapted_background(const ShockBackground& bg, const WallSpec& wall);

struct SeedOptions {
  int k_max = 2;
  double compatibility_tolerance = 1e-8;
};

TaylorSeed build_seed(const ShockBackground& bg, const WallSpec& wall, const UpstreamField& up, const Grid& grid,
                      const ScalarField& u0, const ScalarField& u1, const SeedOptions& opt = {});

// Coefficient slices of one sweep on the half-step levels 0, dt/2, ..., T.
class FrozenProblem : public LinearProblem {
 public:
  FrozenProblem(double dt, std::vector<CoefficientSlice> slices);
  InteriorCoefficients interior(double t, const std::array<double, 3>& y) const override;
  BoundaryCoefficients boundary(double t, double y2, double y3) const override;
  void fill(double t, const Grid& grid, CoefficientSlice& slice) const override;
  const std::vector<CoefficientSlice>& slices() const { return slices_; }

 private:
  std::size_t level(double t) const;
  double dt_;
  std::vector<CoefficientSlice> slices_;
};

// Iterate utilde on the half-step levels together with its y0 derivative.
struct Iterate {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> v;
};

struct NonlinearContext {
  ShockBackground bg;
  WallSpec wall;
  UpstreamField up;
  GridSpec spec;
  TaylorSeed seed;
  std::array<double, 5> b_background{};
};

// Frozen coefficients and data of one sweep: r = kappa_ubar a_tilde^m, f = F_m - kappa_ubar a_tilde^m d_ij psi,
// B = kappa_ubar b at the background and g = B utilde_m - G_m.
std::vector<CoefficientSlice> assemble_sweep(const NonlinearContext& ctx, const Iterate& it, int n_levels);

struct SweepResult {
  Iterate next;
  LpResult lp;
};

SweepResult picard_sweep(const NonlinearContext& ctx, const Iterate& current, int n_levels);

struct ResidualNorms {
  double interior = 0.0;
  double boundary = 0.0;
  double total() const { return interior + boundary; }
};

// Defect of an iterate in the discrete nonlinear system, from the slices it
// was computed with and the slices it generates.
ResidualNorms discrete_residual(const Grid& grid, double dt, const Iterate& it,
                                const std::vector<CoefficientSlice>& used,
                                const std::vector<CoefficientSlice>& produced);

struct PerturbationSpec {
  double epsilon = 1e-3;
  WallParams wall;          // amplitude is scaled by epsilon
  UpstreamParams upstream;  // epsilon field is scaled by epsilon
  double wall_scale = 1.0;
  double upstream_scale = 1.0;
};

struct NonlinearConfig {
  GridSpec grid;
  PerturbationSpec perturbation;
  int m_max = 30;
  double tol_fix = 1e-10;
  double absolute_floor = 1e-14;  // iterates and differences below this norm count as zero
  double cfl_target = 0.45;       // fixed step from the background speed
  double eta = 1.0;               // weight of the monitors
  double budget = 1.0;            // epsilon_0^2 for the high-norm monitor
  int no_contraction_limit = 3;
  double residual_tolerance = 1e-8;

  NonlinearConfig();
};

struct SweepRecord {
  int m = 0;
  double high_norm = 0.0;    // E_{m+1}, s = 2
  double difference = 0.0;   // d_m, s = 1, relative
  double difference_abs = 0.0;
  double ratio = 0.0;        // d_m / d_{m-1}
  bool within_budget = true;
  ResidualNorms residual;    // of utilde_{m+1}
};

struct ShockTracePoint {
  double t = 0.0, x2 = 0.0, x3 = 0.0, X = 0.0;
};

struct IterationReport {
  double epsilon = 0.0;
  StabilityReport stability;
  std::vector<SweepRecord> sweeps;
  std::vector<double> ratios;
  double sigma0 = 0.0;  // largest ratio
  bool converged = false;
  int sweeps_used = 0;
  double final_residual = 0.0;
  double final_residual_relative = 0.0;
  double shock_deviation = 0.0;  // sup |X| away from the artificial faces
  double dt = 0.0;
  int n_steps = 0;
  double roundtrip_error = 0.0;  // forward_map of the recovered front against (0, y2, y3)
  std::vector<ShockTracePoint> trace;
};

// Refuses inadmissible backgrounds with InadmissibleBackground.
IterationReport run_stability_experiment(const ShockBackground& bg, const NonlinearConfig& cfg);

void write_shock_trace_csv(const std::string& path, const std::vector<ShockTracePoint>& trace);
void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& sweeps);

struct ScalingStudy {
  IterationReport full;
  IterationReport half;
  double deviation_ratio = 0.0;
};

ScalingStudy epsilon_scaling(const ShockBackground& bg, const NonlinearConfig& cfg);

}  // namespace dshock
