#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dihedral_shock/background_states.hpp"
#include "dihedral_shock/errors.hpp"

namespace dshock {

// Box y1 in [0, L1], y2 in [-L2, L2], y3 in [0, L3] with N1 x N2 x N3 intervals.
struct GridSpec {
  std::array<double, 3> extent{1.0, 1.0, 1.0};
  std::array<int, 3> n{32, 8, 32};
  double dt = 0.0;  // 0 selects the step from the CFL bound
  double t_final = 0.2;
  double cfl_safety = 0.5;
  double eta = 1.0;
  int window_margin = 2;  // nodes dropped next to the artificial boundaries in the norms
};

class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int n1() const { return spec_.n[0]; }
  int n2() const { return spec_.n[1]; }
  int n3() const { return spec_.n[2]; }
  int nk() const { return 2 * spec_.n[2] + 1; }  // y3 nodes of the extended grid
  double h(int axis) const { return h_[axis]; }
  double h_min() const;

  double y1(int i) const { return i * h_[0]; }
  double y2(int j) const { return -spec_.extent[1] + j * h_[1]; }
  double y3(int k) const { return k * h_[2]; }                  // dihedral index k >= 0
  double y3_ext(int k) const { return (k - n3()) * h_[2]; }     // extended index

  std::size_t dihedral_size() const { return std::size_t(n1() + 1) * (n2() + 1) * (n3() + 1); }
  std::size_t extended_size() const { return std::size_t(n1() + 1) * (n2() + 1) * nk(); }
  std::size_t face_dihedral_size() const { return std::size_t(n2() + 1) * (n3() + 1); }
  std::size_t face_extended_size() const { return std::size_t(n2() + 1) * nk(); }

  std::size_t dih(int i, int j, int k) const { return (std::size_t(i) * (n2() + 1) + j) * (n3() + 1) + k; }
  std::size_t ext(int i, int j, int k) const { return (std::size_t(i) * (n2() + 1) + j) * nk() + k; }
  std::size_t face_dih(int j, int k) const { return std::size_t(j) * (n3() + 1) + k; }
  std::size_t face_ext(int j, int k) const { return std::size_t(j) * nk() + k; }

 private:
  GridSpec spec_;
  std::array<double, 3> h_{};
};

// Fields of L' = sum_ij r_ij d_ij + sum_i r_i d_i + r with right-hand side f.
enum InteriorField : int {
  kR00, kR01, kR02, kR03, kR11, kR12, kR13, kR22, kR23, kR33,
  kRd0, kRd1, kRd2, kRd3, kRz, kF, kInteriorFieldCount
};
// Fields of B = b + sum_i b_i d_i with data g on y1 = 0.
enum BoundaryField : int { kB, kB0, kB1, kB2, kB3, kG, kBoundaryFieldCount };

bool is_odd(InteriorField f);
bool is_odd(BoundaryField f);
std::string field_name(InteriorField f);
std::string field_name(BoundaryField f);

// Coefficients and data at one time level, on the dihedral grid (y3 >= 0) or,
// after extend_problem, on the extended grid.
struct CoefficientSlice {
  double t = 0.0;
  bool extended = false;
  std::array<std::vector<double>, kInteriorFieldCount> interior;
  std::array<std::vector<double>, kBoundaryFieldCount> boundary;

  void resize(const Grid& g, bool ext);
};

struct InteriorCoefficients {
  Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
  std::array<double, 4> r_first{};
  double r0 = 0.0;
  double f = 0.0;
};

struct BoundaryCoefficients {
  std::array<double, 5> b{};  // (b, b0, b1, b2, b3)
  double g = 0.0;
};

// The linear problem on the dihedral domain. Point evaluations are for
// y3 >= 0; fill() may be overridden by problems that live on the grid.
class LinearProblem {
 public:
  virtual ~LinearProblem() = default;
  virtual InteriorCoefficients interior(double t, const std::array<double, 3>& y) const = 0;
  virtual BoundaryCoefficients boundary(double t, double y2, double y3) const = 0;
  virtual double initial_w(const std::array<double, 3>&) const { return 0.0; }
  virtual double initial_v(const std::array<double, 3>&) const { return 0.0; }
  virtual bool has_initial_data() const { return false; }
  virtual void fill(double t, const Grid& grid, CoefficientSlice& slice) const;
};

// Odd extension of r03, r13, r23, r3 and b3, even extension of the rest.
// Throws VanishingViolation if an odd field exceeds 1e-8 x scale on y3 = 0.
CoefficientSlice extend_problem(const Grid& grid, const CoefficientSlice& dihedral);

// Upper bound of the characteristic speeds of the principal symbol at a node of a slice.
double characteristic_speed(const CoefficientSlice& slice, std::size_t node);
double max_characteristic_speed(const CoefficientSlice& slice);

struct StepRecord {
  int step = 0;
  double t = 0.0;
  double interior_l2 = 0.0;
  double trace_l2 = 0.0;
  double evenness_defect = 0.0;
  double neumann_residual = 0.0;
  double cfl = 0.0;
};

// Per time sample (midpoints of the steps), the sums over |alpha| = s of ||D^alpha w||^2.
struct EnergyLedger {
  static constexpr int s_max = 2;
  double dt = 0.0;
  double t_final = 0.0;
  std::vector<double> times;
  std::array<std::vector<double>, s_max + 1> interior;
  std::array<std::vector<double>, s_max + 1> trace;
  std::array<double, s_max + 1> slice_sup{};
  std::array<double, s_max + 1> slice_final{};
  std::array<std::vector<double>, s_max> f_norm;  // |alpha| = 0, 1
  std::array<std::vector<double>, s_max> g_norm;
  double coefficient_norm = 0.0;  // squared perturbation norm of the coefficient state
};

struct SolutionField {
  std::vector<double> w;  // dihedral grid, final time
  std::vector<double> v;
  std::vector<double> trace_shock;  // w on y1 = 0, y3 >= 0
  std::vector<double> trace_wall;   // w on y3 = 0
  double evenness_defect = 0.0;
  double neumann_residual = 0.0;
  // Optional history at every half step: levels 0, 1/2, 1, ..., n_steps.
  std::vector<double> history_times;
  std::vector<std::vector<double>> w_history;
  std::vector<std::vector<double>> v_history;
};

struct SolveOptions {
  bool store_history = false;
  bool record_ledger = true;
  double boundary_b1_reference = 0.0;  // |b1| at the background; 0 uses the first slice
};

struct LpResult {
  SolutionField solution;
  EnergyLedger ledger;
  std::vector<StepRecord> steps;
  double dt = 0.0;
  int n_steps = 0;
  double v_max = 0.0;
};

LpResult solve_lp(const LinearProblem& problem, const GridSpec& spec, const SolveOptions& opt = {});

void write_step_csv(const std::string& path, const std::vector<StepRecord>& steps);

struct EstimatePoint {
  double eta = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct EstimateReport {
  int s = 1;
  double eta0 = 0.0;
  std::vector<EstimatePoint> points;
  double spread = 0.0;  // max ratio / min ratio over the eta grid
  bool bounded = false;
};

EstimatePoint estimate_at(const EnergyLedger& ledger, double eta, int s);
// Ratio over {eta0, 2 eta0, 4 eta0, 8 eta0}; bounded iff spread <= max_spread.
EstimateReport measure_estimate(const EnergyLedger& ledger, double eta0, int s, double max_spread = 3.0);
// Smallest candidate eta0 whose grid is bounded; the last candidate's report otherwise.
EstimateReport find_eta0(const EnergyLedger& ledger, int s, const std::vector<double>& candidates,
                         double max_spread = 3.0);

struct CompatibilityPoint {
  std::array<double, 3> y{};
  std::array<double, 3> w_t{};  // d_t^m w at t = 0, m = 0..2
};

struct CompatibilityReport {
  int order = 0;
  int points_checked = 0;
  double max_boundary_defect = 0.0;  // d_t^m (B w - g), m < order, on y1 = 0
  double max_wall_defect = 0.0;      // d_t^m d3 w, m < order, on y3 = 0
  std::vector<CompatibilityPoint> points;
};

struct CompatibilityOptions {
  int order = 2;
  int samples_per_axis = 5;
  double tolerance = 1e-8;
  double step = 1e-3;
};

// Time-derivative traces at t = 0 from the equation and the identities of the
// two boundary faces. Throws IncompatibleData at the first violated identity.
CompatibilityReport build_compatible_data(const LinearProblem& problem, const GridSpec& spec,
                                          const CompatibilityOptions& opt = {});

// Constant background coefficients with a polynomial bump solution.
struct ManufacturedOptions {
  double omega = 2.0;
  bool sin4_profile = true;     // tau = sin^4(omega t), else sin(omega t)
  double center_y1 = 0.2;
  double radius_y1 = 0.6;
  double radius_y3 = 0.7;
  double perturbation = 0.0;    // relative size of a smooth admissible coefficient perturbation
  double inject_b3 = 0.0;       // constant added to b3, breaks the wall vanishing
  double inject_g = 0.0;        // constant added to g, breaks compatibility
};

class ManufacturedProblem : public LinearProblem {
 public:
  ManufacturedProblem(const ShockBackground& bg, const ManufacturedOptions& opt);

  InteriorCoefficients interior(double t, const std::array<double, 3>& y) const override;
  BoundaryCoefficients boundary(double t, double y2, double y3) const override;
  double initial_w(const std::array<double, 3>& y) const override { return exact(0.0, y); }
  double initial_v(const std::array<double, 3>& y) const override;
  bool has_initial_data() const override { return !opt_.sin4_profile; }

  double exact(double t, const std::array<double, 3>& y) const;
  // Value, gradient (t, y1, y2, y3) and Hessian of w* at a point.
  void exact_derivs(double t, const std::array<double, 3>& y, double& w, Eigen::Vector4d& dw,
                    Eigen::Matrix4d& d2w) const;

 private:
  InteriorCoefficients operator_at(double t, const std::array<double, 3>& y) const;
  BoundaryCoefficients boundary_operator_at(double t, double y2, double y3) const;

  ShockBackground bg_;
  ManufacturedOptions opt_;
  Eigen::Matrix4d r_bg_;
  std::array<double, 5> b_bg_{};
};

// Constant background coefficients, f = 0, and initial data from a profile
// moving along y1 with the given speed; g = B F on y1 = 0.
class TravellingWaveProblem : public LinearProblem {
 public:
  TravellingWaveProblem(const ShockBackground& bg, double center, double radius, double speed);
  InteriorCoefficients interior(double t, const std::array<double, 3>& y) const override;
  BoundaryCoefficients boundary(double t, double y2, double y3) const override;
  double initial_w(const std::array<double, 3>& y) const override { return exact(0.0, y); }
  double initial_v(const std::array<double, 3>& y) const override;
  bool has_initial_data() const override { return true; }
  double exact(double t, const std::array<double, 3>& y) const;

 private:
  double profile(double s, int derivative) const;
  ShockBackground bg_;
  Eigen::Matrix4d r_bg_;
  std::array<double, 5> b_bg_{};
  double center_, radius_, speed_;
};

// Background coefficients, f = g = 0 and initial w = (1 - |y - c|^2 / R^2)^power.
class BallDataProblem : public LinearProblem {
 public:
  BallDataProblem(const ShockBackground& bg, std::array<double, 3> center, double radius, int power = 6);
  InteriorCoefficients interior(double t, const std::array<double, 3>& y) const override;
  BoundaryCoefficients boundary(double t, double y2, double y3) const override;
  double initial_w(const std::array<double, 3>& y) const override;
  bool has_initial_data() const override { return true; }
  const std::array<double, 3>& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Eigen::Matrix4d r_bg_;
  std::array<double, 5> b_bg_{};
  std::array<double, 3> center_;
  double radius_;
  int power_;
};

// Polynomial bump (1 - s^2)^6 on |s| < 1 and its derivatives up to order 2.
double poly_bump(double s, int derivative = 0);

// Error of a solution against a reference on the restricted window.
struct ErrorNorms {
  double interior_l2 = 0.0;
  double trace_l2 = 0.0;
  double max_abs = 0.0;
};
ErrorNorms solution_error(const Grid& grid, const std::vector<double>& w,
                          const std::function<double(const std::array<double, 3>&)>& reference);

// Manufactured-solution refinement on the thin-y2 box [0,1] x [-1/4,1/4] x [0,1].
struct RefinementLevel {
  int n1 = 0;
  double h = 0.0;
  int steps = 0;
  double error_l2 = 0.0;
  double trace_error = 0.0;
  double evenness = 0.0;
  double neumann = 0.0;
  double solution_max = 0.0;
};

struct RefinementStudy {
  std::vector<RefinementLevel> levels;
  std::vector<double> error_ratios;  // e(h) / e(h/2)
  std::vector<double> trace_orders;
  std::vector<double> neumann_orders;
  std::vector<double> evenness_orders;  // empty when every level is at round-off
  bool evenness_at_roundoff = false;    // every defect <= 1e-12 x max|w|
  std::vector<EnergyLedger> ledgers;    // one per level
};

RefinementStudy manufactured_refinement(const ShockBackground& bg, const ManufacturedOptions& opt,
                                        const std::vector<int>& n1_levels, double t_final = 0.5);

// Data from BallDataProblem with a (1 - r^2)^8 profile; max |w(T)| outside radius R + v_max T + 2h.
struct LeakageReport {
  int n = 0;
  double t_final = 0.0;
  double radius = 0.0;
  double inflated_radius = 0.0;
  double v_max = 0.0;
  double leakage = 0.0;
  double inside_max = 0.0;
};

LeakageReport finite_speed_leakage(const ShockBackground& bg, int n_per_unit = 64, double t_final = 0.2,
                                   double radius = 0.4);

// Travelling profile at speed Delta (q+ + c+) along y1: L2 error per refinement.
struct TravellingWaveStudy {
  std::vector<int> n1;
  std::vector<double> errors;
  std::vector<double> ratios;
  double speed = 0.0;
};

TravellingWaveStudy travelling_wave_refinement(const ShockBackground& bg, const std::vector<int>& n1_levels,
                                               double t_final = 0.2);

}  // namespace dshock
