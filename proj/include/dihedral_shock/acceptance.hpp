#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dihedral_shock/background_states.hpp"
#include "dihedral_shock/linear_solver.hpp"
#include "dihedral_shock/nonlinear_driver.hpp"
#include "dihedral_shock/stability_analysis.hpp"
#include "dihedral_shock/wall_geometry.hpp"

namespace dshock {

using Json = nlohmann::ordered_json;

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  Json metrics = Json::object();
  double seconds = 0.0;
};

Json to_json(const CheckResult& c, bool with_timing = false);

// --- background ---------------------------------------------------------

struct LambdaFamilyCheck {
  double lambda = 0.0, gamma = 0.0;
  double jump_rel_error = 0.0;       // max over (q+, rho+)
  double stability_rel_error = 0.0;  // value against (lambda^2 - lambda - 1) rho-
  bool sign_ok = false;
};

std::vector<LambdaFamilyCheck> lambda_family_checks(const std::vector<double>& lambdas,
                                                    const std::vector<double>& gammas);
CheckResult check_lambda_family(const std::vector<double>& lambdas = {1.1, 1.3, 1.5},
                                const std::vector<double>& gammas = {1.4, 5.0 / 3.0});

struct BackgroundTable {
  Eigen::Matrix4d a_tilde = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d closed_form = Eigen::Matrix4d::Zero();
  double a2 = 0.0, a3 = 0.0;
  double table_rel_error = 0.0;  // over the ten entries and a2, a3
  std::array<double, 5> b{};
  BackgroundBoundary b_closed;
  double boundary_rel_error = 0.0;
};

BackgroundTable background_table(const ShockBackground& bg);
CheckResult check_background_table(const ShockBackground& bg);

// Verdict and coefficient table of one configured background.
CheckResult check_background_state(const ShockBackground& bg);

// --- identities ---------------------------------------------------------

// Wall of sample number i.
using WallSource = std::function<WallSpec(std::uint64_t i)>;
WallSource random_walls(double amplitude, std::uint64_t seed);

struct IdentityOptions {
  int samples = 500;
  std::uint64_t seed = 1;
  double upstream_epsilon = 0.05;
};

struct IdentitySuite {
  int samples = 0;
  double vanishing_max = 0.0;  // max(|a03|, |a13|, |a23|, |b3|) / coefficient scale on y3 = 0
  double p_condition_max = 0.0;
  double slip_max = 0.0;
  double cross_check_max = 0.0;  // closed form against J^T A J, off the wall
};

IdentitySuite identity_suite(const ShockBackground& bg, const WallSource& walls, const IdentityOptions& opt,
                             bool wall_samples, bool cross_samples);

CheckResult check_identity_suite(const ShockBackground& bg, const WallSource& walls, const IdentityOptions& opt);
CheckResult check_cross_check(const ShockBackground& bg, const WallSource& walls, const IdentityOptions& opt);

// --- multipliers --------------------------------------------------------

struct MultiplierCertificate {
  std::string label;
  MultiplierVector qd, qe;
  QuadraticFormReport rd, re;
  double min_margin = 0.0;  // min over bounds of lambda_min / form scale
  double delta_star = 0.0;  // min perturbation threshold
};

MultiplierCertificate multiplier_certificate(const ShockBackground& bg, const std::string& label,
                                             const VerifyOptions& opt = {});
std::vector<ShockBackground> admissible_test_states();
CheckResult check_multipliers(const std::vector<ShockBackground>& states, const VerifyOptions& opt = {});

// --- linear -------------------------------------------------------------

struct LinearCheckOptions {
  std::vector<int> n1_levels{16, 32, 64};
  double perturbation = 0.05;
  double t_final = 0.5;
  std::vector<double> eta_candidates{0.5, 1, 2, 4, 8, 16, 32};
  int leakage_n = 64;
  double leakage_t = 0.2;
  double leakage_radius = 0.4;
};

struct LinearVerification {
  RefinementStudy study;
  std::vector<double> orders;  // log2 of the error ratios
  LeakageReport leakage;
  std::array<EstimateReport, 2> estimate;  // s = 1, 2
};

LinearVerification linear_verification(const ShockBackground& bg, const LinearCheckOptions& opt);
CheckResult check_linear_solver(const LinearVerification& v);
CheckResult check_energy_estimate(const LinearVerification& v);

// --- nonlinear ----------------------------------------------------------

CheckResult check_nonlinear(const ScalingStudy& s, const NonlinearConfig& cfg);

// --- negative controls --------------------------------------------------

CheckResult check_negative_controls();

}  // namespace dshock
