#include <chrono>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "dihedral_shock/acceptance.hpp"

using namespace dshock;

namespace {

void print(const CheckResult& r) {
  std::printf("criterion %d %s: %s (%s, %.1f s)\n", r.id, r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(),
              r.seconds);
  std::fflush(stdout);
}

template <class F>
CheckResult guarded(int id, const std::string& name, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    CheckResult r;
    r.id = id;
    r.name = name;
    r.detail = std::string("error: ") + e.what();
    return r;
  }
}

}  // namespace

int main() {
  const auto bg = lambda_background(1.7, 1.4);
  std::vector<CheckResult> results;
  auto run = [&](CheckResult r) {
    print(r);
    results.push_back(std::move(r));
  };

  run(guarded(1, "lambda family", [] { return check_lambda_family(); }));
  run(guarded(2, "background table", [&] { return check_background_table(bg); }));
  run(guarded(3, "wall identity suite", [&] {
    IdentityOptions opt;
    opt.samples = 500;
    return check_identity_suite(bg, random_walls(1e-2, 3), opt);
  }));
  run(guarded(4, "closed form against J^T A J", [&] {
    IdentityOptions opt;
    opt.samples = 1000;
    opt.seed = 4;
    return check_cross_check(bg, random_walls(1e-2, 4), opt);
  }));
  run(guarded(5, "multiplier certificates", [] { return check_multipliers(admissible_test_states()); }));

  LinearVerification lin;
  double lin_seconds = 0.0;
  bool lin_ok = true;
  std::string lin_error;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    lin = linear_verification(bg, LinearCheckOptions{});
    lin_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  } catch (const std::exception& e) {
    lin_ok = false;
    lin_error = e.what();
  }
  for (int id : {6, 7}) {
    CheckResult r;
    if (lin_ok) {
      r = id == 6 ? check_linear_solver(lin) : check_energy_estimate(lin);
      r.seconds = lin_seconds;
    } else {
      r.id = id;
      r.name = id == 6 ? "linear solver verification" : "energy estimate ratio";
      r.detail = "error: " + lin_error;
    }
    run(r);
  }

  run(guarded(8, "nonlinear stability", [&] {
    const NonlinearConfig cfg;
    const auto t0 = std::chrono::steady_clock::now();
    auto r = check_nonlinear(epsilon_scaling(bg, cfg), cfg);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }));
  run(guarded(9, "negative controls", [] { return check_negative_controls(); }));

  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
