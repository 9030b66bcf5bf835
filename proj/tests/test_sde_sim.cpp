#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "slq/errors.hpp"
#include "slq/sde_sim.hpp"

using namespace slq;

namespace {

SystemDynamics sec5_system() {
  SystemDynamics sys;
  sys.A.resize(2, 2);
  sys.A << -1.0, 2.0, 2.2, 1.7;
  sys.B.resize(2, 1);
  sys.B << 2.0, 1.6;
  sys.C.resize(2, 2);
  sys.C << 0.1, 0.2, 0.2, 0.1;
  sys.D.resize(2, 1);
  sys.D << 0.2, 0.1;
  return sys;
}

SystemDynamics scalar_system(double a, double b, double c, double d) {
  SystemDynamics sys;
  sys.A = Mat::Constant(1, 1, a);
  sys.B = Mat::Constant(1, 1, b);
  sys.C = Mat::Constant(1, 1, c);
  sys.D = Mat::Constant(1, 1, d);
  return sys;
}

ControlLaw zero_law(int m) {
  return [m](double, const Vec&) { return Vec(Vec::Zero(m)); };
}

double max_rel_err(const Mat& got, const Mat& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

}  // namespace

TEST_CASE("SimConfig validation names the offending field") {
  SimConfig cfg;
  cfg.x0 = Vec::Ones(2);
  CHECK_NOTHROW(cfg.validate());

  SimConfig bad = cfg;
  bad.step_h = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  try {
    bad.validate();
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sim.step_h") != std::string::npos);
  }

  bad = cfg;
  bad.window_dt = 1.5e-4;  // not an integer multiple of step_h
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.windows_l = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.paths_M = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(cfg.steps_per_window() == 200);
  CHECK(cfg.total_steps() == 200 * 50);
}

TEST_CASE("exploration noise: per-channel blocks and seeded reproducibility") {
  ExplorationNoise e;
  e.amplitude = 2.0;
  e.count = 2;
  e.frequencies = {1.0, 3.0, -2.0, 5.0};  // 2 channels x 2 sinusoids
  REQUIRE(e.channels() == 2);
  const double t = 0.37;
  const Vec v = e.value(t);
  CHECK(v[0] == doctest::Approx(2.0 * (std::sin(t) + std::sin(3 * t))).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(2.0 * (std::sin(-2 * t) + std::sin(5 * t))).epsilon(1e-12));

  const ExplorationNoise a = make_exploration(99, 2, 5, 1.5, 40.0);
  const ExplorationNoise b = make_exploration(99, 2, 5, 1.5, 40.0);
  REQUIRE(a.frequencies.size() == 10);
  CHECK(a.frequencies == b.frequencies);
  for (double w : a.frequencies) CHECK(std::abs(w) <= 40.0);
  const ExplorationNoise c = make_exploration(100, 2, 5, 1.5, 40.0);
  CHECK(a.frequencies != c.frequencies);
}

TEST_CASE("noise-free scalar path tracks the exponential") {
  const SystemDynamics sys = scalar_system(-1.0, 0.0, 0.0, 0.0);
  SimConfig cfg;
  cfg.step_h = 1e-4;
  cfg.window_dt = 0.1;
  cfg.windows_l = 10;
  cfg.paths_M = 1;
  cfg.seed = 1;
  cfg.x0 = Vec::Ones(1) * 3.0;
  const auto paths = simulate_paths(sys, zero_law(1), cfg);
  REQUIRE(paths.size() == 1);
  const PathRecord& p = paths[0];
  REQUIRE(p.X.cols() == cfg.total_steps() + 1);
  CHECK(p.t.front() == 0.0);
  CHECK(p.t.back() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.X(0, p.X.cols() - 1) ==
        doctest::Approx(3.0 * std::exp(-1.0)).epsilon(1e-3));
}

TEST_CASE("constant path gives exact window functionals") {
  const SystemDynamics sys = scalar_system(0.0, 0.0, 0.0, 0.0);
  SimConfig cfg;
  cfg.step_h = 1e-3;
  cfg.window_dt = 0.05;
  cfg.windows_l = 4;
  cfg.paths_M = 3;
  cfg.seed = 5;
  cfg.x0 = Vec::Ones(1) * 2.0;
  const WindowFunctionals fn = collect_window_functionals(sys, zero_law(1), cfg);
  REQUIRE(fn.i_xx.rows() == 4);
  for (int w = 0; w < 4; ++w) {
    CHECK(fn.delta_xx(w, 0) == doctest::Approx(0.0));
    CHECK(fn.i_xx(w, 0) == doctest::Approx(4.0 * 0.05).epsilon(1e-12));
    CHECK(fn.i_xu(w, 0) == doctest::Approx(0.0));
    CHECK(fn.delta_uu(w, 0) == doctest::Approx(0.0));
  }
}

TEST_CASE("fused collection is bit-identical to accumulate(simulate_paths)") {
  const SystemDynamics sys = sec5_system();
  const ExplorationNoise noise = make_exploration(17, 1, 5, 3.0, 30.0);
  Mat K0(1, 2);
  K0 << -1.2292, -2.1684;
  SimConfig cfg;
  cfg.step_h = 1e-3;
  cfg.window_dt = 0.05;
  cfg.windows_l = 8;
  cfg.paths_M = 16;
  cfg.seed = 17;
  cfg.x0 = Vec(2);
  cfg.x0 << 10.0, -10.0;
  const ControlLaw u = behavior_policy(K0, noise);
  const WindowFunctionals fused = collect_window_functionals(sys, u, cfg);
  const WindowFunctionals stored = accumulate_window_functionals(simulate_paths(sys, u, cfg), cfg);
  CHECK((fused.delta_xx - stored.delta_xx).norm() == 0.0);
  CHECK((fused.delta_uu - stored.delta_uu).norm() == 0.0);
  CHECK((fused.i_xx - stored.i_xx).norm() == 0.0);
  CHECK((fused.i_xu - stored.i_xu).norm() == 0.0);

  const WindowFunctionals again = collect_window_functionals(sys, u, cfg);
  CHECK((fused.i_xx - again.i_xx).norm() == 0.0);
}

TEST_CASE("Ito identity holds across windows at Monte Carlo accuracy") {
  // For any symmetric P:
  //   delta_xx svec(P) = i_xx vec(A'P + PA + C'PC) + 2 i_xu vec(B'P + D'PC)
  //                      + delta_uu svec(D'PD)
  const SystemDynamics sys = sec5_system();
  const ExplorationNoise noise = make_exploration(23, 1, 10, 5.0, 50.0);
  Mat K0(1, 2);
  K0 << -1.2292, -2.1684;
  SimConfig cfg;
  cfg.step_h = 1e-3;
  cfg.window_dt = 0.1;
  cfg.windows_l = 10;
  cfg.paths_M = 400;
  cfg.seed = 23;
  cfg.x0 = Vec(2);
  cfg.x0 << 10.0, -10.0;
  const WindowFunctionals fn = collect_window_functionals(sys, behavior_policy(K0, noise), cfg);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    Mat P(2, 2);
    P << uni(rng), 0, 0, uni(rng);
    P(0, 1) = P(1, 0) = uni(rng);
    const Mat lhs_m = sys.A.transpose() * P + P * sys.A + sys.C.transpose() * P * sys.C;
    const Mat mid_m = sys.B.transpose() * P + sys.D.transpose() * P * sys.C;
    const Mat dd = sys.D.transpose() * P * sys.D;
    const Vec lhs = fn.delta_xx * svec(P);
    const Vec rhs = fn.i_xx * vec(lhs_m) + 2.0 * (fn.i_xu * vec(mid_m)) +
                    fn.delta_uu * svec(dd);
    CHECK((lhs - rhs).norm() <= 0.05 * std::max(1.0, lhs.norm()));
  }
}

TEST_CASE("deterministic reduction matches the moment-ODE oracle") {
  const SystemDynamics sys = scalar_system(-1.0, 1.0, 0.0, 0.0);
  const ExplorationNoise noise = make_exploration(3, 1, 3, 1.0, 20.0);
  const Mat K0 = Mat::Constant(1, 1, -0.5);
  SimConfig cfg;
  cfg.step_h = 1e-4;
  cfg.window_dt = 0.1;
  cfg.windows_l = 5;
  cfg.paths_M = 1;
  cfg.seed = 3;
  cfg.x0 = Vec::Ones(1) * 2.0;
  const WindowFunctionals em = collect_window_functionals(sys, behavior_policy(K0, noise), cfg);
  const WindowFunctionals ex = exact_window_functionals(sys, K0, noise, cfg, 1e-5);
  CHECK(max_rel_err(em.delta_xx, ex.delta_xx) < 2e-3);
  CHECK(max_rel_err(em.delta_uu, ex.delta_uu) < 2e-3);
  CHECK(max_rel_err(em.i_xx, ex.i_xx) < 2e-3);
  CHECK(max_rel_err(em.i_xu, ex.i_xu) < 2e-3);
}

TEST_CASE("deterministic reduction matches the moment-ODE oracle, n = 2") {
  // Multi-dimensional state exercises the packed (xbar) vs full-grid column layouts.
  const SystemDynamics sys = sec5_system();
  SystemDynamics det = sys;
  det.C.setZero();
  det.D.setZero();
  const ExplorationNoise noise = make_exploration(11, 1, 4, 2.0, 30.0);
  Mat K0(1, 2);
  K0 << -1.2292, -2.1684;
  SimConfig cfg;
  cfg.step_h = 1e-4;
  cfg.window_dt = 0.1;
  cfg.windows_l = 5;
  cfg.paths_M = 1;
  cfg.seed = 11;
  cfg.x0 = Vec(2);
  cfg.x0 << 10.0, -10.0;
  const WindowFunctionals em = collect_window_functionals(det, behavior_policy(K0, noise), cfg);
  const WindowFunctionals ex = exact_window_functionals(det, K0, noise, cfg, 1e-5);
  CHECK(max_rel_err(em.delta_xx, ex.delta_xx) < 2e-3);
  CHECK(max_rel_err(em.delta_uu, ex.delta_uu) < 2e-3);
  CHECK(max_rel_err(em.i_xx, ex.i_xx) < 2e-3);
  CHECK(max_rel_err(em.i_xu, ex.i_xu) < 2e-3);
}

TEST_CASE("Euler step error halves with the step (weak order one)") {
  const SystemDynamics sys = scalar_system(-1.0, 1.0, 0.0, 0.0);
  const ExplorationNoise noise = make_exploration(3, 1, 3, 1.0, 20.0);
  const Mat K0 = Mat::Constant(1, 1, -0.5);
  SimConfig cfg;
  cfg.window_dt = 0.1;
  cfg.windows_l = 5;
  cfg.paths_M = 1;
  cfg.seed = 3;
  cfg.x0 = Vec::Ones(1) * 2.0;
  const WindowFunctionals ref = exact_window_functionals(sys, K0, noise, cfg, 1e-6);

  cfg.step_h = 2e-3;
  const WindowFunctionals coarse = collect_window_functionals(sys, behavior_policy(K0, noise), cfg);
  cfg.step_h = 1e-3;
  const WindowFunctionals fine = collect_window_functionals(sys, behavior_policy(K0, noise), cfg);

  const double err_coarse = (coarse.i_xx - ref.i_xx).norm() + (coarse.delta_xx - ref.delta_xx).norm();
  const double err_fine = (fine.i_xx - ref.i_xx).norm() + (fine.delta_xx - ref.delta_xx).norm();
  const double ratio = err_coarse / err_fine;
  CHECK(ratio >= 4.0 / 3.0);
  CHECK(ratio <= 3.0);
}

TEST_CASE("divergence guard names the path and step") {
  const SystemDynamics sys = scalar_system(40.0, 0.0, 0.0, 0.0);
  SimConfig cfg;
  cfg.step_h = 1e-3;
  cfg.window_dt = 0.5;
  cfg.windows_l = 4;
  cfg.paths_M = 2;
  cfg.seed = 9;
  cfg.x0 = Vec::Ones(1) * 10.0;
  CHECK_THROWS_AS(simulate_paths(sys, zero_law(1), cfg), NumericalError);
  try {
    simulate_paths(sys, zero_law(1), cfg);
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("path") != std::string::npos);
    CHECK(msg.find("step") != std::string::npos);
  }
}

TEST_CASE("paths csv dump has the documented header and row count") {
  const SystemDynamics sys = sec5_system();
  const ExplorationNoise noise = make_exploration(4, 1, 2, 1.0, 10.0);
  Mat K0(1, 2);
  K0 << -1.2292, -2.1684;
  SimConfig cfg;
  cfg.step_h = 1e-2;
  cfg.window_dt = 0.1;
  cfg.windows_l = 2;
  cfg.paths_M = 3;
  cfg.seed = 4;
  cfg.x0 = Vec(2);
  cfg.x0 << 1.0, -1.0;
  std::ostringstream os;
  dump_paths_csv(os, sys, behavior_policy(K0, noise), cfg);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "path_id,t,x_1,x_2,u_1");
  int rows = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3 * (cfg.total_steps() + 1));
}
