#include "doctest.h"

#include <cmath>
#include <random>

#include "slq/errors.hpp"
#include "slq/lq_core.hpp"

using namespace slq;

namespace {

// Experimental system of record for the oracle checks below.
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

Mat sec5_K0() {
  Mat K(1, 2);
  K << -1.2292, -2.1684;
  return K;
}

SystemDynamics scalar_system(double a, double b, double c, double d) {
  SystemDynamics sys;
  sys.A = Mat::Constant(1, 1, a);
  sys.B = Mat::Constant(1, 1, b);
  sys.C = Mat::Constant(1, 1, c);
  sys.D = Mat::Constant(1, 1, d);
  return sys;
}

Mat random_mat(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = u(rng);
  return M;
}

}  // namespace

TEST_CASE("scalar Lyapunov closed form") {
  // 2aP + c^2 P = -M with a = -1, c = 0.5, M = 1  =>  P = 1/1.75
  const SystemDynamics sys = scalar_system(-1.0, 0.0, 0.5, 0.0);
  const Mat K = Mat::Zero(1, 1);
  const Mat P = solve_lyapunov(sys, K, Mat::Identity(1, 1));
  CHECK(P(0, 0) == doctest::Approx(1.0 / 1.75).epsilon(1e-12));
}

TEST_CASE("svec-reduced solver agrees with the full vectorized solve") {
  std::mt19937_64 rng(31);
  int done = 0;
  while (done < 20) {
    const int n = 2 + static_cast<int>(rng() % 2);
    SystemDynamics sys;
    sys.A = random_mat(rng, n, n, 1.5);
    sys.A -= Mat::Identity(n, n) * 2.5;  // push toward stability
    sys.B = Mat::Zero(n, 1);
    sys.C = random_mat(rng, n, n, 0.2);
    sys.D = Mat::Zero(n, 1);
    const Mat K = Mat::Zero(1, n);
    if (!is_ms_stabilizing(sys, K)) continue;
    ++done;

    const Mat M = Mat::Identity(n, n) + random_mat(rng, n, n, 0.1) * 0.0;
    const Mat P = solve_lyapunov(sys, K, M);

    // oracle: n^2-dimensional kron system, no symmetry reduction
    const Mat G = closed_loop_generator(sys, K).transpose();
    const Vec p_full = G.fullPivLu().solve(Vec(-vec(M)));
    const Mat P_full = unvec(p_full, n, n);
    CHECK((P - P_full).norm() <= 1e-8 * std::max(1.0, P_full.norm()));

    // equation residual in matrix form
    const Mat Acl = sys.A;
    const Mat Ccl = sys.C;
    const Mat res = P * Acl + Acl.transpose() * P + Ccl.transpose() * P * Ccl + M;
    CHECK(res.norm() <= 1e-9 * std::max(1.0, P.norm()));
  }
}

TEST_CASE("Lyapunov certificate matches the spectral abscissa") {
  std::mt19937_64 rng(32);
  int checked = 0;
  for (int t = 0; t < 400 && checked < 200; ++t) {
    const int n = 1 + static_cast<int>(rng() % 3);
    const int m = 1 + static_cast<int>(rng() % 2);
    SystemDynamics sys;
    sys.A = random_mat(rng, n, n, 2.0);
    sys.A -= Mat::Identity(n, n) * (rng() % 2 ? 2.0 : -0.5);
    sys.B = random_mat(rng, n, m);
    sys.C = random_mat(rng, n, n, 0.3);
    sys.D = random_mat(rng, n, m, 0.3);
    const Mat K = random_mat(rng, m, n);
    const double abscissa = ms_spectral_abscissa(sys, K);
    if (std::abs(abscissa) < 1e-6) continue;  // borderline: both answers defensible
    ++checked;
    const LyapunovSolver solver(sys, K);
    const bool certified = solver.invertible() && solver.certifies_stability();
    CHECK(certified == (abscissa < 0.0));
  }
  CHECK(checked >= 150);
}

TEST_CASE("solve_sare reproduces the published system") {
  const SystemDynamics sys = sec5_system();
  const CostWeights w{Mat::Identity(2, 2) * 5.0, Mat::Identity(1, 1)};
  const SareResult r = solve_sare(sys, w, sec5_K0());

  Mat P_expect(2, 2);
  P_expect << 0.8944, 0.0526, 0.0526, 2.1919;
  Mat K_expect(1, 2);
  K_expect << -1.8279, -3.4648;
  CHECK((r.P - P_expect).cwiseAbs().maxCoeff() < 2e-3);
  CHECK((r.K - K_expect).cwiseAbs().maxCoeff() < 2e-3);
  CHECK(r.residual <= 1e-8 * std::max(1.0, r.P.norm()));
  CHECK(r.min_monotone_eig >= -1e-9);  // Kleinman iterates decrease in PSD order
  CHECK(r.iterations < 50);

  const auto [eq11, eq13] = theorem1_residuals(sys, w, r.P, r.K);
  CHECK(eq11 <= 1e-8);
  CHECK(eq13 <= 1e-10);
}

TEST_CASE("scalar deterministic Riccati closed form") {
  // a=1, b=1, c=d=0, q=2, r=1:  p = a + sqrt(a^2 + q) = 1 + sqrt(3), k = -p
  const SystemDynamics sys = scalar_system(1.0, 1.0, 0.0, 0.0);
  const CostWeights w{Mat::Constant(1, 1, 2.0), Mat::Identity(1, 1)};
  const Mat K0 = Mat::Constant(1, 1, -3.0);
  REQUIRE(is_ms_stabilizing(sys, K0));
  const SareResult r = solve_sare(sys, w, K0);
  CHECK(r.P(0, 0) == doctest::Approx(1.0 + std::sqrt(3.0)).epsilon(1e-9));
  CHECK(r.K(0, 0) == doctest::Approx(-(1.0 + std::sqrt(3.0))).epsilon(1e-9));
}

TEST_CASE("multiplicative state noise raises the value matrix") {
  const CostWeights w{Mat::Constant(1, 1, 2.0), Mat::Identity(1, 1)};
  const Mat K0 = Mat::Constant(1, 1, -3.0);
  const SareResult quiet = solve_sare(scalar_system(1.0, 1.0, 0.0, 0.0), w, K0);
  const SareResult noisy = solve_sare(scalar_system(1.0, 1.0, 0.6, 0.0), w, K0);
  CHECK(noisy.P(0, 0) > quiet.P(0, 0));
}

TEST_CASE("solve_sare rejects a non-stabilizing initializer") {
  const SystemDynamics sys = sec5_system();
  const CostWeights w{Mat::Identity(2, 2) * 5.0, Mat::Identity(1, 1)};
  Mat K_bad(1, 2);
  K_bad << 0.0, 0.0;  // open loop is unstable
  REQUIRE_FALSE(is_ms_stabilizing(sys, K_bad));
  CHECK_THROWS_AS(solve_sare(sys, w, K_bad), NumericalError);
}

TEST_CASE("optimal_gain agrees with the SARE fixed point") {
  const SystemDynamics sys = sec5_system();
  const CostWeights w{Mat::Identity(2, 2) * 5.0, Mat::Identity(1, 1)};
  const SareResult r = solve_sare(sys, w, sec5_K0());
  const Mat K = optimal_gain(sys, r.P, w.R);
  CHECK((K - r.K).norm() <= 1e-9);
}

TEST_CASE("closed_loop_generator eigenvalues drive second-moment decay") {
  // deterministic scalar: generator = 2 a_cl exactly
  const SystemDynamics sys = scalar_system(-0.7, 0.0, 0.0, 0.0);
  const Mat G = closed_loop_generator(sys, Mat::Zero(1, 1));
  REQUIRE(G.rows() == 1);
  CHECK(G(0, 0) == doctest::Approx(-1.4).epsilon(1e-12));
  CHECK(ms_spectral_abscissa(sys, Mat::Zero(1, 1)) == doctest::Approx(-1.4));
}

TEST_CASE("Monte Carlo cost matches x0' P x0 at the optimum") {
  const SystemDynamics sys = sec5_system();
  const CostWeights w{Mat::Identity(2, 2) * 5.0, Mat::Identity(1, 1)};
  const SareResult r = solve_sare(sys, w, sec5_K0());
  Vec x0(2);
  x0 << 1.0, -1.0;
  CostMcOptions opts;
  opts.paths = 400;
  opts.step_h = 2e-4;
  opts.seed = 7;
  const CostEstimate est = evaluate_cost_mc(sys, w, r.K, x0, opts);
  const double expect = x0.dot(r.P * x0);
  CHECK(est.value == doctest::Approx(expect).epsilon(0.05));
  CHECK(std::abs(est.value - expect) <= 4.0 * est.std_error + 0.02 * expect);
  CHECK(est.horizon > 0.5);
  // same seed, same estimate (bit determinism)
  const CostEstimate again = evaluate_cost_mc(sys, w, r.K, x0, opts);
  CHECK(again.value == est.value);
}

TEST_CASE("cost estimate is above the optimal value for a detuned gain") {
  const SystemDynamics sys = sec5_system();
  const CostWeights w{Mat::Identity(2, 2) * 5.0, Mat::Identity(1, 1)};
  const SareResult r = solve_sare(sys, w, sec5_K0());
  Vec x0(2);
  x0 << 1.0, -1.0;
  CostMcOptions opts;
  opts.paths = 300;
  opts.step_h = 2e-4;
  opts.seed = 11;
  Mat K_detuned = r.K * 1.6;
  REQUIRE(is_ms_stabilizing(sys, K_detuned));
  const CostEstimate worse = evaluate_cost_mc(sys, w, K_detuned, x0, opts);
  CHECK(worse.value > x0.dot(r.P * x0));
}
