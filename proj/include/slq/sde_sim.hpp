#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "slq/lq_core.hpp"
#include "slq/matops.hpp"

namespace slq {

struct SimConfig {
  double step_h = 1e-4;    // Euler-Maruyama step
  double window_dt = 0.02; // integration window length (integer multiple of step_h)
  int windows_l = 50;      // window count; data covers [0, windows_l * window_dt]
  int paths_M = 400;       // Monte Carlo path count
  std::uint64_t seed = 0;
  Vec x0;

  void validate() const;           // throws ConfigError
  int steps_per_window() const;    // window_dt / step_h, rounded
  int total_steps() const { return steps_per_window() * windows_l; }
};

/** Deterministic multi-sine exploration signal. For m control channels the
 *  frequency list has m * count entries and channel j uses the contiguous
 *  block [j*count, (j+1)*count):
 *      e_j(s) = amplitude * sum_i sin(w_{j,i} s).
 *  With m = 1 this is the scalar signal amplitude * sum sin(w_i s). */
struct ExplorationNoise {
  double amplitude = 0.0;
  int count = 0;                    // sinusoids per channel
  std::vector<double> frequencies;  // size channels * count

  int channels() const;
  Vec value(double t) const;  // length channels()
};

/** Frequencies drawn uniformly from [-freq_range, freq_range] on a dedicated
 *  RNG stream derived from seed; reproducible across runs. */
ExplorationNoise make_exploration(std::uint64_t seed, int channels, int count,
                                  double amplitude, double freq_range);

Vec exploration_signal(const ExplorationNoise& noise, double t);

using ControlLaw = std::function<Vec(double t, const Vec& x)>;

/** u(t, x) = K0 x + e(t). */
ControlLaw behavior_policy(const Mat& K0, const ExplorationNoise& noise);

struct PathRecord {
  std::vector<double> t;  // grid, length total_steps + 1
  Mat X;                  // n x (total_steps + 1)
  Mat U;                  // m x (total_steps + 1), control applied at each grid point
};

/** M independent Euler-Maruyama paths, X+ = X + (AX + Bu) h + (CX + Du) dW,
 *  dW ~ N(0, h), one per-path RNG stream derived from (seed, path index).
 *  Throws NumericalError naming path and step if ||X|| exceeds 1e12. */
std::vector<PathRecord> simulate_paths(const SystemDynamics& sys, const ControlLaw& u,
                                       const SimConfig& cfg);

/** Per-window Monte Carlo averages:
 *    delta_xx  l x n(n+1)/2   differences of E[xbar(X)] at window boundaries
 *    delta_uu  l x m(m+1)/2   integrals of E[xbar(u)]
 *    i_xx      l x n^2        integrals of E[X ⊗ X]   (row a*n+b holds X_a X_b)
 *    i_xu      l x n*m        integrals of E[X ⊗ u]   (row a*m+b holds X_a u_b)
 *  Time integrals use the left-endpoint rectangle rule (Ito-consistent);
 *  path averaging is a pairwise reduction. */
struct WindowFunctionals {
  Mat delta_xx;
  Mat delta_uu;
  Mat i_xx;
  Mat i_xu;
  int n = 0;
  int m = 0;
  double window_dt = 0.0;
};

WindowFunctionals accumulate_window_functionals(const std::vector<PathRecord>& paths,
                                                const SimConfig& cfg);

/** Fused simulate + accumulate; avoids storing raw paths. Bit-identical to
 *  accumulate_window_functionals(simulate_paths(...), cfg). */
WindowFunctionals collect_window_functionals(const SystemDynamics& sys, const ControlLaw& u,
                                             const SimConfig& cfg);

/** Deterministic oracle: the exact window functionals of the continuous-time
 *  process under u = K0 x + e(t), computed by RK4 integration of the first
 *  and second moment ODEs (step rk4_h). For C = D = 0 this is the exact
 *  deterministic quadrature used by the CLI's --exact-functionals mode. */
WindowFunctionals exact_window_functionals(const SystemDynamics& sys, const Mat& K0,
                                           const ExplorationNoise& noise, const SimConfig& cfg,
                                           double rk4_h = 1e-5);

/** Raw path dump: CSV columns path_id,t,x_1..x_n,u_1..u_m. Streams paths one
 *  at a time (same RNG layout as simulate_paths). */
void dump_paths_csv(std::ostream& os, const SystemDynamics& sys, const ControlLaw& u,
                    const SimConfig& cfg);

namespace detail {
/** One path on an explicit RNG substream (seed, tag, index), written into
 *  preallocated X (n x total_steps+1), U (m x total_steps+1). Lets the expert
 *  demo stay off the behavior-path streams while sharing the user seed. */
void simulate_single_path(const SystemDynamics& sys, const ControlLaw& u, const SimConfig& cfg,
                          std::uint64_t tag, std::uint64_t index, Mat& X, Mat& U);
}  // namespace detail

}  // namespace slq
