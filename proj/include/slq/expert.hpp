#pragma once

#include <iosfwd>

#include "slq/lq_core.hpp"
#include "slq/sde_sim.hpp"

namespace slq {

/** Sampled expert trajectory: k aligned state/control columns with uniform
 *  spacing equal to the simulator grid. Controls are exact feedback
 *  u = K_T x at sample times. */
struct ExpertDemo {
  std::vector<double> t;
  Mat X;  // n x k
  Mat U;  // m x k

  int k() const { return static_cast<int>(X.cols()); }
};

/** Solves the expert SARE for weights_T (Kleinman iteration started at the
 *  stabilizing K_init), then simulates one noisy closed-loop path under the
 *  optimal gain and records the first `samples` grid points. samples = 0
 *  picks max(4*m*n, n*(n+1)); k >= m*n is required either way. Only step_h,
 *  seed and x0 of cfg are consulted. */
ExpertDemo generate_expert_demo(const SystemDynamics& sys, const CostWeights& weights_T,
                                const Mat& K_init, const SimConfig& cfg, int samples = 0);

struct GainEstimate {
  Mat K_hat;         // m x n
  double residual;   // ||U - K_hat X||_F over the demo
  double condition;  // of X X^T
};

/** Least squares fit U ≈ K X via column-pivoted QR on the sample matrix
 *  (never forms the normal equations). Requires k >= n and rank(X) = n;
 *  rank deficiency throws ExcitationError. */
GainEstimate estimate_expert_gain(const ExpertDemo& demo);

/** CSV columns t,x_1..x_n,u_1..u_m with a header row. */
void write_demo_csv(std::ostream& os, const ExpertDemo& demo);
ExpertDemo read_demo_csv(std::istream& is);

}  // namespace slq
