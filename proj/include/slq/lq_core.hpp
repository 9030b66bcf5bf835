#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "slq/matops.hpp"

namespace slq {

/** dX = (A X + B u) ds + (C X + D u) dW, one-dimensional Brownian motion. */
struct SystemDynamics {
  Mat A;  // n x n
  Mat B;  // n x m
  Mat C;  // n x n
  Mat D;  // n x m
  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  void validate() const;  // throws NumericalError on inconsistent dimensions
};

struct CostWeights {
  Mat Q;  // n x n, symmetric positive definite
  Mat R;  // m x m, symmetric positive definite
};

/** Second-moment generator I ⊗ A_cl + A_cl ⊗ I + C_cl ⊗ C_cl for the closed
 *  loop A_cl = A + BK, C_cl = C + DK. Mean-square stability of K is
 *  equivalent to this matrix being Hurwitz. */
Mat closed_loop_generator(const SystemDynamics& sys, const Eigen::Ref<const Mat>& K);

/** Spectral abscissa (max real part of eigenvalues) of the generator. */
double ms_spectral_abscissa(const SystemDynamics& sys, const Eigen::Ref<const Mat>& K);

bool is_ms_stabilizing(const SystemDynamics& sys, const Eigen::Ref<const Mat>& K);

/** Generalized Lyapunov solver for a fixed closed loop: solves
 *      P A_cl + A_clᵀ P + C_clᵀ P C_cl = -M,  M symmetric.
 *  Vectorized in svec coordinates (the restriction of the kron-vectorized
 *  operator to the symmetric subspace), factored once so repeated solves with
 *  different right-hand sides are back-substitutions. */
class LyapunovSolver {
 public:
  LyapunovSolver(const SystemDynamics& sys, const Eigen::Ref<const Mat>& K);

  /** True iff the reduced operator is invertible at the numeric-rank
   *  threshold. Non-stabilizing closures typically fail here or produce an
   *  indefinite certificate. */
  bool invertible() const { return invertible_; }

  /** Solve for symmetric M. Allocation-free after construction. */
  void solve_into(const Eigen::Ref<const Mat>& M, Mat& P) const;
  Mat solve(const Eigen::Ref<const Mat>& M) const;

  /** Stability certificate: solve with M = I and test P > 0. For the
   *  resolvent-positive generator this is equivalent to the spectral
   *  abscissa test (property-tested against ms_spectral_abscissa). */
  bool certifies_stability() const;

  const Mat& reduced_operator() const { return Gs_; }

 private:
  int n_;
  Mat T_;    // duplication map
  Mat Gs_;   // reduced operator, s x s with s = n(n+1)/2
  Eigen::FullPivLU<Mat> lu_;
  bool invertible_;
  mutable Vec rhs_, sol_;  // preallocated work vectors
};

/** One-shot Lyapunov solve. Throws NumericalError (stability) when the
 *  closure is not mean-square stabilizing, and checks the equation residual
 *  to 1e-9 relative. P is positive definite whenever M is. */
Mat solve_lyapunov(const SystemDynamics& sys, const Eigen::Ref<const Mat>& K,
                   const Eigen::Ref<const Mat>& M);

/** K = -(R + DᵀPD)^{-1} (BᵀP + DᵀPC). Throws NumericalError if R + DᵀPD is
 *  not positive definite. */
Mat optimal_gain(const SystemDynamics& sys, const Eigen::Ref<const Mat>& P,
                 const Eigen::Ref<const Mat>& R);

struct SareOptions {
  double tol = 1e-10;  // ||P_{j+1} - P_j||_F stopping threshold
  int max_iter = 200;
};

struct SareResult {
  Mat P;
  Mat K;
  int iterations = 0;
  double residual = 0.0;           // SARE residual at exit
  double min_monotone_eig = 0.0;   // min over j of min-eig(P_j - P_{j+1})
  std::vector<double> step_norms;  // ||P_{j+1} - P_j||_F per iteration
};

/** Stochastic Kleinman policy iteration: alternate Lyapunov solves and gain
 *  updates from a mean-square stabilizing K_init. Iterates decrease in the
 *  positive-semidefinite order. */
SareResult solve_sare(const SystemDynamics& sys, const CostWeights& weights,
                      const Eigen::Ref<const Mat>& K_init, const SareOptions& opts = {});

/** Frobenius norm of the learner SARE left-hand side
 *  PA + AᵀP + CᵀPC + Q - (PB + CᵀPD)(R + DᵀPD)^{-1}(BᵀP + DᵀPC). */
double sare_residual(const SystemDynamics& sys, const CostWeights& weights,
                     const Eigen::Ref<const Mat>& P);

/** (residual of Eq. 11, residual of Eq. 13) for a candidate pair:
 *  first the SARE residual above, then ||K_T - optimal_gain(sys, P, R)||_F. */
std::pair<double, double> theorem1_residuals(const SystemDynamics& sys,
                                             const CostWeights& weights,
                                             const Eigen::Ref<const Mat>& P,
                                             const Eigen::Ref<const Mat>& K_T);

struct CostEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double horizon = 0.0;  // truncation time chosen from the moment ODE
  int paths = 0;
};

struct CostMcOptions {
  int paths = 1000;
  double step_h = 5e-4;
  uint64_t seed = 0;
  double decay_fraction = 1e-6;  // horizon: E||X||^2 below this fraction of start
};

/** Monte Carlo estimate of J(0, x0; Kx) with the horizon chosen by
 *  propagating the closed-loop second moment deterministically until it has
 *  decayed below decay_fraction of its initial value. */
CostEstimate evaluate_cost_mc(const SystemDynamics& sys, const CostWeights& weights,
                              const Eigen::Ref<const Mat>& K, const Eigen::Ref<const Vec>& x0,
                              const CostMcOptions& opts = {});

}  // namespace slq
