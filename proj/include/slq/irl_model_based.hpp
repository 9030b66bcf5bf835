#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "slq/lq_core.hpp"

namespace slq {

enum class StopMode { QDiff, Gain, Either };

struct IrlOptions {
  double eps1 = 1e-6;      // stop when ||Q_{i+1} - Q_i||_F <= eps1
  double gain_tol = 0.01;  // stop when ||K_{i+1} - K_T||_F < gain_tol (Gain / Either)
  long max_iter = 100;
  StopMode stop = StopMode::QDiff;
  // History keeps every iterate while the run is short; past this bound only
  // i < 512, i % 512 == 0 and the terminal row are retained (aggregates below
  // still cover every iterate).
  long history_dense_limit = 4096;
};

struct IrlIterate {
  long index = 0;
  Mat Q;       // Q_i entering the step
  Mat P;       // P_i, Lyapunov solution under the expert closure
  Mat K_next;  // K_{i+1}
  double dq = 0.0;  // ||Q_i - Q_{i-1}||_F (0 at i = 0)
  double dk = 0.0;  // ||K_{i+1} - K_T||_F
  double residual_eq13 = 0.0;  // ||B'P_i + D'P_i C + (R + D'P_i D) K_T||_F
  bool stabilizing = false;    // K_{i+1} mean-square stabilizing
};

struct IrlResult {
  // Rows i = 0..iterations; the terminal row carries the final weight with
  // the last computed (P, K_next) repeated. Possibly thinned, see IrlOptions.
  std::vector<IrlIterate> history;
  Mat Q_star;  // final weight Q_{i+1}
  Mat P_star;  // the P_i that produced it; (P_star, Q_star) solve the learner SARE
  Mat K_star;  // final improved gain
  long iterations = 0;
  bool converged = false;
  double min_monotone_eig = 0.0;  // min over i of lambda_min(Q_{i+1} - Q_i), all iterates
  bool all_stabilizing = false;   // every K_{i+1} certified, all iterates
  double final_dq = 0.0;
  double final_dk = 0.0;
};

/** Model-based inverse LQ iteration. Given the expert gain K_T and a fixed
 *  R > 0, repeat from Q_0:
 *    P_i     = Lyapunov solution under closure K_T with load Q_i + K_T'R K_T
 *    K_{i+1} = -(R + D'P_i D)^{-1} (B'P_i + D'P_i C)
 *    Q_{i+1} = -A'P_i - P_i A - C'P_i C + K_{i+1}'(R + D'P_i D) K_{i+1}
 *  with Q_{i+1} symmetrized after evaluation. The closure never changes, so
 *  the Lyapunov operator is factored once and each iterate costs one
 *  back-substitution. Requires K_T mean-square stabilizing (the factorization
 *  certifies it). Q_{i+1} is never projected: losing definiteness beyond
 *  tolerance throws NumericalError (monotonicity violation), as does a
 *  non-stabilizing K_{i+1}. Exhausting max_iter returns converged = false
 *  with history intact rather than throwing. */
IrlResult run_model_based_irl(const SystemDynamics& sys, const Mat& R, const Mat& Q0,
                              const Mat& K_T, const IrlOptions& opts);

/** Certificate that the recovered (Q_star, R) and the expert's (Q_T, R_T)
 *  induce the same optimal gain. With P_o = P_T - P_star, Q_o = Q_T - Q_star,
 *  R_o = R_T - R:
 *    eq25 = ||B'P_o + D'P_o C - (R_o + D'P_o D)(R_T + D'P_T D)^{-1}(B'P_T + D'P_T C)||_F
 *    eq26 = ||P_o A + A'P_o + C'P_o C + Q_o - K_T'(R_o + D'P_o D) K_T||_F
 *  Relative forms divide by ||B'P_T + D'P_T C||_F and ||Q_o||_F. */
struct NonuniquenessReport {
  double eq25 = 0.0;
  double eq26 = 0.0;
  double eq25_rel = 0.0;
  double eq26_rel = 0.0;
  Mat P_T;  // ground-truth value matrix used for the check
  Mat K_T;
};

NonuniquenessReport verify_nonuniqueness(const SystemDynamics& sys, const CostWeights& weights_T,
                                         const Mat& R_alt, const Mat& P_star, const Mat& Q_star,
                                         const Mat& K_init);

NonuniquenessReport verify_nonuniqueness(const SystemDynamics& sys, const CostWeights& weights_T,
                                         const Mat& R_alt, const IrlResult& result);

/** History CSV: header then one row per kept iterate,
 *  i, svec(Q_i), svec(P_i), vec(K_{i+1}), dq, dk. */
void write_history_csv(std::ostream& os, const std::vector<IrlIterate>& history);

}  // namespace slq
