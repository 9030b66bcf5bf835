#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "slq/irl_model_based.hpp"
#include "slq/sde_sim.hpp"

namespace slq {

/** One batch of behavior data prepared for the off-policy iteration. The
 *  trajectory windows are collected once and reused by every iterate; the
 *  regressor blocks depend only on the data and the estimated expert gain.
 *  Unknown-vector layout is [svec(P); vec(B~) column-major; svec(D~)] and the
 *  Phi_p column blocks are ordered to match. */
struct RegressionData {
  WindowFunctionals fn;
  Mat K_T_hat;  // expert gain used wherever the identities reference K_T
  Mat Phi_p;    // l x (n(n+1)/2 + n m + m(m+1)/2)
  Mat Phi_q;    // l x n(n+1)/2
  int rank_joint = 0;  // numeric rank of [i_xx, i_xu, delta_uu]
  int rank_ixx = 0;
  int l = 0;
  int n = 0;
  int m = 0;
};

/** Assembles regressors from window functionals:
 *    Phi_p = [delta_xx, 2 i_xx (I_n ⊗ K_hat') - 2 i_xu, i_xx lbar(K_hat) - delta_uu]
 *    Phi_q = i_xx T_n
 *  Throws ExcitationError when l is below n(n+1)/2 + mn + m(m+1)/2 or either
 *  Lemma-1 rank condition fails (richer noise or more windows needed). */
RegressionData make_regression_data(const WindowFunctionals& fn, const Mat& K_T_hat);

/** Simulates the behavior policy u = K0 x + e(t) once and assembles the
 *  regression data. K0 must be mean-square stabilizing. */
RegressionData collect_behavior_data(const SystemDynamics& sys, const Mat& K0,
                                     const ExplorationNoise& noise, const SimConfig& cfg,
                                     const Mat& K_T_hat);

struct ModelFreeIterate {
  long index = 0;
  Mat Q;        // Q_i entering the step
  Mat P;        // recovered P_i
  Mat B_tilde;  // recovered B'P_i + D'P_i C   (m x n)
  Mat D_tilde;  // recovered D'P_i D           (m x m, symmetric by construction)
  Mat K_next;   // -(R + D~)^{-1} B~
  Mat Q_next;   // q-step output
  double dq = 0.0;  // ||Q_i - Q_{i-1}||_F (0 at i = 0)
  double dk = 0.0;  // ||K_{i+1} - K_T_hat||_F
  double ls_residual_p = 0.0;
  double ls_residual_q = 0.0;
};

struct ModelFreeOptions {
  double eps1 = 1e-3;
  double gain_tol = 0.01;
  long max_iter = 50;
  StopMode stop = StopMode::Either;
  double divergence_bound = 1e8;  // abort when dq exceeds this
  long history_dense_limit = 4096;
};

struct ModelFreeResult {
  std::vector<ModelFreeIterate> history;
  Mat Q_star;
  Mat P_star;
  Mat K_star;
  Mat B_tilde_star;
  Mat D_tilde_star;
  long iterations = 0;
  bool converged = false;
  double final_dq = 0.0;
  double final_dk = 0.0;
};

/** P-step: least-squares solve of
 *    Phi_p [svec(P); vec(B~); svec(D~)] = -i_xx vec(Q_i + K_hat' R K_hat)
 *  unpacked into a partial iterate (Q_next left empty). Throws NumericalError
 *  when R + D~ is not invertible, ExcitationError on regression rank failure. */
ModelFreeIterate solve_p_step(const RegressionData& data, const Mat& Q_i, const Mat& R);

/** Q-step: least-squares solve of
 *    Phi_q svec(Q_{i+1}) = -delta_xx svec(P) + i_xx lbar(K_{i+1}) svec(R + D~)
 *                          + 2 i_xu vec(B~) + delta_uu svec(D~)
 *  (the u'D~u integral enters once, through delta_uu). Result symmetrized. */
Mat solve_q_step(const RegressionData& data, const ModelFreeIterate& iterate, const Mat& R);

/** Off-policy inverse LQ iteration on pre-collected data. The system matrices
 *  are never consulted; dynamics enter only through the stored functionals.
 *  Alternates solve_p_step / solve_q_step until the stop rule fires. Throws
 *  ConvergenceError when dq crosses divergence_bound (the iteration is
 *  blowing up and later iterates are meaningless); plain max_iter exhaustion
 *  returns converged = false with the full history. */
ModelFreeResult run_model_free_irl(const RegressionData& data, const Mat& R, const Mat& Q0,
                                   const ModelFreeOptions& opts);

/** On-disk bundle: delta_xx.csv, delta_uu.csv, i_xx.csv, i_xu.csv plus a
 *  key=value manifest meta.toml (format version, n, m, l, window_dt, seed,
 *  k_t_hat). Ranks are recomputed on load. */
void write_regression_bundle(const std::string& dir, const RegressionData& data,
                             std::uint64_t seed);
RegressionData read_regression_bundle(const std::string& dir);

/** History CSV: i, svec(Q_i), svec(P_i), vec(K_{i+1}), dq, dk, ls_residual_p,
 *  ls_residual_q. */
void write_history_csv(std::ostream& os, const std::vector<ModelFreeIterate>& history);

}  // namespace slq
