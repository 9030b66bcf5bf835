#include "slq/irl_model_based.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "slq/csv.hpp"
#include "slq/errors.hpp"

namespace slq {

namespace {

/** Smallest eigenvalue with closed forms for n <= 2 so the hot loop never
 *  touches an eigensolver. */
double small_sym_min_eig(const Eigen::Ref<const Mat>& M) {
  const int n = static_cast<int>(M.rows());
  if (n == 1) return M(0, 0);
  if (n == 2) {
    const double tr = M(0, 0) + M(1, 1);
    const double det_disc =
        std::sqrt((M(0, 0) - M(1, 1)) * (M(0, 0) - M(1, 1)) + 4.0 * M(0, 1) * M(1, 0));
    return 0.5 * (tr - det_disc);
  }
  return sym_min_eig(M);
}

bool keep_row(long i, long max_iter, long dense_limit) {
  return max_iter <= dense_limit || i < 512 || i % 512 == 0;
}

}  // namespace

IrlResult run_model_based_irl(const SystemDynamics& sys, const Mat& R, const Mat& Q0,
                              const Mat& K_T, const IrlOptions& opts) {
  sys.validate();
  const int n = sys.n(), m = sys.m();
  if (R.rows() != m || R.cols() != m || !is_symmetric(R, 1e-9) || sym_min_eig(R) <= 0.0)
    throw NumericalError("run_model_based_irl: R must be symmetric positive definite");
  if (Q0.rows() != n || Q0.cols() != n || !is_symmetric(Q0, 1e-9) || sym_min_eig(Q0) <= 0.0)
    throw NumericalError("run_model_based_irl: Q0 must be symmetric positive definite");
  if (K_T.rows() != m || K_T.cols() != n)
    throw NumericalError("run_model_based_irl: K_T must be m x n");
  if (opts.max_iter < 1) throw ConfigError("learner.max_iter must be >= 1");

  // The closure is K_T on every iterate, so one factorization serves the
  // whole run; the per-iterate solve is a matrix-vector product with the
  // cached inverse of the reduced operator.
  LyapunovSolver solver(sys, K_T);
  if (!solver.certifies_stability())
    throw NumericalError("run_model_based_irl: K_T is not mean-square stabilizing");
  const Mat Ginv = solver.reduced_operator().fullPivLu().inverse();

  const int sn = n * (n + 1) / 2;
  const Mat At = sys.A.transpose();
  const Mat Bt = sys.B.transpose();
  const Mat Ct = sys.C.transpose();
  const Mat Dt = sys.D.transpose();
  const Mat KtRKt = K_T.transpose() * R * K_T;

  Vec svec_load(sn), p(sn), rhs(sn);
  {
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) svec_load(k++) = (i == j) ? KtRKt(i, i) : 2.0 * KtRKt(i, j);
  }

  Mat Q = symmetrize(Q0), Qn(n, n), P(n, n);
  Mat PD(n, m), PC(n, n), G(m, m), Btilde(m, n), K_next(m, n), GK(m, n), AtP(n, n), CtP(n, n);
  Mat eq13_mat(m, n), diff(n, n), tmp(n, n);
  Eigen::LLT<Mat> llt(m);

  IrlResult out;
  out.all_stabilizing = true;
  out.min_monotone_eig = std::numeric_limits<double>::infinity();
  {
    const long dense = std::min<long>(opts.max_iter + 1, opts.history_dense_limit);
    out.history.reserve(static_cast<std::size_t>(
        std::min<long>(opts.max_iter + 1, std::max<long>(dense, 512 + opts.max_iter / 512 + 2))));
  }

  double prev_dq = 0.0;
  double q_min_eig = small_sym_min_eig(Q);
  for (long i = 0; i < opts.max_iter; ++i) {
    // Policy correction: P_i solves the K_T-closure Lyapunov equation with
    // load Q_i + K_T'R K_T.
    {
      int k = 0;
      for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
          rhs(k) = -svec_load(k) - ((a == b) ? Q(a, a) : 2.0 * Q(a, b));
          ++k;
        }
    }
    p.noalias() = Ginv * rhs;
    {
      int k = 0;
      for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
          P(a, b) = (a == b) ? p(k) : 0.5 * p(k);
          P(b, a) = P(a, b);
          ++k;
        }
    }

    // Policy update.
    PD.noalias() = P * sys.D;
    G = R;
    G.noalias() += Dt * PD;
    PC.noalias() = P * sys.C;
    Btilde.noalias() = Bt * P;
    Btilde.noalias() += Dt * PC;
    llt.compute(G);
    if (llt.info() != Eigen::Success)
      throw NumericalError("run_model_based_irl: R + D'PD lost definiteness at iterate " +
                           std::to_string(i));
    K_next = -Btilde;
    llt.solveInPlace(K_next);

    eq13_mat.noalias() = G * K_T;
    eq13_mat += Btilde;
    const double eq13 = eq13_mat.norm();
    const double dk = (K_next - K_T).norm();

    // Lyapunov certificate for K_{i+1} with function x'P_i x: the closed-loop
    // load is Q_i + K'RK + (K - K_T)'(R + D'P_i D)(K - K_T), positive definite
    // whenever Q_i is, so P_i > 0 and Q_i > 0 certify stability (Theorem 3's
    // argument evaluated numerically). Fall back to the spectral test if the
    // certificate is inconclusive.
    bool stab = q_min_eig > 0.0 && small_sym_min_eig(P) > 0.0;
    if (!stab) stab = is_ms_stabilizing(sys, K_next);
    if (!stab)
      throw NumericalError("run_model_based_irl: iterate " + std::to_string(i + 1) +
                           " is not mean-square stabilizing (numerical failure)");
    out.all_stabilizing = out.all_stabilizing && stab;

    // Weight construction. tmp = A'P + (C'PC - K'GK)/2, so -(tmp + tmp') is
    // the Eq.-style update already symmetrized.
    AtP.noalias() = At * P;
    CtP.noalias() = Ct * P;
    GK.noalias() = G * K_next;
    tmp = AtP;
    tmp.noalias() += 0.5 * (CtP * sys.C);
    tmp.noalias() -= 0.5 * (K_next.transpose() * GK);
    Qn = -tmp;
    Qn -= tmp.transpose();

    diff = Qn - Q;
    const double dq_step = diff.norm();
    const double mono = small_sym_min_eig(diff);
    if (mono < out.min_monotone_eig) out.min_monotone_eig = mono;
    const double qn_min_eig = small_sym_min_eig(Qn);
    if (qn_min_eig < -1e-6 * std::max(1.0, Qn.norm()))
      throw NumericalError("run_model_based_irl: Q lost positive definiteness at iterate " +
                           std::to_string(i + 1) + " (monotonicity violation, min eig " +
                           std::to_string(qn_min_eig) + ")");

    if (keep_row(i, opts.max_iter, opts.history_dense_limit)) {
      IrlIterate it;
      it.index = i;
      it.Q = Q;
      it.P = P;
      it.K_next = K_next;
      it.dq = prev_dq;
      it.dk = dk;
      it.residual_eq13 = eq13;
      it.stabilizing = stab;
      out.history.push_back(std::move(it));
    }

    const bool stop_q = dq_step <= opts.eps1;
    const bool stop_k = dk < opts.gain_tol;
    const bool stop = opts.stop == StopMode::QDiff   ? stop_q
                      : opts.stop == StopMode::Gain  ? stop_k
                                                     : (stop_q || stop_k);
    if (stop || i + 1 == opts.max_iter) {
      IrlIterate last;
      last.index = i + 1;
      last.Q = Qn;
      last.P = P;  // the P_i that produced Q_{i+1}; (P, Q_{i+1}) pair exactly
      last.K_next = K_next;
      last.dq = dq_step;
      last.dk = dk;
      last.residual_eq13 = eq13;
      last.stabilizing = stab;
      out.history.push_back(std::move(last));
      out.Q_star = Qn;
      out.P_star = P;
      out.K_star = K_next;
      out.iterations = i + 1;
      out.converged = stop;
      out.final_dq = dq_step;
      out.final_dk = dk;
      return out;
    }

    Q.swap(Qn);
    q_min_eig = qn_min_eig;
    prev_dq = dq_step;
  }
  throw ConvergenceError("run_model_based_irl: unreachable");
}

NonuniquenessReport verify_nonuniqueness(const SystemDynamics& sys, const CostWeights& weights_T,
                                         const Mat& R_alt, const Mat& P_star, const Mat& Q_star,
                                         const Mat& K_init) {
  const SareResult truth = solve_sare(sys, weights_T, K_init);
  NonuniquenessReport rep;
  rep.P_T = truth.P;
  rep.K_T = truth.K;
  const Mat P_o = truth.P - P_star;
  const Mat Q_o = weights_T.Q - Q_star;
  const Mat R_o = weights_T.R - R_alt;
  const Mat BPC_T = sys.B.transpose() * truth.P + sys.D.transpose() * truth.P * sys.C;
  const Mat G_T = weights_T.R + sys.D.transpose() * truth.P * sys.D;
  const Mat lhs25 = sys.B.transpose() * P_o + sys.D.transpose() * P_o * sys.C;
  const Mat rhs25 = (R_o + sys.D.transpose() * P_o * sys.D) * G_T.ldlt().solve(BPC_T);
  rep.eq25 = (lhs25 - rhs25).norm();
  const Mat lhs26 = P_o * sys.A + sys.A.transpose() * P_o + sys.C.transpose() * P_o * sys.C +
                    Q_o -
                    truth.K.transpose() * (R_o + sys.D.transpose() * P_o * sys.D) * truth.K;
  rep.eq26 = lhs26.norm();
  rep.eq25_rel = rep.eq25 / std::max(BPC_T.norm(), 1e-300);
  rep.eq26_rel = rep.eq26 / std::max(Q_o.norm(), 1e-300);
  return rep;
}

NonuniquenessReport verify_nonuniqueness(const SystemDynamics& sys, const CostWeights& weights_T,
                                         const Mat& R_alt, const IrlResult& result) {
  return verify_nonuniqueness(sys, weights_T, R_alt, result.P_star, result.Q_star,
                              result.K_star);
}

void write_history_csv(std::ostream& os, const std::vector<IrlIterate>& history) {
  if (history.empty()) return;
  const int n = static_cast<int>(history.front().Q.rows());
  const int m = static_cast<int>(history.front().K_next.rows());
  os << "i";
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) os << ",q_" << (a + 1) << "_" << (b + 1);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) os << ",p_" << (a + 1) << "_" << (b + 1);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < m; ++a) os << ",k_" << (a + 1) << "_" << (b + 1);
  os << ",dq,dk\n";
  for (const IrlIterate& it : history) {
    os << it.index;
    const Vec q = svec(it.Q), pv = svec(it.P);
    for (Eigen::Index k = 0; k < q.size(); ++k) os << ',' << format_double(q(k));
    for (Eigen::Index k = 0; k < pv.size(); ++k) os << ',' << format_double(pv(k));
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < m; ++a) os << ',' << format_double(it.K_next(a, b));
    os << ',' << format_double(it.dq) << ',' << format_double(it.dk) << '\n';
  }
}

}  // namespace slq
