#include "slq/lq_core.hpp"

#include <cmath>
#include <random>
#include <string>

#include "slq/errors.hpp"
#include "slq/rng.hpp"

namespace slq {

void SystemDynamics::validate() const {
  const int nn = n(), mm = m();
  if (nn < 1 || A.cols() != nn) throw NumericalError("SystemDynamics: A must be square, n >= 1");
  if (mm < 1 || B.rows() != nn) throw NumericalError("SystemDynamics: B must be n x m, m >= 1");
  if (C.rows() != nn || C.cols() != nn) throw NumericalError("SystemDynamics: C must be n x n");
  if (D.rows() != nn || D.cols() != mm) throw NumericalError("SystemDynamics: D must be n x m");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
    throw NumericalError("SystemDynamics: non-finite entry");
}

Mat closed_loop_generator(const SystemDynamics& sys, const Eigen::Ref<const Mat>& K) {
  const Mat A_cl = sys.A + sys.B * K;
  const Mat C_cl = sys.C + sys.D * K;
  const Mat I = Mat::Identity(sys.n(), sys.n());
  return kron(I, A_cl) + kron(A_cl, I) + kron(C_cl, C_cl);
}

double ms_spectral_abscissa(const SystemDynamics& sys, const Eigen::Ref<const Mat>& K) {
  Eigen::EigenSolver<Mat> eig(closed_loop_generator(sys, K), false);
  return eig.eigenvalues().real().maxCoeff();
}

bool is_ms_stabilizing(const SystemDynamics& sys, const Eigen::Ref<const Mat>& K) {
  return ms_spectral_abscissa(sys, K) < 0.0;
}

namespace {

/** Pi = D_s T^T maps vec of a symmetric matrix to its svec. */
Mat svec_projector(const Mat& T) {
  Mat Pi = 2.0 * T.transpose();
  const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(T.rows()))));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (i == j) Pi.row(k) *= 0.5;  // diagonal rows carry weight 1
      ++k;
    }
  return Pi;
}

}  // namespace

LyapunovSolver::LyapunovSolver(const SystemDynamics& sys, const Eigen::Ref<const Mat>& K)
    : n_(sys.n()), T_(duplication_map(sys.n())) {
  const Mat A_cl_t = (sys.A + sys.B * K).transpose();
  const Mat C_cl_t = (sys.C + sys.D * K).transpose();
  const Mat I = Mat::Identity(n_, n_);
  const Mat full = kron(I, A_cl_t) + kron(A_cl_t, I) + kron(C_cl_t, C_cl_t);
  Gs_ = svec_projector(T_) * full * T_;
  lu_.compute(Gs_);
  invertible_ = lu_.isInvertible();
  rhs_.resize(Gs_.rows());
  sol_.resize(Gs_.rows());
}

void LyapunovSolver::solve_into(const Eigen::Ref<const Mat>& M, Mat& P) const {
  if (!invertible_) throw NumericalError("LyapunovSolver: reduced operator is singular");
  int k = 0;
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) rhs_(k++) = (i == j) ? -M(i, i) : -2.0 * M(i, j);
  sol_ = lu_.solve(rhs_);
  P.resize(n_, n_);
  k = 0;
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) {
      P(i, j) = (i == j) ? sol_(k) : 0.5 * sol_(k);
      P(j, i) = P(i, j);
      ++k;
    }
}

Mat LyapunovSolver::solve(const Eigen::Ref<const Mat>& M) const {
  Mat P;
  solve_into(M, P);
  return P;
}

bool LyapunovSolver::certifies_stability() const {
  if (!invertible_) return false;
  Mat P;
  solve_into(Mat::Identity(n_, n_), P);
  return sym_min_eig(P) > 0.0;
}

Mat solve_lyapunov(const SystemDynamics& sys, const Eigen::Ref<const Mat>& K,
                   const Eigen::Ref<const Mat>& M) {
  LyapunovSolver solver(sys, K);
  if (!solver.certifies_stability())
    throw NumericalError("solve_lyapunov: closed loop is not mean-square stable");
  Mat P = solver.solve(M);
  const Mat A_cl = sys.A + sys.B * K;
  const Mat C_cl = sys.C + sys.D * K;
  const Mat res = P * A_cl + A_cl.transpose() * P + C_cl.transpose() * P * C_cl + M;
  if (res.norm() > 1e-9 * std::max(1.0, M.norm() + P.norm()))
    throw NumericalError("solve_lyapunov: residual " + std::to_string(res.norm()));
  return P;
}

Mat optimal_gain(const SystemDynamics& sys, const Eigen::Ref<const Mat>& P,
                 const Eigen::Ref<const Mat>& R) {
  const Mat G = R + sys.D.transpose() * P * sys.D;
  Eigen::LDLT<Mat> ldlt(symmetrize(G));
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericalError("optimal_gain: R + D'PD is not positive definite");
  return -ldlt.solve(sys.B.transpose() * P + sys.D.transpose() * P * sys.C);
}

SareResult solve_sare(const SystemDynamics& sys, const CostWeights& weights,
                      const Eigen::Ref<const Mat>& K_init, const SareOptions& opts) {
  sys.validate();
  SareResult out;
  Mat K = K_init;
  Mat P_prev;
  for (int j = 0; j < opts.max_iter; ++j) {
    const Mat load = weights.Q + K.transpose() * weights.R * K;
    LyapunovSolver solver(sys, K);
    if (!solver.certifies_stability())
      throw NumericalError(j == 0 ? "solve_sare: K_init is not mean-square stabilizing"
                                  : "solve_sare: policy iterate lost stability");
    const Mat P = solver.solve(load);
    K = optimal_gain(sys, P, weights.R);
    if (j > 0) {
      const double step = (P - P_prev).norm();
      out.step_norms.push_back(step);
      const double mono = sym_min_eig(P_prev - P);
      if (j == 1 || mono < out.min_monotone_eig) out.min_monotone_eig = mono;
      if (step <= opts.tol) {
        out.P = P;
        out.K = K;
        out.iterations = j + 1;
        out.residual = sare_residual(sys, weights, P);
        return out;
      }
    }
    P_prev = P;
  }
  throw ConvergenceError("solve_sare: no convergence in " + std::to_string(opts.max_iter) +
                         " iterations; last step " +
                         std::to_string(out.step_norms.empty() ? -1.0 : out.step_norms.back()));
}

double sare_residual(const SystemDynamics& sys, const CostWeights& weights,
                     const Eigen::Ref<const Mat>& P) {
  const Mat Bt = sys.B.transpose() * P + sys.D.transpose() * P * sys.C;
  const Mat G = weights.R + sys.D.transpose() * P * sys.D;
  const Mat res = P * sys.A + sys.A.transpose() * P + sys.C.transpose() * P * sys.C + weights.Q -
                  Bt.transpose() * G.ldlt().solve(Bt);
  return res.norm();
}

std::pair<double, double> theorem1_residuals(const SystemDynamics& sys,
                                             const CostWeights& weights,
                                             const Eigen::Ref<const Mat>& P,
                                             const Eigen::Ref<const Mat>& K_T) {
  return {sare_residual(sys, weights, P),
          (K_T - optimal_gain(sys, P, weights.R)).norm()};
}

CostEstimate evaluate_cost_mc(const SystemDynamics& sys, const CostWeights& weights,
                              const Eigen::Ref<const Mat>& K, const Eigen::Ref<const Vec>& x0,
                              const CostMcOptions& opts) {
  sys.validate();
  const int n = sys.n();
  // Horizon from the deterministic second-moment flow dS = gen * S.
  const Mat A_cl = sys.A + sys.B * K;
  const Mat C_cl = sys.C + sys.D * K;
  if (!is_ms_stabilizing(sys, K))
    throw NumericalError("evaluate_cost_mc: gain is not mean-square stabilizing");
  Mat S = x0 * x0.transpose();
  const double start_trace = S.trace();
  const double h = opts.step_h;
  double horizon = 0.0;
  Mat dS(n, n);
  while (S.trace() > opts.decay_fraction * start_trace && horizon < 1e4) {
    dS = A_cl * S + S * A_cl.transpose() + C_cl * S * C_cl.transpose();
    S += h * dS;
    horizon += h;
  }
  const int steps = static_cast<int>(std::lround(horizon / h));

  const Mat W = weights.Q + K.transpose() * weights.R * K;  // running cost x'Wx
  const double sqrt_h = std::sqrt(h);
  std::vector<double> totals(opts.paths);
  for (int p = 0; p < opts.paths; ++p) {
    GaussianStream gauss(make_stream(opts.seed, stream_tag::cost, p));
    Vec X = x0;
    double acc = 0.0;
    for (int s = 0; s < steps; ++s) {
      acc += X.dot(W * X) * h;
      const double dw = sqrt_h * gauss.next();
      X += h * (A_cl * X) + dw * (C_cl * X);
      if (X.norm() > 1e12)
        throw NumericalError("evaluate_cost_mc: divergence at step " + std::to_string(s));
    }
    totals[p] = acc;
  }
  CostEstimate est;
  est.paths = opts.paths;
  est.horizon = horizon;
  est.value = pairwise_sum(totals) / opts.paths;
  double ss = 0.0;
  for (double t : totals) ss += (t - est.value) * (t - est.value);
  est.std_error = opts.paths > 1 ? std::sqrt(ss / (opts.paths - 1.0) / opts.paths) : 0.0;
  return est;
}

}  // namespace slq
