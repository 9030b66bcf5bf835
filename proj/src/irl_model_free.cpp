#include "slq/irl_model_free.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include "slq/csv.hpp"
#include "slq/errors.hpp"

namespace slq {

namespace {

long required_windows(int n, int m) {
  return static_cast<long>(n) * (n + 1) / 2 + static_cast<long>(m) * n +
         static_cast<long>(m) * (m + 1) / 2;
}

bool keep_row(long i, long max_iter, long dense_limit) {
  if (max_iter <= dense_limit) return true;
  return i < 512 || i % 512 == 0;
}

// Right-hand side of the q-step regression, Eq.-(31) form: the u'D~u integral
// enters once through delta_uu.
Vec q_step_rhs(const RegressionData& data, const ModelFreeIterate& it, const Mat& R) {
  const Mat T_m = duplication_map(data.m);
  Vec psi = -(data.fn.delta_xx * svec(it.P));
  psi.noalias() += data.fn.i_xx * (lbar(it.K_next, T_m) * svec(R + it.D_tilde));
  psi.noalias() += 2.0 * (data.fn.i_xu * vec(it.B_tilde));
  psi.noalias() += data.fn.delta_uu * svec(it.D_tilde);
  return psi;
}

}  // namespace

RegressionData make_regression_data(const WindowFunctionals& fn, const Mat& K_T_hat) {
  const int n = fn.n;
  const int m = fn.m;
  if (K_T_hat.rows() != m || K_T_hat.cols() != n)
    throw ConfigError("K_T_hat must be m x n to match the window functionals");
  const int sn = n * (n + 1) / 2;
  const int sm = m * (m + 1) / 2;
  const long l = fn.i_xx.rows();
  const long need = required_windows(n, m);
  if (l < need) {
    std::ostringstream msg;
    msg << "only " << l << " data windows for " << need
        << " unknowns; collect at least " << need << " windows";
    throw ExcitationError(msg.str());
  }

  RegressionData data;
  data.fn = fn;
  data.K_T_hat = K_T_hat;
  data.l = static_cast<int>(l);
  data.n = n;
  data.m = m;

  // Rank conditions precede assembly: a rank-deficient joint block makes the
  // p-step regressor singular for every iterate, so fail once, up front.
  Mat joint(l, n * n + n * m + sm);
  joint << fn.i_xx, fn.i_xu, fn.delta_uu;
  data.rank_joint = numeric_rank(joint);
  data.rank_ixx = numeric_rank(fn.i_xx);
  if (data.rank_joint < need) {
    std::ostringstream msg;
    msg << "rank([i_xx, i_xu, delta_uu]) = " << data.rank_joint << " < " << need
        << "; enrich the exploration noise (more frequencies or larger amplitude)";
    throw ExcitationError(msg.str());
  }
  if (data.rank_ixx < sn) {
    std::ostringstream msg;
    msg << "rank(i_xx) = " << data.rank_ixx << " < " << sn
        << "; state excitation is degenerate, enrich the exploration noise";
    throw ExcitationError(msg.str());
  }

  const Mat T_n = duplication_map(n);
  const Mat T_m = duplication_map(m);
  const Mat I_n = Mat::Identity(n, n);

  data.Phi_p.resize(l, sn + n * m + sm);
  data.Phi_p.leftCols(sn) = fn.delta_xx;
  data.Phi_p.middleCols(sn, n * m) =
      2.0 * fn.i_xx * kron(I_n, K_T_hat.transpose()) - 2.0 * fn.i_xu;
  data.Phi_p.rightCols(sm) = fn.i_xx * lbar(K_T_hat, T_m) - fn.delta_uu;

  data.Phi_q = fn.i_xx * T_n;
  return data;
}

RegressionData collect_behavior_data(const SystemDynamics& sys, const Mat& K0,
                                     const ExplorationNoise& noise, const SimConfig& cfg,
                                     const Mat& K_T_hat) {
  if (!is_ms_stabilizing(sys, K0))
    throw NumericalError("behavior gain K0 is not mean-square stabilizing");
  const WindowFunctionals fn =
      collect_window_functionals(sys, behavior_policy(K0, noise), cfg);
  return make_regression_data(fn, K_T_hat);
}

ModelFreeIterate solve_p_step(const RegressionData& data, const Mat& Q_i, const Mat& R) {
  const int n = data.n;
  const int m = data.m;
  const int sn = n * (n + 1) / 2;
  const int sm = m * (m + 1) / 2;
  if (Q_i.rows() != n || Q_i.cols() != n) throw ConfigError("Q_i must be n x n");
  if (R.rows() != m || R.cols() != m) throw ConfigError("R must be m x m");

  const Mat W = Q_i + data.K_T_hat.transpose() * R * data.K_T_hat;
  const Vec psi_p = -(data.fn.i_xx * vec(W));

  LeastSquaresResult ls;
  try {
    ls = least_squares(data.Phi_p, psi_p);
  } catch (const NumericalError& e) {
    throw ExcitationError(std::string("p-step regression is rank-deficient: ") + e.what());
  }

  ModelFreeIterate it;
  it.Q = Q_i;
  it.P = smat(ls.theta.head(sn), n);
  it.B_tilde = unvec(ls.theta.segment(sn, n * m), m, n);
  it.D_tilde = smat(ls.theta.tail(sm), m);
  it.ls_residual_p = ls.residual;

  const Mat G = symmetrize(R + it.D_tilde);
  Eigen::FullPivLU<Mat> lu(G);
  if (!lu.isInvertible())
    throw NumericalError("R + D~ is singular in the gain update");
  it.K_next = -lu.solve(it.B_tilde);
  it.dk = (it.K_next - data.K_T_hat).norm();
  return it;
}

Mat solve_q_step(const RegressionData& data, const ModelFreeIterate& iterate, const Mat& R) {
  LeastSquaresResult ls;
  try {
    ls = least_squares(data.Phi_q, q_step_rhs(data, iterate, R));
  } catch (const NumericalError& e) {
    throw ExcitationError(std::string("q-step regression is rank-deficient: ") + e.what());
  }
  return smat(ls.theta, data.n);
}

ModelFreeResult run_model_free_irl(const RegressionData& data, const Mat& R, const Mat& Q0,
                                   const ModelFreeOptions& opts) {
  const int n = data.n;
  const int m = data.m;
  if (R.rows() != m || R.cols() != m || !is_symmetric(R))
    throw ConfigError("R must be symmetric m x m");
  if (!is_positive_definite(R)) throw ConfigError("R must be positive definite");
  if (Q0.rows() != n || Q0.cols() != n || !is_symmetric(Q0))
    throw ConfigError("Q0 must be symmetric n x n");
  if (opts.max_iter < 1) throw ConfigError("max_iter must be at least 1");

  ModelFreeResult result;
  result.history.reserve(static_cast<std::size_t>(
      std::min<long>(opts.max_iter + 1, opts.history_dense_limit + 2)));

  Mat Q = symmetrize(Q0);
  double prev_dq = 0.0;

  for (long i = 0; i < opts.max_iter; ++i) {
    ModelFreeIterate it = solve_p_step(data, Q, R);
    it.index = i;
    it.dq = prev_dq;

    it.Q_next = solve_q_step(data, it, R);
    it.ls_residual_q = (data.Phi_q * svec(it.Q_next) - q_step_rhs(data, it, R)).norm();

    const double dq_step = (it.Q_next - Q).norm();
    const double dk = it.dk;

    if (keep_row(i, opts.max_iter, opts.history_dense_limit)) result.history.push_back(it);

    if (!std::isfinite(dq_step) || dq_step > opts.divergence_bound) {
      std::ostringstream msg;
      msg << "model-free iteration diverged at iterate " << i
          << ": ||Q_{i+1} - Q_i|| = " << dq_step;
      throw ConvergenceError(msg.str());
    }

    const bool stop_q = dq_step <= opts.eps1;
    const bool stop_k = dk < opts.gain_tol;
    bool stop = false;
    switch (opts.stop) {
      case StopMode::QDiff: stop = stop_q; break;
      case StopMode::Gain: stop = stop_k; break;
      case StopMode::Either: stop = stop_q || stop_k; break;
    }

    if (stop || i + 1 == opts.max_iter) {
      if (result.history.empty() || result.history.back().index != i)
        result.history.push_back(it);
      ModelFreeIterate terminal = it;
      terminal.index = i + 1;
      terminal.Q = it.Q_next;
      terminal.dq = dq_step;
      result.history.push_back(std::move(terminal));

      result.Q_star = it.Q_next;
      result.P_star = it.P;
      result.K_star = it.K_next;
      result.B_tilde_star = it.B_tilde;
      result.D_tilde_star = it.D_tilde;
      result.iterations = i + 1;
      result.converged = stop;
      result.final_dq = dq_step;
      result.final_dk = dk;
      return result;
    }

    Q = it.Q_next;
    prev_dq = dq_step;
  }
  throw NumericalError("unreachable: model-free loop exited without a terminal iterate");
}

void write_regression_bundle(const std::string& dir, const RegressionData& data,
                             std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  write_matrix_csv((base / "delta_xx.csv").string(), data.fn.delta_xx);
  write_matrix_csv((base / "delta_uu.csv").string(), data.fn.delta_uu);
  write_matrix_csv((base / "i_xx.csv").string(), data.fn.i_xx);
  write_matrix_csv((base / "i_xu.csv").string(), data.fn.i_xu);

  KeyValueFile meta;
  meta.set("format_version", "1");
  meta.set("n", std::to_string(data.n));
  meta.set("m", std::to_string(data.m));
  meta.set("l", std::to_string(data.l));
  meta.set("window_dt", format_double(data.fn.window_dt));
  meta.set("seed", std::to_string(seed));
  meta.set("k_t_hat", format_matrix(data.K_T_hat));
  std::ofstream os(base / "meta.toml");
  if (!os) throw ConfigError("cannot write " + (base / "meta.toml").string());
  write_key_value(os, meta);
}

RegressionData read_regression_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  const KeyValueFile meta = read_key_value_file((base / "meta.toml").string());
  if (meta.require("format_version") != "1")
    throw ConfigError("unsupported regression bundle format_version");

  WindowFunctionals fn;
  fn.n = std::stoi(meta.require("n"));
  fn.m = std::stoi(meta.require("m"));
  fn.window_dt = std::stod(meta.require("window_dt"));
  fn.delta_xx = read_matrix_csv((base / "delta_xx.csv").string());
  fn.delta_uu = read_matrix_csv((base / "delta_uu.csv").string());
  fn.i_xx = read_matrix_csv((base / "i_xx.csv").string());
  fn.i_xu = read_matrix_csv((base / "i_xu.csv").string());

  const long l = std::stol(meta.require("l"));
  if (fn.i_xx.rows() != l || fn.i_xu.rows() != l || fn.delta_xx.rows() != l ||
      fn.delta_uu.rows() != l)
    throw ConfigError("regression bundle row counts disagree with meta l");
  const Mat K_T_hat = parse_matrix(meta.require("k_t_hat"));
  return make_regression_data(fn, K_T_hat);
}

void write_history_csv(std::ostream& os, const std::vector<ModelFreeIterate>& history) {
  if (history.empty()) return;
  const int n = static_cast<int>(history.front().Q.rows());
  const int m = static_cast<int>(history.front().K_next.rows());
  os << "i";
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) os << ",q_" << a + 1 << "_" << b + 1;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) os << ",p_" << a + 1 << "_" << b + 1;
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < m; ++a) os << ",k_" << a + 1 << "_" << b + 1;
  os << ",dq,dk,ls_residual_p,ls_residual_q\n";
  for (const ModelFreeIterate& it : history) {
    os << it.index;
    const Vec q = svec(it.Q);
    const Vec p = svec(it.P);
    for (Eigen::Index j = 0; j < q.size(); ++j) os << ',' << format_double(q[j]);
    for (Eigen::Index j = 0; j < p.size(); ++j) os << ',' << format_double(p[j]);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < m; ++a) os << ',' << format_double(it.K_next(a, b));
    os << ',' << format_double(it.dq) << ',' << format_double(it.dk) << ','
       << format_double(it.ls_residual_p) << ',' << format_double(it.ls_residual_q)
       << '\n';
  }
}

}  // namespace slq
