#include "slq/expert.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "slq/csv.hpp"
#include "slq/errors.hpp"
#include "slq/rng.hpp"

namespace slq {

ExpertDemo generate_expert_demo(const SystemDynamics& sys, const CostWeights& weights_T,
                                const Mat& K_init, const SimConfig& cfg, int samples) {
  sys.validate();
  const int n = sys.n(), m = sys.m();
  const int k = samples > 0 ? samples : std::max(4 * m * n, n * (n + 1));
  if (k < m * n)
    throw ConfigError("expert.demo_samples: need k >= m*n = " + std::to_string(m * n));
  if (cfg.x0.size() != n) throw ConfigError("sim.x0 length must equal n");

  const SareResult sare = solve_sare(sys, weights_T, K_init);
  const Mat K_T = sare.K;

  SimConfig demo_cfg = cfg;
  demo_cfg.window_dt = cfg.step_h;
  demo_cfg.windows_l = std::max(k - 1, 1);
  demo_cfg.paths_M = 1;
  Mat X(n, demo_cfg.total_steps() + 1), U(m, demo_cfg.total_steps() + 1);
  const ControlLaw expert_law = [&K_T](double, const Vec& x) -> Vec { return K_T * x; };
  detail::simulate_single_path(sys, expert_law, demo_cfg, stream_tag::xprt, 0, X, U);

  ExpertDemo demo;
  demo.X = X.leftCols(k);
  demo.U = U.leftCols(k);
  demo.t.resize(k);
  for (int s = 0; s < k; ++s) demo.t[s] = s * cfg.step_h;
  return demo;
}

GainEstimate estimate_expert_gain(const ExpertDemo& demo) {
  const int n = static_cast<int>(demo.X.rows());
  const int m = static_cast<int>(demo.U.rows());
  const int k = demo.k();
  if (k < std::max(1, m * n) || demo.U.cols() != k)
    throw ExcitationError("expert demo: need k >= m*n aligned samples");

  // U = K X column-wise; solve the transposed system X' K' = U'.
  Eigen::ColPivHouseholderQR<Mat> qr(demo.X.transpose());
  if (qr.rank() < n)
    throw ExcitationError("expert demo states span rank " + std::to_string(qr.rank()) + " < " +
                          std::to_string(n) + "; demo too degenerate");
  GainEstimate est;
  est.K_hat = qr.solve(demo.U.transpose()).transpose();
  est.residual = (demo.U - est.K_hat * demo.X).norm();
  Eigen::JacobiSVD<Mat> svd(demo.X);
  const double smin = svd.singularValues()(n - 1);
  const double smax = svd.singularValues()(0);
  est.condition = (smax / smin) * (smax / smin);  // condition of X X'
  return est;
}

void write_demo_csv(std::ostream& os, const ExpertDemo& demo) {
  const int n = static_cast<int>(demo.X.rows());
  const int m = static_cast<int>(demo.U.rows());
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x_" << i;
  for (int i = 1; i <= m; ++i) os << ",u_" << i;
  os << "\n";
  for (int s = 0; s < demo.k(); ++s) {
    os << format_double(demo.t[s]);
    for (int i = 0; i < n; ++i) os << ',' << format_double(demo.X(i, s));
    for (int i = 0; i < m; ++i) os << ',' << format_double(demo.U(i, s));
    os << '\n';
  }
}

ExpertDemo read_demo_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("demo csv: missing header");
  int n = 0, m = 0;
  {
    std::stringstream header(line);
    std::string col;
    bool first = true;
    while (std::getline(header, col, ',')) {
      if (first) {
        if (col != "t") throw ConfigError("demo csv: first column must be t");
        first = false;
      } else if (col.rfind("x_", 0) == 0) {
        ++n;
      } else if (col.rfind("u_", 0) == 0) {
        ++m;
      } else {
        throw ConfigError("demo csv: unexpected column " + col);
      }
    }
  }
  if (n < 1 || m < 1) throw ConfigError("demo csv: header must list x_ and u_ columns");
  std::vector<double> flat;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    int cells = 0;
    while (std::getline(row, cell, ',')) {
      flat.push_back(std::stod(cell));
      ++cells;
    }
    if (cells != 1 + n + m) throw ConfigError("demo csv: row width mismatch");
    ++rows;
  }
  ExpertDemo demo;
  demo.t.resize(rows);
  demo.X.resize(n, rows);
  demo.U.resize(m, rows);
  for (int s = 0; s < rows; ++s) {
    const double* r = flat.data() + static_cast<std::size_t>(s) * (1 + n + m);
    demo.t[s] = r[0];
    for (int i = 0; i < n; ++i) demo.X(i, s) = r[1 + i];
    for (int i = 0; i < m; ++i) demo.U(i, s) = r[1 + n + i];
  }
  return demo;
}

}  // namespace slq
