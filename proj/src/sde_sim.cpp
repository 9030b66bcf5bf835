#include "slq/sde_sim.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "slq/csv.hpp"
#include "slq/errors.hpp"
#include "slq/rng.hpp"

namespace slq {

void SimConfig::validate() const {
  if (!(step_h > 0.0)) throw ConfigError("sim.step_h must be positive");
  const double ratio = window_dt / step_h;
  const double rounded = std::round(ratio);
  if (!(window_dt > 0.0) || rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded)
    throw ConfigError("sim.window_dt must be a positive integer multiple of step_h");
  if (windows_l < 1) throw ConfigError("sim.windows_l must be >= 1");
  if (paths_M < 1) throw ConfigError("sim.paths_M must be >= 1");
  if (x0.size() < 1) throw ConfigError("sim.x0 must be a nonempty vector");
}

int SimConfig::steps_per_window() const {
  return static_cast<int>(std::lround(window_dt / step_h));
}

int ExplorationNoise::channels() const {
  if (count <= 0) return 0;
  return static_cast<int>(frequencies.size()) / count;
}

Vec ExplorationNoise::value(double t) const {
  const int ch = channels();
  Vec e = Vec::Zero(ch);
  for (int j = 0; j < ch; ++j) {
    double s = 0.0;
    for (int i = 0; i < count; ++i) s += std::sin(frequencies[j * count + i] * t);
    e(j) = amplitude * s;
  }
  return e;
}

ExplorationNoise make_exploration(std::uint64_t seed, int channels, int count, double amplitude,
                                  double freq_range) {
  if (channels < 1) throw ConfigError("noise: channel count must be >= 1");
  if (count < 0) throw ConfigError("noise.count must be >= 0");
  ExplorationNoise noise;
  noise.amplitude = amplitude;
  noise.count = count;
  noise.frequencies.resize(static_cast<std::size_t>(channels) * count);
  auto rng = make_stream(seed, stream_tag::freq, 0);
  for (double& w : noise.frequencies) w = (2.0 * uniform01(rng) - 1.0) * freq_range;
  return noise;
}

Vec exploration_signal(const ExplorationNoise& noise, double t) { return noise.value(t); }

ControlLaw behavior_policy(const Mat& K0, const ExplorationNoise& noise) {
  const int m = static_cast<int>(K0.rows());
  if (noise.count > 0 && noise.channels() != m)
    throw ConfigError("noise.frequencies: expected " + std::to_string(m) +
                      " channel blocks of noise.count entries");
  return [K0, noise, m](double t, const Vec& x) -> Vec {
    Vec u = K0 * x;
    if (noise.count > 0) u += noise.value(t);
    return u;
  };
}

namespace {

/** One Euler-Maruyama path on the cfg grid, written into preallocated
 *  X (n x T+1), U (m x T+1). The draw order (one Gaussian per step) is the
 *  reproducibility contract. */
void simulate_one_path(const SystemDynamics& sys, const ControlLaw& u, const SimConfig& cfg,
                       std::uint64_t tag, std::uint64_t path_index, Mat& X, Mat& U) {
  const int n = sys.n();
  const int total = cfg.total_steps();
  const double h = cfg.step_h;
  const double sqrt_h = std::sqrt(h);
  GaussianStream gauss(make_stream(cfg.seed, tag, path_index));

  Vec x = cfg.x0, drift(n), diff(n);
  for (int s = 0; s <= total; ++s) {
    const double t = s * h;
    const Vec uu = u(t, x);
    X.col(s) = x;
    U.col(s) = uu;
    if (s == total) break;
    drift.noalias() = sys.A * x;
    drift.noalias() += sys.B * uu;
    diff.noalias() = sys.C * x;
    diff.noalias() += sys.D * uu;
    const double dw = sqrt_h * gauss.next();
    x += h * drift + dw * diff;
    if (!(x.norm() <= 1e12))
      throw NumericalError("simulate_paths: divergence on path " + std::to_string(path_index) +
                           " at step " + std::to_string(s + 1));
  }
}

struct PathAccum {
  Mat bounds;  // (l+1) x n(n+1)/2, xbar of the state at window boundaries
  Mat axx;     // l x n^2
  Mat axu;     // l x n m
  Mat auu;     // l x m(m+1)/2
};

/** Window sums for one path; left-endpoint rectangle rule throughout. */
PathAccum accumulate_one_path(const Eigen::Ref<const Mat>& X, const Eigen::Ref<const Mat>& U,
                              const SimConfig& cfg) {
  const int n = static_cast<int>(X.rows()), m = static_cast<int>(U.rows());
  const int l = cfg.windows_l, spw = cfg.steps_per_window();
  const double h = cfg.step_h;
  const int sn = n * (n + 1) / 2, sm = m * (m + 1) / 2;

  PathAccum acc;
  acc.bounds.setZero(l + 1, sn);
  acc.axx.setZero(l, n * n);
  acc.axu.setZero(l, n * m);
  acc.auu.setZero(l, sm);

  // Mat is column-major; rows are strided, so index (w, k) instead of walking a row pointer.
  auto write_xbar = [](const Eigen::Ref<const Vec>& v, double scale, Mat& M, int r) {
    int k = 0;
    const int d = static_cast<int>(v.size());
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) M(r, k++) += scale * v(i) * v(j);
  };

  for (int w = 0; w <= l; ++w) write_xbar(X.col(w * spw), 1.0, acc.bounds, w);
  for (int w = 0; w < l; ++w) {
    for (int s = w * spw; s < (w + 1) * spw; ++s) {
      const auto x = X.col(s);
      const auto uu = U.col(s);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) acc.axx(w, a * n + b) += h * x(a) * x(b);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < m; ++b) acc.axu(w, a * m + b) += h * x(a) * uu(b);
      write_xbar(uu, h, acc.auu, w);
    }
  }
  return acc;
}

/** Deterministic pairwise tree reduction over [lo, hi). */
PathAccum reduce_accums(std::vector<PathAccum>& accs, int lo, int hi) {
  if (hi - lo == 1) return std::move(accs[lo]);
  const int mid = lo + (hi - lo) / 2;
  PathAccum left = reduce_accums(accs, lo, mid);
  const PathAccum right = reduce_accums(accs, mid, hi);
  left.bounds += right.bounds;
  left.axx += right.axx;
  left.axu += right.axu;
  left.auu += right.auu;
  return left;
}

WindowFunctionals finalize(PathAccum total, const SimConfig& cfg, int n, int m) {
  const double inv_m = 1.0 / cfg.paths_M;
  total.bounds *= inv_m;
  WindowFunctionals fn;
  fn.n = n;
  fn.m = m;
  fn.window_dt = cfg.window_dt;
  fn.delta_xx = total.bounds.bottomRows(cfg.windows_l) - total.bounds.topRows(cfg.windows_l);
  fn.i_xx = total.axx * inv_m;
  fn.i_xu = total.axu * inv_m;
  fn.delta_uu = total.auu * inv_m;
  return fn;
}

}  // namespace

std::vector<PathRecord> simulate_paths(const SystemDynamics& sys, const ControlLaw& u,
                                       const SimConfig& cfg) {
  sys.validate();
  cfg.validate();
  if (cfg.x0.size() != sys.n()) throw ConfigError("sim.x0 length must equal n");
  const int total = cfg.total_steps();
  std::vector<PathRecord> paths(cfg.paths_M);
  for (int p = 0; p < cfg.paths_M; ++p) {
    PathRecord& rec = paths[p];
    rec.X.resize(sys.n(), total + 1);
    rec.U.resize(sys.m(), total + 1);
    rec.t.resize(total + 1);
    for (int s = 0; s <= total; ++s) rec.t[s] = s * cfg.step_h;
    simulate_one_path(sys, u, cfg, stream_tag::path, p, rec.X, rec.U);
  }
  return paths;
}

WindowFunctionals accumulate_window_functionals(const std::vector<PathRecord>& paths,
                                                const SimConfig& cfg) {
  cfg.validate();
  if (paths.empty() || static_cast<int>(paths.size()) != cfg.paths_M)
    throw NumericalError("accumulate_window_functionals: path count != cfg.paths_M");
  const int total = cfg.total_steps();
  const int n = static_cast<int>(paths[0].X.rows());
  const int m = static_cast<int>(paths[0].U.rows());
  std::vector<PathAccum> accs;
  accs.reserve(paths.size());
  for (const PathRecord& rec : paths) {
    if (rec.X.cols() != total + 1 || rec.U.cols() != total + 1 || rec.X.rows() != n ||
        rec.U.rows() != m)
      throw NumericalError("accumulate_window_functionals: inconsistent path grids");
    accs.push_back(accumulate_one_path(rec.X, rec.U, cfg));
  }
  return finalize(reduce_accums(accs, 0, static_cast<int>(accs.size())), cfg, n, m);
}

WindowFunctionals collect_window_functionals(const SystemDynamics& sys, const ControlLaw& u,
                                             const SimConfig& cfg) {
  sys.validate();
  cfg.validate();
  if (cfg.x0.size() != sys.n()) throw ConfigError("sim.x0 length must equal n");
  const int total = cfg.total_steps();
  Mat X(sys.n(), total + 1), U(sys.m(), total + 1);
  std::vector<PathAccum> accs;
  accs.reserve(cfg.paths_M);
  for (int p = 0; p < cfg.paths_M; ++p) {
    simulate_one_path(sys, u, cfg, stream_tag::path, p, X, U);
    accs.push_back(accumulate_one_path(X, U, cfg));
  }
  return finalize(reduce_accums(accs, 0, static_cast<int>(accs.size())), cfg, sys.n(), sys.m());
}

WindowFunctionals exact_window_functionals(const SystemDynamics& sys, const Mat& K0,
                                           const ExplorationNoise& noise, const SimConfig& cfg,
                                           double rk4_h) {
  sys.validate();
  cfg.validate();
  if (cfg.x0.size() != sys.n()) throw ConfigError("sim.x0 length must equal n");
  const int n = sys.n(), m = sys.m();
  const int sn = n * (n + 1) / 2, sm = m * (m + 1) / 2;
  const Mat Abar = sys.A + sys.B * K0;
  const Mat Cbar = sys.C + sys.D * K0;

  // Joint first/second moment flow with running window integrals; the whole
  // bundle advances by classical RK4 so the integrals share the moment
  // accuracy. mu' and M2' depend on e(t); the integral states' derivatives
  // are the moment functions themselves.
  struct State {
    Vec mu;
    Mat M2, ixx, ixu, iuu;
  };
  auto deriv = [&](double t, const State& s) {
    const Vec e = noise.count > 0 ? noise.value(t) : Vec::Zero(m);
    const Vec Be = sys.B * e;
    const Vec De = sys.D * e;
    State d;
    d.mu = Abar * s.mu + Be;
    d.M2 = Abar * s.M2 + s.M2 * Abar.transpose() + Be * s.mu.transpose() +
           s.mu * Be.transpose() + Cbar * s.M2 * Cbar.transpose() +
           Cbar * s.mu * De.transpose() + De * s.mu.transpose() * Cbar.transpose() +
           De * De.transpose();
    d.ixx = s.M2;
    d.ixu = s.M2 * K0.transpose() + s.mu * e.transpose();
    d.iuu = K0 * s.M2 * K0.transpose() + K0 * s.mu * e.transpose() +
            e * s.mu.transpose() * K0.transpose() + e * e.transpose();
    return d;
  };
  auto axpy = [](const State& a, double c, const State& b) {
    State r;
    r.mu = a.mu + c * b.mu;
    r.M2 = a.M2 + c * b.M2;
    r.ixx = a.ixx + c * b.ixx;
    r.ixu = a.ixu + c * b.ixu;
    r.iuu = a.iuu + c * b.iuu;
    return r;
  };

  const int steps = std::max(1, static_cast<int>(std::lround(cfg.window_dt / rk4_h)));
  const double h = cfg.window_dt / steps;

  State s;
  s.mu = cfg.x0;
  s.M2 = cfg.x0 * cfg.x0.transpose();
  s.ixx.setZero(n, n);
  s.ixu.setZero(n, m);
  s.iuu.setZero(m, m);

  WindowFunctionals fn;
  fn.n = n;
  fn.m = m;
  fn.window_dt = cfg.window_dt;
  fn.delta_xx.resize(cfg.windows_l, sn);
  fn.delta_uu.resize(cfg.windows_l, sm);
  fn.i_xx.resize(cfg.windows_l, n * n);
  fn.i_xu.resize(cfg.windows_l, n * m);

  auto xbar_of = [](const Mat& M) {
    const int d = static_cast<int>(M.rows());
    Vec v(d * (d + 1) / 2);
    int k = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) v(k++) = M(i, j);
    return v;
  };

  for (int w = 0; w < cfg.windows_l; ++w) {
    const Vec start_bar = xbar_of(s.M2);
    s.ixx.setZero();
    s.ixu.setZero();
    s.iuu.setZero();
    for (int step = 0; step < steps; ++step) {
      const double t = w * cfg.window_dt + step * h;
      const State k1 = deriv(t, s);
      const State k2 = deriv(t + 0.5 * h, axpy(s, 0.5 * h, k1));
      const State k3 = deriv(t + 0.5 * h, axpy(s, 0.5 * h, k2));
      const State k4 = deriv(t + h, axpy(s, h, k3));
      s.mu += (h / 6.0) * (k1.mu + 2.0 * k2.mu + 2.0 * k3.mu + k4.mu);
      s.M2 += (h / 6.0) * (k1.M2 + 2.0 * k2.M2 + 2.0 * k3.M2 + k4.M2);
      s.ixx += (h / 6.0) * (k1.ixx + 2.0 * k2.ixx + 2.0 * k3.ixx + k4.ixx);
      s.ixu += (h / 6.0) * (k1.ixu + 2.0 * k2.ixu + 2.0 * k3.ixu + k4.ixu);
      s.iuu += (h / 6.0) * (k1.iuu + 2.0 * k2.iuu + 2.0 * k3.iuu + k4.iuu);
    }
    fn.delta_xx.row(w) = (xbar_of(s.M2) - start_bar).transpose();
    fn.delta_uu.row(w) = xbar_of(symmetrize(s.iuu)).transpose();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) fn.i_xx(w, a * n + b) = 0.5 * (s.ixx(a, b) + s.ixx(b, a));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < m; ++b) fn.i_xu(w, a * m + b) = s.ixu(a, b);
  }
  return fn;
}

namespace detail {

void simulate_single_path(const SystemDynamics& sys, const ControlLaw& u, const SimConfig& cfg,
                          std::uint64_t tag, std::uint64_t index, Mat& X, Mat& U) {
  simulate_one_path(sys, u, cfg, tag, index, X, U);
}

}  // namespace detail

void dump_paths_csv(std::ostream& os, const SystemDynamics& sys, const ControlLaw& u,
                    const SimConfig& cfg) {
  sys.validate();
  cfg.validate();
  if (cfg.x0.size() != sys.n()) throw ConfigError("sim.x0 length must equal n");
  const int total = cfg.total_steps();
  os << "path_id,t";
  for (int i = 1; i <= sys.n(); ++i) os << ",x_" << i;
  for (int i = 1; i <= sys.m(); ++i) os << ",u_" << i;
  os << "\n";
  Mat X(sys.n(), total + 1), U(sys.m(), total + 1);
  for (int p = 0; p < cfg.paths_M; ++p) {
    simulate_one_path(sys, u, cfg, stream_tag::path, p, X, U);
    for (int s = 0; s <= total; ++s) {
      os << p << ',' << format_double(s * cfg.step_h);
      for (int i = 0; i < sys.n(); ++i) os << ',' << format_double(X(i, s));
      for (int i = 0; i < sys.m(); ++i) os << ',' << format_double(U(i, s));
      os << '\n';
    }
  }
}

}  // namespace slq
