#include "slq/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "slq/csv.hpp"
#include "slq/errors.hpp"
#include "slq/expert.hpp"
#include "slq/plot_svg.hpp"

namespace slq {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ExperimentConfig load_with_flags(const std::string& config_path, const RunFlags& flags) {
  ExperimentConfig cfg = load_config(config_path);
  if (flags.seed_override) {
    cfg.seed = *flags.seed_override;
    cfg.sim.seed = cfg.seed;
  }
  if (flags.out_override) cfg.output.directory = *flags.out_override;
  if (flags.exact_functionals &&
      (cfg.system.C.norm() != 0.0 || cfg.system.D.norm() != 0.0))
    throw ConfigError("--exact-functionals requires system.C = 0 and system.D = 0");
  return cfg;
}

std::string write_manifest(const ExperimentConfig& cfg, const fs::path& out) {
  const fs::path p = out / "manifest.txt";
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  write_key_value(os, manifest_from(cfg));
  return p.string();
}

std::string write_demo(const ExpertDemo& demo, const fs::path& out) {
  const fs::path p = out / "expert_demo.csv";
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  write_demo_csv(os, demo);
  return p.string();
}

struct ExpertStage {
  ExpertDemo demo;
  GainEstimate estimate;
};

ExpertStage run_expert_stage(const ExperimentConfig& cfg) {
  ExpertStage s;
  s.demo = generate_expert_demo(cfg.system, CostWeights{cfg.expert.Q_T, cfg.expert.R_T},
                                cfg.expert.K_init, cfg.sim, cfg.expert.demo_samples);
  s.estimate = estimate_expert_gain(s.demo);
  return s;
}

RegressionData build_data(const ExperimentConfig& cfg, const RunFlags& flags,
                          const Mat& K_T_hat) {
  const ExplorationNoise noise = cfg.make_noise();
  if (flags.exact_functionals) {
    const WindowFunctionals fn =
        exact_window_functionals(cfg.system, cfg.expert.K_init, noise, cfg.sim);
    return make_regression_data(fn, K_T_hat);
  }
  return collect_behavior_data(cfg.system, cfg.expert.K_init, noise, cfg.sim, K_T_hat);
}

std::vector<std::string> write_bundle_artifacts(const RegressionData& data,
                                                const ExperimentConfig& cfg,
                                                const fs::path& out) {
  const fs::path dir = out / "regression";
  write_regression_bundle(dir.string(), data, cfg.seed);
  std::vector<std::string> paths;
  for (const char* f : {"delta_xx.csv", "delta_uu.csv", "i_xx.csv", "i_xu.csv", "meta.toml"})
    paths.push_back((dir / f).string());
  return paths;
}

IrlOptions model_based_options(const ExperimentConfig& cfg) {
  IrlOptions o;
  o.eps1 = cfg.learner.eps1;
  o.gain_tol = cfg.learner.gain_tol;
  o.max_iter = cfg.learner.max_iter;
  o.stop = cfg.learner.stop_mode;
  return o;
}

ModelFreeOptions model_free_options(const ExperimentConfig& cfg) {
  ModelFreeOptions o;
  o.eps1 = cfg.learner.eps1;
  o.gain_tol = cfg.learner.gain_tol;
  o.max_iter = cfg.learner.max_iter;
  o.stop = cfg.learner.stop_mode;
  return o;
}

template <typename Iterate>
void emit_plots(const std::vector<Iterate>& history, const fs::path& out,
                std::vector<std::string>& artifacts) {
  PlotSeries dk{"||K_i - K_T||", {}, {}};
  PlotSeries dq{"||Q_i - Q_{i-1}||", {}, {}};
  std::vector<PlotSeries> entries;
  if (!history.empty()) {
    const Vec q0 = svec(history.front().Q);
    const Vec p0 = svec(history.front().P);
    const Eigen::Index nk = history.front().K_next.size();
    for (Eigen::Index j = 0; j < q0.size(); ++j)
      entries.push_back({"q_" + std::to_string(j + 1), {}, {}});
    for (Eigen::Index j = 0; j < p0.size(); ++j)
      entries.push_back({"p_" + std::to_string(j + 1), {}, {}});
    for (Eigen::Index j = 0; j < nk; ++j)
      entries.push_back({"k_" + std::to_string(j + 1), {}, {}});
  }
  for (const Iterate& it : history) {
    const double x = static_cast<double>(it.index);
    dk.x.push_back(x);
    dk.y.push_back(it.dk);
    if (it.index > 0) {
      dq.x.push_back(x);
      dq.y.push_back(it.dq);
    }
    const Vec q = svec(it.Q);
    const Vec p = svec(it.P);
    std::size_t s = 0;
    for (Eigen::Index j = 0; j < q.size(); ++j, ++s) {
      entries[s].x.push_back(x);
      entries[s].y.push_back(q[j]);
    }
    for (Eigen::Index j = 0; j < p.size(); ++j, ++s) {
      entries[s].x.push_back(x);
      entries[s].y.push_back(p[j]);
    }
    const Mat& K = it.K_next;
    for (Eigen::Index j = 0; j < K.size(); ++j, ++s) {
      entries[s].x.push_back(x);
      entries[s].y.push_back(K(j % K.rows(), j / K.rows()));
    }
  }
  const fs::path conv = out / "convergence.svg";
  write_line_plot_svg(conv.string(), "Convergence", "iteration", "norm", {dk, dq}, true);
  artifacts.push_back(conv.string());
  const fs::path iter = out / "iterates.svg";
  write_line_plot_svg(iter.string(), "Iterate entries", "iteration", "value", entries, false);
  artifacts.push_back(iter.string());
}

std::string write_paths_artifact(const ExperimentConfig& cfg, const fs::path& out) {
  const ExplorationNoise noise = cfg.make_noise();
  const fs::path p = out / "paths.csv";
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  dump_paths_csv(os, cfg.system, behavior_policy(cfg.expert.K_init, noise), cfg.sim);
  return p.string();
}

}  // namespace

RunReport run_experiment(const std::string& config_path, const RunFlags& flags) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = load_with_flags(config_path, flags);
  const fs::path out(cfg.output.directory);
  fs::create_directories(out);

  RunReport report;
  report.artifacts.push_back(write_manifest(cfg, out));

  const ExpertStage expert = run_expert_stage(cfg);
  report.artifacts.push_back(write_demo(expert.demo, out));
  const Mat& K_hat = expert.estimate.K_hat;

  Mat Q_star, P_star, K_star;
  const fs::path hist_path = out / "history.csv";
  if (cfg.learner.algorithm == "model_based") {
    const IrlResult r = run_model_based_irl(cfg.system, cfg.learner.R, cfg.learner.Q0,
                                            K_hat, model_based_options(cfg));
    std::ofstream os(hist_path);
    if (!os) throw ConfigError("cannot write " + hist_path.string());
    write_history_csv(os, r.history);
    report.artifacts.push_back(hist_path.string());
    if (cfg.output.plot) emit_plots(r.history, out, report.artifacts);
    report.converged = r.converged;
    report.iterations = r.iterations;
    Q_star = r.Q_star;
    P_star = r.P_star;
    K_star = r.K_star;
  } else {
    const RegressionData data = build_data(cfg, flags, K_hat);
    for (std::string& p : write_bundle_artifacts(data, cfg, out))
      report.artifacts.push_back(std::move(p));
    const ModelFreeResult r =
        run_model_free_irl(data, cfg.learner.R, cfg.learner.Q0, model_free_options(cfg));
    std::ofstream os(hist_path);
    if (!os) throw ConfigError("cannot write " + hist_path.string());
    write_history_csv(os, r.history);
    report.artifacts.push_back(hist_path.string());
    if (cfg.output.plot) emit_plots(r.history, out, report.artifacts);
    report.converged = r.converged;
    report.iterations = r.iterations;
    Q_star = r.Q_star;
    P_star = r.P_star;
    K_star = r.K_star;
  }

  if (cfg.output.write_paths) report.artifacts.push_back(write_paths_artifact(cfg, out));

  report.gain_gap = (K_star - K_hat).norm();
  const auto residuals =
      theorem1_residuals(cfg.system, CostWeights{Q_star, cfg.learner.R}, P_star, K_hat);
  report.eq11 = residuals.first;
  report.eq13 = residuals.second;
  report.nonuniqueness =
      verify_nonuniqueness(cfg.system, CostWeights{cfg.expert.Q_T, cfg.expert.R_T},
                           cfg.learner.R, P_star, Q_star, cfg.expert.K_init);
  report.wall_seconds = seconds_since(t0);
  return report;
}

RunReport compare_algorithms(const std::string& config_path, const RunFlags& flags) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = load_with_flags(config_path, flags);
  const fs::path out(cfg.output.directory);
  fs::create_directories(out);

  RunReport report;
  report.artifacts.push_back(write_manifest(cfg, out));

  const ExpertStage expert = run_expert_stage(cfg);
  report.artifacts.push_back(write_demo(expert.demo, out));
  const Mat& K_hat = expert.estimate.K_hat;

  const RegressionData data = build_data(cfg, flags, K_hat);
  for (std::string& p : write_bundle_artifacts(data, cfg, out))
    report.artifacts.push_back(std::move(p));

  const ModelFreeResult mf =
      run_model_free_irl(data, cfg.learner.R, cfg.learner.Q0, model_free_options(cfg));
  const IrlResult mb = run_model_based_irl(cfg.system, cfg.learner.R, cfg.learner.Q0,
                                           K_hat, model_based_options(cfg));

  {
    const fs::path p = out / "history_model_free.csv";
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    write_history_csv(os, mf.history);
    report.artifacts.push_back(p.string());
  }
  {
    const fs::path p = out / "history_model_based.csv";
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    write_history_csv(os, mb.history);
    report.artifacts.push_back(p.string());
  }
  {
    // Paired gaps aligned on iterate index; both runs share max_iter so the
    // thinning rule keeps the same indices.
    const fs::path p = out / "compare.csv";
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    os << "i,q_gap,p_gap,k_gap\n";
    std::size_t a = 0, b = 0;
    while (a < mb.history.size() && b < mf.history.size()) {
      const IrlIterate& x = mb.history[a];
      const ModelFreeIterate& y = mf.history[b];
      if (x.index < y.index) { ++a; continue; }
      if (y.index < x.index) { ++b; continue; }
      os << x.index << ',' << format_double((x.Q - y.Q).norm()) << ','
         << format_double((x.P - y.P).norm()) << ','
         << format_double((x.K_next - y.K_next).norm()) << '\n';
      ++a;
      ++b;
    }
    report.artifacts.push_back(p.string());
  }
  if (cfg.output.plot) emit_plots(mf.history, out, report.artifacts);
  if (cfg.output.write_paths) report.artifacts.push_back(write_paths_artifact(cfg, out));

  report.converged = mf.converged;
  report.iterations = mf.iterations;
  report.gain_gap = (mf.K_star - K_hat).norm();
  const auto residuals = theorem1_residuals(
      cfg.system, CostWeights{mf.Q_star, cfg.learner.R}, mf.P_star, K_hat);
  report.eq11 = residuals.first;
  report.eq13 = residuals.second;
  report.nonuniqueness =
      verify_nonuniqueness(cfg.system, CostWeights{cfg.expert.Q_T, cfg.expert.R_T},
                           cfg.learner.R, mf.P_star, mf.Q_star, cfg.expert.K_init);
  report.wall_seconds = seconds_since(t0);
  return report;
}

RunReport dump_paths(const std::string& config_path, const RunFlags& flags) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = load_with_flags(config_path, flags);
  const fs::path out(cfg.output.directory);
  fs::create_directories(out);

  RunReport report;
  report.artifacts.push_back(write_manifest(cfg, out));
  report.artifacts.push_back(write_paths_artifact(cfg, out));
  report.converged = true;
  report.wall_seconds = seconds_since(t0);
  return report;
}

}  // namespace slq
