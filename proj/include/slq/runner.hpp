#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slq/config.hpp"

namespace slq {

struct RunFlags {
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  bool exact_functionals = false;  // deterministic oracle; requires C = D = 0
};

struct RunReport {
  bool converged = false;
  long iterations = 0;
  double gain_gap = 0.0;  // ||K_star - K_T_hat||_F
  double eq11 = 0.0;      // learner SARE residual at (P_star, Q_star)
  double eq13 = 0.0;      // ||K_T_hat - optimal_gain(P_star, R)||_F
  NonuniquenessReport nonuniqueness;
  double wall_seconds = 0.0;
  std::vector<std::string> artifacts;  // every path exists at success exit
};

/** Full pipeline: expert SARE + demo, gain estimation, data collection,
 *  the configured IRL algorithm, artifact emission (manifest, history CSV,
 *  regression bundle for model-free runs, optional plot/paths). */
RunReport run_experiment(const std::string& config_path, const RunFlags& flags = {});

/** Runs both algorithms on the same config and data, emits a paired-history
 *  CSV with per-iteration gaps between model-based and model-free iterates.
 *  Reports the model-free run; gap columns quantify the equivalence. */
RunReport compare_algorithms(const std::string& config_path, const RunFlags& flags = {});

/** Writes the raw behavior paths CSV (path_id, t, x_1.., u_1..). */
RunReport dump_paths(const std::string& config_path, const RunFlags& flags = {});

}  // namespace slq
