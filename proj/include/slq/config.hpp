#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slq/csv.hpp"
#include "slq/irl_model_based.hpp"
#include "slq/irl_model_free.hpp"
#include "slq/sde_sim.hpp"

namespace slq {

/** Experiment description parsed from a TOML-style config: top-level seed,
 *  then [system], [expert], [learner], [sim], [noise], [output] tables.
 *  Matrices are nested numeric arrays, e.g. A = [[-1.0, 2.0], [2.2, 1.7]].
 *  Unset optional fields resolve to the documented per-algorithm defaults at
 *  load time, so a parsed config is always fully populated. */
struct ExperimentConfig {
  std::uint64_t seed = 0;

  SystemDynamics system;

  struct Expert {
    Mat Q_T;
    Mat R_T;
    Mat K_init;           // stabilizing gain: SARE initializer and behavior policy
    int demo_samples = 0; // 0 -> expert-module default
  } expert;

  struct Learner {
    std::string algorithm = "model_free";  // "model_free" | "model_based"
    Mat R;
    Mat Q0;
    double eps1 = 0.0;      // resolved per algorithm when unset
    long max_iter = 0;      // resolved per algorithm when unset
    StopMode stop_mode = StopMode::Either;
    double gain_tol = 0.01;
  } learner;

  SimConfig sim;

  struct Noise {
    double amplitude = 0.0;
    int count = 0;
    double freq_range = 0.0;
    std::vector<double> frequencies;  // explicit list overrides the seeded draw
  } noise;

  struct Output {
    std::string directory = "out";
    bool plot = false;
    bool write_paths = false;
  } output;

  /** Dimensional and semantic validation; throws ConfigError whose message
   *  names the offending field path (e.g. "learner.Q0"). */
  void validate() const;

  ExplorationNoise make_noise() const;  // explicit list or seeded draw
};

/** Parse + resolve defaults + validate. */
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source_name);

/** The fully resolved config as a versioned key=value manifest (matrices as
 *  row-major bracketed lists). Every defaulted value appears explicitly. */
KeyValueFile manifest_from(const ExperimentConfig& cfg);

StopMode parse_stop_mode(const std::string& s);          // throws ConfigError
std::string stop_mode_name(StopMode mode);

}  // namespace slq
