#pragma once

#include <stdexcept>
#include <string>

namespace slq {

// Error taxonomy mirrored by the CLI exit-code contract:
//   ConfigError -> 2, ExcitationError -> 3, ConvergenceError -> 4, NumericalError -> 5.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent experiment configuration. Messages carry the
// offending field path (e.g. "learner.Q0").
struct ConfigError : Error {
  using Error::Error;
};

// Data-richness failures: Lemma-1 rank deficiency, too few sample windows,
// degenerate expert demonstrations.
struct ExcitationError : Error {
  using Error::Error;
};

// Iteration budget exhausted before the stopping rule fired.
struct ConvergenceError : Error {
  using Error::Error;
};

// Numerical failures: non-stabilizing gains, indefinite matrices that must be
// positive definite, diverging simulations, singular least-squares systems.
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace slq
