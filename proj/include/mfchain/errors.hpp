// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mfchain {

/// Base class for all failures raised by the simulation layers.
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ground-state construction requested at a gap closing.
struct DegenerateGroundStateError : SimulationError {
  using SimulationError::SimulationError;
};

/// Non-finite entries after a propagation step (dt too large).
struct PropagationOverflowError : SimulationError {
  using SimulationError::SimulationError;
};

/// A jump was requested on a site with vanishing occupation.
struct ZeroProbabilityJumpError : SimulationError {
  using SimulationError::SimulationError;
};

/// Total per-step jump probability reached one.
struct StepSizeViolationError : SimulationError {
  using SimulationError::SimulationError;
};

/// Correlation spectrum left [0,1] beyond the tolerated window.
struct StateCorruptionError : SimulationError {
  using SimulationError::SimulationError;
};

/// Moment integration produced an unphysical spectrum.
struct IntegrationFailureError : SimulationError {
  using SimulationError::SimulationError;
};

/// Relaxation loop did not reach the requested residual.
struct ConvergenceError : SimulationError {
  using SimulationError::SimulationError;
};

/// A jump record cannot be realized on the given initial state.
struct ImpossibleRecordError : SimulationError {
  using SimulationError::SimulationError;
};

/// Requested replicated dimension exceeds the memory guard.
struct MemoryGuardError : SimulationError {
  using SimulationError::SimulationError;
};

/// Invalid run configuration.
struct ConfigError : std::runtime_error {
  std::string key_path;
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(what), key_path(key) {}
};

}  // namespace mfchain
