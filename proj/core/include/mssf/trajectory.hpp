#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mssf/network.hpp"

namespace mssf {

/// Piecewise record of one realization. Pure-jump trajectories record
/// every jump; hybrid trajectories additionally record the ODE grid.
/// The final row always marks the simulation horizon.
struct Trajectory {
  enum class Kind { PureJump, Hybrid };

  Kind kind = Kind::PureJump;
  std::vector<double> times;   // strictly increasing, starting at 0
  std::vector<State> states;
  std::uint64_t jump_count = 0;

  /// State at time t: the last recorded state with time <= t
  /// (right-continuous lookup).
  const State& state_at(double t) const {
    if (times.empty()) throw std::runtime_error("empty trajectory");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t idx = (it == times.begin()) ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return states[idx];
  }
};

/// Raised when an event-count safety cap trips (explosion guard). The
/// partial trajectory up to the cap is attached for diagnosis.
struct CapExceededError : std::runtime_error {
  CapExceededError(const std::string& what, Trajectory partial_trajectory)
      : std::runtime_error(what), partial(std::move(partial_trajectory)) {}
  Trajectory partial;
};

}  // namespace mssf
