#pragma once

#include <cstdint>

#include "mssf/rng.hpp"
#include "mssf/scaling.hpp"
#include "mssf/trajectory.hpp"

namespace mssf {

struct SsaOptions {
  std::uint64_t max_events = 100'000'000;  // explosion guard
  bool record = true;                      // record jump times/states
};

/// Exact simulation of the full scaled jump process at gamma = gamma1 by
/// the modified next reaction method: per-reaction unit-exponential
/// internal clocks, ties broken by lowest reaction index. Reaction j's
/// clock draws from rng.sub(j), so trajectories with the same stream
/// couple across model variants through their shared slow-reaction
/// clocks.
///
/// States are scaled coordinates; each firing moves species i by
/// N^{-alpha_i} (v'_ij - v_ij). Internally the simulator tracks integer
/// net jump counts per species on top of the (possibly non-lattice)
/// initial point, so visited raw counts never drift below zero through
/// float accumulation: non-negativity comes from the propensity
/// indicator alone.
class FullSimulator {
public:
  FullSimulator(const ReactionNetwork& net, const ScalingSpec& spec);

  Trajectory simulate(const State& x0, double t_end, RngStream rng,
                      const SsaOptions& opts = {}) const;

  /// Transition kernel K^{N,gamma1}_dt: endpoint of a simulate() run,
  /// updating x in place.
  void sample(State& x, double dt, RngStream rng) const;

  int species_count() const { return static_cast<int>(step_.size()); }

private:
  struct CompiledReaction {
    double rate;  // k'_j N^{gamma1 + rho~_j}
    struct Term {
      int species;
      int count;
      double step;       // N^{-alpha_i}
      double threshold;  // step * v_ij
    };
    std::vector<Term> terms;
    std::vector<Reaction::Term> change;  // integer jump counts per species
  };

  double effective_rate(int j, const State& x) const;
  void run(State& x, double t_end, RngStream rng, const SsaOptions& opts,
           Trajectory* out) const;

  std::vector<CompiledReaction> reactions_;
  std::vector<double> step_;  // per-species N^{-alpha_i}
};

/// Statistically exact realization of the full scaled model on [0, t_end].
Trajectory simulate_full(const ReactionNetwork& net, const ScalingSpec& spec, const State& x0,
                         double t_end, RngStream rng, const SsaOptions& opts = {});

/// One draw from the transition kernel K^{N,gamma1}_dt(x, .).
State sample_kernel(const ReactionNetwork& net, const ScalingSpec& spec, const State& x,
                    double dt, RngStream rng);

}  // namespace mssf
