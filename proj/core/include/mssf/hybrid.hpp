#pragma once

#include <cstdint>

#include "mssf/rng.hpp"
#include "mssf/scaling.hpp"
#include "mssf/trajectory.hpp"

namespace mssf {

struct HybridStepConfig {
  double ode_step = 0.01;            // max RK4 step, minutes
  double hazard_tol = 1e-8;          // relative tolerance for jump-time bracketing
  std::uint64_t max_jumps = 10'000'000;

  void validate() const;
};

/// Simulates the reduced piecewise-deterministic process: fast reactions
/// drive an ODE on their mask-selected coordinates, natural-scale
/// reactions fire as inhomogeneous Poisson jumps on the D^0 coordinates,
/// and slow reactions are dropped. Between jumps the drift is integrated
/// with fixed-step classical RK4; each jump reaction fires when its
/// integrated hazard crosses an independent unit-exponential threshold.
///
/// Jump hazards that never read a drifting coordinate are constant
/// between jumps, so their crossing times are solved by direct
/// exponential inversion; state-dependent hazards are accumulated with
/// Simpson's rule on the RK4 grid and the jump time is localized by
/// bisection to hazard_tol. Both paths draw reaction j's thresholds from
/// rng.sub(j), matching the full simulator's clock layout.
///
/// Between jumps the drift coefficients are constant (discrete and
/// frozen coordinates cannot move), so each segment folds them once;
/// when the field is affine in the drifting coordinates the RK4 update
/// is applied through its exact per-step affine map.
class HybridSimulator {
public:
  HybridSimulator(const ReactionNetwork& net, const ReducedModel& reduced);

  Trajectory simulate(const State& x0, double t_end, RngStream rng,
                      const HybridStepConfig& cfg = {}) const;

  /// Transition kernel K^{gamma1}_dt: endpoint only, updating x in place.
  void sample(State& x, double dt, RngStream rng, const HybridStepConfig& cfg = {}) const;

  bool constant_jump_hazards() const { return constant_hazards_; }
  int species_count() const { return species_count_; }

private:
  struct Term {
    int species;
    int count;
    bool discrete;  // alpha_i == 0
  };
  struct DriftReaction {
    double rate;                                   // k'_j
    std::vector<Term> terms;                       // all substrate terms
    std::vector<std::pair<int, double>> change;    // mask-selected, species-indexed
    std::vector<Term> frozen_terms;                // constant between jumps
    std::vector<std::pair<int, int>> active_terms; // (active index, count)
    std::vector<std::pair<int, double>> active_change;
  };
  struct JumpReaction {
    int index;                                     // original reaction index
    double rate;                                   // k'_j
    std::vector<Term> terms;
    std::vector<Reaction::Term> change;            // D^0-masked integer deltas
    bool state_dependent;                          // reads a drifting coordinate
  };

  struct Workspace;

  double limit_rate(double rate, const std::vector<Term>& terms, const State& x) const;
  void drift(const State& x, std::vector<double>& dx) const;
  void rk4_step(State& x, double h, Workspace& ws) const;
  void build_segment(const State& x, Workspace& ws) const;
  void build_step_map(double h, Workspace& ws) const;
  void segment_drift(const std::vector<double>& z, std::vector<double>& dz,
                     Workspace& ws) const;
  void integrate_segment(State& x, double from, double to, const HybridStepConfig& cfg,
                         Workspace& ws, Trajectory* out) const;
  void advance(const State& from, double h, State& to, std::vector<double>& hazard_increment,
               Workspace& ws) const;
  void run(State& x, double t_end, RngStream rng, const HybridStepConfig& cfg,
           Trajectory* out) const;

  int species_count_ = 0;
  std::vector<DriftReaction> drift_;
  std::vector<JumpReaction> jumps_;
  std::vector<int> active_;        // coordinates moved by the drift
  std::vector<int> active_index_;  // species -> active position, -1 otherwise
  std::vector<std::uint8_t> is_active_;
  bool constant_hazards_ = true;
  bool affine_ = true;
};

Trajectory simulate_reduced(const ReactionNetwork& net, const ReducedModel& reduced,
                            const State& x0, double t_end, RngStream rng,
                            const HybridStepConfig& cfg = {});

State sample_reduced_kernel(const ReactionNetwork& net, const ReducedModel& reduced,
                            const State& x, double dt, RngStream rng,
                            const HybridStepConfig& cfg = {});

}  // namespace mssf
