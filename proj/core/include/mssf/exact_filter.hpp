#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mssf/observation.hpp"
#include "mssf/pfilter.hpp"
#include "mssf/scaling.hpp"

namespace mssf {

/// Exhaustive enumeration of integer states within per-species bounds,
/// with a mixed-radix bijection between states and ordinals.
struct TruncatedStateSpace {
  std::vector<int> bounds;          // inclusive per-species max count
  std::vector<std::size_t> stride;  // mixed-radix strides, species 0 fastest
  std::size_t count = 0;

  static TruncatedStateSpace create(std::vector<int> bounds, std::size_t cap = 1'000'000);

  std::size_t size() const { return count; }
  void state(std::size_t ordinal, std::vector<int>& out) const;
  std::size_t index(std::span<const int> counts) const;
  bool in_bounds(std::span<const int> counts) const;
};

/// Sparse CTMC generator over the truncated lattice. Probability leaving
/// the truncation is killed: row sums are <= 0 and the shortfall is the
/// recorded leak rate.
struct GeneratorMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;  // off-diagonal CSR
  std::vector<std::size_t> col;
  std::vector<double> val;
  std::vector<double> diag;  // -(off-diagonal row sum + leak)
  std::vector<double> leak;
};

/// Q[x -> x + zeta_j] = rate of reaction j at x (the full scaled model's
/// jump rate, evaluated on the lattice); out-of-bounds targets leak.
GeneratorMatrix build_generator(const ReactionNetwork& net, const ScalingSpec& spec,
                                const TruncatedStateSpace& space);

/// p * exp(Q dt) by uniformization with rate Lambda = max |Q_ii| and
/// adaptive series length for a 1e-12 tail. Mass never increases; the
/// lost mass is the truncation leak.
std::vector<double> propagate(const GeneratorMatrix& Q, const std::vector<double>& p, double dt);

/// Pointwise multiply by g(x, y) and renormalize (Bayes correction of
/// the Kallianpur-Striebel ratio). h_values[l][state] are precomputed
/// channel readouts; computed in log space.
std::vector<double> bayes_update(const std::vector<double>& p,
                                 const std::vector<std::vector<double>>& h_values,
                                 std::span<const double> y, double noise_sd = 1.0);

/// Channel readouts h_l evaluated at every lattice state (in scaled
/// coordinates).
std::vector<std::vector<double>> channel_values(const ReactionNetwork& net,
                                                const ScalingSpec& spec,
                                                const TruncatedStateSpace& space,
                                                const ObservationModel& model);

/// Initial lattice distribution from the network's declared initial
/// laws. Requires every species at alpha = 0 (the oracle runs on
/// down-scoped models); truncated tail mass is simply dropped, so the
/// result may be a sub-probability.
std::vector<double> lattice_prior(const ReactionNetwork& net, const TruncatedStateSpace& space);

struct ExactFilterStep {
  double time = 0.0;
  std::vector<double> mean;
  std::vector<double> variance;
  double leak = 0.0;  // 1 - mass before the Bayes renormalization
  double step_wall_ms = 0.0;
};

struct ExactFilterResult {
  std::vector<std::string> functional_names;
  std::vector<ExactFilterStep> steps;
};

/// Alternate propagate / bayes_update over the observation sequence and
/// return the exact conditional moments of the requested functionals.
ExactFilterResult exact_filter(const ReactionNetwork& net, const ScalingSpec& spec,
                               const TruncatedStateSpace& space, const ObservationModel& model,
                               const ObservationSequence& obs, const std::vector<double>& p0,
                               const std::vector<Functional>& functionals);

}  // namespace mssf
