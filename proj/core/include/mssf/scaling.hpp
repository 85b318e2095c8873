#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mssf/network.hpp"

namespace mssf {

/// Multiscale normalization: N with per-species abundance exponents
/// alpha_i and per-reaction rate exponents beta_j. gamma is the analysis
/// timescale; the toolkit always works at gamma = gamma1, and
/// make_scaling_spec fills it in accordingly.
struct ScalingSpec {
  double N = 100.0;
  std::vector<Rational> alpha;
  std::vector<Rational> beta;
  Rational gamma;

  /// N^{-alpha_i}, the diagonal of the state rescaling.
  double scale_factor(int species) const;
  /// k'_j = k_j N^{-beta_j}.
  double scaled_rate(const ReactionNetwork& net, int j) const;
};

/// Assembles a ScalingSpec from the network's declared exponents and
/// sets gamma = gamma1.
ScalingSpec make_scaling_spec(const ReactionNetwork& net, double N);

struct TimescaleReport {
  std::vector<Rational> rho_tilde;                     // beta_j + v_j^T alpha
  std::vector<std::optional<Rational>> species_scale;  // nullopt for inert species
  Rational gamma1;
};

enum class ReactionClass { Drift, Jump, Dropped };

/// The reduced piecewise-deterministic model: reactions partitioned by
/// the sign of gamma1 + rho~_j, with 0/1 projection masks. Drift masks
/// select species with alpha_i = gamma1 + rho~_j; jump masks are D^0
/// (alpha_i = 0).
struct ReducedModel {
  std::vector<ReactionClass> klass;                 // per reaction
  std::vector<std::vector<std::uint8_t>> mask;      // per reaction, per species
  std::vector<int> drift_reactions;
  std::vector<int> jump_reactions;
  std::vector<int> dropped_reactions;
  std::vector<double> scaled_rates;                 // k'_j
  std::vector<Rational> alpha;                      // copy, for lambda' evaluation
  Rational gamma1;
};

/// lambda^N_j(x) = k'_j prod_i prod_{l<v_ij} (x_i - l N^{-alpha_i})
/// 1{x_i >= N^{-alpha_i} v_ij} on a scaled state.
double scaled_propensity(const ReactionNetwork& net, const ScalingSpec& spec, int j,
                         const State& x);

/// Pointwise N -> infinity limit of lambda^N_j: falling factorial (with
/// indicator) on alpha = 0 species, plain monomial x^v on alpha > 0
/// species.
double limit_propensity(const ReactionNetwork& net, const ScalingSpec& spec, int j,
                        const State& x);

/// rho~_j, per-species timescales and gamma1. Species that no reaction
/// changes are inert and excluded from the gamma1 minimum; if every
/// species is inert the network has no dynamics and this throws.
TimescaleReport analyze_timescales(const ReactionNetwork& net, const ScalingSpec& spec);

/// Partition reactions by sign of gamma1 + rho~_j and build the masks.
ReducedModel reduce(const ReactionNetwork& net, const ScalingSpec& spec);

/// Human-readable and JSON forms of the analysis, used by the CLI
/// `analyze` subcommand. Reaction labels are 1-based (R1, R2, ...).
std::string timescale_report_text(const ReactionNetwork& net, const ScalingSpec& spec,
                                  const TimescaleReport& report, const ReducedModel& reduced);
std::string timescale_report_json(const ReactionNetwork& net, const ScalingSpec& spec,
                                  const TimescaleReport& report, const ReducedModel& reduced);

}  // namespace mssf
