#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mssf/rational.hpp"

namespace mssf {

/// Per-species state vector in canonical (declaration) order. Raw models
/// hold integer copy numbers; scaled models hold the O(1) rescaled
/// abundances N^{-alpha_i} X_i.
using State = std::vector<double>;

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Law of one species' initial (scaled) value.
struct InitialLaw {
  enum class Kind { Point, Bernoulli, Poisson, ComplementOf };
  Kind kind = Kind::Point;
  double value = 0.0;      // point value, bernoulli p, or poisson mean
  int reference = -1;      // species index for ComplementOf

  std::string str(const std::vector<std::string>& species_names) const;
};

struct Species {
  int id = 0;              // 0-based, equals position in declaration order
  std::string name;
  Rational alpha;          // abundance exponent
  InitialLaw initial;
};

/// Stoichiometric coefficients are capped at kMaxStoichiometry at parse
/// time; falling factorials are computed iteratively so no factorial can
/// overflow.
inline constexpr int kMaxStoichiometry = 4;

struct Reaction {
  std::vector<int> substrate;   // v_{.j}, length = species count
  std::vector<int> product;     // v'_{.j}
  double rate_constant = 0.0;   // k_j, per minute
  Rational beta;                // rate exponent

  struct Term {
    int species;
    int count;
  };
  std::vector<Term> substrate_terms;  // entries with v > 0
  std::vector<Term> change_terms;     // nonzero entries of v' - v

  void build_terms();
};

class ReactionNetwork {
public:
  ReactionNetwork(std::vector<Species> species, std::vector<Reaction> reactions);

  const std::vector<Species>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  int species_count() const { return static_cast<int>(species_.size()); }
  int reaction_count() const { return static_cast<int>(reactions_.size()); }

  /// Index of a species by name, -1 if absent.
  int species_index(const std::string& name) const;

private:
  std::vector<Species> species_;
  std::vector<Reaction> reactions_;
};

/// Parse the structured-text network configuration (JSON object with
/// "species" and "reactions"; schema in the README). Rejects unknown
/// keys, undeclared species, non-positive rates and stoichiometries
/// above kMaxStoichiometry.
ReactionNetwork parse_network(const std::string& text);

/// Canonical form: parse(serialize(net)) reproduces net exactly and
/// serialize is idempotent on its own output.
std::string serialize_network(const ReactionNetwork& net);

/// Mass-action propensity lambda_j(x) = k_j prod_i x_i!/(x_i - v_ij)!
/// 1{x_i >= v_ij} on a raw (integer-valued) state.
double propensity(const ReactionNetwork& net, int j, const State& raw);

/// Jump vector v'_{.j} - v_{.j}.
std::vector<int> stoichiometry_change(const ReactionNetwork& net, int j);

}  // namespace mssf
