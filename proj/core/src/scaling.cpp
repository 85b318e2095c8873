#include "mssf/scaling.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace mssf {

namespace {

double pow_rational(double base, const Rational& e) {
  if (e.zero()) return 1.0;
  if (e.is_integer()) return std::pow(base, static_cast<double>(e.num()));
  return std::pow(base, e.to_double());
}

void check_reaction_index(const ReactionNetwork& net, int j) {
  if (j < 0 || j >= net.reaction_count()) throw std::out_of_range("reaction index out of range");
}

Rational rho_tilde_of(const ReactionNetwork& net, const ScalingSpec& spec, int j) {
  Rational rho = spec.beta[j];
  const Reaction& r = net.reactions()[j];
  for (const auto& term : r.substrate_terms) {
    rho = rho + Rational(term.count) * spec.alpha[term.species];
  }
  return rho;
}

}  // namespace

double ScalingSpec::scale_factor(int species) const {
  return pow_rational(N, -alpha.at(species));
}

double ScalingSpec::scaled_rate(const ReactionNetwork& net, int j) const {
  return net.reactions().at(j).rate_constant * pow_rational(N, -beta.at(j));
}

ScalingSpec make_scaling_spec(const ReactionNetwork& net, double N) {
  if (!(N > 1.0)) throw std::invalid_argument("scaling factor N must exceed 1");
  ScalingSpec spec;
  spec.N = N;
  for (const auto& s : net.species()) spec.alpha.push_back(s.alpha);
  for (const auto& r : net.reactions()) spec.beta.push_back(r.beta);
  spec.gamma = analyze_timescales(net, spec).gamma1;
  return spec;
}

double scaled_propensity(const ReactionNetwork& net, const ScalingSpec& spec, int j,
                         const State& x) {
  check_reaction_index(net, j);
  const Reaction& r = net.reactions()[j];
  double value = spec.scaled_rate(net, j);
  for (const auto& term : r.substrate_terms) {
    double xi = x[term.species];
    double step = spec.scale_factor(term.species);
    if (xi < step * static_cast<double>(term.count)) return 0.0;
    for (int l = 0; l < term.count; ++l) value *= (xi - static_cast<double>(l) * step);
  }
  return value;
}

double limit_propensity(const ReactionNetwork& net, const ScalingSpec& spec, int j,
                        const State& x) {
  check_reaction_index(net, j);
  const Reaction& r = net.reactions()[j];
  double value = spec.scaled_rate(net, j);
  for (const auto& term : r.substrate_terms) {
    double xi = x[term.species];
    if (spec.alpha[term.species].zero()) {
      if (xi < static_cast<double>(term.count)) return 0.0;
      for (int l = 0; l < term.count; ++l) value *= (xi - static_cast<double>(l));
    } else {
      for (int l = 0; l < term.count; ++l) value *= xi;
    }
  }
  return value;
}

TimescaleReport analyze_timescales(const ReactionNetwork& net, const ScalingSpec& spec) {
  if (static_cast<int>(spec.alpha.size()) != net.species_count() ||
      static_cast<int>(spec.beta.size()) != net.reaction_count()) {
    throw std::invalid_argument("scaling spec dimensions do not match network");
  }
  TimescaleReport report;
  for (int j = 0; j < net.reaction_count(); ++j) {
    report.rho_tilde.push_back(rho_tilde_of(net, spec, j));
  }
  report.species_scale.assign(net.species_count(), std::nullopt);
  bool any_active = false;
  for (int i = 0; i < net.species_count(); ++i) {
    std::optional<Rational> max_rho;
    for (int j = 0; j < net.reaction_count(); ++j) {
      const Reaction& r = net.reactions()[j];
      if (r.product[i] == r.substrate[i]) continue;  // j not in Gamma_i
      if (!max_rho || report.rho_tilde[j] > *max_rho) max_rho = report.rho_tilde[j];
    }
    if (!max_rho) continue;  // inert species
    report.species_scale[i] = spec.alpha[i] - *max_rho;
    if (!any_active || *report.species_scale[i] < report.gamma1) {
      report.gamma1 = *report.species_scale[i];
    }
    any_active = true;
  }
  if (!any_active) throw std::runtime_error("timescale analysis: no dynamics (all species inert)");
  return report;
}

ReducedModel reduce(const ReactionNetwork& net, const ScalingSpec& spec) {
  TimescaleReport report = analyze_timescales(net, spec);
  ReducedModel model;
  model.alpha = spec.alpha;
  model.gamma1 = report.gamma1;
  for (int j = 0; j < net.reaction_count(); ++j) {
    Rational exponent = report.gamma1 + report.rho_tilde[j];
    model.scaled_rates.push_back(spec.scaled_rate(net, j));
    std::vector<std::uint8_t> mask;
    if (exponent.positive()) {
      model.klass.push_back(ReactionClass::Drift);
      model.drift_reactions.push_back(j);
      for (int i = 0; i < net.species_count(); ++i) {
        mask.push_back(spec.alpha[i] == exponent ? 1 : 0);
      }
    } else if (exponent.zero()) {
      model.klass.push_back(ReactionClass::Jump);
      model.jump_reactions.push_back(j);
      for (int i = 0; i < net.species_count(); ++i) {
        mask.push_back(spec.alpha[i].zero() ? 1 : 0);
      }
    } else {
      model.klass.push_back(ReactionClass::Dropped);
      model.dropped_reactions.push_back(j);
    }
    model.mask.push_back(std::move(mask));
  }
  return model;
}

namespace {

const char* class_name(ReactionClass c) {
  switch (c) {
    case ReactionClass::Drift: return "drift";
    case ReactionClass::Jump: return "jump";
    case ReactionClass::Dropped: return "dropped";
  }
  return "?";
}

std::string mask_species_list(const ReactionNetwork& net, const std::vector<std::uint8_t>& mask) {
  std::string out;
  for (int i = 0; i < net.species_count(); ++i) {
    if (i < static_cast<int>(mask.size()) && mask[i]) {
      if (!out.empty()) out += ",";
      out += net.species()[i].name;
    }
  }
  return out.empty() ? "-" : out;
}

}  // namespace

std::string timescale_report_text(const ReactionNetwork& net, const ScalingSpec& spec,
                                  const TimescaleReport& report, const ReducedModel& reduced) {
  std::ostringstream os;
  os << "network: " << net.species_count() << " species, " << net.reaction_count()
     << " reactions; N = " << spec.N << "\n";
  os << "gamma1 = " << report.gamma1.str() << "\n\n";
  os << "reaction  rho~      class    k'            mask\n";
  for (int j = 0; j < net.reaction_count(); ++j) {
    os << "R" << (j + 1);
    os << std::string(j + 1 < 10 ? 8 : 7, ' ');
    std::string rho = report.rho_tilde[j].str();
    os << rho << std::string(rho.size() < 10 ? 10 - rho.size() : 1, ' ');
    std::string cls = class_name(reduced.klass[j]);
    os << cls << std::string(9 - cls.size(), ' ');
    std::string rate = std::to_string(reduced.scaled_rates[j]);
    os << rate << std::string(rate.size() < 14 ? 14 - rate.size() : 1, ' ');
    os << mask_species_list(net, reduced.mask[j]) << "\n";
  }
  os << "\nspecies timescales:\n";
  for (int i = 0; i < net.species_count(); ++i) {
    os << "  " << net.species()[i].name << ": ";
    if (report.species_scale[i]) {
      os << report.species_scale[i]->str();
    } else {
      os << "inert";
    }
    os << "\n";
  }
  return os.str();
}

std::string timescale_report_json(const ReactionNetwork& net, const ScalingSpec& spec,
                                  const TimescaleReport& report, const ReducedModel& reduced) {
  nlohmann::ordered_json root;
  root["N"] = spec.N;
  root["gamma1"] = report.gamma1.str();
  root["rho_tilde"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rho_tilde) root["rho_tilde"].push_back(r.str());
  root["species_scale"] = nlohmann::ordered_json::object();
  for (int i = 0; i < net.species_count(); ++i) {
    const auto& name = net.species()[i].name;
    if (report.species_scale[i]) {
      root["species_scale"][name] = report.species_scale[i]->str();
    } else {
      root["species_scale"][name] = "inert";
    }
  }
  auto one_based = [](const std::vector<int>& v) {
    std::vector<int> out;
    for (int j : v) out.push_back(j + 1);
    return out;
  };
  root["drift"] = one_based(reduced.drift_reactions);
  root["jump"] = one_based(reduced.jump_reactions);
  root["dropped"] = one_based(reduced.dropped_reactions);
  root["reactions"] = nlohmann::ordered_json::array();
  for (int j = 0; j < net.reaction_count(); ++j) {
    nlohmann::ordered_json rj;
    rj["label"] = "R" + std::to_string(j + 1);
    rj["class"] = class_name(reduced.klass[j]);
    rj["k_scaled"] = reduced.scaled_rates[j];
    rj["mask"] = reduced.mask[j];
    root["reactions"].push_back(std::move(rj));
  }
  return root.dump(2) + "\n";
}

}  // namespace mssf
