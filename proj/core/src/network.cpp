#include "mssf/network.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mssf {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string format_double_shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) fail(where, "unknown key '" + item.key() + "'");
  }
}

Rational parse_exponent(const json& v, const std::string& where) {
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_string()) return Rational::parse(v.get<std::string>());
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 1e15) return Rational(static_cast<std::int64_t>(d));
    fail(where, "non-integer exponents must be given as rational strings like \"1/2\"");
  }
  fail(where, "expected integer or rational string");
}

double parse_number_maybe_rational(const std::string& s, const std::string& where) {
  auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      double n = std::stod(s.substr(0, slash));
      double d = std::stod(s.substr(slash + 1));
      if (d == 0.0) fail(where, "division by zero");
      return n / d;
    }
    return std::stod(s);
  } catch (const std::invalid_argument&) {
    fail(where, "malformed number '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(where, "number out of range '" + s + "'");
  }
}

// Descriptor grammar: point(v) | bernoulli(p) | poisson(mean) | complement_of(name)
InitialLaw parse_initial(const std::string& text, const std::vector<Species>& declared,
                         int self_index, const std::string& where) {
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close != text.size() - 1 ||
      close <= open + 1) {
    fail(where, "malformed initial descriptor '" + text + "'");
  }
  std::string head = text.substr(0, open);
  std::string arg = text.substr(open + 1, close - open - 1);
  InitialLaw law;
  if (head == "point") {
    law.kind = InitialLaw::Kind::Point;
    law.value = parse_number_maybe_rational(arg, where);
    if (law.value < 0.0) fail(where, "point value must be >= 0");
  } else if (head == "bernoulli") {
    law.kind = InitialLaw::Kind::Bernoulli;
    law.value = parse_number_maybe_rational(arg, where);
    if (law.value < 0.0 || law.value > 1.0) fail(where, "bernoulli p must be in [0,1]");
  } else if (head == "poisson") {
    law.kind = InitialLaw::Kind::Poisson;
    law.value = parse_number_maybe_rational(arg, where);
    if (law.value < 0.0) fail(where, "poisson mean must be >= 0");
  } else if (head == "complement_of") {
    law.kind = InitialLaw::Kind::ComplementOf;
    int ref = -1;
    for (int i = 0; i < self_index; ++i) {
      if (declared[i].name == arg) ref = i;
    }
    if (ref < 0) fail(where, "complement_of references unknown or later species '" + arg + "'");
    if (declared[ref].initial.kind == InitialLaw::Kind::ComplementOf) {
      fail(where, "complement_of must reference a directly sampled species");
    }
    law.reference = ref;
  } else {
    fail(where, "unknown initial descriptor '" + head + "'");
  }
  return law;
}

// Complex expression: "" (empty complex), "S1", "2 S1 + S3".
std::vector<int> parse_complex(const std::string& text, const std::vector<Species>& species,
                               const std::string& where) {
  std::vector<int> coeffs(species.size(), 0);
  std::string trimmed;
  // split on '+'
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find('+', pos);
    std::string term = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    pos = next == std::string::npos ? text.size() + 1 : next + 1;
    // trim
    auto b = term.find_first_not_of(" \t");
    auto e = term.find_last_not_of(" \t");
    if (b == std::string::npos) {
      if (text.find_first_not_of(" \t") == std::string::npos) break;  // empty complex
      fail(where, "empty term in complex '" + text + "'");
    }
    term = term.substr(b, e - b + 1);
    int count = 1;
    std::string name = term;
    auto sp = term.find_first_of(" \t");
    if (sp != std::string::npos) {
      std::string head = term.substr(0, sp);
      try {
        std::size_t used = 0;
        count = std::stoi(head, &used);
        if (used != head.size()) fail(where, "malformed coefficient '" + head + "'");
      } catch (const std::exception&) {
        fail(where, "malformed coefficient '" + head + "'");
      }
      auto nb = term.find_first_not_of(" \t", sp);
      name = term.substr(nb);
    }
    if (count < 1) fail(where, "stoichiometric coefficient must be >= 1");
    int idx = -1;
    for (std::size_t i = 0; i < species.size(); ++i) {
      if (species[i].name == name) idx = static_cast<int>(i);
    }
    if (idx < 0) fail(where, "unknown species '" + name + "'");
    coeffs[idx] += count;
    if (coeffs[idx] > kMaxStoichiometry) {
      fail(where, "stoichiometry for '" + name + "' exceeds cap of " +
                      std::to_string(kMaxStoichiometry));
    }
  }
  return coeffs;
}

std::string render_complex(const std::vector<int>& coeffs, const std::vector<Species>& species) {
  std::string out;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0) continue;
    if (!out.empty()) out += " + ";
    if (coeffs[i] > 1) out += std::to_string(coeffs[i]) + " ";
    out += species[i].name;
  }
  return out;
}

}  // namespace

std::string InitialLaw::str(const std::vector<std::string>& species_names) const {
  switch (kind) {
    case Kind::Point:
      return "point(" + format_double_shortest(value) + ")";
    case Kind::Bernoulli:
      return "bernoulli(" + format_double_shortest(value) + ")";
    case Kind::Poisson:
      return "poisson(" + format_double_shortest(value) + ")";
    case Kind::ComplementOf:
      return "complement_of(" + species_names.at(reference) + ")";
  }
  return "";
}

void Reaction::build_terms() {
  substrate_terms.clear();
  change_terms.clear();
  for (std::size_t i = 0; i < substrate.size(); ++i) {
    if (substrate[i] > 0) substrate_terms.push_back({static_cast<int>(i), substrate[i]});
    int delta = product[i] - substrate[i];
    if (delta != 0) change_terms.push_back({static_cast<int>(i), delta});
  }
}

ReactionNetwork::ReactionNetwork(std::vector<Species> species, std::vector<Reaction> reactions)
    : species_(std::move(species)), reactions_(std::move(reactions)) {
  if (species_.empty()) throw ConfigError("network: no species");
  if (reactions_.empty()) throw ConfigError("network: no reactions");
  std::set<std::string> names;
  for (std::size_t i = 0; i < species_.size(); ++i) {
    species_[i].id = static_cast<int>(i);
    const std::string& name = species_[i].name;
    if (name.empty()) throw ConfigError("network: species with empty name");
    // names appear in complex expressions and CSV headers
    bool well_formed = std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_';
    for (char c : name) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') well_formed = false;
    }
    if (!well_formed) {
      throw ConfigError("network: species name '" + name +
                        "' must match [A-Za-z_][A-Za-z0-9_]*");
    }
    if (!names.insert(name).second) {
      throw ConfigError("network: duplicate species name '" + name + "'");
    }
  }
  for (std::size_t j = 0; j < reactions_.size(); ++j) {
    auto& r = reactions_[j];
    const std::string where = "reactions[" + std::to_string(j) + "]";
    if (r.substrate.size() != species_.size() || r.product.size() != species_.size()) {
      throw ConfigError(where + ": stoichiometry dimension mismatch");
    }
    for (int v : r.substrate) {
      if (v < 0) throw ConfigError(where + ": negative stoichiometry");
      if (v > kMaxStoichiometry) throw ConfigError(where + ": stoichiometry exceeds cap");
    }
    for (int v : r.product) {
      if (v < 0) throw ConfigError(where + ": negative stoichiometry");
      if (v > kMaxStoichiometry) throw ConfigError(where + ": stoichiometry exceeds cap");
    }
    if (!(r.rate_constant > 0.0) || !std::isfinite(r.rate_constant)) {
      throw ConfigError(where + ": rate constant must be positive and finite");
    }
    r.build_terms();
  }
}

int ReactionNetwork::species_index(const std::string& name) const {
  for (const auto& s : species_) {
    if (s.name == name) return s.id;
  }
  return -1;
}

ReactionNetwork parse_network(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("network config: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("network config: top level must be an object");
  reject_unknown_keys(root, {"species", "reactions"}, "network config");
  if (!root.contains("species") || !root["species"].is_array() || root["species"].empty()) {
    throw ConfigError("network config: no species");
  }
  if (!root.contains("reactions") || !root["reactions"].is_array() || root["reactions"].empty()) {
    throw ConfigError("network config: no reactions");
  }

  std::vector<Species> species;
  for (std::size_t i = 0; i < root["species"].size(); ++i) {
    const auto& sj = root["species"][i];
    const std::string where = "species[" + std::to_string(i) + "]";
    if (!sj.is_object()) fail(where, "expected object");
    reject_unknown_keys(sj, {"name", "alpha", "initial"}, where);
    Species s;
    if (!sj.contains("name") || !sj["name"].is_string()) fail(where, "missing 'name'");
    s.name = sj["name"].get<std::string>();
    s.alpha = sj.contains("alpha") ? parse_exponent(sj["alpha"], where + ".alpha") : Rational(0);
    if (sj.contains("initial")) {
      if (!sj["initial"].is_string()) fail(where, "'initial' must be a descriptor string");
      s.initial = parse_initial(sj["initial"].get<std::string>(), species,
                                static_cast<int>(i), where + ".initial");
    }
    s.id = static_cast<int>(i);
    species.push_back(std::move(s));
  }

  std::vector<Reaction> reactions;
  for (std::size_t j = 0; j < root["reactions"].size(); ++j) {
    const auto& rj = root["reactions"][j];
    const std::string where = "reactions[" + std::to_string(j) + "]";
    if (!rj.is_object()) fail(where, "expected object");
    reject_unknown_keys(rj, {"substrates", "products", "k", "beta"}, where);
    Reaction r;
    if (!rj.contains("substrates") || !rj["substrates"].is_string()) {
      fail(where, "missing 'substrates' complex string");
    }
    if (!rj.contains("products") || !rj["products"].is_string()) {
      fail(where, "missing 'products' complex string");
    }
    r.substrate = parse_complex(rj["substrates"].get<std::string>(), species, where + ".substrates");
    r.product = parse_complex(rj["products"].get<std::string>(), species, where + ".products");
    if (!rj.contains("k") || !rj["k"].is_number()) fail(where, "missing rate constant 'k'");
    r.rate_constant = rj["k"].get<double>();
    if (!(r.rate_constant > 0.0)) fail(where, "rate constant must be positive");
    r.beta = rj.contains("beta") ? parse_exponent(rj["beta"], where + ".beta") : Rational(0);
    reactions.push_back(std::move(r));
  }

  return ReactionNetwork(std::move(species), std::move(reactions));
}

std::string serialize_network(const ReactionNetwork& net) {
  ordered_json root;
  std::vector<std::string> names;
  for (const auto& s : net.species()) names.push_back(s.name);
  root["species"] = ordered_json::array();
  for (const auto& s : net.species()) {
    ordered_json sj;
    sj["name"] = s.name;
    if (s.alpha.is_integer()) {
      sj["alpha"] = s.alpha.num();
    } else {
      sj["alpha"] = s.alpha.str();
    }
    sj["initial"] = s.initial.str(names);
    root["species"].push_back(std::move(sj));
  }
  root["reactions"] = ordered_json::array();
  for (const auto& r : net.reactions()) {
    ordered_json rj;
    rj["substrates"] = render_complex(r.substrate, net.species());
    rj["products"] = render_complex(r.product, net.species());
    rj["k"] = r.rate_constant;
    if (r.beta.is_integer()) {
      rj["beta"] = r.beta.num();
    } else {
      rj["beta"] = r.beta.str();
    }
    root["reactions"].push_back(std::move(rj));
  }
  return root.dump(2) + "\n";
}

double propensity(const ReactionNetwork& net, int j, const State& raw) {
  if (j < 0 || j >= net.reaction_count()) throw std::out_of_range("reaction index out of range");
  if (static_cast<int>(raw.size()) != net.species_count()) {
    throw std::invalid_argument("state dimension mismatch");
  }
  const Reaction& r = net.reactions()[j];
  double value = r.rate_constant;
  for (const auto& term : r.substrate_terms) {
    double x = raw[term.species];
    if (x < static_cast<double>(term.count)) return 0.0;
    for (int l = 0; l < term.count; ++l) value *= (x - static_cast<double>(l));
  }
  return value;
}

std::vector<int> stoichiometry_change(const ReactionNetwork& net, int j) {
  if (j < 0 || j >= net.reaction_count()) throw std::out_of_range("reaction index out of range");
  const Reaction& r = net.reactions()[j];
  std::vector<int> delta(net.species_count(), 0);
  for (int i = 0; i < net.species_count(); ++i) delta[i] = r.product[i] - r.substrate[i];
  return delta;
}

}  // namespace mssf
