#include "mssf/config.hpp"

#include <cmath>
#include <set>

#include "json.hpp"

namespace mssf {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
  }
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    throw ConfigError(where + ": missing numeric '" + key + "'");
  }
  return obj[key].get<double>();
}

}  // namespace

ExperimentConfig load_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown_keys(root, {"network", "scaling", "observation", "experiment", "simulation",
                             "oracle"},
                      "config");
  if (!root.contains("network")) throw ConfigError("config: missing 'network' section");

  ExperimentConfig cfg(parse_network(root["network"].dump()));

  if (root.contains("scaling")) {
    const auto& sc = root["scaling"];
    reject_unknown_keys(sc, {"N"}, "scaling");
    cfg.N = require_number(sc, "N", "scaling");
    if (!(cfg.N > 1.0)) throw ConfigError("scaling: N must exceed 1");
  }

  if (root.contains("observation")) {
    const auto& ob = root["observation"];
    reject_unknown_keys(ob, {"channels", "sample_period", "noise_sd"}, "observation");
    if (ob.contains("sample_period")) {
      cfg.sample_period = require_number(ob, "sample_period", "observation");
      if (!(cfg.sample_period > 0.0)) throw ConfigError("observation: sample_period must be > 0");
    }
    if (ob.contains("noise_sd")) {
      cfg.noise_sd = require_number(ob, "noise_sd", "observation");
      if (cfg.noise_sd < 0.0) throw ConfigError("observation: noise_sd must be >= 0");
    }
    if (!ob.contains("channels") || !ob["channels"].is_array() || ob["channels"].empty()) {
      throw ConfigError("observation: at least one channel required");
    }
    for (std::size_t l = 0; l < ob["channels"].size(); ++l) {
      const auto& cj = ob["channels"][l];
      const std::string where = "observation.channels[" + std::to_string(l) + "]";
      reject_unknown_keys(cj, {"species", "gain", "clamp"}, where);
      ChannelConfig ch;
      if (!cj.contains("species") || !cj["species"].is_string()) {
        throw ConfigError(where + ": missing 'species'");
      }
      ch.species = cj["species"].get<std::string>();
      if (cfg.network.species_index(ch.species) < 0) {
        throw ConfigError(where + ": unknown species '" + ch.species + "'");
      }
      if (cj.contains("gain")) ch.gain = require_number(cj, "gain", where);
      ch.clamp = require_number(cj, "clamp", where);
      if (!(ch.clamp > 0.0)) throw ConfigError(where + ": clamp must be positive");
      cfg.channels.push_back(std::move(ch));
    }
  }

  if (root.contains("experiment")) {
    const auto& ex = root["experiment"];
    reject_unknown_keys(ex, {"horizon", "particles", "seed", "seed_count", "output", "threads"},
                        "experiment");
    if (ex.contains("horizon")) {
      cfg.horizon = require_number(ex, "horizon", "experiment");
      if (!(cfg.horizon > 0.0)) throw ConfigError("experiment: horizon must be > 0");
    }
    if (ex.contains("particles")) {
      cfg.particles = static_cast<int>(require_number(ex, "particles", "experiment"));
      if (cfg.particles < 1) throw ConfigError("experiment: particles must be >= 1");
    }
    if (ex.contains("seed")) cfg.seed = ex["seed"].get<std::uint64_t>();
    if (ex.contains("seed_count")) {
      cfg.seed_count = static_cast<int>(require_number(ex, "seed_count", "experiment"));
      if (cfg.seed_count < 1) throw ConfigError("experiment: seed_count must be >= 1");
    }
    if (ex.contains("output")) cfg.out_dir = ex["output"].get<std::string>();
    if (ex.contains("threads")) {
      cfg.threads = static_cast<int>(require_number(ex, "threads", "experiment"));
      if (cfg.threads < 1) throw ConfigError("experiment: threads must be >= 1");
    }
  }

  if (root.contains("simulation")) {
    const auto& si = root["simulation"];
    reject_unknown_keys(si, {"ode_step", "hazard_tol", "max_jumps", "max_events"}, "simulation");
    if (si.contains("ode_step")) cfg.hybrid.ode_step = require_number(si, "ode_step", "simulation");
    if (si.contains("hazard_tol")) {
      cfg.hybrid.hazard_tol = require_number(si, "hazard_tol", "simulation");
    }
    if (si.contains("max_jumps")) cfg.hybrid.max_jumps = si["max_jumps"].get<std::uint64_t>();
    if (si.contains("max_events")) cfg.ssa.max_events = si["max_events"].get<std::uint64_t>();
    cfg.hybrid.validate();
  }

  if (root.contains("oracle")) {
    const auto& orc = root["oracle"];
    reject_unknown_keys(orc, {"bounds", "particles", "steps"}, "oracle");
    if (!orc.contains("bounds") || !orc["bounds"].is_object()) {
      throw ConfigError("oracle: missing 'bounds' object");
    }
    cfg.oracle_bounds.assign(cfg.network.species_count(), -1);
    for (const auto& item : orc["bounds"].items()) {
      int idx = cfg.network.species_index(item.key());
      if (idx < 0) throw ConfigError("oracle.bounds: unknown species '" + item.key() + "'");
      cfg.oracle_bounds[idx] = item.value().get<int>();
    }
    for (int i = 0; i < cfg.network.species_count(); ++i) {
      if (cfg.oracle_bounds[i] < 0) {
        throw ConfigError("oracle.bounds: missing bound for species '" +
                          cfg.network.species()[i].name + "'");
      }
    }
    if (orc.contains("particles")) {
      cfg.oracle_particles = static_cast<int>(require_number(orc, "particles", "oracle"));
    }
    if (orc.contains("steps")) {
      cfg.oracle_steps = static_cast<int>(require_number(orc, "steps", "oracle"));
    }
  }

  return cfg;
}

const std::string& default_gene_expression_json() {
  static const std::string text = R"json({
  "network": {
    "species": [
      {"name": "gene_off", "alpha": 0, "initial": "bernoulli(1/3)"},
      {"name": "gene_on", "alpha": 0, "initial": "complement_of(gene_off)"},
      {"name": "mrna", "alpha": 0, "initial": "poisson(2)"},
      {"name": "protein", "alpha": 1, "initial": "poisson(2)"}
    ],
    "reactions": [
      {"substrates": "gene_off", "products": "gene_on", "k": 0.014, "beta": 0},
      {"substrates": "gene_on", "products": "gene_off", "k": 0.0084, "beta": 0},
      {"substrates": "gene_on", "products": "gene_on + mrna", "k": 0.715, "beta": 0},
      {"substrates": "mrna", "products": "mrna + protein", "k": 39.0, "beta": 1},
      {"substrates": "mrna", "products": "", "k": 0.199, "beta": 0},
      {"substrates": "protein", "products": "", "k": 0.379, "beta": 0}
    ]
  },
  "scaling": {"N": 100},
  "observation": {
    "sample_period": 2.0,
    "channels": [{"species": "protein", "gain": 10.0, "clamp": 1000.0}]
  },
  "experiment": {"horizon": 50.0, "particles": 5000, "seed": 1}
})json";
  return text;
}

ExperimentConfig default_gene_expression_config() {
  return load_config(default_gene_expression_json());
}

ObservationModel make_observation_model(const ExperimentConfig& cfg, const ScalingSpec& spec) {
  ObservationModel model;
  model.sample_period = cfg.sample_period;
  model.noise_sd = cfg.noise_sd;
  for (const auto& ch : cfg.channels) {
    int idx = cfg.network.species_index(ch.species);
    model.channels.push_back(make_linear_channel(cfg.network, spec, idx, ch.gain, ch.clamp));
  }
  return model;
}

InitialSampler make_initial_sampler(const ReactionNetwork& net) {
  std::vector<InitialLaw> laws;
  for (const auto& s : net.species()) laws.push_back(s.initial);
  return [laws](RngStream stream) {
    Rng rng(stream);
    State x(laws.size(), 0.0);
    for (std::size_t i = 0; i < laws.size(); ++i) {
      switch (laws[i].kind) {
        case InitialLaw::Kind::Point:
          x[i] = laws[i].value;
          break;
        case InitialLaw::Kind::Bernoulli:
          x[i] = rng.bernoulli(laws[i].value) ? 1.0 : 0.0;
          break;
        case InitialLaw::Kind::Poisson:
          x[i] = static_cast<double>(rng.poisson(laws[i].value));
          break;
        case InitialLaw::Kind::ComplementOf:
          x[i] = 1.0 - x[laws[i].reference];
          break;
      }
    }
    return x;
  };
}

State initial_mean_state(const ReactionNetwork& net) {
  State x(net.species_count(), 0.0);
  for (int i = 0; i < net.species_count(); ++i) {
    const InitialLaw& law = net.species()[i].initial;
    switch (law.kind) {
      case InitialLaw::Kind::Point:
      case InitialLaw::Kind::Bernoulli:
      case InitialLaw::Kind::Poisson:
        x[i] = law.value;
        break;
      case InitialLaw::Kind::ComplementOf:
        x[i] = 1.0 - x[law.reference];
        break;
    }
  }
  return x;
}

std::vector<Functional> species_raw_mean_functionals(const ReactionNetwork& net,
                                                     const ScalingSpec& spec) {
  std::vector<Functional> fns;
  for (int i = 0; i < net.species_count(); ++i) {
    double raw_scale = std::pow(spec.N, spec.alpha[i].to_double());
    fns.push_back({net.species()[i].name,
                   [i, raw_scale](const State& x) { return raw_scale * x[i]; }});
  }
  return fns;
}

}  // namespace mssf
