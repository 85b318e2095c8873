#include <doctest.h>

#include <cmath>

#include "mssf/config.hpp"
#include "mssf/csv.hpp"
#include "support/builders.hpp"
#include "support/test_stats.hpp"

using namespace mssf;

#ifndef MSSF_SOURCE_DIR
#define MSSF_SOURCE_DIR "."
#endif

TEST_SUITE("config") {

TEST_CASE("the default configuration reproduces the study parameters") {
  const ExperimentConfig& cfg = test_builders::gene_config();
  CHECK(cfg.N == 100.0);
  CHECK(cfg.particles == 5000);
  CHECK(cfg.sample_period == 2.0);
  CHECK(cfg.horizon == 50.0);
  CHECK(cfg.noise_sd == 1.0);
  REQUIRE(cfg.channels.size() == 1);
  CHECK(cfg.channels[0].species == "protein");
  CHECK(cfg.channels[0].gain == 10.0);
  CHECK(cfg.channels[0].clamp == 1000.0);

  const ReactionNetwork& net = cfg.network;
  REQUIRE(net.species_count() == 4);
  REQUIRE(net.reaction_count() == 6);
  CHECK(net.species()[3].alpha == Rational(1));
  CHECK(net.reactions()[3].rate_constant == 39.0);
  CHECK(net.reactions()[3].beta == Rational(1));
}

TEST_CASE("the shipped config file matches the embedded default") {
  std::string file_text =
      read_text_file(std::filesystem::path(MSSF_SOURCE_DIR) / "configs/gene_expression.json");
  ExperimentConfig from_file = load_config(file_text);
  const ExperimentConfig& embedded = test_builders::gene_config();
  CHECK(serialize_network(from_file.network) == serialize_network(embedded.network));
  CHECK(from_file.N == embedded.N);
  CHECK(from_file.particles == embedded.particles);
  CHECK(from_file.horizon == embedded.horizon);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(load_config(R"json({"networks": {}})json"), ConfigError);
  CHECK_THROWS_AS(load_config(R"json({
    "network": {"species": [{"name":"S","alpha":0}],
                 "reactions": [{"substrates":"S","products":"","k":1.0}]},
    "scaling": {"N": 100, "M": 3}
  })json"), ConfigError);
  CHECK_THROWS_AS(load_config(R"json({
    "network": {"species": [{"name":"S","alpha":0}],
                 "reactions": [{"substrates":"S","products":"","k":1.0}]},
    "observation": {"channels": [{"species":"S","clamp":10,"scale":2}]}
  })json"), ConfigError);
  CHECK_THROWS_AS(load_config(R"json({
    "network": {"species": [{"name":"S","alpha":0}],
                 "reactions": [{"substrates":"S","products":"","k":1.0}]},
    "experiment": {"particless": 10}
  })json"), ConfigError);
}

TEST_CASE("initial descriptor validation") {
  auto parse_one = [](const std::string& descriptor) {
    return load_config(R"json({
      "network": {"species": [{"name":"S","alpha":0,"initial":")json" + descriptor + R"json("}],
                   "reactions": [{"substrates":"S","products":"","k":1.0}]}
    })json");
  };
  CHECK_NOTHROW(parse_one("point(3)"));
  CHECK_NOTHROW(parse_one("bernoulli(0.25)"));
  CHECK_NOTHROW(parse_one("poisson(2)"));
  CHECK_THROWS_AS(parse_one("bernoulli(1.5)"), ConfigError);
  CHECK_THROWS_AS(parse_one("poisson(-1)"), ConfigError);
  CHECK_THROWS_AS(parse_one("point"), ConfigError);
  // complement may only reference an earlier, directly sampled species
  CHECK_THROWS_AS(load_config(R"json({
    "network": {"species": [
        {"name":"A","alpha":0,"initial":"complement_of(B)"},
        {"name":"B","alpha":0,"initial":"bernoulli(0.5)"}],
      "reactions": [{"substrates":"A","products":"","k":1.0}]}
  })json"), ConfigError);
}

TEST_CASE("initial sampler honors the coupled gene pair") {
  const ExperimentConfig& cfg = test_builders::gene_config();
  InitialSampler sampler = make_initial_sampler(cfg.network);
  int on_count = 0;
  const int draws = 20000;
  std::vector<double> mrna(draws), protein(draws);
  for (int i = 0; i < draws; ++i) {
    State x = sampler(RngStream{3, make_stream_id(StreamPurpose::InitialState, 0,
                                                  static_cast<std::uint64_t>(i))});
    CHECK(x[0] + x[1] == 1.0);  // complement constraint, every draw
    on_count += static_cast<int>(x[1]);
    mrna[i] = x[2];
    protein[i] = x[3];
  }
  double on_fraction = static_cast<double>(on_count) / draws;
  CHECK(std::abs(on_fraction - 2.0 / 3.0) <= 3.0 * std::sqrt(2.0 / 9.0 / draws));
  CHECK(std::abs(test_stats::mean_of(mrna) - 2.0) <= 3.0 * test_stats::se_of_mean(mrna));
  CHECK(std::abs(test_stats::mean_of(protein) - 2.0) <= 3.0 * test_stats::se_of_mean(protein));
}

TEST_CASE("initial mean state of the study model") {
  const ExperimentConfig& cfg = test_builders::gene_config();
  CHECK(initial_mean_state(cfg.network) == State{1.0 / 3.0, 1.0 - 1.0 / 3.0, 2.0, 2.0});
}

TEST_CASE("raw-mean functionals rescale by N^alpha") {
  const ExperimentConfig& cfg = test_builders::gene_config();
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  auto fns = species_raw_mean_functionals(cfg.network, spec);
  REQUIRE(fns.size() == 4);
  State x{1.0, 0.0, 3.0, 2.5};
  CHECK(fns[2].phi(x) == 3.0);
  CHECK(fns[3].phi(x) == 250.0);
  CHECK(fns[3].name == "protein");
}

TEST_CASE("simulation overrides parse and validate") {
  ExperimentConfig cfg = load_config(R"json({
    "network": {"species": [{"name":"S","alpha":0}],
                 "reactions": [{"substrates":"S","products":"","k":1.0}]},
    "simulation": {"ode_step": 0.005, "hazard_tol": 1e-9, "max_jumps": 1000, "max_events": 500}
  })json");
  CHECK(cfg.hybrid.ode_step == 0.005);
  CHECK(cfg.hybrid.hazard_tol == 1e-9);
  CHECK(cfg.hybrid.max_jumps == 1000);
  CHECK(cfg.ssa.max_events == 500);
  CHECK_THROWS_AS(load_config(R"json({
    "network": {"species": [{"name":"S","alpha":0}],
                 "reactions": [{"substrates":"S","products":"","k":1.0}]},
    "simulation": {"hazard_tol": 0.5}
  })json"), std::invalid_argument);
}

TEST_CASE("oracle section requires a bound for every species") {
  CHECK_THROWS_AS(load_config(R"json({
    "network": {"species": [{"name":"A","alpha":0},{"name":"B","alpha":0}],
                 "reactions": [{"substrates":"A","products":"B","k":1.0}]},
    "oracle": {"bounds": {"A": 5}}
  })json"), ConfigError);
}

TEST_CASE("observation CSV round-trips") {
  ObservationSequence obs;
  obs.times = {2.0, 4.0, 6.0};
  obs.values = {{1.5, -0.25}, {2.0, 0.125}, {1e-3, 1000.0}};
  std::string csv = observations_csv(obs);
  ObservationSequence back = parse_observations_csv(csv);
  CHECK(back.times == obs.times);
  CHECK(back.values == obs.values);
  CHECK_THROWS_AS(parse_observations_csv("x,y\n1,2\n"), std::runtime_error);
}

}  // TEST_SUITE
