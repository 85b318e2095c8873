#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mssf/hybrid.hpp"
#include "mssf/network.hpp"
#include "mssf/observation.hpp"
#include "mssf/pfilter.hpp"
#include "mssf/ssa.hpp"

namespace mssf {

struct ChannelConfig {
  std::string species;
  double gain = 1.0;
  double clamp = 0.0;
};

/// Full toolkit configuration: network + scaling + observation model +
/// experiment parameters. The defaults (and the embedded default config)
/// reproduce the gene-expression study: N=100, alpha=(0,0,0,1), the
/// published rate table, Bernoulli(1/3) gene pair, Poisson(2) mRNA and
/// protein, h = min(10 * protein_count, 1e3), observations every 2
/// minutes, M=5000 particles.
struct ExperimentConfig {
  ReactionNetwork network;
  double N = 100.0;

  std::vector<ChannelConfig> channels;
  double sample_period = 2.0;
  double noise_sd = 1.0;

  double horizon = 50.0;
  int particles = 5000;
  std::uint64_t seed = 1;
  int seed_count = 1;
  std::string out_dir;
  int threads = 1;

  HybridStepConfig hybrid;
  SsaOptions ssa;

  std::vector<int> oracle_bounds;  // empty = no oracle section
  int oracle_particles = 50000;
  int oracle_steps = 20;

  explicit ExperimentConfig(ReactionNetwork net) : network(std::move(net)) {}
};

ExperimentConfig load_config(const std::string& text);

/// The embedded default configuration (gene-expression study).
ExperimentConfig default_gene_expression_config();
const std::string& default_gene_expression_json();

ObservationModel make_observation_model(const ExperimentConfig& cfg, const ScalingSpec& spec);

/// Samples the scaled initial state from the per-species descriptors, in
/// declaration order so complement_of can read the referenced draw.
InitialSampler make_initial_sampler(const ReactionNetwork& net);

/// Componentwise mean of the initial law.
State initial_mean_state(const ReactionNetwork& net);

/// Conditional raw-copy-number means, one functional per species.
std::vector<Functional> species_raw_mean_functionals(const ReactionNetwork& net,
                                                     const ScalingSpec& spec);

}  // namespace mssf
