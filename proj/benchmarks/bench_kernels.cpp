#include <benchmark/benchmark.h>

#include "mssf/experiment.hpp"

namespace {

using namespace mssf;

const ExperimentConfig& gene_config() {
  static ExperimentConfig cfg = default_gene_expression_config();
  return cfg;
}

void BM_FullKernelSample(benchmark::State& state) {
  const auto& cfg = gene_config();
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  FullSimulator sim(cfg.network, spec);
  InitialSampler sampler = make_initial_sampler(cfg.network);
  std::uint64_t slot = 0;
  for (auto _ : state) {
    State x = sampler(RngStream{7, make_stream_id(StreamPurpose::InitialState, 0, slot)});
    sim.sample(x, 2.0, RngStream{7, make_stream_id(StreamPurpose::FullPropagation, 0, slot)});
    benchmark::DoNotOptimize(x);
    ++slot;
  }
}
BENCHMARK(BM_FullKernelSample);

void BM_ReducedKernelSample(benchmark::State& state) {
  const auto& cfg = gene_config();
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  ReducedModel reduced = reduce(cfg.network, spec);
  HybridSimulator sim(cfg.network, reduced);
  InitialSampler sampler = make_initial_sampler(cfg.network);
  std::uint64_t slot = 0;
  for (auto _ : state) {
    State x = sampler(RngStream{7, make_stream_id(StreamPurpose::InitialState, 0, slot)});
    sim.sample(x, 2.0, RngStream{7, make_stream_id(StreamPurpose::ReducedPropagation, 0, slot)},
               cfg.hybrid);
    benchmark::DoNotOptimize(x);
    ++slot;
  }
}
BENCHMARK(BM_ReducedKernelSample);

void BM_Propensity(benchmark::State& state) {
  const auto& cfg = gene_config();
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  State x{1.0, 0.0, 3.0, 2.5};
  for (auto _ : state) {
    double total = 0.0;
    for (int j = 0; j < cfg.network.reaction_count(); ++j) {
      total += scaled_propensity(cfg.network, spec, j, x);
    }
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_Propensity);

void BM_MultinomialResample(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  ParticleEnsemble ens;
  Rng init(RngStream{11, make_stream_id(StreamPurpose::Validation, 0, 0)});
  for (int i = 0; i < M; ++i) {
    ens.particles.push_back(State{init.uniform01()});
    ens.log_weights.push_back(0.0);
  }
  double lw = -std::log(static_cast<double>(M));
  for (auto& w : ens.log_weights) w = lw;
  Rng resample_rng(RngStream{11, make_stream_id(StreamPurpose::Resampling, 0, 0)});
  for (auto _ : state) {
    ParticleEnsemble out = multinomial_resample(ens, resample_rng);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(M) * state.iterations());
}
BENCHMARK(BM_MultinomialResample)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
