#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "mssf/config.hpp"
#include "mssf/hybrid.hpp"
#include "mssf/pfilter.hpp"
#include "mssf/ssa.hpp"
#include "support/builders.hpp"
#include "support/test_stats.hpp"

using namespace mssf;

namespace {

ObservationModel flat_model() {
  ObservationModel model;
  model.channels.push_back({"zero", 0.0, [](const State&) { return 0.0; }});
  return model;
}

ObservationModel identity_channel_model(double bound) {
  ObservationModel model;
  model.channels.push_back({"x", bound, [](const State& x) { return x[0]; }});
  return model;
}

TransitionKernel identity_kernel() {
  return [](State&, double, RngStream) {};
}

ParticleEnsemble make_ensemble(std::vector<double> values, std::vector<double> weights) {
  ParticleEnsemble ens;
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    ens.particles.push_back(State{values[i]});
    ens.log_weights.push_back(std::log(weights[i] / total));
    ens.root_index.push_back(static_cast<int>(i));
  }
  return ens;
}

Rng fresh_resample_rng(std::uint64_t salt) {
  return Rng(RngStream{salt, make_stream_id(StreamPurpose::Resampling, 0, 0)});
}

}  // namespace

TEST_SUITE("pfilter") {

TEST_CASE("singleton ensemble: weight renormalizes to one, estimate is phi(x)") {
  ParticleEnsemble ens = make_ensemble({4.2}, {1.0});
  auto model = identity_channel_model(10.0);
  std::vector<Functional> fns{{"x", [](const State& x) { return x[0]; }}};
  std::vector<double> y{3.0};
  Rng rng = fresh_resample_rng(1);
  FilterEstimate est = pf_step(ens, identity_kernel(), model, fns, y, 1.0, 1,
                               StreamPurpose::FullPropagation, rng);
  CHECK(ens.size() == 1);
  CHECK(std::exp(ens.log_weights[0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.mean[0] == 4.2);
  CHECK(est.ess == doctest::Approx(1.0));
}

TEST_CASE("two particles: normalized weights are the softmax of log g") {
  // h(x) = x, y = 2: log g = (0, 2) for particles x = (0, 2), so the
  // posterior weights are (1/(1+e^2), e^2/(1+e^2)).
  ParticleEnsemble ens = make_ensemble({0.0, 2.0}, {1.0, 1.0});
  auto model = identity_channel_model(10.0);
  std::vector<Functional> fns{{"x", [](const State& x) { return x[0]; }}};
  std::vector<double> y{2.0};

  // estimate before resampling: run the weighting by hand via pf_step's
  // estimate output
  Rng rng = fresh_resample_rng(2);
  FilterEstimate est = pf_step(ens, identity_kernel(), model, fns, y, 1.0, 2,
                               StreamPurpose::FullPropagation, rng);
  double w2 = std::exp(2.0) / (1.0 + std::exp(2.0));
  CHECK(w2 == doctest::Approx(0.8807970779778823).epsilon(1e-15));
  CHECK(est.mean[0] == doctest::Approx(2.0 * w2).epsilon(1e-12));
}

TEST_CASE("uninformative observations with the identity kernel preserve the law") {
  const int M = 10000;
  auto draw_initial = [](std::uint64_t seed, int slot) {
    Rng rng(RngStream{seed, make_stream_id(StreamPurpose::InitialState, 0,
                                           static_cast<std::uint64_t>(slot))});
    return State{static_cast<double>(rng.poisson(5.0))};
  };

  ParticleEnsemble ens;
  for (int i = 0; i < M; ++i) {
    ens.particles.push_back(draw_initial(31, i));
    ens.log_weights.push_back(-std::log(static_cast<double>(M)));
    ens.root_index.push_back(i);
  }

  auto model = flat_model();
  std::vector<Functional> fns{{"x", [](const State& x) { return x[0]; }}};
  std::vector<double> y{0.0};
  Rng rng = fresh_resample_rng(31);
  for (int step = 0; step < 5; ++step) {
    pf_step(ens, identity_kernel(), model, fns, y, 1.0, 31, StreamPurpose::FullPropagation, rng);
  }

  // marginal of the 5-times-resampled ensemble vs a fresh draw from the law
  std::vector<double> final_marginal(M), fresh(M);
  for (int i = 0; i < M; ++i) {
    final_marginal[i] = ens.particles[i][0];
    fresh[i] = draw_initial(99, i)[0];
  }
  CHECK(test_stats::ks_two_sample_p(final_marginal, fresh) > 0.001);
}

TEST_CASE("multinomial resampling: uniform weights give uniform offspring counts") {
  const int M = 100;
  std::vector<double> values(M), weights(M, 1.0);
  std::iota(values.begin(), values.end(), 0.0);
  ParticleEnsemble ens = make_ensemble(values, weights);
  Rng rng = fresh_resample_rng(3);

  std::vector<double> observed(M, 0.0);
  const int repeats = 100;
  for (int r = 0; r < repeats; ++r) {
    ParticleEnsemble out = multinomial_resample(ens, rng);
    for (const auto& p : out.particles) observed[static_cast<int>(p[0])] += 1.0;
  }
  double expected = static_cast<double>(repeats);
  double chi2 = 0.0;
  for (double o : observed) chi2 += (o - expected) * (o - expected) / expected;
  CHECK(test_stats::chi2_sf(chi2, M - 1) > 0.001);
}

TEST_CASE("multinomial resampling: a unit weight collects every offspring") {
  ParticleEnsemble ens = make_ensemble({1.0, 2.0, 3.0}, {0.0 + 1e-300, 1.0, 1e-300});
  Rng rng = fresh_resample_rng(4);
  ParticleEnsemble out = multinomial_resample(ens, rng);
  for (const auto& p : out.particles) CHECK(p[0] == 2.0);
  for (double lw : out.log_weights) CHECK(lw == -std::log(3.0));
}

TEST_CASE("multinomial resampling: offspring fractions match the weights") {
  const int M = 10000;
  std::vector<double> values(M), weights(M);
  for (int i = 0; i < M; ++i) {
    values[i] = (i % 2 == 0) ? 0.0 : 1.0;
    weights[i] = (i % 2 == 0) ? 0.25 : 0.75;
  }
  // normalize to per-particle weights: half the particles carry 0.25
  ParticleEnsemble ens = make_ensemble(values, weights);
  Rng rng = fresh_resample_rng(5);
  ParticleEnsemble out = multinomial_resample(ens, rng);
  double fraction = 0.0;
  for (const auto& p : out.particles) fraction += p[0];
  fraction /= M;
  CHECK(std::abs(fraction - 0.75) <= 3.0 * std::sqrt(0.25 * 0.75 / M));
}

TEST_CASE("resampling is unbiased for estimates") {
  ParticleEnsemble ens = make_ensemble({1.0, 2.0, 5.0, 9.0}, {0.1, 0.2, 0.3, 0.4});
  auto phi = [](const State& x) { return x[0]; };
  double before = estimate(ens, phi);
  Rng rng = fresh_resample_rng(6);
  const int draws = 1000;
  std::vector<double> after(draws);
  for (int r = 0; r < draws; ++r) {
    ParticleEnsemble out = multinomial_resample(ens, rng);
    after[r] = estimate(out, phi);
  }
  double se = test_stats::se_of_mean(after);
  CHECK(std::abs(test_stats::mean_of(after) - before) <= 3.0 * se);
}

TEST_CASE("post-resample weights are uniform") {
  ParticleEnsemble ens = make_ensemble({1.0, 2.0, 3.0, 4.0}, {0.7, 0.1, 0.1, 0.1});
  Rng rng = fresh_resample_rng(7);
  ParticleEnsemble out = multinomial_resample(ens, rng);
  for (double lw : out.log_weights) {
    CHECK(lw == -std::log(4.0));
    CHECK(std::exp(lw) * 4.0 == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("permuting particles leaves estimates bit-identical") {
  ParticleEnsemble ens = make_ensemble({3.0, 1.0, 4.0, 1.5, 9.0, 2.6},
                                       {0.05, 0.3, 0.15, 0.2, 0.1, 0.2});
  auto phi = [](const State& x) { return x[0] * x[0]; };
  double reference = estimate(ens, phi);

  std::vector<double> w(ens.size());
  std::vector<double> values(ens.size());
  for (int i = 0; i < ens.size(); ++i) {
    w[i] = std::exp(ens.log_weights[i]);
    values[i] = phi(ens.particles[i]);
  }
  double mc_reference = estimate_mc_variance(ens, w, values, reference);

  std::vector<int> perm{5, 2, 0, 4, 1, 3};
  ParticleEnsemble shuffled;
  for (int i : perm) {
    shuffled.particles.push_back(ens.particles[i]);
    shuffled.log_weights.push_back(ens.log_weights[i]);
    shuffled.root_index.push_back(ens.root_index[i]);
  }
  CHECK(estimate(shuffled, phi) == reference);

  std::vector<double> w2(shuffled.size()), values2(shuffled.size());
  for (int i = 0; i < shuffled.size(); ++i) {
    w2[i] = std::exp(shuffled.log_weights[i]);
    values2[i] = phi(shuffled.particles[i]);
  }
  CHECK(estimate_mc_variance(shuffled, w2, values2, reference) == mc_reference);
}

TEST_CASE("estimate: normalization, uniform-weight mean, indicator bounds, guards") {
  ParticleEnsemble ens = make_ensemble({1.0, 2.0, 7.0, 4.0}, {1.0, 1.0, 1.0, 1.0});
  CHECK(estimate(ens, [](const State&) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
  // uniform weights: the estimate is the arithmetic mean
  CHECK(estimate(ens, [](const State& x) { return x[0]; }) ==
        doctest::Approx(3.5).epsilon(1e-12));
  // indicator functional lands in [0, 1]
  double on = estimate(ens, [](const State& x) { return x[0] > 3.0 ? 1.0 : 0.0; });
  CHECK(on >= 0.0);
  CHECK(on <= 1.0);
  CHECK(on == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(estimate(ens, [](const State&) { return std::nan(""); }), std::runtime_error);
}

TEST_CASE("pf_step normalizes weights and reports ESS in range") {
  const int M = 64;
  std::vector<double> values(M), weights(M, 1.0);
  for (int i = 0; i < M; ++i) values[i] = static_cast<double>(i % 7);
  ParticleEnsemble ens = make_ensemble(values, weights);
  auto model = identity_channel_model(10.0);
  std::vector<Functional> fns{{"x", [](const State& x) { return x[0]; }}};
  std::vector<double> y{3.0};
  Rng rng = fresh_resample_rng(8);
  FilterEstimate est = pf_step(ens, identity_kernel(), model, fns, y, 1.0, 8,
                               StreamPurpose::FullPropagation, rng);
  double total = 0.0;
  for (double lw : ens.log_weights) total += std::exp(lw);
  CHECK(std::abs(total - 1.0) <= 1e-9);
  CHECK(est.ess >= 1.0);
  CHECK(est.ess <= static_cast<double>(M));
}

TEST_CASE("all-underflow weights raise a degenerate-ensemble error") {
  ParticleEnsemble ens = make_ensemble({1.0, 2.0}, {0.5, 0.5});
  ObservationModel model;
  model.channels.push_back({"bad", 1e308, [](const State&) { return 1e308; }});
  std::vector<Functional> fns{{"x", [](const State& x) { return x[0]; }}};
  std::vector<double> y{-1e308};
  Rng rng = fresh_resample_rng(9);
  CHECK_THROWS_AS(pf_step(ens, identity_kernel(), model, fns, y, 1.0, 9,
                          StreamPurpose::FullPropagation, rng),
                  DegenerateEnsembleError);
}

TEST_CASE("run_filter rejects an empty observation sequence") {
  ObservationSequence obs;
  std::vector<Functional> fns{{"x", [](const State& x) { return x[0]; }}};
  CHECK_THROWS_AS(run_filter(identity_kernel(), flat_model(),
                             [](RngStream) { return State{0.0}; }, obs, 8, 1,
                             StreamPurpose::FullPropagation, fns),
                  std::invalid_argument);
}

TEST_CASE("the same filter code runs against both transition kernels") {
  const auto& cfg = test_builders::gene_config();
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  ObservationModel model = make_observation_model(cfg, spec);
  InitialSampler sampler = make_initial_sampler(cfg.network);
  std::vector<Functional> fns = species_raw_mean_functionals(cfg.network, spec);

  ObservationSequence obs;
  obs.times = {2.0, 4.0};
  obs.values = {{250.0}, {300.0}};

  auto full_sim = std::make_shared<FullSimulator>(cfg.network, spec);
  ReducedModel reduced = reduce(cfg.network, spec);
  auto hybrid_sim = std::make_shared<HybridSimulator>(cfg.network, reduced);
  HybridStepConfig hybrid_cfg = cfg.hybrid;

  FilterRun full_run = run_filter(
      [full_sim](State& x, double dt, RngStream s) { full_sim->sample(x, dt, s); }, model,
      sampler, obs, 200, 17, StreamPurpose::FullPropagation, fns);
  FilterRun reduced_run = run_filter(
      [hybrid_sim, hybrid_cfg](State& x, double dt, RngStream s) {
        hybrid_sim->sample(x, dt, s, hybrid_cfg);
      },
      model, sampler, obs, 200, 17, StreamPurpose::ReducedPropagation, fns);
  CHECK(full_run.steps.size() == 2);
  CHECK(reduced_run.steps.size() == 2);
  for (const auto& step : full_run.steps) CHECK(std::isfinite(step.mean[3]));
  for (const auto& step : reduced_run.steps) CHECK(std::isfinite(step.mean[3]));
}

TEST_CASE("results are independent of the worker count") {
  const auto& cfg = test_builders::gene_config();
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  ObservationModel model = make_observation_model(cfg, spec);
  InitialSampler sampler = make_initial_sampler(cfg.network);
  std::vector<Functional> fns = species_raw_mean_functionals(cfg.network, spec);
  ObservationSequence obs;
  obs.times = {2.0, 4.0, 6.0};
  obs.values = {{250.0}, {300.0}, {150.0}};
  auto full_sim = std::make_shared<FullSimulator>(cfg.network, spec);
  TransitionKernel kernel = [full_sim](State& x, double dt, RngStream s) {
    full_sim->sample(x, dt, s);
  };

  FilterOptions serial, parallel;
  serial.threads = 1;
  parallel.threads = 4;
  FilterRun a = run_filter(kernel, model, sampler, obs, 500, 23,
                           StreamPurpose::FullPropagation, fns, serial);
  FilterRun b = run_filter(kernel, model, sampler, obs, 500, 23,
                           StreamPurpose::FullPropagation, fns, parallel);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].mean == b.steps[i].mean);
    CHECK(a.steps[i].variance_proxy == b.steps[i].variance_proxy);
    CHECK(a.steps[i].mc_se == b.steps[i].mc_se);
    CHECK(a.steps[i].ess == b.steps[i].ess);
  }
}

TEST_CASE("kernel errors propagate out of parallel propagation") {
  const int M = 64;
  std::vector<double> values(M, 1.0), weights(M, 1.0);
  ParticleEnsemble ens = make_ensemble(values, weights);
  auto model = flat_model();
  std::vector<Functional> fns{{"x", [](const State& x) { return x[0]; }}};
  std::vector<double> y{0.0};
  Rng rng = fresh_resample_rng(40);
  FilterOptions opts;
  opts.threads = 4;
  TransitionKernel exploding = [](State&, double, RngStream s) {
    if ((s.stream & 0xff'ffff) == 17) throw std::runtime_error("kernel blew up");
  };
  CHECK_THROWS_WITH(pf_step(ens, exploding, model, fns, y, 1.0, 40,
                            StreamPurpose::FullPropagation, rng, opts),
                    doctest::Contains("blew up"));
}

TEST_CASE("stream layout: shared resampling, disjoint propagation") {
  CHECK(make_stream_id(StreamPurpose::Resampling, 0, 0) ==
        make_stream_id(StreamPurpose::Resampling, 0, 0));
  CHECK(make_stream_id(StreamPurpose::FullPropagation, 3, 7) !=
        make_stream_id(StreamPurpose::ReducedPropagation, 3, 7));
  CHECK(make_stream_id(StreamPurpose::FullPropagation, 0, 1) !=
        make_stream_id(StreamPurpose::FullPropagation, 1, 0));
  // the low byte stays free for simulator sub-streams
  RngStream s{1, make_stream_id(StreamPurpose::FullPropagation, 5, 11)};
  CHECK(s.sub(3).stream == s.stream * 256 + 3);
}

TEST_CASE("ESS-triggered resampling is available behind the option") {
  const int M = 128;
  std::vector<double> values(M), weights(M, 1.0);
  for (int i = 0; i < M; ++i) values[i] = static_cast<double>(i % 3);
  ParticleEnsemble ens = make_ensemble(values, weights);
  auto model = flat_model();
  std::vector<Functional> fns{{"x", [](const State& x) { return x[0]; }}};
  std::vector<double> y{0.0};
  Rng rng = fresh_resample_rng(10);
  FilterOptions opts;
  opts.ess_triggered_resampling = true;

  std::vector<State> before = ens.particles;
  pf_step(ens, identity_kernel(), model, fns, y, 1.0, 10, StreamPurpose::FullPropagation, rng,
          opts);
  // uniform weights keep ESS at M, so no resampling happened
  CHECK(ens.particles == before);
}

}  // TEST_SUITE
