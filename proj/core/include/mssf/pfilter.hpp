#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mssf/observation.hpp"
#include "mssf/rng.hpp"

namespace mssf {

/// Target functional phi for conditional-expectation estimates. phi
/// should be bounded on the ensemble support; unbounded targets are
/// accepted but should be clamped by the caller (truncation keeps the
/// tail contribution negligible).
struct Functional {
  std::string name;
  std::function<double(const State&)> phi;
};

struct ParticleEnsemble {
  std::vector<State> particles;
  std::vector<double> log_weights;  // normalized: exp sums to 1
  std::vector<int> root_index;      // time-0 ancestor of each particle
  int step_index = 0;

  int size() const { return static_cast<int>(particles.size()); }
};

struct FilterEstimate {
  double time = 0.0;
  std::vector<double> mean;            // one entry per functional
  std::vector<double> variance_proxy;  // weighted central second moment
  std::vector<double> mc_se;           // Monte-Carlo standard error of mean
  double ess = 0.0;                    // effective sample size, in [1, M]
  double step_wall_ms = 0.0;
};

struct DegenerateEnsembleError : std::runtime_error {
  explicit DegenerateEnsembleError(const std::string& what) : std::runtime_error(what) {}
};

/// Propagate-reweight-estimate-resample, one assimilation step of the
/// bootstrap filter. Resampling runs every step by default, matching the
/// reference algorithm; ESS-triggered resampling is available behind a
/// non-default option (ESS is always reported either way).
struct FilterOptions {
  int threads = 1;
  bool ess_triggered_resampling = false;
  double ess_threshold_fraction = 0.5;
};

/// Opaque transition kernel: one draw of the state after dt, in place.
/// pf_step never looks inside; any simulator (full or reduced) plugs in.
using TransitionKernel = std::function<void(State&, double, RngStream)>;
using InitialSampler = std::function<State(RngStream)>;

/// Weighted estimate sum_j w_j phi(x_j). Terms are summed in sorted
/// order, so any permutation of (particle, weight) pairs returns the
/// bit-identical value. Throws on a non-finite phi value.
double estimate(const ParticleEnsemble& ens, const std::function<double(const State&)>& phi);

/// Genealogy-based estimate of Var(estimate): sum over time-0 ancestor
/// groups of the squared group deviation sums. Unlike sd/sqrt(ESS) this
/// captures Monte-Carlo error accumulated through earlier resampling
/// steps, which dominates when the hidden state mixes slowly.
double estimate_mc_variance(const ParticleEnsemble& ens, const std::vector<double>& weights,
                            const std::vector<double>& values, double mean);

/// Multinomial resampling by inverse CDF against sorted uniforms
/// (exponential-spacing construction, O(M), fixed draw count M+1).
/// All weights reset to 1/M.
ParticleEnsemble multinomial_resample(const ParticleEnsemble& ens, Rng& resample_rng);

FilterEstimate pf_step(ParticleEnsemble& ens, const TransitionKernel& kernel,
                       const ObservationModel& model, const std::vector<Functional>& functionals,
                       std::span<const double> y, double dt, std::uint64_t seed,
                       StreamPurpose propagation_purpose, Rng& resample_rng,
                       const FilterOptions& opts = {});

struct FilterRun {
  std::vector<FilterEstimate> steps;
  std::vector<std::string> functional_names;
};

/// Full filter pass over an observation sequence. Particle slot i
/// propagates on stream (propagation_purpose, step, i); the resampling
/// stream is (Resampling, 0, 0) and depends only on the seed, so filter
/// runs that differ only in kernel/propagation purpose share it. Initial
/// states draw from (InitialState, 0, i), also kernel-independent.
FilterRun run_filter(const TransitionKernel& kernel, const ObservationModel& model,
                     const InitialSampler& x0_sampler, const ObservationSequence& obs, int M,
                     std::uint64_t seed, StreamPurpose propagation_purpose,
                     const std::vector<Functional>& functionals, const FilterOptions& opts = {});

}  // namespace mssf
