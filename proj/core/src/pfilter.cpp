#include "mssf/pfilter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace mssf {

namespace {

/// Sum in ascending order: permutation-invariant to the bit.
double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double v : terms) s += v;
  return s;
}

void parallel_for(int threads, int count, const std::function<void(int, int)>& body) {
  if (threads <= 1 || count < 2 * threads) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  int chunk = (count + threads - 1) / threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    int lo = t * chunk;
    int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, &errors, t, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

/// Normalized weights from normalized log-weights.
std::vector<double> weights_of(const ParticleEnsemble& ens) {
  std::vector<double> w(ens.log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(ens.log_weights[i]);
  return w;
}

/// Max-log normalization. Throws if every weight underflowed.
void normalize_log_weights(std::vector<double>& lw) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double v : lw) max_lw = std::max(max_lw, v);
  if (!std::isfinite(max_lw)) {
    throw DegenerateEnsembleError(
        "degenerate ensemble: all log-weights are -inf or NaN (max log-weight " +
        std::to_string(max_lw) + ", M=" + std::to_string(lw.size()) + ")");
  }
  std::vector<double> exps(lw.size());
  for (std::size_t i = 0; i < lw.size(); ++i) exps[i] = std::exp(lw[i] - max_lw);
  std::vector<double> terms = exps;
  double total = sorted_sum(terms);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegenerateEnsembleError("degenerate ensemble: weight normalizer is " +
                                  std::to_string(total));
  }
  double log_total = std::log(total);
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = (lw[i] - max_lw) - log_total;
}

double effective_sample_size(const std::vector<double>& w) {
  std::vector<double> sq(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) sq[i] = w[i] * w[i];
  double s = sorted_sum(sq);
  return s > 0.0 ? 1.0 / s : 0.0;
}

}  // namespace

double estimate(const ParticleEnsemble& ens, const std::function<double(const State&)>& phi) {
  if (ens.particles.empty()) throw std::invalid_argument("empty ensemble");
  std::vector<double> terms(ens.particles.size());
  for (std::size_t i = 0; i < ens.particles.size(); ++i) {
    double v = phi(ens.particles[i]);
    if (!std::isfinite(v)) {
      throw std::runtime_error("estimate: functional returned a non-finite value");
    }
    terms[i] = std::exp(ens.log_weights[i]) * v;
  }
  return sorted_sum(terms);
}

double estimate_mc_variance(const ParticleEnsemble& ens, const std::vector<double>& weights,
                            const std::vector<double>& values, double mean) {
  const int M = ens.size();
  if (static_cast<int>(ens.root_index.size()) != M) return 0.0;
  // (root, term) pairs sorted by root then value keep the group sums
  // permutation-invariant to the bit.
  std::vector<std::pair<int, double>> terms(M);
  for (int i = 0; i < M; ++i) {
    terms[i] = {ens.root_index[i], weights[i] * (values[i] - mean)};
  }
  std::sort(terms.begin(), terms.end());
  double variance = 0.0;
  std::size_t i = 0;
  while (i < terms.size()) {
    int root = terms[i].first;
    double group = 0.0;
    while (i < terms.size() && terms[i].first == root) {
      group += terms[i].second;
      ++i;
    }
    variance += group * group;
  }
  return variance;
}

ParticleEnsemble multinomial_resample(const ParticleEnsemble& ens, Rng& resample_rng) {
  const int M = ens.size();
  if (M == 0) throw std::invalid_argument("empty ensemble");

  // Sorted uniforms via normalized exponential spacings.
  std::vector<double> points(M);
  double cum = 0.0;
  for (int i = 0; i < M; ++i) {
    cum += resample_rng.exponential();
    points[i] = cum;
  }
  cum += resample_rng.exponential();
  for (int i = 0; i < M; ++i) points[i] /= cum;

  std::vector<double> w = weights_of(ens);
  const bool tracked = static_cast<int>(ens.root_index.size()) == M;
  ParticleEnsemble out;
  out.particles.reserve(M);
  out.step_index = ens.step_index;
  double cdf = w[0];
  int src = 0;
  for (int i = 0; i < M; ++i) {
    while (points[i] > cdf && src + 1 < M) {
      ++src;
      cdf += w[src];
    }
    out.particles.push_back(ens.particles[src]);
    if (tracked) out.root_index.push_back(ens.root_index[src]);
  }
  out.log_weights.assign(M, -std::log(static_cast<double>(M)));
  return out;
}

FilterEstimate pf_step(ParticleEnsemble& ens, const TransitionKernel& kernel,
                       const ObservationModel& model, const std::vector<Functional>& functionals,
                       std::span<const double> y, double dt, std::uint64_t seed,
                       StreamPurpose propagation_purpose, Rng& resample_rng,
                       const FilterOptions& opts) {
  const int M = ens.size();
  if (M == 0) throw std::invalid_argument("empty ensemble");
  if (!(dt > 0.0)) throw std::invalid_argument("assimilation interval must be positive");

  const std::uint64_t step = static_cast<std::uint64_t>(ens.step_index);
  std::vector<double> log_g(M);
  parallel_for(opts.threads, M, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      RngStream stream{seed, make_stream_id(propagation_purpose, step,
                                            static_cast<std::uint64_t>(i))};
      kernel(ens.particles[i], dt, stream);
      log_g[i] = log_weight(model, ens.particles[i], y);
    }
  });

  for (int i = 0; i < M; ++i) ens.log_weights[i] += log_g[i];
  normalize_log_weights(ens.log_weights);

  FilterEstimate est;
  std::vector<double> w = weights_of(ens);
  est.ess = effective_sample_size(w);
  std::vector<double> terms(M);
  for (const auto& fn : functionals) {
    std::vector<double> values(M);
    for (int i = 0; i < M; ++i) {
      values[i] = fn.phi(ens.particles[i]);
      if (!std::isfinite(values[i])) {
        throw std::runtime_error("pf_step: functional '" + fn.name + "' returned non-finite");
      }
      terms[i] = w[i] * values[i];
    }
    std::vector<double> mean_terms = terms;
    double mean = sorted_sum(mean_terms);
    for (int i = 0; i < M; ++i) {
      double d = values[i] - mean;
      terms[i] = w[i] * d * d;
    }
    std::vector<double> var_terms = terms;
    est.mean.push_back(mean);
    est.variance_proxy.push_back(sorted_sum(var_terms));
    est.mc_se.push_back(std::sqrt(estimate_mc_variance(ens, w, values, mean)));
  }

  bool resample = true;
  if (opts.ess_triggered_resampling) {
    resample = est.ess < opts.ess_threshold_fraction * static_cast<double>(M);
  }
  if (resample) ens = multinomial_resample(ens, resample_rng);
  ens.step_index += 1;
  return est;
}

FilterRun run_filter(const TransitionKernel& kernel, const ObservationModel& model,
                     const InitialSampler& x0_sampler, const ObservationSequence& obs, int M,
                     std::uint64_t seed, StreamPurpose propagation_purpose,
                     const std::vector<Functional>& functionals, const FilterOptions& opts) {
  if (obs.size() == 0) throw std::invalid_argument("empty observation sequence");
  obs.validate(model.size());
  if (M < 1) throw std::invalid_argument("particle count must be >= 1");

  ParticleEnsemble ens;
  ens.particles.reserve(M);
  for (int i = 0; i < M; ++i) {
    RngStream stream{seed, make_stream_id(StreamPurpose::InitialState, 0,
                                          static_cast<std::uint64_t>(i))};
    ens.particles.push_back(x0_sampler(stream));
    ens.root_index.push_back(i);
  }
  ens.log_weights.assign(M, -std::log(static_cast<double>(M)));

  Rng resample_rng(RngStream{seed, make_stream_id(StreamPurpose::Resampling, 0, 0)});

  FilterRun run;
  for (const auto& fn : functionals) run.functional_names.push_back(fn.name);
  double prev_t = 0.0;
  for (int i = 0; i < obs.size(); ++i) {
    double dt = obs.times[i] - prev_t;
    auto started = std::chrono::steady_clock::now();
    FilterEstimate est = pf_step(ens, kernel, model, functionals, obs.values[i], dt, seed,
                                 propagation_purpose, resample_rng, opts);
    auto finished = std::chrono::steady_clock::now();
    est.time = obs.times[i];
    est.step_wall_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(finished - started)
            .count();
    run.steps.push_back(std::move(est));
    prev_t = obs.times[i];
  }
  return run;
}

}  // namespace mssf
