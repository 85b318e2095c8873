#include "mssf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <thread>

#include "json.hpp"

namespace mssf {

namespace {

using ordered_json = nlohmann::ordered_json;

ObservationSequence synthesize_observations(const ExperimentConfig& cfg,
                                            const ObservationModel& model,
                                            const Trajectory& truth, double horizon) {
  ObservationSequence obs;
  Rng noise(RngStream{cfg.seed, make_stream_id(StreamPurpose::ObservationNoise, 0, 0)});
  int steps = static_cast<int>(std::floor(horizon / cfg.sample_period + 1e-9));
  for (int i = 1; i <= steps; ++i) {
    double t = static_cast<double>(i) * cfg.sample_period;
    obs.times.push_back(t);
    obs.values.push_back(observe(model, truth.state_at(t), noise));
  }
  return obs;
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("experiment stage '") + name + "': " + e.what());
  }
}

std::vector<double> step_times(const FilterRun& run) {
  std::vector<double> out;
  for (const auto& s : run.steps) out.push_back(s.step_wall_ms);
  return out;
}

int functional_index(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t f = 0; f < names.size(); ++f) {
    if (names[f] == name) return static_cast<int>(f);
  }
  throw std::invalid_argument("unknown functional '" + name + "'");
}

ordered_json timing_json(const ExperimentResult& r) {
  ordered_json t;
  t["full"] = {{"mean_step_ms", r.full_mean_ms}, {"median_step_ms", r.full_median_ms}};
  t["reduced"] = {{"mean_step_ms", r.reduced_mean_ms}, {"median_step_ms", r.reduced_median_ms}};
  t["speedup_mean"] = r.speedup_mean;
  t["speedup_median"] = r.speedup_median;
  t["hardware_note"] =
      "compiler " +
#if defined(__VERSION__)
      std::string(__VERSION__)
#else
      std::string("unknown")
#endif
      + ", " + std::to_string(std::thread::hardware_concurrency()) +
      " logical cores; wall-clock values are machine-dependent and excluded from determinism "
      "comparisons";
  return t;
}

}  // namespace

double ExperimentResult::coverage(const std::string& name) const {
  int f = functional_index(functional_names, name);
  return coverage_total[f] > 0
             ? static_cast<double>(coverage_inside[f]) / static_cast<double>(coverage_total[f])
             : 0.0;
}

double SeedBatchResult::coverage(const std::string& name) const {
  int f = functional_index(functional_names, name);
  return total[f] > 0 ? static_cast<double>(inside[f]) / static_cast<double>(total[f]) : 0.0;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  const ReactionNetwork& net = cfg.network;
  ScalingSpec spec = stage("scaling analysis", [&] { return make_scaling_spec(net, cfg.N); });
  ObservationModel model = make_observation_model(cfg, spec);
  InitialSampler sampler = make_initial_sampler(net);
  std::vector<Functional> fns = species_raw_mean_functionals(net, spec);

  ExperimentResult result;
  for (const auto& fn : fns) result.functional_names.push_back(fn.name);

  auto full_sim = std::make_shared<FullSimulator>(net, spec);
  result.truth = stage("ground truth", [&] {
    State x0 = sampler(RngStream{cfg.seed, make_stream_id(StreamPurpose::GroundTruth, 0, 0)});
    return full_sim->simulate(x0, cfg.horizon,
                              RngStream{cfg.seed, make_stream_id(StreamPurpose::GroundTruth, 0, 1)},
                              cfg.ssa);
  });

  result.obs = stage("observation synthesis",
                     [&] { return synthesize_observations(cfg, model, result.truth, cfg.horizon); });
  if (result.obs.size() == 0) {
    throw std::runtime_error("experiment: horizon shorter than one sample period");
  }

  FilterOptions opts;
  opts.threads = cfg.threads;

  TransitionKernel kernel_full = [full_sim](State& x, double dt, RngStream s) {
    full_sim->sample(x, dt, s);
  };
  result.full = stage("full-kernel filter", [&] {
    return run_filter(kernel_full, model, sampler, result.obs, cfg.particles, cfg.seed,
                      StreamPurpose::FullPropagation, fns, opts);
  });

  ReducedModel reduced = reduce(net, spec);
  auto hybrid_sim = std::make_shared<HybridSimulator>(net, reduced);
  HybridStepConfig hybrid_cfg = cfg.hybrid;
  TransitionKernel kernel_reduced = [hybrid_sim, hybrid_cfg](State& x, double dt, RngStream s) {
    hybrid_sim->sample(x, dt, s, hybrid_cfg);
  };
  result.reduced = stage("reduced-kernel filter", [&] {
    return run_filter(kernel_reduced, model, sampler, result.obs, cfg.particles, cfg.seed,
                      StreamPurpose::ReducedPropagation, fns, opts);
  });

  std::vector<double> full_ms = step_times(result.full);
  std::vector<double> reduced_ms = step_times(result.reduced);
  result.full_mean_ms = mean(full_ms);
  result.full_median_ms = median(full_ms);
  result.reduced_mean_ms = mean(reduced_ms);
  result.reduced_median_ms = median(reduced_ms);
  result.speedup_mean = result.full_mean_ms / result.reduced_mean_ms;
  result.speedup_median = result.full_median_ms / result.reduced_median_ms;

  result.coverage_inside.assign(fns.size(), 0);
  result.coverage_total.assign(fns.size(), 0);
  for (std::size_t i = 0; i < result.full.steps.size(); ++i) {
    const auto& fs = result.full.steps[i];
    const auto& rs = result.reduced.steps[i];
    for (std::size_t f = 0; f < fns.size(); ++f) {
      double sd = std::sqrt(fs.variance_proxy[f]);
      result.coverage_total[f] += 1;
      if (rs.mean[f] >= fs.mean[f] - sd && rs.mean[f] <= fs.mean[f] + sd) {
        result.coverage_inside[f] += 1;
      }
    }
  }

  if (!out_dir.empty()) {
    std::filesystem::path dir(out_dir);
    write_text_file(dir / "truth.csv", trajectory_csv(net, result.truth));
    write_text_file(dir / "observations.csv", observations_csv(result.obs));
    write_text_file(dir / "filter_full.csv", filter_csv(result.full));
    write_text_file(dir / "filter_reduced.csv", filter_csv(result.reduced));
    emit_plot_data(cfg, result, out_dir);

    ordered_json summary;
    // execution parameters (thread count) stay out: the bundle is
    // byte-identical regardless of how it was parallelized
    summary["config"] = {{"N", cfg.N},
                         {"particles", cfg.particles},
                         {"horizon", cfg.horizon},
                         {"sample_period", cfg.sample_period},
                         {"seed", cfg.seed}};
    summary["truth_jumps"] = result.truth.jump_count;
    summary["coverage"] = ordered_json::object();
    for (std::size_t f = 0; f < fns.size(); ++f) {
      summary["coverage"][fns[f].name] = {
          {"inside", result.coverage_inside[f]},
          {"total", result.coverage_total[f]},
          {"fraction", result.coverage(fns[f].name)}};
    }
    summary["timing"] = timing_json(result);
    write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  }
  return result;
}

void emit_plot_data(const ExperimentConfig& cfg, const ExperimentResult& result,
                    const std::string& out_dir) {
  const ReactionNetwork& net = cfg.network;
  ScalingSpec spec = make_scaling_spec(net, cfg.N);
  std::filesystem::path dir(out_dir);
  for (int s = 0; s < net.species_count(); ++s) {
    double raw_scale = std::pow(spec.N, spec.alpha[s].to_double());
    std::string csv = "t,truth,full_mean,full_lo,full_hi,reduced_mean\n";
    for (std::size_t i = 0; i < result.obs.times.size(); ++i) {
      double t = result.obs.times[i];
      double truth = raw_scale * result.truth.state_at(t)[s];
      const auto& fs = result.full.steps[i];
      const auto& rs = result.reduced.steps[i];
      double sd = std::sqrt(fs.variance_proxy[s]);
      csv += format_double(t);
      csv += "," + format_double(truth);
      csv += "," + format_double(fs.mean[s]);
      csv += "," + format_double(fs.mean[s] - sd);
      csv += "," + format_double(fs.mean[s] + sd);
      csv += "," + format_double(rs.mean[s]);
      csv += "\n";
    }
    write_text_file(dir / ("plot_" + net.species()[s].name + ".csv"), csv);
  }
}

SeedBatchResult run_seed_batch(const ExperimentConfig& cfg, int seed_count,
                               const std::string& out_dir) {
  if (seed_count < 1) throw std::invalid_argument("seed_count must be >= 1");
  SeedBatchResult batch;
  for (int k = 0; k < seed_count; ++k) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(k);
    std::string dir =
        out_dir.empty() ? "" : out_dir + "/seed_" + std::to_string(run_cfg.seed);
    ExperimentResult r = run_experiment(run_cfg, dir);
    if (k == 0) {
      batch.functional_names = r.functional_names;
      batch.inside.assign(r.functional_names.size(), 0);
      batch.total.assign(r.functional_names.size(), 0);
    }
    for (std::size_t f = 0; f < batch.functional_names.size(); ++f) {
      batch.inside[f] += r.coverage_inside[f];
      batch.total[f] += r.coverage_total[f];
    }
    batch.full_median_ms.push_back(r.full_median_ms);
    batch.reduced_median_ms.push_back(r.reduced_median_ms);
  }
  if (!out_dir.empty()) {
    ordered_json summary;
    summary["seeds"] = seed_count;
    summary["base_seed"] = cfg.seed;
    summary["coverage"] = ordered_json::object();
    for (std::size_t f = 0; f < batch.functional_names.size(); ++f) {
      summary["coverage"][batch.functional_names[f]] = {
          {"inside", batch.inside[f]},
          {"total", batch.total[f]},
          {"fraction", batch.coverage(batch.functional_names[f])}};
    }
    write_text_file(std::filesystem::path(out_dir) / "batch_summary.json",
                    summary.dump(2) + "\n");
  }
  return batch;
}

ConvergenceReport run_convergence_study(const ExperimentConfig& cfg,
                                        const std::vector<double>& n_list, int samples, double t,
                                        int species) {
  if (n_list.empty()) throw std::invalid_argument("empty N list");
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (!(n_list[i] > n_list[i - 1])) throw std::invalid_argument("N list must be increasing");
  }
  if (samples < 2) throw std::invalid_argument("need at least two samples");

  const ReactionNetwork& net = cfg.network;
  ScalingSpec spec_ref = make_scaling_spec(net, cfg.N);
  if (species < 0) {
    // default comparison coordinate: the fastest-abundance species
    species = 0;
    for (int i = 1; i < net.species_count(); ++i) {
      if (spec_ref.alpha[i] > spec_ref.alpha[species]) species = i;
    }
  }

  ReducedModel reduced = reduce(net, spec_ref);
  HybridSimulator hybrid(net, reduced);
  InitialSampler sampler = make_initial_sampler(net);

  // The reduced model has no N: draw its endpoint sample once, with the
  // same per-pair streams the full runs use.
  std::vector<double> reduced_samples(samples);
  std::vector<State> initial(samples);
  for (int i = 0; i < samples; ++i) {
    initial[i] = sampler(
        RngStream{cfg.seed, make_stream_id(StreamPurpose::Convergence, 0,
                                           static_cast<std::uint64_t>(i))});
    State x = initial[i];
    hybrid.sample(x, t,
                  RngStream{cfg.seed, make_stream_id(StreamPurpose::Convergence, 1,
                                                     static_cast<std::uint64_t>(i))},
                  cfg.hybrid);
    reduced_samples[i] = x[species];
  }

  ConvergenceReport report;
  report.species = species;
  report.t = t;
  report.samples = samples;
  for (double n_value : n_list) {
    // hold k' fixed: rebuild raw constants for this N
    std::vector<Species> sp = net.species();
    std::vector<Reaction> rx = net.reactions();
    for (std::size_t j = 0; j < rx.size(); ++j) {
      double k_scaled = spec_ref.scaled_rate(net, static_cast<int>(j));
      rx[j].rate_constant = k_scaled * std::pow(n_value, rx[j].beta.to_double());
    }
    ReactionNetwork scaled_net(std::move(sp), std::move(rx));
    ScalingSpec spec_n = make_scaling_spec(scaled_net, n_value);
    FullSimulator full(scaled_net, spec_n);

    std::vector<double> full_samples(samples);
    for (int i = 0; i < samples; ++i) {
      State x = initial[i];
      full.sample(x, t,
                  RngStream{cfg.seed, make_stream_id(StreamPurpose::Convergence, 1,
                                                     static_cast<std::uint64_t>(i))});
      full_samples[i] = x[species];
    }
    report.n_values.push_back(n_value);
    report.ks_distance.push_back(ks_two_sample(full_samples, reduced_samples));
  }

  report.strictly_decreasing = report.ks_distance.size() > 1;
  for (std::size_t i = 1; i < report.ks_distance.size(); ++i) {
    if (!(report.ks_distance[i] < report.ks_distance[i - 1])) {
      report.strictly_decreasing = false;
    }
  }
  return report;
}

std::string convergence_report_json(const ConvergenceReport& report) {
  ordered_json root;
  root["species_index"] = report.species;
  root["t"] = report.t;
  root["samples"] = report.samples;
  root["N"] = report.n_values;
  root["ks_distance"] = report.ks_distance;
  if (report.n_values.size() > 1) {
    root["strictly_decreasing"] = report.strictly_decreasing;
  }
  return root.dump(2) + "\n";
}

OracleValidationResult run_oracle_validation(const ExperimentConfig& cfg) {
  if (cfg.oracle_bounds.empty()) {
    throw std::invalid_argument("oracle validation requires an 'oracle' config section");
  }
  if (cfg.channels.empty()) {
    throw std::invalid_argument("oracle validation requires an observation channel");
  }
  const ReactionNetwork& net = cfg.network;
  ScalingSpec spec = make_scaling_spec(net, cfg.N);
  ObservationModel model = make_observation_model(cfg, spec);
  InitialSampler sampler = make_initial_sampler(net);
  std::vector<Functional> fns = species_raw_mean_functionals(net, spec);

  double horizon = cfg.sample_period * static_cast<double>(cfg.oracle_steps);
  auto full_sim = std::make_shared<FullSimulator>(net, spec);
  State x0 = sampler(RngStream{cfg.seed, make_stream_id(StreamPurpose::GroundTruth, 0, 0)});
  Trajectory truth = full_sim->simulate(
      x0, horizon, RngStream{cfg.seed, make_stream_id(StreamPurpose::GroundTruth, 0, 1)}, cfg.ssa);
  ObservationSequence obs = synthesize_observations(cfg, model, truth, horizon);

  FilterOptions opts;
  opts.threads = cfg.threads;
  TransitionKernel kernel = [full_sim](State& x, double dt, RngStream s) {
    full_sim->sample(x, dt, s);
  };

  OracleValidationResult result;
  result.pf = run_filter(kernel, model, sampler, obs, cfg.oracle_particles, cfg.seed,
                         StreamPurpose::FullPropagation, fns, opts);

  TruncatedStateSpace space = TruncatedStateSpace::create(cfg.oracle_bounds);
  std::vector<double> p0 = lattice_prior(net, space);
  result.exact = exact_filter(net, spec, space, model, obs, p0, fns);

  int f = net.species_index(cfg.channels.front().species);
  result.functional = fns[f].name;
  result.pass = true;
  for (std::size_t i = 0; i < result.pf.steps.size(); ++i) {
    const auto& ps = result.pf.steps[i];
    // Genealogy-based Monte-Carlo SE, floored by the within-step ESS
    // proxy in case the ancestry has fully coalesced.
    double se = std::max(ps.mc_se[f], std::sqrt(ps.variance_proxy[f] / std::max(ps.ess, 1.0)));
    se = std::max(se, 1e-12);
    double diff = ps.mean[f] - result.exact.steps[i].mean[f];
    double z = diff / se;
    result.times.push_back(ps.time);
    result.pf_mean.push_back(ps.mean[f]);
    result.pf_se.push_back(se);
    result.exact_mean.push_back(result.exact.steps[i].mean[f]);
    result.z.push_back(z);
    result.max_abs_z = std::max(result.max_abs_z, std::abs(z));
    if (!(std::abs(z) <= 3.0)) result.pass = false;
  }
  return result;
}

std::string oracle_validation_json(const OracleValidationResult& result) {
  ordered_json root;
  root["functional"] = result.functional;
  root["pass"] = result.pass;
  root["max_abs_z"] = result.max_abs_z;
  root["steps"] = ordered_json::array();
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    root["steps"].push_back({{"t", result.times[i]},
                             {"pf_mean", result.pf_mean[i]},
                             {"pf_se", result.pf_se[i]},
                             {"exact_mean", result.exact_mean[i]},
                             {"z", result.z[i]}});
  }
  return root.dump(2) + "\n";
}

}  // namespace mssf
