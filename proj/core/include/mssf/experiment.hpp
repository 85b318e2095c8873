#pragma once

#include <string>
#include <vector>

#include "mssf/config.hpp"
#include "mssf/csv.hpp"
#include "mssf/exact_filter.hpp"
#include "mssf/hybrid.hpp"
#include "mssf/pfilter.hpp"
#include "mssf/ssa.hpp"
#include "mssf/stats.hpp"

namespace mssf {

struct ExperimentResult {
  ObservationSequence obs;
  Trajectory truth;
  FilterRun full;
  FilterRun reduced;
  std::vector<std::string> functional_names;

  double full_mean_ms = 0.0, full_median_ms = 0.0;
  double reduced_mean_ms = 0.0, reduced_median_ms = 0.0;
  double speedup_mean = 0.0, speedup_median = 0.0;

  // Per functional: assimilation times where the reduced estimate fell
  // inside the full-filter mean +- sd band.
  std::vector<int> coverage_inside;
  std::vector<int> coverage_total;

  double coverage(const std::string& functional) const;
};

/// Ground truth -> synthetic observations -> full-kernel and
/// reduced-kernel particle filters on the same readouts. Ground truth,
/// observation noise and the two propagation stream families are all
/// disjoint; resampling, noise and the initial ensemble are shared
/// between the two filter runs. Writes the artifact bundle into out_dir
/// when non-empty.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

/// Plot-ready per-species files (aligned columns: time, truth in raw
/// copy numbers, both estimates, full-filter band).
void emit_plot_data(const ExperimentConfig& cfg, const ExperimentResult& result,
                    const std::string& out_dir);

struct SeedBatchResult {
  std::vector<std::string> functional_names;
  std::vector<int> inside;  // per functional, aggregated over seeds
  std::vector<int> total;
  std::vector<double> full_median_ms;     // per seed
  std::vector<double> reduced_median_ms;  // per seed

  double coverage(const std::string& functional) const;
};

/// Runs seeds seed, seed+1, ..., seed+count-1 and aggregates band
/// coverage (the default batch is 10 seeds).
SeedBatchResult run_seed_batch(const ExperimentConfig& cfg, int seed_count,
                               const std::string& out_dir);

struct ConvergenceReport {
  std::vector<double> n_values;
  std::vector<double> ks_distance;
  bool strictly_decreasing = false;
  int species = 0;
  double t = 0.0;
  int samples = 0;
};

/// Endpoint-marginal comparison between the full model at each N and the
/// N-free reduced model. The scaled rates k' are held fixed across the
/// sweep (raw constants rebuilt as k = k' N^beta) and sample pairs share
/// per-reaction clock streams, coupling the slow-reaction skeletons.
ConvergenceReport run_convergence_study(const ExperimentConfig& cfg,
                                        const std::vector<double>& n_list, int samples, double t,
                                        int species = -1);

std::string convergence_report_json(const ConvergenceReport& report);

struct OracleValidationResult {
  std::string functional;  // compared functional (first channel's species)
  std::vector<double> times;
  std::vector<double> pf_mean, pf_se, exact_mean, z;
  double max_abs_z = 0.0;
  bool pass = false;
  FilterRun pf;
  ExactFilterResult exact;
};

/// Full-kernel particle filter against the exact forward filter on the
/// truncated lattice (requires the config's oracle section).
OracleValidationResult run_oracle_validation(const ExperimentConfig& cfg);

std::string oracle_validation_json(const OracleValidationResult& result);

}  // namespace mssf
