#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mssf/experiment.hpp"

namespace {

using namespace mssf;

int default_threads() {
  if (const char* env = std::getenv("MSSF_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> particles;
  std::string out_dir;
  int threads = default_threads();
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file (JSON); defaults to the built-in gene-expression study");
  cmd->add_option("--seed", args.seed, "base RNG seed");
  cmd->add_option("--particles", args.particles, "particle count M");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--threads", args.threads, "worker threads (env MSSF_THREADS sets the default)");
}

ExperimentConfig load(const CommonArgs& args) {
  ExperimentConfig cfg = args.config_path.empty()
                             ? default_gene_expression_config()
                             : load_config(read_text_file(args.config_path));
  if (args.seed) cfg.seed = *args.seed;
  if (args.particles) cfg.particles = *args.particles;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  cfg.threads = args.threads;
  return cfg;
}

std::string require_out(const ExperimentConfig& cfg) {
  if (cfg.out_dir.empty()) {
    throw std::runtime_error("an output directory is required (--out or experiment.output)");
  }
  return cfg.out_dir;
}

int cmd_analyze(const CommonArgs& args) {
  ExperimentConfig cfg = load(args);
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  TimescaleReport report = analyze_timescales(cfg.network, spec);
  ReducedModel reduced = reduce(cfg.network, spec);
  std::cout << timescale_report_text(cfg.network, spec, report, reduced);
  if (!cfg.out_dir.empty()) {
    std::filesystem::path dir(cfg.out_dir);
    write_text_file(dir / "analysis.txt",
                    timescale_report_text(cfg.network, spec, report, reduced));
    write_text_file(dir / "analysis.json",
                    timescale_report_json(cfg.network, spec, report, reduced));
    std::cout << "wrote " << (dir / "analysis.json").string() << "\n";
  }
  return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& model_kind, double t_end) {
  ExperimentConfig cfg = load(args);
  std::string out = require_out(cfg);
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  InitialSampler sampler = make_initial_sampler(cfg.network);
  State x0 = sampler(RngStream{cfg.seed, make_stream_id(StreamPurpose::GroundTruth, 0, 0)});
  RngStream sim_stream{cfg.seed, make_stream_id(StreamPurpose::GroundTruth, 0, 1)};

  Trajectory traj;
  if (model_kind == "full") {
    traj = simulate_full(cfg.network, spec, x0, t_end, sim_stream, cfg.ssa);
  } else {
    ReducedModel reduced = reduce(cfg.network, spec);
    traj = simulate_reduced(cfg.network, reduced, x0, t_end, sim_stream, cfg.hybrid);
  }
  std::filesystem::path path = std::filesystem::path(out) / ("trajectory_" + model_kind + ".csv");
  write_text_file(path, trajectory_csv(cfg.network, traj));
  std::cout << "model=" << model_kind << " t_end=" << t_end << " jumps=" << traj.jump_count
            << "\nwrote " << path.string() << "\n";
  return 0;
}

int cmd_filter(const CommonArgs& args, const std::string& kernel_kind,
               const std::string& obs_path) {
  ExperimentConfig cfg = load(args);
  std::string out = require_out(cfg);
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  ObservationModel model = make_observation_model(cfg, spec);
  InitialSampler sampler = make_initial_sampler(cfg.network);
  std::vector<Functional> fns = species_raw_mean_functionals(cfg.network, spec);
  ObservationSequence obs = parse_observations_csv(read_text_file(obs_path));
  obs.validate(model.size());

  FilterOptions opts;
  opts.threads = cfg.threads;

  FilterRun run;
  if (kernel_kind == "full") {
    auto sim = std::make_shared<FullSimulator>(cfg.network, spec);
    run = run_filter([sim](State& x, double dt, RngStream s) { sim->sample(x, dt, s); }, model,
                     sampler, obs, cfg.particles, cfg.seed, StreamPurpose::FullPropagation, fns,
                     opts);
  } else {
    ReducedModel reduced = reduce(cfg.network, spec);
    auto sim = std::make_shared<HybridSimulator>(cfg.network, reduced);
    HybridStepConfig hybrid_cfg = cfg.hybrid;
    run = run_filter(
        [sim, hybrid_cfg](State& x, double dt, RngStream s) { sim->sample(x, dt, s, hybrid_cfg); },
        model, sampler, obs, cfg.particles, cfg.seed, StreamPurpose::ReducedPropagation, fns,
        opts);
  }
  std::filesystem::path path = std::filesystem::path(out) / ("filter_" + kernel_kind + ".csv");
  write_text_file(path, filter_csv(run));
  std::cout << "kernel=" << kernel_kind << " particles=" << cfg.particles
            << " steps=" << run.steps.size() << "\nwrote " << path.string() << "\n";
  return 0;
}

int cmd_experiment(const CommonArgs& args, int seed_count_flag) {
  ExperimentConfig cfg = load(args);
  std::string out = require_out(cfg);
  int seed_count = seed_count_flag > 0 ? seed_count_flag : cfg.seed_count;
  if (seed_count == 1) {
    ExperimentResult result = run_experiment(cfg, out);
    std::cout << "experiment done: " << result.obs.size() << " assimilation steps\n"
              << "full median step ms: " << result.full_median_ms
              << ", reduced median step ms: " << result.reduced_median_ms
              << ", speedup (median): " << result.speedup_median << "\n"
              << "bundle in " << out << "\n";
  } else {
    SeedBatchResult batch = run_seed_batch(cfg, seed_count, out);
    std::cout << "experiment batch done: " << seed_count << " seeds\n";
    for (std::size_t f = 0; f < batch.functional_names.size(); ++f) {
      std::cout << "coverage " << batch.functional_names[f] << ": " << batch.inside[f] << "/"
                << batch.total[f] << "\n";
    }
    std::cout << "bundle in " << out << "\n";
  }
  return 0;
}

int cmd_convergence(const CommonArgs& args, std::vector<double> n_list, int samples, double t) {
  ExperimentConfig cfg = load(args);
  if (n_list.empty()) n_list = {10.0, 100.0, 1000.0};
  ConvergenceReport report = run_convergence_study(cfg, n_list, samples, t);
  std::string json = convergence_report_json(report);
  std::cout << json;
  if (!cfg.out_dir.empty()) {
    write_text_file(std::filesystem::path(cfg.out_dir) / "convergence.json", json);
  }
  return 0;
}

int cmd_oracle_validate(const CommonArgs& args) {
  ExperimentConfig cfg = load(args);
  OracleValidationResult result = run_oracle_validation(cfg);
  std::cout << (result.pass ? "PASS" : "FAIL") << " max |z| = " << result.max_abs_z << " over "
            << result.times.size() << " steps\n";
  if (!cfg.out_dir.empty()) {
    std::filesystem::path dir(cfg.out_dir);
    write_text_file(dir / "oracle_pf.csv", filter_csv(result.pf));
    write_text_file(dir / "oracle_exact.csv", exact_filter_csv(result.exact));
    write_text_file(dir / "oracle_validation.json", oracle_validation_json(result));
    std::cout << "wrote " << (dir / "oracle_validation.json").string() << "\n";
  }
  return result.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mssf: simulation and state estimation for multiscale stochastic reaction networks"};
  app.require_subcommand(1);

  CommonArgs args;

  auto* analyze = app.add_subcommand("analyze", "timescale analysis and model reduction report");
  add_common(analyze, args);

  auto* simulate = app.add_subcommand("simulate", "simulate one trajectory (full or reduced model)");
  std::string sim_model = "full";
  double t_end = 50.0;
  simulate->add_option("--model", sim_model, "full | reduced")
      ->check(CLI::IsMember({"full", "reduced"}));
  simulate->add_option("--t-end", t_end, "simulation horizon (minutes)");
  add_common(simulate, args);

  auto* filter = app.add_subcommand("filter", "run a particle filter on recorded observations");
  std::string kernel_kind = "full";
  std::string obs_path;
  filter->add_option("--kernel", kernel_kind, "full | reduced")
      ->check(CLI::IsMember({"full", "reduced"}));
  filter->add_option("--obs", obs_path, "observation CSV (t,y1,...,ym)")->required();
  add_common(filter, args);

  auto* experiment = app.add_subcommand(
      "experiment", "ground truth + observations + both filters, with timing summary");
  int seed_count = 0;
  experiment->add_option("--seed-count", seed_count, "run a batch of consecutive seeds");
  add_common(experiment, args);

  auto* convergence =
      app.add_subcommand("convergence", "full-vs-reduced endpoint KS distances across N");
  std::vector<double> n_list;
  int samples = 1000;
  double conv_t = 10.0;
  convergence->add_option("--N", n_list, "scaling factors (default 10 100 1000)");
  convergence->add_option("--samples", samples, "endpoint samples per N");
  convergence->add_option("--t", conv_t, "comparison time (minutes)");
  add_common(convergence, args);

  auto* oracle = app.add_subcommand(
      "oracle-validate", "particle filter vs exact forward filter on the truncated lattice");
  add_common(oracle, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return cmd_analyze(args);
    if (simulate->parsed()) return cmd_simulate(args, sim_model, t_end);
    if (filter->parsed()) return cmd_filter(args, kernel_kind, obs_path);
    if (experiment->parsed()) return cmd_experiment(args, seed_count);
    if (convergence->parsed()) return cmd_convergence(args, n_list, samples, conv_t);
    if (oracle->parsed()) return cmd_oracle_validate(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
