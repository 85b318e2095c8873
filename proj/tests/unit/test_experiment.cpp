#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mssf/experiment.hpp"
#include "support/builders.hpp"

using namespace mssf;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("mssf_test_" + tag);
  std::filesystem::remove_all(dir);
  return dir;
}

ExperimentConfig smoke_config(int particles) {
  ExperimentConfig cfg = default_gene_expression_config();
  cfg.horizon = 6.0;
  cfg.particles = particles;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("single-particle smoke run emits schema-valid files") {
  auto dir = temp_dir("smoke");
  ExperimentConfig cfg = smoke_config(1);
  ExperimentResult result = run_experiment(cfg, dir.string());
  CHECK(result.obs.size() == 3);

  ObservationSequence obs = parse_observations_csv(read_text_file(dir / "observations.csv"));
  CHECK(obs.size() == 3);
  obs.validate(1);

  std::string filter_text = read_text_file(dir / "filter_reduced.csv");
  std::size_t lines = std::count(filter_text.begin(), filter_text.end(), '\n');
  CHECK(lines == 1 + 3 * 4);  // header + steps x functionals
  CHECK(filter_text.rfind("t,functional,estimate,sd,ess,step_wall_ms", 0) == 0);

  CHECK(std::filesystem::exists(dir / "summary.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("identical config and seed reproduce the result exactly") {
  ExperimentConfig cfg = smoke_config(64);
  ExperimentResult a = run_experiment(cfg, "");
  ExperimentResult b = run_experiment(cfg, "");
  REQUIRE(a.full.steps.size() == b.full.steps.size());
  for (std::size_t i = 0; i < a.full.steps.size(); ++i) {
    CHECK(a.full.steps[i].mean == b.full.steps[i].mean);
    CHECK(a.reduced.steps[i].mean == b.reduced.steps[i].mean);
  }
  CHECK(a.truth.times == b.truth.times);
  CHECK(a.obs.values == b.obs.values);
}

TEST_CASE("plot data columns are ordered and aligned with the observation grid") {
  auto dir = temp_dir("plots");
  ExperimentConfig cfg = smoke_config(64);
  ExperimentResult result = run_experiment(cfg, dir.string());
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);

  for (const auto& species : cfg.network.species()) {
    std::string text = read_text_file(dir / ("plot_" + species.name + ".csv"));
    std::size_t lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == 1 + result.obs.times.size());
  }

  // parse the protein plot and check band ordering plus raw units
  std::string text = read_text_file(dir / "plot_protein.csv");
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,truth,full_mean,full_lo,full_hi,reduced_mean");
  int row = 0;
  while (std::getline(in, line)) {
    double t, truth, mean, lo, hi, red;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &t, &truth, &mean, &lo, &hi,
                        &red) == 6);
    CHECK(lo <= mean);
    CHECK(mean <= hi);
    double scaled = result.truth.state_at(t)[3];
    CHECK(truth == doctest::Approx(scaled * 100.0).epsilon(1e-12));
    ++row;
  }
  CHECK(row == static_cast<int>(result.obs.times.size()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("horizon shorter than the sample period is an error with stage context") {
  ExperimentConfig cfg = smoke_config(8);
  cfg.horizon = 1.0;
  CHECK_THROWS_WITH_AS(run_experiment(cfg, ""), doctest::Contains("sample period"),
                       std::runtime_error);
}

TEST_CASE("coverage accounting matches the emitted estimates") {
  ExperimentConfig cfg = smoke_config(256);
  ExperimentResult r = run_experiment(cfg, "");
  int inside = 0;
  for (std::size_t i = 0; i < r.full.steps.size(); ++i) {
    double sd = std::sqrt(r.full.steps[i].variance_proxy[2]);
    double mean = r.full.steps[i].mean[2];
    double red = r.reduced.steps[i].mean[2];
    if (red >= mean - sd && red <= mean + sd) ++inside;
  }
  CHECK(r.coverage_inside[2] == inside);
  CHECK(r.coverage_total[2] == static_cast<int>(r.full.steps.size()));
  CHECK(r.coverage("mrna") == doctest::Approx(double(inside) / r.full.steps.size()));
}

TEST_CASE("seed batch aggregates coverage across runs") {
  ExperimentConfig cfg = smoke_config(64);
  SeedBatchResult batch = run_seed_batch(cfg, 2, "");
  CHECK(batch.total[2] == 6);  // 2 seeds x 3 assimilation times
  CHECK(batch.inside[2] >= 0);
  CHECK(batch.inside[2] <= 6);
  CHECK(batch.full_median_ms.size() == 2);
}

TEST_CASE("convergence study: singleton N list, ordering guard, sample pairing") {
  ExperimentConfig cfg = default_gene_expression_config();
  ConvergenceReport single = run_convergence_study(cfg, {100.0}, 200, 4.0);
  CHECK(single.ks_distance.size() == 1);
  CHECK_FALSE(single.strictly_decreasing);
  CHECK(single.species == 3);  // defaults to the rescaled species

  CHECK_THROWS_AS(run_convergence_study(cfg, {100.0, 10.0}, 200, 4.0), std::invalid_argument);
  CHECK_THROWS_AS(run_convergence_study(cfg, {}, 200, 4.0), std::invalid_argument);

  std::string json = convergence_report_json(single);
  CHECK(json.find("\"ks_distance\"") != std::string::npos);
}

TEST_CASE("oracle validation requires the oracle config section") {
  ExperimentConfig cfg = default_gene_expression_config();
  CHECK_THROWS_AS(run_oracle_validation(cfg), std::invalid_argument);
}

}  // TEST_SUITE
