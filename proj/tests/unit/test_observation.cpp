#include <doctest.h>

#include <cmath>

#include "mssf/observation.hpp"
#include "support/builders.hpp"

using namespace mssf;

namespace {

ObservationModel scalar_model(std::function<double(const State&)> h, double bound) {
  ObservationModel model;
  model.channels.push_back({"h", bound, std::move(h)});
  return model;
}

}  // namespace

TEST_SUITE("observation") {

TEST_CASE("zero-noise mode reproduces h(x) exactly") {
  const auto& cfg = test_builders::gene_config();
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  ObservationModel model = make_observation_model(cfg, spec);
  model.noise_sd = 0.0;
  Rng noise(RngStream{1, make_stream_id(StreamPurpose::ObservationNoise, 0, 0)});
  State x{0.0, 1.0, 3.0, 0.2};  // protein raw count 20
  auto y = observe(model, x, noise);
  REQUIRE(y.size() == 1);
  CHECK(y[0] == 200.0);
}

TEST_CASE("fluorescence channel clamps at the measurement range") {
  const auto& cfg = test_builders::gene_config();
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  ObservationModel model = make_observation_model(cfg, spec);
  const auto& h = model.channels[0].h;
  CHECK(h(State{0, 1, 3, 1.5}) == 1000.0);  // raw 150 -> 1500, clamped
  CHECK(h(State{0, 1, 3, 0.2}) == 200.0);   // raw 20
  CHECK(model.channels[0].bound == 1000.0);
}

TEST_CASE("weight special values") {
  ObservationModel zero = scalar_model([](const State&) { return 0.0; }, 0.0);
  std::vector<double> y{1.7};
  CHECK(weight(zero, State{0.0}, y) == 1.0);

  ObservationModel two = scalar_model([](const State&) { return 2.0; }, 2.0);
  std::vector<double> y2{2.0};
  CHECK(weight(two, State{0.0}, y2) == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
  std::vector<double> y0{0.0};
  CHECK(weight(two, State{0.0}, y0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("g equals the Gaussian likelihood ratio on random pairs") {
  Rng rng(RngStream{9, make_stream_id(StreamPurpose::Validation, 0, 1)});
  auto normal_pdf = [](double v) {
    return std::exp(-0.5 * v * v) / std::sqrt(2.0 * 3.14159265358979323846);
  };
  for (int trial = 0; trial < 1000; ++trial) {
    double hv = -15.0 + 30.0 * rng.uniform01();
    double y = -15.0 + 30.0 * rng.uniform01();
    ObservationModel model = scalar_model([hv](const State&) { return hv; }, 15.0);
    std::vector<double> yv{y};
    double g = weight(model, State{0.0}, yv);
    double ratio = normal_pdf(y - hv) / normal_pdf(y);
    CHECK(std::abs(g - ratio) <= 1e-12 * std::abs(ratio));
  }
}

TEST_CASE("log weight respects the clamp-bound envelope") {
  const auto& cfg = test_builders::gene_config();
  ScalingSpec spec = make_scaling_spec(cfg.network, cfg.N);
  ObservationModel model = make_observation_model(cfg, spec);
  Rng rng(RngStream{9, make_stream_id(StreamPurpose::Validation, 0, 2)});
  for (int trial = 0; trial < 200; ++trial) {
    State x{0.0, 1.0, 2.0, 5.0 * rng.uniform01()};
    std::vector<double> y{2000.0 * rng.uniform01() - 500.0};
    double bound = model.channels[0].bound;
    double envelope = bound * std::abs(y[0]) + 0.5 * bound * bound;
    CHECK(std::abs(log_weight(model, x, y)) <= envelope);
  }
}

TEST_CASE("weight overflows to an error, log_weight stays finite") {
  ObservationModel model = scalar_model([](const State&) { return 1000.0; }, 1000.0);
  std::vector<double> y{1000.0};
  CHECK_THROWS_AS(weight(model, State{0.0}, y), std::overflow_error);
  CHECK(log_weight(model, State{0.0}, y) == doctest::Approx(500000.0));
}

TEST_CASE("dimension and noise guards") {
  ObservationModel model = scalar_model([](const State&) { return 1.0; }, 1.0);
  std::vector<double> y2{1.0, 2.0};
  CHECK_THROWS_AS(log_weight(model, State{0.0}, y2), std::invalid_argument);
  model.noise_sd = 0.0;
  std::vector<double> y1{1.0};
  CHECK_THROWS_AS(log_weight(model, State{0.0}, y1), std::invalid_argument);
}

TEST_CASE("observation sequence validation") {
  ObservationSequence obs;
  obs.times = {2.0, 4.0};
  obs.values = {{1.0}, {2.0}};
  CHECK_NOTHROW(obs.validate(1));
  obs.times = {2.0, 2.0};
  CHECK_THROWS_AS(obs.validate(1), std::invalid_argument);
  obs.times = {2.0, 4.0};
  obs.values = {{1.0}, {2.0, 3.0}};
  CHECK_THROWS_AS(obs.validate(1), std::invalid_argument);
}

}  // TEST_SUITE
