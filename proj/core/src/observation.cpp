#include "mssf/observation.hpp"

#include <cmath>
#include <stdexcept>

namespace mssf {

Channel make_linear_channel(const ReactionNetwork& net, const ScalingSpec& spec,
                            int species, double gain, double clamp) {
  if (species < 0 || species >= net.species_count()) {
    throw std::out_of_range("channel species index out of range");
  }
  if (!(clamp > 0.0) || !std::isfinite(clamp)) {
    throw std::invalid_argument("channel clamp must be positive and finite");
  }
  double raw_scale = std::pow(spec.N, spec.alpha[species].to_double());
  Channel ch;
  ch.name = net.species()[species].name;
  ch.bound = clamp;
  ch.h = [species, gain, raw_scale, clamp](const State& x) {
    return std::min(gain * raw_scale * x[species], clamp);
  };
  return ch;
}

void ObservationSequence::validate(int channel_count) const {
  if (times.size() != values.size()) {
    throw std::invalid_argument("observation times/values length mismatch");
  }
  double prev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i == 0 ? !(times[i] > 0.0) : !(times[i] > prev)) {
      throw std::invalid_argument("observation times must be strictly increasing and positive");
    }
    prev = times[i];
    if (static_cast<int>(values[i].size()) != channel_count) {
      throw std::invalid_argument("observation value dimension mismatch");
    }
  }
}

std::vector<double> observe(const ObservationModel& model, const State& x, Rng& noise) {
  std::vector<double> y(model.channels.size());
  for (std::size_t l = 0; l < model.channels.size(); ++l) {
    y[l] = model.channels[l].h(x) + model.noise_sd * noise.normal();
  }
  return y;
}

double log_weight(const ObservationModel& model, const State& x, std::span<const double> y) {
  if (y.size() != model.channels.size()) {
    throw std::invalid_argument("observation dimension mismatch");
  }
  if (!(model.noise_sd > 0.0)) {
    throw std::invalid_argument("weight undefined for zero noise variance");
  }
  double inv_var = 1.0 / (model.noise_sd * model.noise_sd);
  double lg = 0.0;
  for (std::size_t l = 0; l < model.channels.size(); ++l) {
    double h = model.channels[l].h(x);
    lg += (h * y[l] - 0.5 * h * h) * inv_var;
  }
  return lg;
}

double weight(const ObservationModel& model, const State& x, std::span<const double> y) {
  double g = std::exp(log_weight(model, x, y));
  if (!std::isfinite(g)) {
    throw std::overflow_error("weight overflow: use log_weight");
  }
  return g;
}

}  // namespace mssf
