#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mssf/network.hpp"
#include "mssf/rng.hpp"
#include "mssf/scaling.hpp"

namespace mssf {

/// One readout channel: a bounded function of the (scaled) state plus
/// the stated bound used for weight sanity checks.
struct Channel {
  std::string name;
  double bound = 0.0;  // sup |h| over the state domain
  std::function<double(const State&)> h;
};

/// Fluorescence channel h(x) = min(gain * raw_count, clamp) where
/// raw_count = N^{alpha} * x_species.
Channel make_linear_channel(const ReactionNetwork& net, const ScalingSpec& spec,
                            int species, double gain, double clamp);

struct ObservationModel {
  std::vector<Channel> channels;
  double sample_period = 2.0;  // minutes between readouts
  double noise_sd = 1.0;       // unit variance in the verified setting

  int size() const { return static_cast<int>(channels.size()); }
};

struct ObservationSequence {
  std::vector<double> times;                 // strictly increasing
  std::vector<std::vector<double>> values;   // one m-vector per time

  int size() const { return static_cast<int>(times.size()); }
  void validate(int channel_count) const;
};

/// y_l = h_l(x) + noise_sd * N(0,1), independent across channels; the
/// noise engine is the caller's dedicated observation stream.
std::vector<double> observe(const ObservationModel& model, const State& x, Rng& noise);

/// log g(x, y) = sum_l (h_l(x) y_l - h_l(x)^2 / 2) / noise_sd^2. All
/// weight arithmetic stays in log space: with readouts up to 1e3 the raw
/// exponential overflows.
double log_weight(const ObservationModel& model, const State& x, std::span<const double> y);

/// g(x, y) itself; throws on overflow to non-finite.
double weight(const ObservationModel& model, const State& x, std::span<const double> y);

}  // namespace mssf
