#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace mssf {

/// Identifies one reproducible random stream. (seed, stream) fully
/// determines every draw; distinct stream ids give streams that are
/// independent for all practical purposes. Streams are values, not
/// engines: pass them around freely and construct an Rng where draws
/// are needed.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Sub-stream k within this stream's 256-wide band. Simulators use
  /// sub(j) for reaction j's clock, so callers must allocate stream ids
  /// through make_stream_id (which leaves the low byte free).
  RngStream sub(std::uint64_t k) const { return RngStream{seed, stream * 256 + k}; }
};

/// Stream-id allocation used across the toolkit. The (purpose, step,
/// slot) bands are disjoint by construction: purpose < 2^8, step < 2^20,
/// slot < 2^24, and the low byte is reserved for simulator sub-streams.
enum class StreamPurpose : std::uint64_t {
  GroundTruth = 0,
  ObservationNoise = 1,
  InitialState = 2,
  Resampling = 3,
  FullPropagation = 4,
  ReducedPropagation = 5,
  Convergence = 6,
  Validation = 7,
};

constexpr std::uint64_t make_stream_id(StreamPurpose purpose, std::uint64_t step,
                                       std::uint64_t slot) {
  return (static_cast<std::uint64_t>(purpose) << 44) | (step << 24) | slot;
}

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

/// xoshiro256++ with splitmix64 seeding over (seed, stream). Hand-rolled
/// draw transforms (never std::<random> distributions) so that byte-level
/// reproducibility does not depend on the standard library version.
class Rng {
public:
  explicit Rng(RngStream s) {
    std::uint64_t mix = s.seed;
    (void)detail::splitmix64(mix);
    mix ^= 0x6a09e667f3bcc909ull + s.stream;
    state_[0] = detail::splitmix64(mix);
    state_[1] = detail::splitmix64(mix);
    state_[2] = detail::splitmix64(mix);
    state_[3] = detail::splitmix64(mix);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Exp(1), strictly positive.
  double exponential() {
    double e;
    do {
      e = -std::log1p(-uniform01());
    } while (e <= 0.0);
    return e;
  }

  /// Standard normal via Box-Muller (two uniforms per draw, no caching).
  double normal() {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Poisson by inversion; intended for small means (initial conditions).
  std::uint64_t poisson(double mean) {
    if (mean < 0.0 || !std::isfinite(mean)) throw std::invalid_argument("poisson mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    if (mean > 500.0) throw std::invalid_argument("poisson mean too large for inversion sampler");
    double u = uniform01();
    double p = std::exp(-mean);
    double c = p;
    std::uint64_t k = 0;
    while (u > c && k < 100000) {
      ++k;
      p *= mean / static_cast<double>(k);
      c += p;
    }
    return k;
  }

  bool bernoulli(double p) { return uniform01() < p; }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

}  // namespace mssf
