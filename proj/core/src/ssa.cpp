#include "mssf/ssa.hpp"

#include <cmath>
#include <limits>

namespace mssf {

namespace {

void record_point(Trajectory& out, double t, const State& x) {
  if (!out.times.empty() && out.times.back() == t) {
    out.states.back() = x;  // merge simultaneous events, keep times strictly increasing
    return;
  }
  out.times.push_back(t);
  out.states.push_back(x);
}

}  // namespace

FullSimulator::FullSimulator(const ReactionNetwork& net, const ScalingSpec& spec) {
  TimescaleReport report = analyze_timescales(net, spec);
  for (int i = 0; i < net.species_count(); ++i) step_.push_back(spec.scale_factor(i));
  for (int j = 0; j < net.reaction_count(); ++j) {
    CompiledReaction cr;
    Rational exponent = spec.gamma + report.rho_tilde[j];
    cr.rate = spec.scaled_rate(net, j) * std::pow(spec.N, exponent.to_double());
    for (const auto& term : net.reactions()[j].substrate_terms) {
      double step = step_[term.species];
      cr.terms.push_back({term.species, term.count, step, step * static_cast<double>(term.count)});
    }
    cr.change = net.reactions()[j].change_terms;
    reactions_.push_back(std::move(cr));
  }
}

double FullSimulator::effective_rate(int j, const State& x) const {
  const CompiledReaction& cr = reactions_[j];
  double value = cr.rate;
  for (const auto& term : cr.terms) {
    double xi = x[term.species];
    if (xi < term.threshold) return 0.0;
    for (int l = 0; l < term.count; ++l) value *= (xi - static_cast<double>(l) * term.step);
  }
  return value;
}

void FullSimulator::run(State& x, double t_end, RngStream rng, const SsaOptions& opts,
                        Trajectory* out) const {
  const int n = species_count();
  const int r = static_cast<int>(reactions_.size());
  if (static_cast<int>(x.size()) != n) throw std::invalid_argument("state dimension mismatch");
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");

  // Scaled value of species i is base_i + counts_i * step_i: recomputing
  // from the integer net jump count avoids float drift across many events.
  State base = x;
  std::vector<std::int64_t> counts(n, 0);

  std::vector<Rng> clocks;
  clocks.reserve(r);
  std::vector<double> next_internal(r), internal(r, 0.0), rate(r);
  for (int j = 0; j < r; ++j) {
    clocks.emplace_back(rng.sub(static_cast<std::uint64_t>(j)));
    next_internal[j] = clocks[j].exponential();
  }

  double t = 0.0;
  std::uint64_t events = 0;
  if (out) record_point(*out, 0.0, x);

  for (;;) {
    int best = -1;
    double best_dt = std::numeric_limits<double>::infinity();
    for (int j = 0; j < r; ++j) {
      rate[j] = effective_rate(j, x);
      if (rate[j] > 0.0) {
        double dt = (next_internal[j] - internal[j]) / rate[j];
        if (dt < 0.0) dt = 0.0;  // clock already exhausted to rounding
        if (dt < best_dt) {
          best_dt = dt;
          best = j;
        }
      }
    }
    if (best < 0) break;                 // absorbing state
    if (t + best_dt >= t_end) break;     // next event falls past the horizon

    t += best_dt;
    for (int j = 0; j < r; ++j) internal[j] += rate[j] * best_dt;
    for (const auto& term : reactions_[best].change) {
      counts[term.species] += term.count;
      x[term.species] =
          base[term.species] + static_cast<double>(counts[term.species]) * step_[term.species];
    }
    next_internal[best] += clocks[best].exponential();
    ++events;
    if (out) {
      record_point(*out, t, x);
      out->jump_count = events;
    }
    if (events >= opts.max_events) {
      Trajectory partial;
      if (out) partial = *out;
      throw CapExceededError("event cap exceeded at t=" + std::to_string(t) +
                                 " (possible explosion)",
                             std::move(partial));
    }
  }

  if (out) {
    record_point(*out, t_end, x);
    out->jump_count = events;
  }
}

Trajectory FullSimulator::simulate(const State& x0, double t_end, RngStream rng,
                                   const SsaOptions& opts) const {
  Trajectory out;
  out.kind = Trajectory::Kind::PureJump;
  State x = x0;
  if (opts.record) {
    run(x, t_end, rng, opts, &out);
  } else {
    run(x, t_end, rng, opts, nullptr);
    record_point(out, 0.0, x0);
    record_point(out, t_end, x);
  }
  return out;
}

void FullSimulator::sample(State& x, double dt, RngStream rng) const {
  SsaOptions opts;
  opts.record = false;
  run(x, dt, rng, opts, nullptr);
}

Trajectory simulate_full(const ReactionNetwork& net, const ScalingSpec& spec, const State& x0,
                         double t_end, RngStream rng, const SsaOptions& opts) {
  return FullSimulator(net, spec).simulate(x0, t_end, rng, opts);
}

State sample_kernel(const ReactionNetwork& net, const ScalingSpec& spec, const State& x,
                    double dt, RngStream rng) {
  State out = x;
  FullSimulator(net, spec).sample(out, dt, rng);
  return out;
}

}  // namespace mssf
