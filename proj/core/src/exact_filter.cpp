#include "mssf/exact_filter.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace mssf {

TruncatedStateSpace TruncatedStateSpace::create(std::vector<int> bounds, std::size_t cap) {
  if (bounds.empty()) throw std::invalid_argument("empty truncation bounds");
  TruncatedStateSpace space;
  space.bounds = std::move(bounds);
  space.stride.resize(space.bounds.size());
  std::size_t total = 1;
  for (std::size_t i = 0; i < space.bounds.size(); ++i) {
    if (space.bounds[i] < 0) throw std::invalid_argument("negative truncation bound");
    space.stride[i] = total;
    std::size_t width = static_cast<std::size_t>(space.bounds[i]) + 1;
    if (total > cap / width) {
      throw std::runtime_error("truncated state space exceeds cap of " + std::to_string(cap));
    }
    total *= width;
  }
  space.count = total;
  return space;
}

void TruncatedStateSpace::state(std::size_t ordinal, std::vector<int>& out) const {
  out.resize(bounds.size());
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    std::size_t width = static_cast<std::size_t>(bounds[i]) + 1;
    out[i] = static_cast<int>((ordinal / stride[i]) % width);
  }
}

std::size_t TruncatedStateSpace::index(std::span<const int> counts) const {
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    ordinal += static_cast<std::size_t>(counts[i]) * stride[i];
  }
  return ordinal;
}

bool TruncatedStateSpace::in_bounds(std::span<const int> counts) const {
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (counts[i] < 0 || counts[i] > bounds[i]) return false;
  }
  return true;
}

GeneratorMatrix build_generator(const ReactionNetwork& net, const ScalingSpec& spec,
                                const TruncatedStateSpace& space) {
  if (static_cast<int>(space.bounds.size()) != net.species_count()) {
    throw std::invalid_argument("truncation bounds do not match species count");
  }
  TimescaleReport report = analyze_timescales(net, spec);
  std::vector<double> rate_factor(net.reaction_count());
  for (int j = 0; j < net.reaction_count(); ++j) {
    rate_factor[j] = std::pow(spec.N, (spec.gamma + report.rho_tilde[j]).to_double());
  }

  GeneratorMatrix Q;
  Q.n = space.size();
  Q.row_ptr.assign(Q.n + 1, 0);
  Q.diag.assign(Q.n, 0.0);
  Q.leak.assign(Q.n, 0.0);

  std::vector<int> counts, target;
  State x(net.species_count());
  for (std::size_t s = 0; s < Q.n; ++s) {
    space.state(s, counts);
    for (int i = 0; i < net.species_count(); ++i) {
      x[i] = spec.scale_factor(i) * static_cast<double>(counts[i]);
    }
    double outflow = 0.0;
    double leak = 0.0;
    for (int j = 0; j < net.reaction_count(); ++j) {
      double rate = rate_factor[j] * scaled_propensity(net, spec, j, x);
      if (rate <= 0.0) continue;
      target = counts;
      for (const auto& term : net.reactions()[j].change_terms) target[term.species] += term.count;
      if (space.in_bounds(target)) {
        Q.col.push_back(space.index(target));
        Q.val.push_back(rate);
        outflow += rate;
      } else {
        leak += rate;
      }
    }
    Q.row_ptr[s + 1] = Q.col.size();
    Q.leak[s] = leak;
    Q.diag[s] = -(outflow + leak);
  }
  return Q;
}

namespace {

/// One uniformization pass with Lambda * dt small enough that the
/// Poisson weights stay representable.
std::vector<double> uniformization_chunk(const GeneratorMatrix& Q, std::vector<double> p,
                                         double lambda, double dt) {
  const double a = lambda * dt;
  const double inv_lambda = 1.0 / lambda;
  std::vector<double> out(Q.n, 0.0), v = std::move(p), next(Q.n, 0.0);

  double w = std::exp(-a);
  double cumulative = w;
  for (std::size_t s = 0; s < Q.n; ++s) out[s] += w * v[s];

  const std::size_t k_max =
      static_cast<std::size_t>(a + 12.0 * std::sqrt(a + 1.0) + 60.0);
  for (std::size_t k = 1; k <= k_max; ++k) {
    // next = P^T v with P = I + Q / Lambda
    for (std::size_t s = 0; s < Q.n; ++s) next[s] = v[s] * (1.0 + Q.diag[s] * inv_lambda);
    for (std::size_t s = 0; s < Q.n; ++s) {
      double vs = v[s];
      if (vs == 0.0) continue;
      for (std::size_t e = Q.row_ptr[s]; e < Q.row_ptr[s + 1]; ++e) {
        next[Q.col[e]] += vs * Q.val[e] * inv_lambda;
      }
    }
    std::swap(v, next);
    w *= a / static_cast<double>(k);
    cumulative += w;
    for (std::size_t s = 0; s < Q.n; ++s) out[s] += w * v[s];
    if (1.0 - cumulative < 1e-12 && static_cast<double>(k) > a) break;
  }
  return out;
}

}  // namespace

std::vector<double> propagate(const GeneratorMatrix& Q, const std::vector<double>& p, double dt) {
  if (p.size() != Q.n) throw std::invalid_argument("distribution size mismatch");
  if (dt < 0.0) throw std::invalid_argument("dt must be >= 0");
  if (dt == 0.0) return p;
  double lambda = 0.0;
  for (double d : Q.diag) lambda = std::max(lambda, -d);
  if (lambda == 0.0) return p;

  int chunks = static_cast<int>(std::ceil(lambda * dt / 200.0));
  if (chunks < 1) chunks = 1;
  double h = dt / static_cast<double>(chunks);
  std::vector<double> out = p;
  for (int c = 0; c < chunks; ++c) out = uniformization_chunk(Q, std::move(out), lambda, h);
  return out;
}

std::vector<double> bayes_update(const std::vector<double>& p,
                                 const std::vector<std::vector<double>>& h_values,
                                 std::span<const double> y, double noise_sd) {
  if (y.size() != h_values.size()) throw std::invalid_argument("observation dimension mismatch");
  if (!(noise_sd > 0.0)) throw std::invalid_argument("noise_sd must be positive");
  double mass = 0.0;
  for (double v : p) mass += v;
  if (!(mass > 0.0)) throw std::runtime_error("bayes_update: prior has no mass");

  const double inv_var = 1.0 / (noise_sd * noise_sd);
  std::vector<double> log_post(p.size(), -std::numeric_limits<double>::infinity());
  double max_lp = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s] <= 0.0) continue;
    double lg = 0.0;
    for (std::size_t l = 0; l < h_values.size(); ++l) {
      double h = h_values[l][s];
      lg += (h * y[l] - 0.5 * h * h) * inv_var;
    }
    log_post[s] = std::log(p[s]) + lg;
    max_lp = std::max(max_lp, log_post[s]);
  }
  if (!std::isfinite(max_lp)) throw std::runtime_error("bayes_update: zero total mass after update");

  std::vector<double> post(p.size(), 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s] <= 0.0) continue;
    post[s] = std::exp(log_post[s] - max_lp);
    total += post[s];
  }
  for (double& v : post) v /= total;
  return post;
}

std::vector<std::vector<double>> channel_values(const ReactionNetwork& net,
                                                const ScalingSpec& spec,
                                                const TruncatedStateSpace& space,
                                                const ObservationModel& model) {
  std::vector<std::vector<double>> values(model.channels.size(),
                                          std::vector<double>(space.size()));
  std::vector<int> counts;
  State x(net.species_count());
  for (std::size_t s = 0; s < space.size(); ++s) {
    space.state(s, counts);
    for (int i = 0; i < net.species_count(); ++i) {
      x[i] = spec.scale_factor(i) * static_cast<double>(counts[i]);
    }
    for (std::size_t l = 0; l < model.channels.size(); ++l) {
      values[l][s] = model.channels[l].h(x);
    }
  }
  return values;
}

std::vector<double> lattice_prior(const ReactionNetwork& net, const TruncatedStateSpace& space) {
  if (static_cast<int>(space.bounds.size()) != net.species_count()) {
    throw std::invalid_argument("truncation bounds do not match species count");
  }
  for (const auto& s : net.species()) {
    if (!s.alpha.zero()) {
      throw std::invalid_argument("lattice prior requires every species at alpha = 0");
    }
  }
  std::vector<double> p(space.size(), 0.0);
  std::vector<int> counts;
  for (std::size_t s = 0; s < space.size(); ++s) {
    space.state(s, counts);
    double mass = 1.0;
    for (int i = 0; i < net.species_count() && mass > 0.0; ++i) {
      const InitialLaw& law = net.species()[i].initial;
      int c = counts[i];
      switch (law.kind) {
        case InitialLaw::Kind::Point:
          mass *= (static_cast<double>(c) == law.value) ? 1.0 : 0.0;
          break;
        case InitialLaw::Kind::Bernoulli:
          mass *= (c == 1) ? law.value : (c == 0 ? 1.0 - law.value : 0.0);
          break;
        case InitialLaw::Kind::Poisson: {
          double logp = -law.value + c * std::log(law.value > 0.0 ? law.value : 1.0) -
                        std::lgamma(static_cast<double>(c) + 1.0);
          mass *= (law.value == 0.0) ? (c == 0 ? 1.0 : 0.0) : std::exp(logp);
          break;
        }
        case InitialLaw::Kind::ComplementOf:
          mass *= (c == 1 - counts[law.reference]) ? 1.0 : 0.0;
          break;
      }
    }
    p[s] = mass;
  }
  return p;
}

ExactFilterResult exact_filter(const ReactionNetwork& net, const ScalingSpec& spec,
                               const TruncatedStateSpace& space, const ObservationModel& model,
                               const ObservationSequence& obs, const std::vector<double>& p0,
                               const std::vector<Functional>& functionals) {
  obs.validate(model.size());
  if (p0.size() != space.size()) throw std::invalid_argument("prior size mismatch");

  GeneratorMatrix Q = build_generator(net, spec, space);
  auto h_values = channel_values(net, spec, space, model);

  std::vector<std::vector<double>> phi_values(functionals.size(),
                                              std::vector<double>(space.size()));
  {
    std::vector<int> counts;
    State x(net.species_count());
    for (std::size_t s = 0; s < space.size(); ++s) {
      space.state(s, counts);
      for (int i = 0; i < net.species_count(); ++i) {
        x[i] = spec.scale_factor(i) * static_cast<double>(counts[i]);
      }
      for (std::size_t f = 0; f < functionals.size(); ++f) {
        phi_values[f][s] = functionals[f].phi(x);
      }
    }
  }

  ExactFilterResult result;
  for (const auto& fn : functionals) result.functional_names.push_back(fn.name);

  std::vector<double> p = p0;
  double prev_t = 0.0;
  for (int i = 0; i < obs.size(); ++i) {
    auto started = std::chrono::steady_clock::now();
    p = propagate(Q, p, obs.times[i] - prev_t);
    double mass = 0.0;
    for (double v : p) mass += v;
    ExactFilterStep step;
    step.time = obs.times[i];
    step.leak = 1.0 - mass;
    p = bayes_update(p, h_values, obs.values[i], model.noise_sd);
    for (std::size_t f = 0; f < functionals.size(); ++f) {
      double mean = 0.0;
      for (std::size_t s = 0; s < p.size(); ++s) mean += p[s] * phi_values[f][s];
      double var = 0.0;
      for (std::size_t s = 0; s < p.size(); ++s) {
        double d = phi_values[f][s] - mean;
        var += p[s] * d * d;
      }
      step.mean.push_back(mean);
      step.variance.push_back(var);
    }
    auto finished = std::chrono::steady_clock::now();
    step.step_wall_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(finished - started)
            .count();
    result.steps.push_back(std::move(step));
    prev_t = obs.times[i];
  }
  return result;
}

}  // namespace mssf
