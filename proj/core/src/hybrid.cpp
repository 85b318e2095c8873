#include "mssf/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mssf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void record_point(Trajectory& out, double t, const State& x) {
  if (!out.times.empty() && out.times.back() == t) {
    out.states.back() = x;
    return;
  }
  out.times.push_back(t);
  out.states.push_back(x);
}

}  // namespace

void HybridStepConfig::validate() const {
  if (!(ode_step > 0.0)) throw std::invalid_argument("ode_step must be positive");
  if (!(hazard_tol > 0.0) || hazard_tol > 1e-2) {
    throw std::invalid_argument("hazard_tol must lie in (0, 1e-2]");
  }
}

struct HybridSimulator::Workspace {
  std::vector<double> k1, k2, k3, k4;
  State stage;
  State end;
  std::vector<double> haz_start, haz_mid, haz_end;
  std::vector<double> hazard;
  State probe_state;

  // segment-local drift in active coordinates
  std::vector<double> seg_coeff;           // per drift reaction: k' x (frozen factors)
  std::vector<double> A, b;                // affine form dz = A z + b
  std::vector<double> step_map, step_off;  // cached RK4 map for one step size
  std::vector<double> mat_hA, mat_t1, mat_t2;
  double cached_h = -1.0;
  std::vector<double> z, zk1, zk2, zk3, zk4, zstage, ztmp;

  Workspace(int n, std::size_t jumps, int na, std::size_t drifts)
      : k1(n), k2(n), k3(n), k4(n), stage(n, 0.0), end(n, 0.0), haz_start(jumps),
        haz_mid(jumps), haz_end(jumps), hazard(jumps), probe_state(n, 0.0),
        seg_coeff(drifts), A(na * na), b(na), step_map(na * na), step_off(na),
        mat_hA(na * na), mat_t1(na * na), mat_t2(na * na), z(na), zk1(na), zk2(na), zk3(na),
        zk4(na), zstage(na), ztmp(na) {}
};

HybridSimulator::HybridSimulator(const ReactionNetwork& net, const ReducedModel& reduced) {
  species_count_ = net.species_count();
  if (static_cast<int>(reduced.alpha.size()) != species_count_) {
    throw std::invalid_argument("reduced model does not match network");
  }
  is_active_.assign(species_count_, 0);

  auto make_terms = [&](int j) {
    std::vector<Term> terms;
    for (const auto& t : net.reactions()[j].substrate_terms) {
      terms.push_back({t.species, t.count, reduced.alpha[t.species].zero()});
    }
    return terms;
  };

  for (int j : reduced.drift_reactions) {
    DriftReaction dr;
    dr.rate = reduced.scaled_rates[j];
    dr.terms = make_terms(j);
    const Reaction& r = net.reactions()[j];
    for (int i = 0; i < species_count_; ++i) {
      int delta = r.product[i] - r.substrate[i];
      if (delta != 0 && reduced.mask[j][i]) {
        dr.change.emplace_back(i, static_cast<double>(delta));
        is_active_[i] = 1;
      }
    }
    drift_.push_back(std::move(dr));
  }
  active_index_.assign(species_count_, -1);
  for (int i = 0; i < species_count_; ++i) {
    if (is_active_[i]) {
      active_index_[i] = static_cast<int>(active_.size());
      active_.push_back(i);
    }
  }

  // Split each drift propensity into the factor that is constant between
  // jumps (discrete and frozen species) and the monomial in drifting
  // coordinates; the drift is affine when every monomial has degree <= 1.
  for (auto& dr : drift_) {
    int degree = 0;
    for (const auto& term : dr.terms) {
      if (is_active_[term.species]) {
        dr.active_terms.emplace_back(active_index_[term.species], term.count);
        degree += term.count;
      } else {
        dr.frozen_terms.push_back(term);
      }
    }
    for (const auto& [species, delta] : dr.change) {
      dr.active_change.emplace_back(active_index_[species], delta);
    }
    if (degree > 1) affine_ = false;
  }

  for (int j : reduced.jump_reactions) {
    JumpReaction jr;
    jr.index = j;
    jr.rate = reduced.scaled_rates[j];
    jr.terms = make_terms(j);
    const Reaction& r = net.reactions()[j];
    for (int i = 0; i < species_count_; ++i) {
      int delta = r.product[i] - r.substrate[i];
      if (delta != 0 && reduced.mask[j][i]) jr.change.push_back({i, delta});
    }
    jr.state_dependent = false;
    for (const auto& term : jr.terms) {
      if (is_active_[term.species]) jr.state_dependent = true;
    }
    if (jr.state_dependent) constant_hazards_ = false;
    jumps_.push_back(std::move(jr));
  }
}

double HybridSimulator::limit_rate(double rate, const std::vector<Term>& terms,
                                   const State& x) const {
  double value = rate;
  for (const auto& term : terms) {
    double xi = x[term.species];
    if (term.discrete) {
      if (xi < static_cast<double>(term.count)) return 0.0;
      for (int l = 0; l < term.count; ++l) value *= (xi - static_cast<double>(l));
    } else {
      for (int l = 0; l < term.count; ++l) value *= xi;
    }
  }
  return value;
}

void HybridSimulator::drift(const State& x, std::vector<double>& dx) const {
  for (int i : active_) dx[i] = 0.0;
  for (const auto& dr : drift_) {
    double rate = limit_rate(dr.rate, dr.terms, x);
    for (const auto& [coord, delta] : dr.change) dx[coord] += rate * delta;
  }
}

void HybridSimulator::rk4_step(State& x, double h, Workspace& ws) const {
  drift(x, ws.k1);
  ws.stage = x;
  for (int i : active_) ws.stage[i] = x[i] + 0.5 * h * ws.k1[i];
  drift(ws.stage, ws.k2);
  for (int i : active_) ws.stage[i] = x[i] + 0.5 * h * ws.k2[i];
  drift(ws.stage, ws.k3);
  for (int i : active_) ws.stage[i] = x[i] + h * ws.k3[i];
  drift(ws.stage, ws.k4);
  for (int i : active_) {
    x[i] += h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    if (!std::isfinite(x[i])) throw std::runtime_error("hybrid: non-finite drift");
  }
}

void HybridSimulator::build_segment(const State& x, Workspace& ws) const {
  const int na = static_cast<int>(active_.size());
  for (std::size_t d = 0; d < drift_.size(); ++d) {
    double c = drift_[d].rate;
    for (const auto& term : drift_[d].frozen_terms) {
      double xi = x[term.species];
      if (term.discrete) {
        if (xi < static_cast<double>(term.count)) {
          c = 0.0;
          break;
        }
        for (int l = 0; l < term.count; ++l) c *= (xi - static_cast<double>(l));
      } else {
        for (int l = 0; l < term.count; ++l) c *= xi;
      }
    }
    ws.seg_coeff[d] = c;
  }
  if (!affine_ || na == 0) return;
  std::fill(ws.A.begin(), ws.A.end(), 0.0);
  std::fill(ws.b.begin(), ws.b.end(), 0.0);
  for (std::size_t d = 0; d < drift_.size(); ++d) {
    const auto& dr = drift_[d];
    if (dr.active_terms.empty()) {
      for (const auto& [coord, delta] : dr.active_change) {
        ws.b[coord] += ws.seg_coeff[d] * delta;
      }
    } else {
      int col = dr.active_terms.front().first;  // degree one: a single linear factor
      for (const auto& [coord, delta] : dr.active_change) {
        ws.A[coord * na + col] += ws.seg_coeff[d] * delta;
      }
    }
  }
  ws.cached_h = -1.0;
}

/// One classical RK4 step for the affine field dz = A z + b is the exact
/// affine map z -> M z + c with M = I + hA + (hA)^2/2 + (hA)^3/6 +
/// (hA)^4/24 and c = h (I + hA/2 + (hA)^2/6 + (hA)^3/24) b; build the
/// map once per step size and iterate it.
void HybridSimulator::build_step_map(double h, Workspace& ws) const {
  const int na = static_cast<int>(active_.size());
  auto& hA = ws.mat_hA;
  for (int i = 0; i < na * na; ++i) hA[i] = h * ws.A[i];

  // out = I + scale * hA * rhs
  auto compose = [na, &hA](double scale, const std::vector<double>& rhs,
                           std::vector<double>& out) {
    for (int r = 0; r < na; ++r) {
      for (int c = 0; c < na; ++c) {
        double s = 0.0;
        for (int k = 0; k < na; ++k) s += hA[r * na + k] * rhs[k * na + c];
        out[r * na + c] = scale * s + (r == c ? 1.0 : 0.0);
      }
    }
  };

  std::fill(ws.mat_t1.begin(), ws.mat_t1.end(), 0.0);
  for (int r = 0; r < na; ++r) ws.mat_t1[r * na + r] = 1.0;
  compose(1.0 / 4.0, ws.mat_t1, ws.mat_t2);  // I + hA/4
  compose(1.0 / 3.0, ws.mat_t2, ws.mat_t1);  // I + hA/3 (...)
  compose(1.0 / 2.0, ws.mat_t1, ws.mat_t2);  // I + hA/2 (...)
  compose(1.0, ws.mat_t2, ws.step_map);      // M
  for (int r = 0; r < na; ++r) {
    double s = 0.0;
    for (int k = 0; k < na; ++k) s += ws.mat_t2[r * na + k] * ws.b[k];
    ws.step_off[r] = h * s;
  }
  ws.cached_h = h;
}

void HybridSimulator::segment_drift(const std::vector<double>& z, std::vector<double>& dz,
                                    Workspace& ws) const {
  const int na = static_cast<int>(active_.size());
  for (int i = 0; i < na; ++i) dz[i] = 0.0;
  for (std::size_t d = 0; d < drift_.size(); ++d) {
    double rate = ws.seg_coeff[d];
    for (const auto& [coord, count] : drift_[d].active_terms) {
      for (int l = 0; l < count; ++l) rate *= z[coord];
    }
    for (const auto& [coord, delta] : drift_[d].active_change) dz[coord] += rate * delta;
  }
}

/// March the active coordinates over [from, to] in steps of at most
/// ode_step. The coefficients folded by build_segment stay valid because
/// no jump occurs inside a segment.
void HybridSimulator::integrate_segment(State& x, double from, double to,
                                        const HybridStepConfig& cfg, Workspace& ws,
                                        Trajectory* out) const {
  const int na = static_cast<int>(active_.size());
  if (na == 0 || to <= from) return;
  for (int i = 0; i < na; ++i) ws.z[i] = x[active_[i]];

  double t = from;
  while (t < to) {
    double h = std::min(cfg.ode_step, to - t);
    if (affine_) {
      if (h != ws.cached_h) build_step_map(h, ws);
      for (int r = 0; r < na; ++r) {
        double s = ws.step_off[r];
        for (int k = 0; k < na; ++k) s += ws.step_map[r * na + k] * ws.z[k];
        ws.ztmp[r] = s;
      }
      std::swap(ws.z, ws.ztmp);
    } else {
      segment_drift(ws.z, ws.zk1, ws);
      for (int i = 0; i < na; ++i) ws.zstage[i] = ws.z[i] + 0.5 * h * ws.zk1[i];
      segment_drift(ws.zstage, ws.zk2, ws);
      for (int i = 0; i < na; ++i) ws.zstage[i] = ws.z[i] + 0.5 * h * ws.zk2[i];
      segment_drift(ws.zstage, ws.zk3, ws);
      for (int i = 0; i < na; ++i) ws.zstage[i] = ws.z[i] + h * ws.zk3[i];
      segment_drift(ws.zstage, ws.zk4, ws);
      for (int i = 0; i < na; ++i) {
        ws.z[i] += h / 6.0 * (ws.zk1[i] + 2.0 * ws.zk2[i] + 2.0 * ws.zk3[i] + ws.zk4[i]);
      }
    }
    t += h;
    if (t > to) t = to;
    if (out) {
      for (int i = 0; i < na; ++i) x[active_[i]] = ws.z[i];
      record_point(*out, t, x);
    }
  }
  for (int i = 0; i < na; ++i) {
    x[active_[i]] = ws.z[i];
    if (!std::isfinite(x[active_[i]])) throw std::runtime_error("hybrid: non-finite drift");
  }
}

/// Two RK4 half-steps over [0, h] plus per-reaction Simpson hazard
/// increments on the same grid (state-dependent hazard path).
void HybridSimulator::advance(const State& from, double h, State& to,
                              std::vector<double>& hazard_increment, Workspace& ws) const {
  for (std::size_t q = 0; q < jumps_.size(); ++q) {
    ws.haz_start[q] = limit_rate(jumps_[q].rate, jumps_[q].terms, from);
  }
  to = from;
  rk4_step(to, 0.5 * h, ws);
  for (std::size_t q = 0; q < jumps_.size(); ++q) {
    ws.haz_mid[q] = limit_rate(jumps_[q].rate, jumps_[q].terms, to);
  }
  rk4_step(to, 0.5 * h, ws);
  for (std::size_t q = 0; q < jumps_.size(); ++q) {
    ws.haz_end[q] = limit_rate(jumps_[q].rate, jumps_[q].terms, to);
    hazard_increment[q] = h / 6.0 * (ws.haz_start[q] + 4.0 * ws.haz_mid[q] + ws.haz_end[q]);
  }
}

void HybridSimulator::run(State& x, double t_end, RngStream rng, const HybridStepConfig& cfg,
                          Trajectory* out) const {
  cfg.validate();
  if (static_cast<int>(x.size()) != species_count_) {
    throw std::invalid_argument("state dimension mismatch");
  }
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");

  const std::size_t m = jumps_.size();
  State base = x;
  std::vector<std::int64_t> counts(species_count_, 0);

  std::vector<Rng> clocks;
  clocks.reserve(m);
  std::vector<double> threshold(m), accumulated(m, 0.0);
  for (std::size_t q = 0; q < m; ++q) {
    clocks.emplace_back(rng.sub(static_cast<std::uint64_t>(jumps_[q].index)));
    threshold[q] = clocks[q].exponential();
  }

  Workspace ws(species_count_, m, static_cast<int>(active_.size()), drift_.size());
  double t = 0.0;
  std::uint64_t fired = 0;
  if (out) record_point(*out, 0.0, x);

  auto apply_jump = [&](std::size_t q) {
    for (const auto& term : jumps_[q].change) {
      counts[term.species] += term.count;
      x[term.species] = base[term.species] + static_cast<double>(counts[term.species]);
    }
    threshold[q] += clocks[q].exponential();
    ++fired;
    if (out) {
      record_point(*out, t, x);
      out->jump_count = fired;
    }
    if (fired >= cfg.max_jumps) {
      Trajectory partial;
      if (out) partial = *out;
      throw CapExceededError("max_jumps exceeded at t=" + std::to_string(t),
                             std::move(partial));
    }
  };

  if (constant_hazards_) {
    // Jump rates cannot change along the flow: each segment's jump times
    // invert exactly and Simpson accumulation degenerates to a product.
    while (t < t_end) {
      build_segment(x, ws);
      int best = -1;
      double best_dt = kInf;
      for (std::size_t q = 0; q < m; ++q) {
        ws.hazard[q] = limit_rate(jumps_[q].rate, jumps_[q].terms, x);
        if (ws.hazard[q] > 0.0) {
          double dt = (threshold[q] - accumulated[q]) / ws.hazard[q];
          if (dt < 0.0) dt = 0.0;  // clock already exhausted to rounding
          if (dt < best_dt) {
            best_dt = dt;
            best = static_cast<int>(q);
          }
        }
      }
      double seg_end = (best >= 0) ? std::min(t + best_dt, t_end) : t_end;
      integrate_segment(x, t, seg_end, cfg, ws, out);
      for (std::size_t q = 0; q < m; ++q) accumulated[q] += ws.hazard[q] * (seg_end - t);
      t = seg_end;
      if (best < 0 || t >= t_end) break;
      apply_jump(static_cast<std::size_t>(best));
    }
  } else {
    std::vector<double> increment(m), probe(m);
    while (t < t_end) {
      // a threshold may already be exhausted to within rounding
      int due = -1;
      for (std::size_t q = 0; q < m; ++q) {
        if (accumulated[q] >= threshold[q]) {
          due = static_cast<int>(q);
          break;
        }
      }
      if (due >= 0) {
        apply_jump(static_cast<std::size_t>(due));
        continue;
      }

      double h = std::min(cfg.ode_step, t_end - t);
      advance(x, h, ws.end, increment, ws);
      bool crossing = false;
      for (std::size_t q = 0; q < m; ++q) {
        if (accumulated[q] + increment[q] >= threshold[q]) crossing = true;
      }
      if (!crossing) {
        x = ws.end;
        for (std::size_t q = 0; q < m; ++q) accumulated[q] += increment[q];
        t += h;
        if (out) record_point(*out, t, x);
        continue;
      }

      // Earliest crossing lies in (0, h]: bisect on the hazard surplus.
      double lo = 0.0, hi = h;
      for (int iter = 0; iter < 60 && (hi - lo) > cfg.hazard_tol * h; ++iter) {
        double mid = 0.5 * (lo + hi);
        advance(x, mid, ws.probe_state, probe, ws);
        bool crossed = false;
        for (std::size_t q = 0; q < m; ++q) {
          if (accumulated[q] + probe[q] >= threshold[q]) crossed = true;
        }
        if (crossed) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      advance(x, hi, ws.probe_state, probe, ws);
      int fire = -1;
      double best_surplus = -kInf;
      for (std::size_t q = 0; q < m; ++q) {
        double surplus = accumulated[q] + probe[q] - threshold[q];
        if (surplus > best_surplus) {
          best_surplus = surplus;
          fire = static_cast<int>(q);
        }
      }
      x = ws.probe_state;
      for (std::size_t q = 0; q < m; ++q) accumulated[q] += probe[q];
      t += hi;
      if (out) record_point(*out, t, x);
      apply_jump(static_cast<std::size_t>(fire));
    }
  }

  if (out) {
    record_point(*out, t_end, x);
    out->jump_count = fired;
  }
}

Trajectory HybridSimulator::simulate(const State& x0, double t_end, RngStream rng,
                                     const HybridStepConfig& cfg) const {
  Trajectory out;
  out.kind = Trajectory::Kind::Hybrid;
  State x = x0;
  run(x, t_end, rng, cfg, &out);
  return out;
}

void HybridSimulator::sample(State& x, double dt, RngStream rng,
                             const HybridStepConfig& cfg) const {
  run(x, dt, rng, cfg, nullptr);
}

Trajectory simulate_reduced(const ReactionNetwork& net, const ReducedModel& reduced,
                            const State& x0, double t_end, RngStream rng,
                            const HybridStepConfig& cfg) {
  return HybridSimulator(net, reduced).simulate(x0, t_end, rng, cfg);
}

State sample_reduced_kernel(const ReactionNetwork& net, const ReducedModel& reduced,
                            const State& x, double dt, RngStream rng,
                            const HybridStepConfig& cfg) {
  State out = x;
  HybridSimulator(net, reduced).sample(out, dt, rng, cfg);
  return out;
}

}  // namespace mssf
