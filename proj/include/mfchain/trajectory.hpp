// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mfchain/errors.hpp"
#include "mfchain/exactsmall.hpp"
#include "mfchain/gaussian.hpp"
#include "mfchain/model.hpp"
#include "mfchain/parallel.hpp"
#include "mfchain/rng.hpp"

namespace mfchain {

enum class Scheme { euler_poisson, exact_waiting_time };

struct TrajectoryConfig {
  ModelParams params;
  double dt = 1e-3;
  double t_final = 10.0;
  Scheme scheme = Scheme::euler_poisson;
  std::vector<double> sample_times;
  std::uint64_t master_seed = 42;
  int subsystem_lo = 0;
  int subsystem_len = -1;           ///< -1: half chain
  std::vector<int> occupations;     ///< empty: Neel 1010...
  bool start_from_ground_state = false;

  int entropy_block() const {
    return subsystem_len > 0 ? subsystem_len : params.sites / 2;
  }

  void validate() const {
    params.validate();
    if (!(dt > 0.0)) throw ConfigError("dt", "dt must be positive");
    if (!(t_final >= 0.0)) throw ConfigError("t_final", "t_final must be >= 0");
    if (scheme == Scheme::euler_poisson &&
        !(params.rate * dt * params.sites < 0.1))
      throw ConfigError("dt", "euler scheme requires gamma*dt*L < 0.1");
    double prev = -1.0;
    for (double t : sample_times) {
      if (t < 0.0 || t > t_final + 1e-12)
        throw ConfigError("sample_times", "sample times must lie in [0, t_final]");
      if (t <= prev) throw ConfigError("sample_times", "sample times must be strictly increasing");
      prev = t;
    }
    if (!occupations.empty() && static_cast<int>(occupations.size()) != params.sites)
      throw ConfigError("occupations", "occupation vector length must equal L");
    const int len = entropy_block();
    if (subsystem_lo < 0 || len < 1 || subsystem_lo + len > params.sites)
      throw ConfigError("subsystem", "entropy subsystem out of range");
  }

  GaussianState initial_state() const {
    if (start_from_ground_state) return GaussianState::ground_state(params);
    if (!occupations.empty()) return GaussianState::product(params, occupations);
    return GaussianState::neel(params);
  }

  std::vector<int> initial_occupations() const {
    if (!occupations.empty()) return occupations;
    std::vector<int> occ(params.sites, 0);
    for (int j = 0; j < params.sites; j += 2) occ[j] = 1;
    return occ;
  }
};

struct JumpEvent {
  int site = 0;     ///< 0-based
  double time = 0.0;
};

/// Full trajectory record: the event list determines the conditional state
/// exactly (together with scheme and dt metadata for the discrete protocol).
/// Euler-scheme events carry the state time at which the jump operator was
/// applied; each such step consumes dt of protocol time without coherent
/// propagation.
struct JumpRecord {
  std::vector<JumpEvent> events;
  double final_log_norm = 0.0;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::euler_poisson;
  double dt = 0.0;
  double t_final = 0.0;
};

struct TimeSeries {
  std::vector<double> times;
  Eigen::MatrixXd density;   ///< samples x L
  Eigen::VectorXd total;     ///< particle number
  Eigen::VectorXd entropy;   ///< block entropy (nats)
};

struct TrajectoryResult {
  TimeSeries series;
  JumpRecord record;
};

/// One Euler-Poisson step: a single uniform decides between a density jump
/// (with channel picked by inversion on the same uniform, so that engines
/// sharing the rng stream take identical branches) and exact non-Hermitian
/// propagation over dt.
inline std::optional<int> step_euler(GaussianState& state, const Propagator& prop,
                                     const ModelParams& p, double dt, RngStream& rng) {
  const Eigen::VectorXd dens = state.density();
  const double p_tot = p.rate * dt * dens.sum();
  if (p_tot >= 1.0) throw StepSizeViolationError("total jump probability reached 1");
  const double u = rng.uniform();
  if (u < p_tot) {
    double acc = 0.0;
    int site = p.sites - 1;
    for (int j = 0; j < p.sites; ++j) {
      acc += p.rate * dt * dens[j];
      if (u < acc) {
        site = j;
        break;
      }
    }
    state.apply_jump(site);
    state.set_time(state.time() + dt);
    return site;
  }
  state.propagate(prop);
  return std::nullopt;
}

struct WaitingTime {
  double tau = 0.0;       ///< time from entry to the jump; infinity() if none before t_max
  bool jumped = false;
};

/// Samples the next waiting time by integrating the survival probability
/// S(t) = exp(2 [log_norm(t) - log_norm(entry)]) with inner step dt until it
/// crosses a uniform draw; the crossing is located by linear interpolation
/// in S and the state is left evolved to the crossing (or to t_max).
/// Restarting at segment boundaries is exact: the conditional evolution is
/// Markov, so the continued waiting time is resampled from the entry state.
inline WaitingTime sample_waiting_time(GaussianState& state, const ModelParams& p, double dt,
                                       double t_max, RngStream& rng,
                                       const Propagator* cached = nullptr) {
  const double u = rng.uniform_open();
  double log_s = 0.0;
  double elapsed = 0.0;
  while (elapsed < t_max - 1e-15) {
    const double step = std::min(dt, t_max - elapsed);
    GaussianState before = state;
    const double ln_before = state.log_norm();
    if (cached && step == dt)
      state.propagate(*cached);
    else
      state.propagate(p, step);
    const double dlog_s = 2.0 * (state.log_norm() - ln_before);
    if (std::exp(log_s + dlog_s) < u) {
      // crossing inside this step: interpolate S linearly
      const double s_prev = std::exp(log_s);
      const double s_next = std::exp(log_s + dlog_s);
      double frac = (s_prev - u) / (s_prev - s_next);
      frac = std::min(1.0, std::max(1e-12, frac));
      state = before;
      state.propagate(p, frac * step);
      return {elapsed + frac * step, true};
    }
    log_s += dlog_s;
    elapsed += step;
  }
  return {std::numeric_limits<double>::infinity(), false};
}

namespace detail {

inline void emit_sample(const GaussianState& s, const TrajectoryConfig& cfg, TimeSeries& out,
                        int& row) {
  const Eigen::VectorXd dens = s.density();
  out.density.row(row) = dens.transpose();
  out.total(row) = dens.sum();
  out.entropy(row) = s.entanglement_entropy(cfg.subsystem_lo, cfg.entropy_block());
  out.times[row] = s.time();
  ++row;
}

}  // namespace detail

/// Runs one trajectory, deterministic in (master_seed, index).
inline TrajectoryResult run_trajectory(const TrajectoryConfig& cfg, std::uint64_t index) {
  cfg.validate();
  const ModelParams& p = cfg.params;
  GaussianState state = cfg.initial_state();
  RngStream rng = RngStream::for_trajectory(cfg.master_seed, index);

  TrajectoryResult out;
  out.record.seed = RngStream::stream_seed(cfg.master_seed, index);
  out.record.scheme = cfg.scheme;
  out.record.dt = cfg.dt;
  out.record.t_final = cfg.t_final;

  const int n_samples = static_cast<int>(cfg.sample_times.size());
  out.series.times.resize(n_samples);
  out.series.density.resize(n_samples, p.sites);
  out.series.total.resize(n_samples);
  out.series.entropy.resize(n_samples);
  int row = 0;
  int si = 0;

  if (cfg.scheme == Scheme::euler_poisson) {
    const Propagator prop = Propagator::build(p, cfg.dt);
    const long n_steps = std::lround(cfg.t_final / cfg.dt);
    out.record.t_final = n_steps * cfg.dt;
    for (long step = 0; step < n_steps; ++step) {
      while (si < n_samples && state.time() >= cfg.sample_times[si] - 1e-9) {
        detail::emit_sample(state, cfg, out.series, row);
        ++si;
      }
      const auto jump = step_euler(state, prop, p, cfg.dt, rng);
      if (jump) out.record.events.push_back({*jump, state.time() - cfg.dt});
    }
    while (si < n_samples) {
      detail::emit_sample(state, cfg, out.series, row);
      ++si;
    }
  } else {
    // exact waiting-time sampling between sample boundaries
    const Propagator prop = Propagator::build(p, cfg.dt);
    for (;;) {
      const bool have_sample = si < n_samples;
      const double boundary = have_sample ? cfg.sample_times[si] : cfg.t_final;
      while (state.time() < boundary - 1e-12) {
        const double window = boundary - state.time();
        const WaitingTime wt = sample_waiting_time(state, p, cfg.dt, window, rng, &prop);
        if (!wt.jumped) break;  // reached the boundary without a click
        // channel selection at the jump time
        const Eigen::VectorXd dens = state.density();
        const double total = dens.sum();
        const double u = rng.uniform() * total;
        double acc = 0.0;
        int site = p.sites - 1;
        for (int j = 0; j < p.sites; ++j) {
          acc += dens[j];
          if (u < acc) {
            site = j;
            break;
          }
        }
        state.apply_jump(site);
        out.record.events.push_back({site, state.time()});
      }
      if (have_sample) {
        detail::emit_sample(state, cfg, out.series, row);
        ++si;
        continue;
      }
      break;
    }
  }
  out.record.final_log_norm = state.log_norm();
  return out;
}

struct EnsembleStats {
  std::vector<double> times;
  Eigen::MatrixXd mean_density, se_density;  ///< samples x L
  Eigen::VectorXd mean_total, se_total;
  Eigen::VectorXd mean_entropy, se_entropy;
  long n_traj = 0;
  std::vector<long long> jump_histogram;  ///< index = total jumps per trajectory
  double mean_jump_rate = 0.0;
};

namespace detail {

struct EnsembleAcc {
  Eigen::MatrixXd sum_d, sq_d;
  Eigen::VectorXd sum_t, sq_t, sum_s, sq_s;
  std::vector<long long> hist;
  long long jumps = 0;
  long n = 0;

  static EnsembleAcc zero(int samples, int L) {
    EnsembleAcc a;
    a.sum_d = Eigen::MatrixXd::Zero(samples, L);
    a.sq_d = Eigen::MatrixXd::Zero(samples, L);
    a.sum_t = Eigen::VectorXd::Zero(samples);
    a.sq_t = Eigen::VectorXd::Zero(samples);
    a.sum_s = Eigen::VectorXd::Zero(samples);
    a.sq_s = Eigen::VectorXd::Zero(samples);
    return a;
  }

  void add(const TrajectoryResult& r) {
    sum_d += r.series.density;
    sq_d += r.series.density.cwiseProduct(r.series.density);
    sum_t += r.series.total;
    sq_t += r.series.total.cwiseProduct(r.series.total);
    sum_s += r.series.entropy;
    sq_s += r.series.entropy.cwiseProduct(r.series.entropy);
    const std::size_t k = r.record.events.size();
    if (hist.size() <= k) hist.resize(k + 1, 0);
    ++hist[k];
    jumps += static_cast<long long>(k);
    ++n;
  }
};

inline Eigen::MatrixXd standard_error(const Eigen::MatrixXd& sum, const Eigen::MatrixXd& sq,
                                      long n) {
  const Eigen::MatrixXd mean = sum / static_cast<double>(n);
  if (n < 2) return Eigen::MatrixXd::Zero(sum.rows(), sum.cols());
  Eigen::MatrixXd var =
      (sq - static_cast<double>(n) * mean.cwiseProduct(mean)) / static_cast<double>(n - 1);
  var = var.cwiseMax(0.0);
  return (var / static_cast<double>(n)).cwiseSqrt();
}

}  // namespace detail

/// Seeded, embarrassingly parallel ensemble; the striped indexed reduction
/// makes the result bit-identical for any worker count.
inline EnsembleStats run_ensemble(const TrajectoryConfig& cfg, long n_traj, int workers) {
  if (n_traj < 2) throw ConfigError("n_traj", "ensemble needs at least 2 trajectories");
  cfg.validate();
  const int samples = static_cast<int>(cfg.sample_times.size());
  const int L = cfg.params.sites;
  const auto proto = detail::EnsembleAcc::zero(samples, L);
  auto stripes = striped_map_reduce(
      n_traj, workers, 256, proto,
      [&](long index, detail::EnsembleAcc& acc) { acc.add(run_trajectory(cfg, index)); });

  detail::EnsembleAcc total = detail::EnsembleAcc::zero(samples, L);
  for (const auto& s : stripes) {
    total.sum_d += s.sum_d;
    total.sq_d += s.sq_d;
    total.sum_t += s.sum_t;
    total.sq_t += s.sq_t;
    total.sum_s += s.sum_s;
    total.sq_s += s.sq_s;
    if (total.hist.size() < s.hist.size()) total.hist.resize(s.hist.size(), 0);
    for (std::size_t k = 0; k < s.hist.size(); ++k) total.hist[k] += s.hist[k];
    total.jumps += s.jumps;
    total.n += s.n;
  }

  EnsembleStats st;
  st.times = cfg.sample_times;
  st.n_traj = total.n;
  const double n = static_cast<double>(total.n);
  st.mean_density = total.sum_d / n;
  st.se_density = detail::standard_error(total.sum_d, total.sq_d, total.n);
  st.mean_total = total.sum_t / n;
  st.se_total = detail::standard_error(total.sum_t, total.sq_t, total.n);
  st.mean_entropy = total.sum_s / n;
  st.se_entropy = detail::standard_error(total.sum_s, total.sq_s, total.n);
  st.jump_histogram = total.hist;
  st.mean_jump_rate =
      cfg.t_final > 0.0 ? static_cast<double>(total.jumps) / (n * cfg.t_final) : 0.0;
  return st;
}

/// Replays a record through the Gaussian engine: exact exponentials between
/// events, density jumps at events. Euler records consume dt of protocol
/// time per jump (matching the generating protocol exactly).
inline GaussianState replay_record_gaussian(const JumpRecord& rec, const ModelParams& p,
                                            GaussianState state) {
  const double jump_cost = (rec.scheme == Scheme::euler_poisson) ? rec.dt : 0.0;
  double tau = 0.0;  // protocol time already consumed
  for (const auto& ev : rec.events) {
    const double gap = ev.time - tau;
    if (gap < -1e-9) throw ImpossibleRecordError("record times are not increasing");
    if (gap > 1e-12) state.propagate(p, gap);
    state.apply_jump(ev.site);
    tau = ev.time + jump_cost;
  }
  if (rec.t_final - tau > 1e-12) state.propagate(p, rec.t_final - tau);
  state.set_time(rec.t_final);
  return state;
}

/// Dense-engine replay of the same record (oracle side of the cross-engine
/// determinism check). Returns the final state with total accumulated
/// log_norm = ln ||psi~||.
inline DenseState replay_record_dense(const JumpRecord& rec, const ModelParams& p,
                                      DenseState state) {
  FockOps ops(p);
  const double jump_cost = (rec.scheme == Scheme::euler_poisson) ? rec.dt : 0.0;
  double tau = 0.0;
  auto propagate = [&](double gap) {
    state.psi = ops.u_nh(gap, state.psi);
    const double nrm = state.psi.norm();
    if (!(nrm > 0.0)) throw PropagationOverflowError("dense replay lost the state");
    state.psi /= nrm;
    state.log_norm += std::log(nrm);
  };
  for (const auto& ev : rec.events) {
    const double gap = ev.time - tau;
    if (gap < -1e-9) throw ImpossibleRecordError("record times are not increasing");
    if (gap > 1e-12) propagate(gap);
    const std::uint32_t bit = 1u << ev.site;
    for (int b = 0; b < state.psi.size(); ++b)
      if (!(b & bit)) state.psi[b] = 0.0;
    const double nrm = state.psi.norm();
    if (nrm < 1e-12)
      throw ImpossibleRecordError("record demands a jump on an empty site");
    state.psi /= nrm;
    state.log_norm += std::log(nrm);
    tau = ev.time + jump_cost;
  }
  if (rec.t_final - tau > 1e-12) propagate(rec.t_final - tau);
  state.time = rec.t_final;
  return state;
}

}  // namespace mfchain
