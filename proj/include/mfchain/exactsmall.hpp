// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "mfchain/errors.hpp"
#include "mfchain/kron.hpp"
#include "mfchain/model.hpp"
#include "mfchain/parallel.hpp"
#include "mfchain/rng.hpp"

namespace mfchain {

/// Fock-space operator kernels for the dense engines. Site j maps to bit j;
/// c_j |n> = (-1)^{sum_{k<j} n_k} n_j |n - e_j>. All fermionic signs follow
/// from this convention, including across the periodic bond.
class FockOps {
 public:
  explicit FockOps(const ModelParams& p) : p_(p), sites_(p.sites), dim_(1u << p.sites) {
    if (p.sites > 12) throw MemoryGuardError("dense engine limited to 2^L <= 4096");
  }

  int sites() const { return sites_; }
  int dim() const { return static_cast<int>(dim_); }
  const ModelParams& params() const { return p_; }

  static int parity_below(std::uint32_t state, int j) {
    const std::uint32_t mask = (1u << j) - 1u;
    return std::popcount(state & mask) & 1;
  }

  void apply_c(int j, const Eigen::VectorXcd& in, Eigen::VectorXcd& out, Complex coeff) const {
    const std::uint32_t bit = 1u << j;
    for (std::uint32_t b = 0; b < dim_; ++b) {
      if (b & bit) {
        const double sgn = parity_below(b, j) ? -1.0 : 1.0;
        out[b ^ bit] += coeff * sgn * in[b];
      }
    }
  }

  void apply_cdag(int j, const Eigen::VectorXcd& in, Eigen::VectorXcd& out, Complex coeff) const {
    const std::uint32_t bit = 1u << j;
    for (std::uint32_t b = 0; b < dim_; ++b) {
      if (!(b & bit)) {
        const double sgn = parity_below(b, j) ? -1.0 : 1.0;
        out[b | bit] += coeff * sgn * in[b];
      }
    }
  }

  /// out += H |in> for the chain Hamiltonian (no measurement part).
  void apply_h(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const {
    const int L = sites_;
    Eigen::VectorXcd tmp(dim_);
    const int nbonds = (p_.boundary == Boundary::periodic) ? L : L - 1;
    for (int b = 0; b < nbonds; ++b) {
      const int j = b;
      const int jp = (b + 1) % L;
      if (jp == j) continue;
      // J (c^+_{jp} c_j + c^+_j c_{jp})
      tmp.setZero();
      apply_c(j, in, tmp, 1.0);
      apply_cdag(jp, tmp, out, p_.hopping);
      tmp.setZero();
      apply_c(jp, in, tmp, 1.0);
      apply_cdag(j, tmp, out, p_.hopping);
      // eta (c^+_{jp} c^+_j + c_j c_{jp})
      tmp.setZero();
      apply_cdag(j, in, tmp, 1.0);
      apply_cdag(jp, tmp, out, p_.pairing);
      tmp.setZero();
      apply_c(jp, in, tmp, 1.0);
      apply_c(j, tmp, out, p_.pairing);
    }
    for (std::uint32_t s = 0; s < dim_; ++s)
      out[s] -= p_.field * static_cast<double>(std::popcount(s)) * in[s];
  }

  /// out += (H - i gamma/2 sum_j n_j) |in>.
  void apply_h_nh(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const {
    apply_h(in, out);
    const Complex damp(0.0, -0.5 * p_.rate);
    for (std::uint32_t s = 0; s < dim_; ++s)
      out[s] += damp * static_cast<double>(std::popcount(s)) * in[s];
  }

  /// exp(-i H_nH t)|psi>, unnormalized, by scaled Taylor summation.
  Eigen::VectorXcd u_nh(double t, const Eigen::VectorXcd& psi) const {
    const double hscale =
        sites_ * (2.0 * std::abs(p_.hopping) + 2.0 * std::abs(p_.pairing) +
                  std::abs(p_.field) + 0.5 * p_.rate) + 1.0;
    const int nsub = std::max(1, static_cast<int>(std::ceil(std::abs(t) * hscale / 0.5)));
    const double tau = t / nsub;
    Eigen::VectorXcd acc = psi;
    Eigen::VectorXcd term(dim_), next(dim_);
    for (int s = 0; s < nsub; ++s) {
      term = acc;
      Eigen::VectorXcd sum = acc;
      for (int m = 1; m <= 64; ++m) {
        next.setZero();
        apply_h_nh(term, next);
        term = (Complex(0.0, -tau) / static_cast<double>(m)) * next;
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18 * std::max(1.0, sum.cwiseAbs().maxCoeff()))
          break;
      }
      acc = sum;
    }
    return acc;
  }

  /// Dense many-body matrix of H_nH (for the replicated builder).
  Eigen::MatrixXcd h_nh_matrix() const {
    Eigen::MatrixXcd m(dim_, dim_);
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim_), col(dim_);
    for (std::uint32_t b = 0; b < dim_; ++b) {
      e.setZero();
      e[b] = 1.0;
      col.setZero();
      apply_h_nh(e, col);
      m.col(b) = col;
    }
    return m;
  }

  Eigen::MatrixXcd h_matrix() const {
    Eigen::MatrixXcd m(dim_, dim_);
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim_), col(dim_);
    for (std::uint32_t b = 0; b < dim_; ++b) {
      e.setZero();
      e[b] = 1.0;
      col.setZero();
      apply_h(e, col);
      m.col(b) = col;
    }
    return m;
  }

 private:
  ModelParams p_;
  int sites_;
  std::uint32_t dim_;
};

/// Normalized many-body state plus accumulated ln of the unnormalized norm.
struct DenseState {
  Eigen::VectorXcd psi;
  double log_norm = 0.0;
  double time = 0.0;
  int sites = 0;

  static DenseState product(int L, const std::vector<int>& occupations) {
    if (static_cast<int>(occupations.size()) != L)
      throw ConfigError("occupations", "occupation vector length must equal L");
    DenseState s;
    s.sites = L;
    s.psi = Eigen::VectorXcd::Zero(1 << L);
    std::uint32_t idx = 0;
    for (int j = 0; j < L; ++j)
      if (occupations[j]) idx |= (1u << j);
    s.psi[idx] = 1.0;
    return s;
  }

  Eigen::VectorXd density() const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(sites);
    for (int b = 0; b < psi.size(); ++b) {
      const double w = std::norm(psi[b]);
      for (int j = 0; j < sites; ++j)
        if (b & (1 << j)) d[j] += w;
    }
    return d;
  }

  /// C_ij = <c_i^+ c_j>, F_ij = <c_j c_i>.
  void correlations(const FockOps& ops, Eigen::MatrixXcd& C, Eigen::MatrixXcd& F) const {
    const int L = sites;
    std::vector<Eigen::VectorXcd> y(L), z(L);
    for (int j = 0; j < L; ++j) {
      y[j] = Eigen::VectorXcd::Zero(psi.size());
      ops.apply_c(j, psi, y[j], 1.0);
      z[j] = Eigen::VectorXcd::Zero(psi.size());
      ops.apply_cdag(j, psi, z[j], 1.0);
    }
    C.resize(L, L);
    F.resize(L, L);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) {
        C(i, j) = y[i].dot(y[j]);        // <c_i^+ c_j>
        F(i, j) = z[j].dot(y[i]);        // <c_j c_i>
      }
  }

  /// <c_i^+ c_j^+ c_k c_l> (Wick-test diagnostic).
  Complex four_point(const FockOps& ops, int i, int j, int k, int l) const {
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(psi.size());
    ops.apply_c(l, psi, a, 1.0);
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(psi.size());
    ops.apply_c(k, a, b, 1.0);
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(psi.size());
    ops.apply_cdag(j, b, c, 1.0);
    Eigen::VectorXcd d = Eigen::VectorXcd::Zero(psi.size());
    ops.apply_cdag(i, c, d, 1.0);
    return psi.dot(d);
  }

  /// Von Neumann entropy of the prefix block [0, len).
  double entropy_prefix(int len) const {
    const int dA = 1 << len;
    const int dB = 1 << (sites - len);
    Eigen::MatrixXcd A(dA, dB);
    for (int hi = 0; hi < dB; ++hi)
      for (int lo = 0; lo < dA; ++lo)
        A(lo, hi) = psi[(static_cast<std::uint32_t>(hi) << len) | lo];
    Eigen::MatrixXcd rho = A * A.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (int i = 0; i < dA; ++i) {
      const double lam = std::max(0.0, es.eigenvalues()(i));
      if (lam > 1e-15) s -= lam * std::log(lam);
    }
    return s;
  }
};

/// One stochastic step, identical in law (and in uniform-stream consumption:
/// exactly one draw per step) to the Gaussian-engine Euler step. The no-jump
/// branch applies the exact non-Hermitian exponential over dt.
inline std::optional<int> sse_step_dense(const FockOps& ops, DenseState& state, double dt,
                                         RngStream& rng) {
  const ModelParams& p = ops.params();
  const Eigen::VectorXd dens = state.density();
  const double p_tot = p.rate * dt * dens.sum();
  if (p_tot >= 1.0) throw StepSizeViolationError("total jump probability reached 1");
  const double u = rng.uniform();
  if (u < p_tot) {
    // channel by inversion on the same uniform
    double acc = 0.0;
    int site = state.sites - 1;
    for (int j = 0; j < state.sites; ++j) {
      acc += p.rate * dt * dens[j];
      if (u < acc) {
        site = j;
        break;
      }
    }
    const std::uint32_t bit = 1u << site;
    for (int b = 0; b < state.psi.size(); ++b)
      if (!(b & bit)) state.psi[b] = 0.0;
    const double nrm = state.psi.norm();
    if (nrm < 1e-12) throw ZeroProbabilityJumpError("jump annihilated the state");
    state.psi /= nrm;
    state.log_norm += std::log(nrm);
    state.time += dt;
    return site;
  }
  state.psi = ops.u_nh(dt, state.psi);
  const double nrm = state.psi.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm))
    throw PropagationOverflowError("dense propagation produced a non-finite norm");
  state.psi /= nrm;
  state.log_norm += std::log(nrm);
  state.time += dt;
  return std::nullopt;
}

/// Dense Lindblad right-hand side
///   d rho/dt = -i [H, rho] + gamma sum_j (n_j rho n_j - 1/2 {n_j, rho}).
/// For density monitors the dissipator is elementwise:
///   gamma * (popcount(a & b) - (popcount(a) + popcount(b)) / 2) * rho_ab.
class DenseLindblad {
 public:
  explicit DenseLindblad(const ModelParams& p) : ops_(p), h_(ops_.h_matrix()) {
    const int d = ops_.dim();
    damp_.resize(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        damp_(a, b) = p.rate * (std::popcount(static_cast<std::uint32_t>(a & b)) -
                                0.5 * (std::popcount(static_cast<std::uint32_t>(a)) +
                                       std::popcount(static_cast<std::uint32_t>(b))));
  }

  Eigen::MatrixXcd rhs(const Eigen::MatrixXcd& rho) const {
    return Complex(0.0, -1.0) * (h_ * rho - rho * h_) + damp_.cwiseProduct(rho);
  }

  /// RK4 evolution over total time t with fixed inner step.
  void evolve(Eigen::MatrixXcd& rho, double t, double dt_inner) const {
    const int n = std::max(1, static_cast<int>(std::ceil(t / dt_inner)));
    const double h = t / n;
    for (int s = 0; s < n; ++s) {
      const Eigen::MatrixXcd k1 = rhs(rho);
      const Eigen::MatrixXcd k2 = rhs(rho + 0.5 * h * k1);
      const Eigen::MatrixXcd k3 = rhs(rho + 0.5 * h * k2);
      const Eigen::MatrixXcd k4 = rhs(rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }

  const FockOps& ops() const { return ops_; }

 private:
  FockOps ops_;
  Eigen::MatrixXcd h_;
  Eigen::MatrixXd damp_;
};

/// Averaged R-fold replicated density matrix rho^R on dimension 2^(L R).
struct ReplicatedDensity {
  Eigen::MatrixXcd rho;
  int replicas = 1;
  int sites = 0;
  double time = 0.0;

  static void check_guard(int L, int R) {
    if (L * R > 5) throw MemoryGuardError("replicated dense representation requires L*R <= 5");
  }

  /// rho0 = (|psi><psi|)^{tensor R}.
  static ReplicatedDensity pure_power(const Eigen::VectorXcd& psi, int L, int R) {
    check_guard(L, R);
    Eigen::VectorXcd v = psi;
    for (int r = 1; r < R; ++r) {
      Eigen::VectorXcd next(v.size() * psi.size());
      for (int a = 0; a < v.size(); ++a)
        next.segment(a * psi.size(), psi.size()) = v[a] * psi;
      v = next;
    }
    ReplicatedDensity out;
    out.rho = v * v.adjoint();
    out.replicas = R;
    out.sites = L;
    return out;
  }
};

class ReplicatedStepper {
 public:
  ReplicatedStepper(const ModelParams& p, int R) : L_(p.sites), R_(R) {
    ReplicatedDensity::check_guard(L_, R_);
    FockOps ops(p);
    const Eigen::MatrixXcd h1 = ops.h_nh_matrix();
    const int d1 = ops.dim();
    const long dR = 1l << (L_ * R_);
    h_nh_r_ = Eigen::MatrixXcd::Zero(dR, dR);
    const Eigen::MatrixXcd id1 = Eigen::MatrixXcd::Identity(d1, d1);
    for (int r = 0; r < R_; ++r) {
      Eigen::MatrixXcd lift = (r == 0) ? h1 : id1;
      for (int s = 1; s < R_; ++s) lift = kron(lift, (s == r) ? h1 : id1);
      h_nh_r_ += lift;
    }
    // L_j^R = prod_r n_j^{(r)}: diagonal indicator that every replica has bit j.
    jump_diag_.resize(L_);
    for (int j = 0; j < L_; ++j) {
      jump_diag_[j] = Eigen::VectorXd::Zero(dR);
      for (long b = 0; b < dR; ++b) {
        bool all = true;
        for (int r = 0; r < R_; ++r) {
          const long digit = (b >> (r * L_)) & ((1l << L_) - 1);
          if (!(digit & (1l << j))) {
            all = false;
            break;
          }
        }
        jump_diag_[j][b] = all ? 1.0 : 0.0;
      }
    }
    gamma_ = p.rate;
  }

  /// One first-order step
  ///   rho' = (1 - i dt H^R) rho (1 - i dt H^R)^+ + gamma dt sum_j L_j^R rho L_j^R.
  void step(ReplicatedDensity& rd, double dt) const {
    const Eigen::MatrixXcd a =
        Eigen::MatrixXcd::Identity(rd.rho.rows(), rd.rho.cols()) - Complex(0.0, dt) * h_nh_r_;
    Eigen::MatrixXcd next = a * rd.rho * a.adjoint();
    for (int j = 0; j < L_; ++j) {
      const auto& d = jump_diag_[j];
      next += gamma_ * dt * (d * d.transpose()).cwiseProduct(rd.rho);
    }
    rd.rho = std::move(next);
    rd.time += dt;
  }

  void evolve(ReplicatedDensity& rd, double t, double dt) const {
    const int n = std::max(1, static_cast<int>(std::llround(t / dt)));
    for (int s = 0; s < n; ++s) step(rd, dt);
  }

 private:
  int L_, R_;
  double gamma_ = 0.0;
  Eigen::MatrixXcd h_nh_r_;
  std::vector<Eigen::VectorXd> jump_diag_;
};

struct McReplicatedResult {
  Eigen::MatrixXcd mean;
  Eigen::MatrixXd se_re, se_im;  ///< per-entry standard errors
  long n_traj = 0;
};

/// Monte Carlo estimate of rho^R at time t_final: Born-weighted dense SSE
/// trajectories accumulate (rho_traj)^{tensor R} exp[(R-1) ln P], where
/// ln P = 2 log_norm is the realized Born weight of the record. Unbiased
/// for the replicated density matrix evolved by the first-order stepper.
inline McReplicatedResult mc_replicated_average(const ModelParams& p, int R, long n_traj,
                                                double t_final, double dt,
                                                const std::vector<int>& occupations,
                                                std::uint64_t master_seed, int workers = 1) {
  if (p.sites * R > 4)
    throw MemoryGuardError("tensor accumulation requires L*R <= 4");
  if (n_traj < 1000) throw ConfigError("n_traj", "estimator needs n_traj >= 1000");
  const FockOps ops(p);
  const long dim_r = 1l << (p.sites * R);
  const long n_steps = std::lround(t_final / dt);

  struct Acc {
    Eigen::MatrixXcd sum;
    Eigen::MatrixXd sq_re, sq_im;
    long n = 0;
  };
  Acc proto;
  proto.sum = Eigen::MatrixXcd::Zero(dim_r, dim_r);
  proto.sq_re = Eigen::MatrixXd::Zero(dim_r, dim_r);
  proto.sq_im = Eigen::MatrixXd::Zero(dim_r, dim_r);

  auto stripes = striped_map_reduce(
      n_traj, workers, 256, proto, [&](long index, Acc& acc) {
        DenseState st = DenseState::product(p.sites, occupations);
        RngStream rng = RngStream::for_trajectory(master_seed, static_cast<std::uint64_t>(index));
        for (long s = 0; s < n_steps; ++s) sse_step_dense(ops, st, dt, rng);
        Eigen::VectorXcd v = st.psi;
        for (int r = 1; r < R; ++r) {
          Eigen::VectorXcd next(v.size() * st.psi.size());
          for (int a = 0; a < v.size(); ++a)
            next.segment(a * st.psi.size(), st.psi.size()) = v[a] * st.psi;
          v = next;
        }
        const double weight = std::exp(static_cast<double>(R - 1) * 2.0 * st.log_norm);
        const Eigen::MatrixXcd sample = weight * (v * v.adjoint());
        acc.sum += sample;
        acc.sq_re += sample.real().cwiseProduct(sample.real());
        acc.sq_im += sample.imag().cwiseProduct(sample.imag());
        ++acc.n;
      });

  Acc total = proto;
  for (const auto& s : stripes) {
    total.sum += s.sum;
    total.sq_re += s.sq_re;
    total.sq_im += s.sq_im;
    total.n += s.n;
  }
  McReplicatedResult out;
  out.n_traj = total.n;
  const double n = static_cast<double>(total.n);
  out.mean = total.sum / n;
  auto se = [&](const Eigen::MatrixXd& sq, const Eigen::MatrixXd& mean) {
    Eigen::MatrixXd var = (sq - n * mean.cwiseProduct(mean)) / (n - 1.0);
    return (var.cwiseMax(0.0) / n).cwiseSqrt().eval();
  };
  out.se_re = se(total.sq_re, out.mean.real());
  out.se_im = se(total.sq_im, out.mean.imag());
  return out;
}

}  // namespace mfchain
