// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>
#include <utility>
#include <vector>

#include "mfchain/errors.hpp"
#include "mfchain/model.hpp"

namespace mfchain {

/// Cached one-step propagator for the amplitude matrix.
///
/// A column w of the amplitude matrix collects the coefficients of an
/// annihilator d = sum_a w_a Psi_a of the state. Under |psi> ->
/// exp(-i H_nH dt)|psi> the annihilators evolve by the adjoint action,
/// which on the coefficient columns is exp(+i H_BdG^T dt). That matrix is
/// what gets cached here; it equals the block-swapped form of
/// exp(-i H_BdG dt).
struct Propagator {
  Eigen::MatrixXcd mat;
  double dt = 0.0;
  double gamma = 0.0;
  int sites = 0;

  static Propagator build(const ModelParams& p, double dt) {
    Propagator prop;
    prop.dt = dt;
    prop.gamma = p.rate;
    prop.sites = p.sites;
    const Eigen::MatrixXcd h_nh = bdg_matrix(p, true).mat;
    prop.mat = (Complex(0.0, dt) * h_nh.transpose()).exp();
    return prop;
  }
};

struct Observables {
  Eigen::VectorXd density;  ///< <n_j>
  Eigen::MatrixXcd C;       ///< C_ij = <c_i^+ c_j>
  Eigen::MatrixXcd F;       ///< F_ij = <c_j c_i>
};

/// Pure BdG Gaussian state.
///
/// Encoded by the 2L x L amplitude matrix W = [U; V]; column m defines the
/// annihilated quasiparticle mode d_m = sum_i (U_im c_i + V_im c_i^+).
/// Columns are kept orthonormal; log_norm accumulates ln of the norm of the
/// unnormalized trajectory state.
class GaussianState {
 public:
  GaussianState() = default;

  /// Product state with the requested site occupations.
  static GaussianState product(const ModelParams& p, const std::vector<int>& occupations) {
    if (static_cast<int>(occupations.size()) != p.sites)
      throw ConfigError("occupations", "occupation vector length must equal L");
    const int L = p.sites;
    GaussianState s;
    s.sites_ = L;
    s.w_ = Eigen::MatrixXcd::Zero(2 * L, L);
    for (int j = 0; j < L; ++j) {
      if (occupations[j])
        s.w_(L + j, j) = 1.0;  // annihilator c_j^+
      else
        s.w_(j, j) = 1.0;  // annihilator c_j
    }
    return s;
  }

  /// Neel-like default initial occupation 1010...
  static GaussianState neel(const ModelParams& p) {
    std::vector<int> occ(p.sites, 0);
    for (int j = 0; j < p.sites; j += 2) occ[j] = 1;
    return product(p, occ);
  }

  /// Ground state of the Hermitian BdG Hamiltonian. Requires a gapped
  /// spectrum; annihilators are the positive-energy quasiparticle modes.
  static GaussianState ground_state(const ModelParams& p) {
    const int L = p.sites;
    const Eigen::MatrixXcd h = bdg_matrix(p, false).mat;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXd& ev = es.eigenvalues();
    for (int i = 0; i < 2 * L; ++i)
      if (std::abs(ev(i)) <= 1e-12)
        throw DegenerateGroundStateError("gapless BdG spectrum: ground state is degenerate");
    GaussianState s;
    s.sites_ = L;
    s.w_.resize(2 * L, L);
    int col = 0;
    for (int i = 0; i < 2 * L; ++i) {
      if (ev(i) > 0.0) {
        if (col >= L) throw DegenerateGroundStateError("unbalanced BdG spectrum");
        // annihilators are eigenvectors of H^T = H* at +xi
        s.w_.col(col++) = es.eigenvectors().col(i).conjugate();
      }
    }
    if (col != L) throw DegenerateGroundStateError("unbalanced BdG spectrum");
    s.orthonormalize();
    return s;
  }

  int sites() const { return sites_; }
  double time() const { return time_; }
  double log_norm() const { return log_norm_; }
  const Eigen::MatrixXcd& amplitudes() const { return w_; }

  Eigen::Block<const Eigen::MatrixXcd> u_block() const { return w_.topRows(sites_); }
  Eigen::Block<const Eigen::MatrixXcd> v_block() const { return w_.bottomRows(sites_); }

  /// <n_j> of all sites; real diagonal of C = V* V^T.
  Eigen::VectorXd density() const {
    return v_block().rowwise().squaredNorm();
  }

  Eigen::MatrixXcd corr_c() const {
    return v_block().conjugate() * v_block().transpose();
  }

  Eigen::MatrixXcd corr_f() const {
    return v_block() * u_block().adjoint();
  }

  Observables observables() const {
    Observables o;
    o.C = corr_c();
    o.F = corr_f();
    o.density = o.C.diagonal().real();
    return o;
  }

  /// Non-Hermitian no-click evolution by the cached propagator, followed by
  /// re-orthonormalization. The norm bookkeeping compensates the c-number
  /// part of H_nH that the amplitude flow cannot see:
  ///   d log_norm = (1/2) sum_m ln|R_mm| - gamma L dt / 4,
  /// which gives d log_norm/dt = -(gamma/2) sum_j <n_j> on the normalized
  /// state, i.e. squared-norm decay at rate gamma sum_j <n_j>.
  void propagate(const Propagator& prop) {
    w_ = (prop.mat * w_).eval();
    if (!w_.allFinite())
      throw PropagationOverflowError("non-finite amplitudes after propagation (dt too large)");
    const double sum_log_r = orthonormalize();
    log_norm_ += 0.5 * sum_log_r - 0.25 * prop.gamma * sites_ * prop.dt;
    time_ += prop.dt;
  }

  void propagate(const ModelParams& p, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt", "dt must be positive");
    propagate(Propagator::build(p, dt));
  }

  /// Conditional density-jump update |psi> -> n_site |psi> / ||..||.
  ///
  /// The post-jump annihilator space is spanned by c_site^+ together with
  /// { sum_m mu_m d_m - (u.mu) c_site : v.mu = 0 }, where u, v are the
  /// site rows of U and V. Rebuilding W from that span and orthonormalizing
  /// is the Gaussian conditional-projection update in amplitude form.
  void apply_jump(int site) {
    const int L = sites_;
    const Eigen::RowVectorXcd u = w_.row(site);
    const Eigen::RowVectorXcd v = w_.row(L + site);
    const double p_occ = v.squaredNorm();
    if (p_occ < 1e-12)
      throw ZeroProbabilityJumpError("jump requested on site with <n> below tolerance");

    // Orthonormal basis of { mu : v . mu = 0 } = Hermitian complement of v*.
    Eigen::MatrixXcd vc(L, 1);
    vc.col(0) = v.conjugate().transpose();
    Eigen::HouseholderQR<Eigen::MatrixXcd> hqr(vc);
    Eigen::MatrixXcd q = hqr.householderQ() * Eigen::MatrixXcd::Identity(L, L);
    const auto m = q.rightCols(L - 1);

    Eigen::MatrixXcd next(2 * L, L);
    next.setZero();
    next(L + site, 0) = 1.0;  // c_site^+
    if (L > 1) {
      next.topRows(L).rightCols(L - 1) = u_block() * m;
      next.row(site).tail(L - 1).setZero();  // exact cancellation of the c_site part
      next.bottomRows(L).rightCols(L - 1) = v_block() * m;
    }
    w_ = std::move(next);
    orthonormalize_qr();
    log_norm_ += 0.5 * std::log(p_occ);
  }

  /// Entanglement entropy (nats) of the contiguous block [lo, lo+len).
  double entanglement_entropy(int lo, int len) const {
    if (len < 1 || lo < 0 || lo + len > sites_)
      throw ConfigError("subsystem", "subsystem range out of bounds");
    const Eigen::MatrixXcd C = corr_c();
    const Eigen::MatrixXcd F = corr_f();
    const auto CA = C.block(lo, lo, len, len);
    const auto FA = F.block(lo, lo, len, len);
    Eigen::MatrixXcd g(2 * len, 2 * len);
    g.topLeftCorner(len, len) = CA;
    g.topRightCorner(len, len) = FA.conjugate();
    g.bottomLeftCorner(len, len) = -FA;
    g.bottomRightCorner(len, len) = Eigen::MatrixXcd::Identity(len, len) - CA.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (int i = 0; i < 2 * len; ++i) {
      double nu = es.eigenvalues()(i);
      if (nu < -1e-8 || nu > 1.0 + 1e-8)
        throw StateCorruptionError("restricted correlation eigenvalue outside [0,1]");
      nu = std::min(1.0, std::max(0.0, nu));
      if (nu > 0.0) s -= nu * std::log(nu);
    }
    return s;
  }

  /// 2L x 2L generalized density matrix (test diagnostic; idempotent for pure states).
  Eigen::MatrixXcd generalized_density() const {
    const int L = sites_;
    const Eigen::MatrixXcd C = corr_c();
    const Eigen::MatrixXcd F = corr_f();
    Eigen::MatrixXcd g(2 * L, 2 * L);
    g.topLeftCorner(L, L) = C;
    g.topRightCorner(L, L) = F.conjugate();
    g.bottomLeftCorner(L, L) = -F;
    g.bottomRightCorner(L, L) = Eigen::MatrixXcd::Identity(L, L) - C.transpose();
    return g;
  }

  double gram_residual() const {
    const int L = sites_;
    return (w_.adjoint() * w_ - Eigen::MatrixXcd::Identity(L, L)).cwiseAbs().maxCoeff();
  }

  void set_time(double t) { time_ = t; }
  void reset_log_norm() { log_norm_ = 0.0; }
  void add_log_norm(double d) { log_norm_ += d; }

 private:
  /// Cholesky column orthonormalization; returns sum_m ln|R_mm|
  /// (= half the log-determinant of the Gram matrix). Falls back to
  /// Householder QR if the Gram matrix is not numerically positive.
  double orthonormalize() {
    const int L = sites_;
    Eigen::MatrixXcd gram(L, L);
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(w_.adjoint());
    gram = gram.selfadjointView<Eigen::Lower>();
    Eigen::LLT<Eigen::MatrixXcd> llt(gram);
    if (llt.info() != Eigen::Success) return orthonormalize_qr();
    double sum_log = 0.0;
    for (int i = 0; i < L; ++i) sum_log += std::log(llt.matrixLLT()(i, i).real());
    const Eigen::MatrixXcd upper = llt.matrixL().adjoint();
    upper.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(w_);
    return sum_log;
  }

  double orthonormalize_qr() {
    const int L = sites_;
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(w_);
    double sum_log = 0.0;
    const auto& qrm = qr.matrixQR();
    for (int i = 0; i < L; ++i) sum_log += std::log(std::abs(qrm(i, i)));
    w_ = qr.householderQ() * Eigen::MatrixXcd::Identity(2 * L, L);
    return sum_log;
  }

  Eigen::MatrixXcd w_;
  double log_norm_ = 0.0;
  double time_ = 0.0;
  int sites_ = 0;
};

/// <H> of the Hermitian chain Hamiltonian in the given state.
inline double energy(const ModelParams& p, const GaussianState& s) {
  const int L = p.sites;
  const Eigen::MatrixXcd m = bdg_matrix(p, false).mat;
  const Eigen::MatrixXcd h = m.topLeftCorner(L, L);
  const Eigen::MatrixXcd delta = m.topRightCorner(L, L);
  const Eigen::MatrixXcd C = s.corr_c();
  const Eigen::MatrixXcd F = s.corr_f();
  const Complex e = (h.array() * C.array()).sum() +
                    0.5 * (delta.array() * F.conjugate().array()).sum() +
                    0.5 * (delta.conjugate().array() * F.array()).sum();
  return e.real();
}

}  // namespace mfchain
