// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "mfchain/errors.hpp"
#include "mfchain/gaussian.hpp"
#include "mfchain/model.hpp"

namespace mfchain {

/// One-body moments of the unconditional (averaged) state. Mixedness is
/// allowed; only Hermiticity of C, antisymmetry of F and a [0,1] spectrum
/// are maintained.
struct MomentState {
  Eigen::MatrixXcd C;  ///< <c_i^+ c_j>
  Eigen::MatrixXcd F;  ///< <c_j c_i>
  double time = 0.0;

  static MomentState product(int L, const std::vector<int>& occupations) {
    MomentState m;
    m.C = Eigen::MatrixXcd::Zero(L, L);
    m.F = Eigen::MatrixXcd::Zero(L, L);
    for (int j = 0; j < L && j < static_cast<int>(occupations.size()); ++j)
      m.C(j, j) = occupations[j] ? 1.0 : 0.0;
    return m;
  }

  static MomentState from_state(const GaussianState& s) {
    MomentState m;
    m.C = s.corr_c();
    m.F = s.corr_f();
    m.time = s.time();
    return m;
  }
};

namespace detail {

/// Adjoint-Lindblad equations of motion for (C, F) with density monitors:
/// the coherent part is the BdG rotation, the dissipative part damps every
/// site-off-diagonal element at rate gamma. Validated against the dense
/// Lindblad oracle rather than trusted algebra.
struct MomentRhs {
  Eigen::MatrixXcd h, delta;
  double gamma;

  explicit MomentRhs(const ModelParams& p) {
    const int L = p.sites;
    const Eigen::MatrixXcd m = bdg_matrix(p, false).mat;
    h = m.topLeftCorner(L, L);
    delta = m.topRightCorner(L, L);
    gamma = p.rate;
  }

  void operator()(const Eigen::MatrixXcd& C, const Eigen::MatrixXcd& F,
                  Eigen::MatrixXcd& dC, Eigen::MatrixXcd& dF) const {
    const Complex i1(0.0, 1.0);
    dC = i1 * (h.transpose() * C - C * h.transpose() + delta.conjugate() * F.transpose() +
               F.conjugate() * delta);
    dF = i1 * (-h * F - F * h.transpose() + C.transpose() * delta + delta * C - delta);
    dC -= gamma * (C - C.diagonal().asDiagonal().toDenseMatrix());
    dF -= gamma * (F - F.diagonal().asDiagonal().toDenseMatrix());
  }
};

}  // namespace detail

/// RK4 integration of the moment equations over total time dt using a fixed
/// inner step (default 1e-3 / max coupling scale).
inline double default_moment_inner_step(const ModelParams& p) {
  const double scale = std::max({std::abs(p.hopping), std::abs(p.pairing),
                                 std::abs(p.field), p.rate, 1e-12});
  return 1e-3 / scale;
}

inline MomentState evolve_moments(const MomentState& in, double dt, const ModelParams& p,
                                  double dt_inner = -1.0) {
  if (!(dt > 0.0)) throw ConfigError("dt", "dt must be positive");
  if (dt_inner <= 0.0) dt_inner = default_moment_inner_step(p);
  detail::MomentRhs rhs(p);
  MomentState s = in;
  const int n = std::max(1, static_cast<int>(std::ceil(dt / dt_inner)));
  const double h = dt / n;
  Eigen::MatrixXcd k1c, k1f, k2c, k2f, k3c, k3f, k4c, k4f;
  for (int step = 0; step < n; ++step) {
    rhs(s.C, s.F, k1c, k1f);
    rhs(s.C + 0.5 * h * k1c, s.F + 0.5 * h * k1f, k2c, k2f);
    rhs(s.C + 0.5 * h * k2c, s.F + 0.5 * h * k2f, k3c, k3f);
    rhs(s.C + h * k3c, s.F + h * k3f, k4c, k4f);
    s.C += (h / 6.0) * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
    s.F += (h / 6.0) * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
  }
  s.time = in.time + dt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s.C, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8 || es.eigenvalues().maxCoeff() > 1.0 + 1e-8)
    throw IntegrationFailureError("correlation spectrum left [0,1] during moment evolution");
  return s;
}

/// Relax the moments to the stationary state; returns when the max-abs time
/// derivative falls below 1e-10, fails after t = 1e3 / gamma.
inline MomentState steady_state(const ModelParams& p, MomentState s) {
  detail::MomentRhs rhs(p);
  const double t_max = 1e3 / (p.rate > 0.0 ? p.rate : 1.0);
  const double chunk = 1.0 / std::max({std::abs(p.hopping), std::abs(p.pairing),
                                       std::abs(p.field), p.rate, 1.0});
  double t = 0.0;
  Eigen::MatrixXcd dC, dF;
  while (true) {
    rhs(s.C, s.F, dC, dF);
    const double resid = std::max(dC.cwiseAbs().maxCoeff(), dF.cwiseAbs().maxCoeff());
    if (resid < 1e-10) return s;
    if (t >= t_max) {
      throw ConvergenceError("steady state not reached, residual " + std::to_string(resid));
    }
    s = evolve_moments(s, chunk, p);
    t += chunk;
  }
}

inline MomentState steady_state(const ModelParams& p) {
  std::vector<int> occ(p.sites, 0);
  for (int j = 0; j < p.sites; j += 2) occ[j] = 1;
  return steady_state(p, MomentState::product(p.sites, occ));
}

/// Retarded single-particle Green's function of the monitored chain in the
/// Nambu basis (c_q, c^+_{-q}),
///
///   G^R(q, w)^{-1} = [ w - 2J cos q + h + i gamma/2      -2 i eta sin q      ]
///                    [ 2 i eta sin q        w + 2J cos q - h + i gamma/2 ],
///
/// normalized so that G^R(q, w) = (w - H_eff(q))^{-1}; both poles sit at
/// w = +-xi_q - i gamma/2 in the lower half-plane.
struct SaddleGreen {
  double q = 0.0;
  double omega = 0.0;
  Eigen::Matrix2cd g_r;
  int lambda_retarded = +1;
  int lambda_advanced = -1;
};

inline Eigen::Matrix2cd green_retarded_inverse(const ModelParams& p, double q, double omega) {
  const double eps = 2.0 * p.hopping * std::cos(q) - p.field;
  const Complex ig(0.0, 0.5 * p.rate);
  Eigen::Matrix2cd ginv;
  ginv(0, 0) = omega - eps + ig;
  ginv(0, 1) = Complex(0.0, -2.0 * p.pairing * std::sin(q));
  ginv(1, 0) = Complex(0.0, 2.0 * p.pairing * std::sin(q));
  ginv(1, 1) = omega + eps + ig;
  return ginv;
}

inline SaddleGreen green_retarded(const ModelParams& p, double q, double omega) {
  SaddleGreen g;
  g.q = q;
  g.omega = omega;
  g.g_r = green_retarded_inverse(p, q, omega).inverse();
  return g;
}

/// 2x2 effective non-Hermitian Bogoliubov block, G^R(q,w) = (w - H_eff)^{-1}.
inline Eigen::Matrix2cd h_eff_block(const ModelParams& p, double q) {
  const double eps = 2.0 * p.hopping * std::cos(q) - p.field;
  Eigen::Matrix2cd h;
  h(0, 0) = Complex(eps, -0.5 * p.rate);
  h(0, 1) = Complex(0.0, 2.0 * p.pairing * std::sin(q));
  h(1, 0) = Complex(0.0, -2.0 * p.pairing * std::sin(q));
  h(1, 1) = Complex(-eps, -0.5 * p.rate);
  return h;
}

/// Independent time-domain oracle: numerically Fourier-transforms
/// G^R(t) = -i theta(t) exp(-i H_eff t) with composite Simpson quadrature
/// over t in [0, t_max].
inline Eigen::Matrix2cd green_retarded_fourier_oracle(const ModelParams& p, double q,
                                                      double omega, double t_max,
                                                      int n_steps = 200000) {
  if (n_steps % 2 != 0) ++n_steps;
  const Eigen::Matrix2cd h = h_eff_block(p, q);
  const double dt = t_max / n_steps;
  const Eigen::Matrix2cd e_step = (Complex(0.0, -dt) * h).exp();
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
  for (int s = 0; s <= n_steps; ++s) {
    const double t = s * dt;
    const double w = (s == 0 || s == n_steps) ? 1.0 : (s % 2 == 1 ? 4.0 : 2.0);
    acc += w * std::exp(Complex(0.0, omega * t)) * u;
    if (s < n_steps) u = (u * e_step).eval();
  }
  return Complex(0.0, -1.0) * acc * (dt / 3.0);
}

/// Winding number of det G^{R,-1}(q, w) along a closed rectangle in the
/// upper half plane; zero winding certifies the absence of upper-half-plane
/// poles of G^R (argument principle).
inline int upper_half_plane_winding(const ModelParams& p, double q, double omega_max,
                                    double height, double delta = 1e-3, int n_per_edge = 4000) {
  const auto det_at = [&](Complex w) {
    const double eps = 2.0 * p.hopping * std::cos(q) - p.field;
    const Complex a = w - eps + Complex(0.0, 0.5 * p.rate);
    const Complex d = w + eps + Complex(0.0, 0.5 * p.rate);
    const Complex bc = Complex(0.0, -2.0 * p.pairing * std::sin(q)) *
                       Complex(0.0, 2.0 * p.pairing * std::sin(q));
    return a * d - bc;
  };
  std::vector<Complex> path;
  path.reserve(4 * n_per_edge);
  for (int s = 0; s < n_per_edge; ++s)  // bottom: -W -> W at Im = delta
    path.emplace_back(-omega_max + 2.0 * omega_max * s / n_per_edge, delta);
  for (int s = 0; s < n_per_edge; ++s)  // right edge up
    path.emplace_back(omega_max, delta + (height - delta) * s / n_per_edge);
  for (int s = 0; s < n_per_edge; ++s)  // top: W -> -W
    path.emplace_back(omega_max - 2.0 * omega_max * s / n_per_edge, height);
  for (int s = 0; s < n_per_edge; ++s)  // left edge down
    path.emplace_back(-omega_max, height - (height - delta) * s / n_per_edge);
  double winding = 0.0;
  Complex prev = det_at(path.back());
  for (const Complex& w : path) {
    const Complex cur = det_at(w);
    winding += std::arg(cur / prev);
    prev = cur;
  }
  return static_cast<int>(std::llround(winding / (2.0 * M_PI)));
}

}  // namespace mfchain
