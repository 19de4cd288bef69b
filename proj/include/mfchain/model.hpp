// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "mfchain/errors.hpp"

namespace mfchain {

using Complex = std::complex<double>;

enum class Boundary { periodic, open };

/// Couplings of the monitored chain
///
///   H = sum_j [ J (c^+_{j+1} c_j + h.c.) + eta (c^+_{j+1} c^+_j + h.c.) ]
///       - h sum_j n_j,
///
/// with every site density n_j monitored at rate gamma. Energies are quoted
/// in units of J (J = 1 by default), times in units of 1/J.
struct ModelParams {
  double hopping = 1.0;  ///< J
  double pairing = 0.5;  ///< eta
  double field = 0.0;    ///< h
  double rate = 0.5;     ///< gamma >= 0
  int sites = 32;        ///< L
  Boundary boundary = Boundary::periodic;

  void validate() const {
    if (!(rate >= 0.0)) throw ConfigError("gamma", "gamma must be >= 0");
    if (sites < 1) throw ConfigError("L", "chain length must be >= 1");
    if (!std::isfinite(hopping) || !std::isfinite(pairing) ||
        !std::isfinite(field) || !std::isfinite(rate))
      throw ConfigError("params", "couplings must be finite");
  }

  /// Momentum grid of the periodic chain, k_n = 2 pi n / L, n = 0..L-1.
  double momentum(int n) const {
    return 2.0 * M_PI * static_cast<double>(n) / static_cast<double>(sites);
  }
};

/// Quasiparticle dispersion xi_k = sqrt(4 eta^2 sin^2 k + (h - 2 J cos k)^2).
inline double dispersion(const ModelParams& p, double k) {
  const double a = 2.0 * p.pairing * std::sin(k);
  const double b = p.field - 2.0 * p.hopping * std::cos(k);
  return std::hypot(a, b);
}

struct Velocity {
  double value = 0.0;
  bool degenerate = false;  ///< set when xi_k = 0 and a one-sided limit was used
};

/// Group velocity v(k) = d xi_k / dk.
///
/// At gap closings the closed form is 0/0; there the one-sided forward
/// difference [xi(k+d) - xi(k)]/d with d = 1e-6 is returned and flagged,
/// which recovers the magnitude of the one-sided limit.
inline Velocity group_velocity(const ModelParams& p, double k) {
  const double xi = dispersion(p, k);
  if (xi > 1e-12) {
    const double num = 8.0 * p.pairing * p.pairing * std::sin(k) * std::cos(k) +
                       4.0 * p.hopping * std::sin(k) *
                           (p.field - 2.0 * p.hopping * std::cos(k));
    return {num / (2.0 * xi), false};
  }
  const double delta = 1e-6;
  return {(dispersion(p, k + delta) - xi) / delta, true};
}

/// 2L x 2L single-particle generator in the (c, c^+) block basis,
///
///   H_BdG = [ h_mat   Delta  ]
///           [ -Delta* -h_mat^T ],
///
/// with h_mat the hopping/field block and Delta the antisymmetric pairing
/// block. With include_gamma the number-conserving diagonal acquires
/// -i gamma/2 on the particle block and +i gamma/2 on the hole block, so
/// that the matrix generates H - i gamma/2 sum_j n_j at the many-body level.
struct BdgMatrix {
  Eigen::MatrixXcd mat;
  bool hermitian_part_only = true;
};

inline BdgMatrix bdg_matrix(const ModelParams& p, bool include_gamma) {
  const int L = p.sites;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(L, L);
  Eigen::MatrixXcd delta = Eigen::MatrixXcd::Zero(L, L);
  for (int j = 0; j < L; ++j) h(j, j) = -p.field;
  const int nbonds = (p.boundary == Boundary::periodic) ? L : L - 1;
  for (int b = 0; b < nbonds; ++b) {
    const int j = b;
    const int jp = (b + 1) % L;
    if (jp == j) continue;  // L = 1 periodic has no distinct neighbor
    h(jp, j) += p.hopping;
    h(j, jp) += p.hopping;
    delta(jp, j) += p.pairing;
    delta(j, jp) -= p.pairing;
  }
  Eigen::MatrixXcd m(2 * L, 2 * L);
  m.topLeftCorner(L, L) = h;
  m.topRightCorner(L, L) = delta;
  m.bottomLeftCorner(L, L) = -delta.conjugate();
  m.bottomRightCorner(L, L) = -h.transpose();
  if (include_gamma) {
    const Complex shift(0.0, -0.5 * p.rate);
    for (int j = 0; j < L; ++j) {
      m(j, j) += shift;
      m(L + j, L + j) -= shift;
    }
  }
  return {std::move(m), !include_gamma};
}

/// v0^2 = int dk/2pi v(k)^2, composite trapezoid with N_k nodes.
/// The integrand is 2pi-periodic, so the trapezoid rule converges
/// spectrally away from gap closings.
inline double v0_squared(const ModelParams& p, int n_k = 4096) {
  double acc = 0.0;
  for (int i = 0; i < n_k; ++i) {
    const double k = -M_PI + 2.0 * M_PI * static_cast<double>(i) / n_k;
    const double v = group_velocity(p, k).value;
    acc += v * v;
  }
  return acc / static_cast<double>(n_k);
}

}  // namespace mfchain
