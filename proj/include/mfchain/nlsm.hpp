// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "mfchain/errors.hpp"
#include "mfchain/model.hpp"
#include "mfchain/symmetry.hpp"

namespace mfchain {

/// Long-wavelength coefficients of the effective sigma model.
///
/// Conventions (also emitted in report headers): the action kernel is
/// stiffness * Tr[(1/v0) dt U^T dt U + v0 dx U^T dx U] with
/// stiffness = 2 rho (1-rho) v0 / gamma, and the bare coupling is reported
/// as g_B = 1 / stiffness.
struct NlsmCoefficients {
  double v0_squared = 0.0;
  double diffusion = 0.0;  ///< D = v0^2 / gamma
  double rho = 0.0;        ///< density parameter in [0,1]
  double nu = 0.0;         ///< 4 rho (1 - rho)
  double stiffness = 0.0;  ///< 2 rho (1-rho) v0 / gamma
  double bare_coupling = 0.0;
};

inline NlsmCoefficients coefficients(const ModelParams& p, double rho) {
  if (!(p.rate > 0.0))
    throw ConfigError("gamma", "diffusion constant diverges at gamma = 0");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho", "rho must lie in [0,1]");
  NlsmCoefficients c;
  c.v0_squared = v0_squared(p);
  c.diffusion = c.v0_squared / p.rate;
  c.rho = rho;
  c.nu = 4.0 * rho * (1.0 - rho);
  c.stiffness = 2.0 * rho * (1.0 - rho) * std::sqrt(c.v0_squared) / p.rate;
  c.bare_coupling = c.stiffness > 0.0 ? 1.0 / c.stiffness
                                      : std::numeric_limits<double>::infinity();
  return c;
}

// ---------------------------------------------------------------------------
// DIII one-loop flow
// ---------------------------------------------------------------------------

/// dg/dlnL = (R - 2) g^2 / (8 pi); R is real-valued to allow the R -> 1 limit.
inline double beta_diii(double g, double R) {
  return (R - 2.0) * g * g / (8.0 * M_PI);
}

/// Closed-form solution g(l) = g0 / (1 - (R-2) g0 l / (8 pi)).
inline double flow_closed_form(double g0, double R, double ln_l) {
  return g0 / (1.0 - (R - 2.0) * g0 * ln_l / (8.0 * M_PI));
}

struct FlowPoint {
  double ln_l = 0.0;
  double g = 0.0;
};

struct FlowResult {
  std::vector<FlowPoint> points;
  int direction = 0;  ///< sign of dg/dlnL at g0: -1 weak coupling, 0 marginal, +1 growth
  bool truncated = false;
  double pole_ln_l = std::numeric_limits<double>::infinity();
};

/// RK4 integration of the flow up to ln_l_max. A strong-coupling pole at
/// l* = 8 pi / ((R-2) g0) truncates the trajectory, which is reported
/// rather than integrated through.
inline FlowResult beta_flow(double g0, double R, double ln_l_max, int steps) {
  if (!(g0 >= 0.0)) throw ConfigError("g0", "coupling must be >= 0");
  if (steps < 1) throw ConfigError("steps", "need at least one step");
  FlowResult out;
  const double b0 = beta_diii(g0, R);
  out.direction = (b0 > 0.0) ? +1 : (b0 < 0.0 ? -1 : 0);
  if (R > 2.0 && g0 > 0.0) out.pole_ln_l = 8.0 * M_PI / ((R - 2.0) * g0);

  const double h = ln_l_max / steps;
  double g = g0, l = 0.0;
  out.points.push_back({l, g});
  for (int s = 0; s < steps; ++s) {
    if (l + h >= out.pole_ln_l * (1.0 - 1e-9)) {
      out.truncated = true;
      break;
    }
    const double k1 = beta_diii(g, R);
    const double k2 = beta_diii(g + 0.5 * h * k1, R);
    const double k3 = beta_diii(g + 0.5 * h * k2, R);
    const double k4 = beta_diii(g + h * k3, R);
    g += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    l += h;
    out.points.push_back({l, g});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Saddle trace identities
// ---------------------------------------------------------------------------

/// Diagonal-structured saddle configuration with density parameter rho:
/// Q0^2 = 1, it satisfies the symplectic relation
/// (sigma_0 x tau_x) Q0^T (sigma_0 x tau_x) = -Q0, and
/// Tr[Q0 (sigma_z x tau_z)] = 4 - 8 rho. The off-diagonal scale q1 != 0 is a
/// free gauge of the family.
inline Eigen::Matrix4cd saddle_q0(double rho, double q1 = 1.0) {
  if (q1 == 0.0) throw ConfigError("q1", "off-diagonal scale must be nonzero");
  const double q01 = 1.0 - 2.0 * rho;
  const double nu = 4.0 * rho * (1.0 - rho);
  const double q4 = -nu / q1;
  Eigen::Matrix4cd q = Eigen::Matrix4cd::Zero();
  q(0, 0) = q01;
  q(1, 1) = -q01;
  q(2, 2) = -q01;
  q(3, 3) = q01;
  q(0, 2) = q1;
  q(1, 3) = q4;
  q(2, 0) = -q4;
  q(3, 1) = -q1;
  return q;
}

struct TraceIdentityCheck {
  double rho_from_trace = 0.0;
  double lhs = 0.0;      ///< 2 (1 - nu)
  double rhs = 0.0;      ///< (1/8) Tr[Q0 T_zz]^2
  double residual = 0.0;
};

/// Checks 2 (1 - nu) = (1/8) Tr[Q0 T_zz]^2 with nu = 4 rho (1 - rho) and
/// rho = 1/2 - (1/8) Tr[Q0 T_zz].
inline TraceIdentityCheck check_trace_identity(const Eigen::Matrix4cd& q0) {
  const Eigen::Matrix4cd t_zz = pauli_product(3, 3);
  const double tr = (q0 * t_zz).trace().real();
  TraceIdentityCheck out;
  out.rho_from_trace = 0.5 - tr / 8.0;
  const double nu = 4.0 * out.rho_from_trace * (1.0 - out.rho_from_trace);
  out.lhs = 2.0 * (1.0 - nu);
  out.rhs = tr * tr / 8.0;
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace mfchain
