// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "mfchain/errors.hpp"
#include "mfchain/kron.hpp"
#include "mfchain/model.hpp"
#include "mfchain/rng.hpp"

namespace mfchain {

// ---------------------------------------------------------------------------
// Pauli sign algebra on the 16 Keldysh (sigma) x Nambu (tau) products.
// Index order: {0, x, y, z} = {0, 1, 2, 3}.
// ---------------------------------------------------------------------------

/// +1 if sigma_a and sigma_b commute, -1 if they anticommute.
constexpr int pauli_comm_sign(int a, int b) {
  return (a == 0 || b == 0 || a == b) ? +1 : -1;
}

/// Sign of complex conjugation, sigma_a^* = eps(a) sigma_a.
constexpr int pauli_conj_sign(int a) { return a == 2 ? -1 : +1; }

/// Sign s in C (sigma_i x tau_j)^* C = s (sigma_i x tau_j) with C = sigma_x x tau_x.
constexpr int conjugation_sign(int i, int j) {
  return pauli_conj_sign(i) * pauli_conj_sign(j) * pauli_comm_sign(i, 1) *
         pauli_comm_sign(j, 1);
}

inline Eigen::Matrix2cd pauli(int a) {
  Eigen::Matrix2cd m;
  switch (a) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, Complex(0, -1), Complex(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

/// sigma_i x tau_j as a 4x4 matrix.
inline Eigen::Matrix4cd pauli_product(int i, int j) {
  Eigen::Matrix4cd out;
  const Eigen::Matrix2cd s = pauli(i), t = pauli(j);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      out.block<2, 2>(2 * a, 2 * b) = s(a, b) * t;
  return out;
}

// ---------------------------------------------------------------------------
// Constraint scenarios and sector tables
// ---------------------------------------------------------------------------

/// Which couplings are switched on; each nonzero coupling contributes a
/// commutant the rotation generators must commute with:
///   gamma != 0 -> sigma_x x tau_z   (measurement vertex)
///   J     != 0 -> sigma_0 x tau_z   (tight-binding term)
///   eta   != 0 -> sigma_0 x tau_y   (pairing term)
/// and optionally the saddle configuration sigma_z x tau_0.
/// With every flag off only the structural constraints (unitarity and the
/// particle-hole conjugation C = sigma_x x tau_x) remain.
struct ConstraintScenario {
  bool J_nonzero = false;
  bool eta_nonzero = false;
  bool gamma_nonzero = false;
  bool saddle_invariance = false;

  std::vector<std::array<int, 2>> commutants() const {
    std::vector<std::array<int, 2>> out;
    if (gamma_nonzero) out.push_back({1, 3});
    if (J_nonzero) out.push_back({0, 3});
    if (eta_nonzero) out.push_back({0, 2});
    if (saddle_invariance) out.push_back({3, 0});
    return out;
  }

  static ConstraintScenario structural() { return {}; }
  static ConstraintScenario u1_limit(bool saddle) { return {true, false, true, saddle}; }
  static ConstraintScenario general(bool saddle) { return {true, true, true, saddle}; }
  static ConstraintScenario pairing_limit(bool saddle) { return {false, true, true, saddle}; }
};

enum class CellType { Zero, AntisymReal, SymImag };

inline const char* cell_label(CellType c) {
  switch (c) {
    case CellType::Zero: return "";
    case CellType::AntisymReal: return "A,R";
    default: return "S,I";
  }
}

/// 4x4 grid over (sigma_i, tau_j) describing the replica-space generator
/// block W_ij of the rotation exp[sum_ij W_ij (sigma_i x tau_j)].
struct SectorTable {
  std::array<std::array<CellType, 4>, 4> cell{};  ///< [sigma][tau]

  CellType at(int sigma, int tau) const { return cell[sigma][tau]; }

  int count(CellType t) const {
    int n = 0;
    for (const auto& row : cell)
      for (CellType c : row)
        if (c == t) ++n;
    return n;
  }
};

/// Method 1 cell analysis. A basis element sigma_i x tau_j is excluded if it
/// anticommutes with any active commutant; otherwise the conjugation sign
/// under C decides between a real W (antisymmetric, from skew-Hermiticity)
/// and an imaginary W (symmetric).
inline SectorTable sector_table(const ConstraintScenario& scenario) {
  SectorTable t;
  const auto comms = scenario.commutants();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      bool zero = false;
      for (const auto& m : comms)
        if (pauli_comm_sign(i, m[0]) * pauli_comm_sign(j, m[1]) < 0) {
          zero = true;
          break;
        }
      if (zero)
        t.cell[i][j] = CellType::Zero;
      else
        t.cell[i][j] = conjugation_sign(i, j) > 0 ? CellType::AntisymReal : CellType::SymImag;
    }
  return t;
}

/// Integer-coefficient polynomial N_f(R) = [a R^2 + b R] / 2 with
/// a = n_A + n_S and b = n_S - n_A.
struct NfPolynomial {
  int n_antisym = 0;
  int n_sym = 0;

  long eval(long R) const {
    return n_antisym * (R * R - R) / 2 + n_sym * (R * R + R) / 2;
  }

  bool operator==(const NfPolynomial& o) const {
    return n_antisym == o.n_antisym && n_sym == o.n_sym;
  }

  std::string str() const {
    const int a = n_antisym + n_sym;
    const int b = n_sym - n_antisym;
    auto body = [](int ca, int cb) {
      std::string s;
      if (ca != 0) s = (ca == 1 ? "R^2" : std::to_string(ca) + "R^2");
      if (cb != 0) {
        if (!s.empty()) s += (cb > 0 ? " + " : " - ");
        else if (cb < 0) s += "-";
        const int c = std::abs(cb);
        s += (c == 1 ? "R" : std::to_string(c) + "R");
      }
      if (s.empty()) s = "0";
      return s;
    };
    if (a % 2 == 0 && b % 2 == 0) return body(a / 2, b / 2);
    return "(" + body(a, b) + ")/2";
  }
};

inline NfPolynomial nf_polynomial(const SectorTable& t) {
  return {t.count(CellType::AntisymReal), t.count(CellType::SymImag)};
}

inline long free_parameter_count(const SectorTable& t, int R) {
  if (R < 1) throw ConfigError("R", "replica count must be >= 1");
  return nf_polynomial(t).eval(R);
}

// ---------------------------------------------------------------------------
// Group identification by dimension matching
// ---------------------------------------------------------------------------

struct ClassResult {
  NfPolynomial nf_g, nf_h;
  SectorTable table_g, table_h;
  std::string group_g, group_h, manifold, az_class;
  bool classified = false;
};

/// Matches N_f(R) for R = 1..6 against the candidate group dimensions and
/// reads the (G, H) pair off a fixed lookup. Reports the polynomials without
/// a class when nothing matches.
inline ClassResult classify_scenario(ConstraintScenario scenario) {
  if (!scenario.gamma_nonzero || (!scenario.J_nonzero && !scenario.eta_nonzero))
    throw ConfigError("scenario",
                      "classification covers the three monitored regimes (gamma != 0)");
  scenario.saddle_invariance = false;
  ClassResult res;
  res.table_g = sector_table(scenario);
  scenario.saddle_invariance = true;
  res.table_h = sector_table(scenario);
  res.nf_g = nf_polynomial(res.table_g);
  res.nf_h = nf_polynomial(res.table_h);

  struct Candidate {
    const char* name;
    long (*dim)(long);
  };
  static const Candidate candidates[] = {
      {"U(R) x U(R)", [](long R) { return 2 * R * R; }},
      {"U(R)", [](long R) { return R * R; }},
      {"O(R) x O(R)", [](long R) { return R * R - R; }},
      {"O(R)", [](long R) { return (R * R - R) / 2; }},
      {"O(2R)", [](long R) { return 2 * R * R - R; }},
  };
  auto match = [&](const NfPolynomial& nf) -> const char* {
    for (const auto& c : candidates) {
      bool ok = true;
      for (long R = 1; R <= 6 && ok; ++R) ok = (nf.eval(R) == c.dim(R));
      if (ok) return c.name;
    }
    return nullptr;
  };
  const char* g = match(res.nf_g);
  const char* h = match(res.nf_h);
  if (!g || !h) return res;  // unclassified, polynomials still reported
  res.group_g = g;
  res.group_h = h;

  struct Entry {
    const char* g;
    const char* h;
    const char* manifold;
    const char* az;
  };
  static const Entry lookup[] = {
      {"U(R) x U(R)", "U(R)", "SU(R)", "AIII"},
      {"O(R) x O(R)", "O(R)", "SO(R)", "DIII"},
      {"O(2R)", "U(R)", "SO(2R)/U(R)", "D"},
  };
  for (const auto& e : lookup)
    if (res.group_g == e.g && res.group_h == e.h) {
      res.manifold = e.manifold;
      res.az_class = e.az;
      res.classified = true;
      return res;
    }
  return res;
}

/// Dimension of the reported quotient manifold, used by the internal
/// consistency check N_f(G) - N_f(H) = dim(G/H). The SU/SO restriction is a
/// unit-determinant annotation; the counting happens at the U/O level.
inline long manifold_dimension(const ClassResult& r, long R) {
  if (r.az_class == "AIII") return R * R;                  // U(R) quotient
  if (r.az_class == "DIII") return R * (R - 1) / 2;        // O(R) quotient
  if (r.az_class == "D") return R * R - R;                 // O(2R)/U(R)
  return -1;
}

// ---------------------------------------------------------------------------
// Oracle 1: numerical nullspace of the constraint operator
// ---------------------------------------------------------------------------

struct NullspaceResult {
  int dimension = 0;
  bool precision_warning = false;
};

/// Builds the real-linear constraint operator acting on generic
/// anti-Hermitian 4R x 4R generators X:
///   C X^* C = X,   [X, 1_R x M] = 0 for each active commutant M,
/// and returns the numerical nullspace dimension by singular value counting
/// (threshold 1e-9 * sigma_max). Independent of the sign algebra above.
inline NullspaceResult nullspace_oracle(const ConstraintScenario& scenario, int R) {
  if (R < 1 || R > 3) throw ConfigError("R", "nullspace oracle supports R in {1,2,3}");
  const int n = 4 * R;
  const int n_params = n * n;
  const Eigen::MatrixXcd id_r = Eigen::MatrixXcd::Identity(R, R);
  const Eigen::MatrixXcd c_full = kron(id_r, Eigen::MatrixXcd(pauli_product(1, 1)));
  std::vector<Eigen::MatrixXcd> comms;
  for (const auto& m : scenario.commutants())
    comms.push_back(kron(id_r, Eigen::MatrixXcd(pauli_product(m[0], m[1]))));

  const int n_constraints = 1 + static_cast<int>(comms.size());
  Eigen::MatrixXd a(2 * n * n * n_constraints, n_params);

  // basis of anti-Hermitian matrices
  std::vector<Eigen::MatrixXcd> basis;
  basis.reserve(n_params);
  for (int p = 0; p < n; ++p)
    for (int q = p; q < n; ++q) {
      Eigen::MatrixXcd b1 = Eigen::MatrixXcd::Zero(n, n);
      if (p == q) {
        b1(p, p) = Complex(0, 1);
        basis.push_back(b1);
      } else {
        b1(p, q) = 1.0;
        b1(q, p) = -1.0;
        basis.push_back(b1);
        Eigen::MatrixXcd b2 = Eigen::MatrixXcd::Zero(n, n);
        b2(p, q) = Complex(0, 1);
        b2(q, p) = Complex(0, 1);
        basis.push_back(b2);
      }
    }

  for (int col = 0; col < n_params; ++col) {
    const Eigen::MatrixXcd& x = basis[col];
    int row0 = 0;
    auto put = [&](const Eigen::MatrixXcd& r) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          a(row0 + 2 * (i * n + j), col) = r(i, j).real();
          a(row0 + 2 * (i * n + j) + 1, col) = r(i, j).imag();
        }
      row0 += 2 * n * n;
    };
    put(c_full * x.conjugate() * c_full - x);
    for (const auto& m : comms) put(x * m - m * x);
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double thresh = 1e-9 * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++rank;
  NullspaceResult out;
  out.dimension = n_params - rank;
  if (rank > 0 && rank < sv.size()) {
    const double above = sv(rank - 1);
    const double below = std::max(sv(rank), 1e-300);
    out.precision_warning = (above / below) < 10.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle 2: explicit rotation construction from an SO(R) pair
// ---------------------------------------------------------------------------

/// Haar-like sample of SO(R): QR of a Gaussian matrix with sign and
/// determinant fixes.
inline Eigen::MatrixXd random_so(int R, RngStream& rng) {
  Eigen::MatrixXd g(R, R);
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < R; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < R; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  if (q.determinant() < 0) q.col(R - 1) *= -1.0;
  return q;
}

/// Full 4R x 4R rotation built from V+ and V- in SO(R):
///   a = (V+ + V-)/2,  b = (V+ - V-)/2,
///   Rot = a x (sigma_0 x tau_0) + b x (sigma_x x tau_0),
/// replica factor leftmost.
inline Eigen::MatrixXcd rotation_from_so_pair(const Eigen::MatrixXd& v_plus,
                                              const Eigen::MatrixXd& v_minus) {
  const Eigen::MatrixXd a = 0.5 * (v_plus + v_minus);
  const Eigen::MatrixXd b = 0.5 * (v_plus - v_minus);
  return kron(Eigen::MatrixXcd(a.cast<Complex>()), Eigen::MatrixXcd(pauli_product(0, 0))) +
         kron(Eigen::MatrixXcd(b.cast<Complex>()), Eigen::MatrixXcd(pauli_product(1, 0)));
}

struct RotationCheck {
  double resid_unitary = 0.0;  ///< C0
  double resid_conjugation = 0.0;  ///< C1
  double resid_interaction = 0.0;  ///< C2
  double resid_tight_binding = 0.0;  ///< C3
  double resid_pairing = 0.0;  ///< C4
  double resid_saddle = 0.0;
  bool saddle_commutes = false;

  double max_constraint_residual() const {
    return std::max({resid_unitary, resid_conjugation, resid_interaction,
                     resid_tight_binding, resid_pairing});
  }
};

inline RotationCheck check_rotation(const Eigen::MatrixXcd& rot, int R) {
  const Eigen::MatrixXcd id_r = Eigen::MatrixXcd::Identity(R, R);
  const auto lift = [&](int i, int j) {
    return kron(id_r, Eigen::MatrixXcd(pauli_product(i, j)));
  };
  const Eigen::MatrixXcd c_full = lift(1, 1);
  RotationCheck out;
  const int n = 4 * R;
  out.resid_unitary =
      (rot.adjoint() * rot - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  out.resid_conjugation = (c_full * rot.conjugate() * c_full - rot).cwiseAbs().maxCoeff();
  auto comm = [&](const Eigen::MatrixXcd& m) {
    return (rot * m - m * rot).cwiseAbs().maxCoeff();
  };
  out.resid_interaction = comm(lift(1, 3));
  out.resid_tight_binding = comm(lift(0, 3));
  out.resid_pairing = comm(lift(0, 2));
  out.resid_saddle = comm(lift(3, 0));
  out.saddle_commutes = out.resid_saddle <= 1e-10;
  return out;
}

/// Samples n_draws random (V+, V-) pairs and checks every constraint;
/// returns the worst residuals seen.
inline RotationCheck verify_rotation_construction(int R, RngStream& rng, int n_draws = 100) {
  if (R < 2) throw ConfigError("R", "rotation construction needs R >= 2");
  RotationCheck worst;
  bool any_asym_commutes = false;
  for (int d = 0; d < n_draws; ++d) {
    const Eigen::MatrixXd vp = random_so(R, rng);
    const Eigen::MatrixXd vm = random_so(R, rng);
    const RotationCheck c = check_rotation(rotation_from_so_pair(vp, vm), R);
    worst.resid_unitary = std::max(worst.resid_unitary, c.resid_unitary);
    worst.resid_conjugation = std::max(worst.resid_conjugation, c.resid_conjugation);
    worst.resid_interaction = std::max(worst.resid_interaction, c.resid_interaction);
    worst.resid_tight_binding = std::max(worst.resid_tight_binding, c.resid_tight_binding);
    worst.resid_pairing = std::max(worst.resid_pairing, c.resid_pairing);
    if (c.saddle_commutes) any_asym_commutes = true;
  }
  // V+ = V- must commute with the saddle, generic pairs must not.
  const Eigen::MatrixXd v = random_so(R, rng);
  const RotationCheck sym = check_rotation(rotation_from_so_pair(v, v), R);
  worst.resid_saddle = sym.resid_saddle;
  worst.saddle_commutes = sym.saddle_commutes && !any_asym_commutes;
  return worst;
}

}  // namespace mfchain
