// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>

#include "mfchain/model.hpp"
#include "mfchain/rng.hpp"

using namespace mfchain;

namespace {

ModelParams make(double J, double eta, double h, double gamma, int L,
                 Boundary b = Boundary::periodic) {
  ModelParams p;
  p.hopping = J;
  p.pairing = eta;
  p.field = h;
  p.rate = gamma;
  p.sites = L;
  p.boundary = b;
  return p;
}

// Independent oracle: positive eigenvalue of the 2x2 momentum-space
// Bogoliubov block [[eps, d],[conj(d), -eps]].
double block_energy(const ModelParams& p, double k) {
  Eigen::Matrix2cd blk;
  const double eps = 2.0 * p.hopping * std::cos(k) - p.field;
  const Complex d(0.0, -2.0 * p.pairing * std::sin(k));
  blk << eps, d, std::conj(d), -eps;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(blk);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

TEST_CASE("dispersion closed form") {
  SECTION("gap closes at k = pi/2 for the critical hopping chain") {
    REQUIRE(dispersion(make(1, 0, 0, 0, 8), M_PI / 2) == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("k = 0 is pairing-blind") {
    REQUIRE(dispersion(make(1, 0.7, 0, 0, 8), 0.0) == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(dispersion(make(1, 0.1, 0, 0, 8), 0.0) == Catch::Approx(2.0).margin(1e-12));
  }
  SECTION("matches 2x2 block diagonalization") {
    const ModelParams p = make(0.7, 0.3, 0.5, 0, 8);
    REQUIRE(dispersion(p, 1.1) == Catch::Approx(block_energy(p, 1.1)).margin(1e-12));
  }
  SECTION("symmetric in k and reduces to |h - 2J cos k| at eta = 0") {
    RngStream rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      const ModelParams p =
          make(2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 0, 8);
      const double k = (2 * rng.uniform() - 1) * M_PI;
      REQUIRE(dispersion(p, -k) == Catch::Approx(dispersion(p, k)).margin(1e-12));
      ModelParams q = p;
      q.pairing = 0.0;
      REQUIRE(dispersion(q, k) ==
              Catch::Approx(std::abs(q.field - 2 * q.hopping * std::cos(k))).margin(1e-12));
    }
  }
}

TEST_CASE("group velocity") {
  SECTION("vanishes at k = 0") {
    REQUIRE(group_velocity(make(1, 0.4, 0.3, 0, 8), 0.0).value ==
            Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("matches central finite difference away from degeneracies") {
    const ModelParams p = make(1, 1, 0, 0, 8);
    const double k = M_PI / 4, d = 1e-6;
    const double fd = (dispersion(p, k + d) - dispersion(p, k - d)) / (2 * d);
    const Velocity v = group_velocity(p, k);
    REQUIRE_FALSE(v.degenerate);
    REQUIRE(v.value == Catch::Approx(fd).margin(1e-8));
  }
  SECTION("degenerate branch flags gap closings and keeps |v| finite") {
    const Velocity v = group_velocity(make(1, 0, 0, 0, 8), M_PI / 2);
    REQUIRE(v.degenerate);
    REQUIRE(std::abs(v.value) == Catch::Approx(2.0).margin(1e-5));
  }
  SECTION("antisymmetric in k") {
    RngStream rng(2);
    for (int trial = 0; trial < 50; ++trial) {
      const ModelParams p =
          make(2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 0, 8);
      const double k = (2 * rng.uniform() - 1) * M_PI;
      const Velocity vp = group_velocity(p, k), vm = group_velocity(p, -k);
      if (!vp.degenerate && !vm.degenerate)
        REQUIRE(vp.value == Catch::Approx(-vm.value).margin(1e-10));
    }
  }
}

TEST_CASE("real-space BdG matrix") {
  SECTION("hopping-only L=2 spectrum matches the 2-point momentum grid") {
    const ModelParams p = make(1, 0, 0, 0, 2);
    const Eigen::MatrixXcd m = bdg_matrix(p, false).mat;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + 4);
    std::sort(ev.begin(), ev.end());
    REQUIRE(ev[0] == Catch::Approx(-2.0).margin(1e-12));
    REQUIRE(ev[1] == Catch::Approx(-2.0).margin(1e-12));
    REQUIRE(ev[2] == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(ev[3] == Catch::Approx(2.0).margin(1e-12));
  }
  SECTION("gamma enters as -i gamma/2 on the particle block, +i gamma/2 on holes") {
    const ModelParams p = make(0.8, 0.5, 0.2, 0.7, 5);
    const Eigen::MatrixXcd diff = bdg_matrix(p, true).mat - bdg_matrix(p, false).mat;
    Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(10, 10);
    for (int j = 0; j < 5; ++j) {
      expected(j, j) = Complex(0, -0.35);
      expected(5 + j, 5 + j) = Complex(0, 0.35);
    }
    REQUIRE((diff - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("pairing block is antisymmetric") {
    const ModelParams p = make(1, 0.5, 0, 0, 4);
    const Eigen::MatrixXcd m = bdg_matrix(p, false).mat;
    const Eigen::MatrixXcd delta = m.topRightCorner(4, 4);
    REQUIRE((delta + delta.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("Fourier consistency: spectrum equals {+-xi_k} on the momentum grid") {
    const ModelParams p = make(0.9, 0.35, 0.45, 0, 8);
    const Eigen::MatrixXcd m = bdg_matrix(p, false).mat;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    std::vector<double> got(es.eigenvalues().data(), es.eigenvalues().data() + 16);
    std::vector<double> expect;
    for (int n = 0; n < 8; ++n) {
      const double xi = dispersion(p, p.momentum(n));
      expect.push_back(xi);
      expect.push_back(-xi);
    }
    std::sort(got.begin(), got.end());
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < 16; ++i) REQUIRE(got[i] == Catch::Approx(expect[i]).margin(1e-10));
  }
  SECTION("open boundary at L=1 degenerates to the on-site matrix") {
    const ModelParams p = make(1, 0.5, 0.3, 0, 1, Boundary::open);
    const Eigen::MatrixXcd m = bdg_matrix(p, false).mat;
    REQUIRE(m.rows() == 2);
    REQUIRE(std::abs(m(0, 0) - Complex(-0.3)) < 1e-14);
    REQUIRE(std::abs(m(1, 1) - Complex(0.3)) < 1e-14);
  }
}

TEST_CASE("band-velocity second moment v0^2") {
  SECTION("free hopping chain gives exactly 2") {
    REQUIRE(v0_squared(make(1, 0, 0, 0.5, 8)) == Catch::Approx(2.0).margin(1e-6));
  }
  SECTION("flat band gives 0") {
    REQUIRE(v0_squared(make(0, 0, 1, 0.5, 8)) == Catch::Approx(0.0).margin(1e-14));
  }
  SECTION("stable under grid refinement") {
    const ModelParams p = make(1, 1, 0, 0.5, 8);
    REQUIRE(v0_squared(p, 4096) == Catch::Approx(v0_squared(p, 8192)).margin(1e-8));
  }
}
