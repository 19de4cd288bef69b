// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "mfchain/rng.hpp"

using namespace mfchain;

TEST_CASE("streams are deterministic in (master_seed, index)") {
  RngStream a = RngStream::for_trajectory(42, 7);
  RngStream b = RngStream::for_trajectory(42, 7);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct indices give distinct streams") {
  RngStream a = RngStream::for_trajectory(42, 0);
  RngStream b = RngStream::for_trajectory(42, 1);
  int agree = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++agree;
  REQUIRE(agree == 0);
}

TEST_CASE("uniforms live in [0,1) with sane moments") {
  RngStream r(123);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  REQUIRE(std::abs(sum / n - 0.5) < 5e-3);
  REQUIRE(std::abs(sumsq / n - 1.0 / 3.0) < 5e-3);
}

TEST_CASE("normals have sane first two moments") {
  RngStream r(99);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sumsq += x * x;
  }
  REQUIRE(std::abs(sum / n) < 1e-2);
  REQUIRE(std::abs(sumsq / n - 1.0) < 2e-2);
}
