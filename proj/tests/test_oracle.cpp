// Copyright 2026 The spinor-adiabatic Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch_amalgamated.hpp>

#include <random>

#include "spinor/hilbert.hpp"
#include "spinor/observables.hpp"
#include "spinor/oracle.hpp"

using namespace spinor;
using namespace spinor::oracle;

TEST_CASE("Full Fock basis enumerates every composition once", "[oracle]") {
  for (std::size_t n = 1; n <= max_atoms; ++n) {
    const FullFockBasis basis(n);
    REQUIRE(basis.dim() == (n + 1) * (n + 2) / 2);
    for (std::size_t i = 0; i < basis.dim(); ++i) {
      const auto& s = basis.state(i);
      REQUIRE(s[0] + s[1] + s[2] == n);
      REQUIRE(basis.find(s) == static_cast<std::ptrdiff_t>(i));
    }
  }
  REQUIRE_THROWS_AS(FullFockBasis(13), InvalidArgument);
  REQUIRE_THROWS_AS(FullFockBasis(0), InvalidArgument);
}

TEST_CASE("Single spin-1: L^2 = 2", "[oracle]") {
  const auto ops = build_full_operators(1);
  REQUIRE((ops.l2 - 2.0 * DenseMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("Angular momentum algebra", "[oracle]") {
  const std::complex<double> i(0.0, 1.0);
  for (std::size_t n : {1u, 2u, 5u, 8u}) {
    const auto ops = build_full_operators(n);
    REQUIRE((ops.lx * ops.ly - ops.ly * ops.lx - i * ops.lz).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE((ops.ly * ops.lz - ops.lz * ops.ly - i * ops.lx).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE((ops.l2 * ops.lz - ops.lz * ops.l2).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("Projection onto the Lz = 0 sector", "[oracle]") {
  const FullFockBasis basis(4);
  const auto ops = build_full_operators(basis);
  const auto n0 = project_lz0(ops.n0, basis);
  REQUIRE(n0.rows() == 3);
  REQUIRE((n0.diagonal().real() - Eigen::Vector3d(4, 2, 0)).cwiseAbs().maxCoeff() < 1e-14);
  REQUIRE(project_lz0(ops.lz, basis).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE_THROWS_AS(project_lz0(ops.lx, basis), InvalidArgument);

  const auto l2 = project_lz0(build_full_operators(2).l2, FullFockBasis(2));
  REQUIRE(std::abs(l2(0, 0) - 4.0) < 1e-12);
  REQUIRE(std::abs(l2(1, 1) - 2.0) < 1e-12);
  REQUIRE(std::abs(l2(0, 1) - 2.0 * std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("L^2 spectrum on the full space and on the sector", "[oracle]") {
  for (std::size_t n = 1; n <= 8; ++n) {
    const FullFockBasis basis(n);
    const auto ops = build_full_operators(basis);
    // Bosonic symmetric space of N spin-1: L = N, N-2, ... each once per Lz.
    for (double ev : dense_eigenvalues(ops.l2)) {
      const double l = 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * ev));
      const double rounded = std::round(l);
      REQUIRE(std::abs(l - rounded) < 1e-8);
      REQUIRE(static_cast<std::size_t>(rounded) % 2 == n % 2);
    }
    const auto sector = dense_eigenvalues(project_lz0(ops.l2, basis));
    REQUIRE(sector.size() == n / 2 + 1);
    for (std::size_t i = 0; i < sector.size(); ++i) {
      const double l = static_cast<double>(n % 2 + 2 * i);
      REQUIRE(std::abs(sector[i] - l * (l + 1.0)) < 1e-10);
    }
  }
}

TEST_CASE("Expectations of mapped random states agree", "[oracle]") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (std::size_t n = 1; n <= 10; ++n) {
    const SectorBasis sector(n);
    const FullFockBasis full(n);
    const auto ops = build_full_operators(full);
    for (int trial = 0; trial < 5; ++trial) {
      StateVector psi(sector.dim());
      for (auto& a : psi.amplitudes) a = {g(rng), g(rng)};
      psi.normalize();
      const auto v = embed(full, psi);
      const double l2_full = (v.adjoint() * ops.l2 * v)(0, 0).real();
      const double n0_full = (v.adjoint() * ops.n0 * v)(0, 0).real();
      REQUIRE(std::abs(l2_full - l2_expectation(sector, psi)) < 1e-12 * std::max(1.0, l2_full));
      REQUIRE(std::abs(n0_full / n - n0_fraction(sector, psi)) < 1e-12);
    }
  }
}

TEST_CASE("Monte-Carlo loss sampler", "[oracle]") {
  // Fixed k: Var(Lz) = 2 k p (1 - p) exactly.
  StateVector fixed(11);
  fixed.amplitudes[6] = 1.0;
  const auto r = monte_carlo_loss_variance(fixed, 0.2, 200000, 3);
  REQUIRE(std::abs(r.variance - 2.0 * 6.0 * 0.2 * 0.8) < 4.0 * r.standard_error);
  REQUIRE(std::abs(r.mean) < 0.01);
  const auto none = monte_carlo_loss_variance(fixed, 0.0, 100, 3);
  REQUIRE(none.variance == 0.0);
  REQUIRE_THROWS_AS(monte_carlo_loss_variance(fixed, 1.0, 100, 3), InvalidArgument);
}
