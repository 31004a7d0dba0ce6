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

#include <cmath>

#include "spinor/hilbert.hpp"
#include "spinor/observables.hpp"
#include "spinor/oracle.hpp"
#include "spinor/spectra.hpp"

using Catch::Approx;
using namespace spinor;

TEST_CASE("Sector basis dimension and occupations", "[hilbert]") {
  for (std::size_t n = 1; n <= 21; ++n) {
    const SectorBasis basis(n);
    REQUIRE(basis.dim() == n / 2 + 1);
    for (std::size_t k = 0; k < basis.dim(); ++k) {
      const auto occ = basis.occupation(k);
      REQUIRE(occ.n_plus + occ.n_zero + occ.n_minus == n);
      REQUIRE(occ.n_plus == occ.n_minus);
    }
  }
  REQUIRE_THROWS_AS(SectorBasis(0), InvalidArgument);
  REQUIRE_THROWS_AS(SectorBasis(4).occupation(3), InvalidArgument);
}

TEST_CASE("L^2 closed form for small N", "[hilbert]") {
  SECTION("N = 1 is a single spin-1") {
    const auto l2 = build_l2(SectorBasis(1));
    REQUIRE(l2.diag.size() == 1);
    REQUIRE(l2.offdiag.empty());
    REQUIRE(l2.diag[0] == 2.0);
  }
  SECTION("N = 2") {
    const auto l2 = build_l2(SectorBasis(2));
    REQUIRE(l2.diag == std::vector<double>{4.0, 2.0});
    REQUIRE(l2.offdiag[0] == Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
    const auto ev = extreme_eigenvalues(l2, Which::lowest, 2);
    REQUIRE(ev[0] == Approx(0.0).margin(1e-12));
    REQUIRE(ev[1] == Approx(6.0).epsilon(1e-12));
  }
  SECTION("N = 4 spectrum is {0, 6, 20}") {
    const auto ev = extreme_eigenvalues(build_l2(SectorBasis(4)), Which::lowest, 3);
    REQUIRE(ev[0] == Approx(0.0).margin(1e-11));
    REQUIRE(ev[1] == Approx(6.0).epsilon(1e-12));
    REQUIRE(ev[2] == Approx(20.0).epsilon(1e-12));
  }
}

TEST_CASE("Sector operators match the full Fock-space oracle", "[hilbert][oracle]") {
  for (std::size_t n = 1; n <= 8; ++n) {
    const oracle::FullFockBasis full(n);
    const auto ops = oracle::build_full_operators(full);
    const auto l2_ref = oracle::project_lz0(ops.l2, full);
    const auto l2 = oracle::to_dense(build_l2(SectorBasis(n)));
    REQUIRE((l2 - l2_ref).cwiseAbs().maxCoeff() <= 1e-12);
    for (double c1 : {-1.0, 1.0})
      for (double q : {-5.0, -1.0, 0.0, 1.0, 5.0}) {
        const auto h_ref = oracle::project_lz0(oracle::full_hamiltonian(full, c1, q), full);
        const auto h = oracle::to_dense(build_hamiltonian({n, c1, q}));
        INFO("N=" << n << " c1=" << c1 << " q=" << q);
        REQUIRE((h - h_ref).cwiseAbs().maxCoeff() <= 1e-12);
      }
  }
}

TEST_CASE("Hamiltonian examples", "[hilbert]") {
  SECTION("N = 2, q = 0: ground energy c1 (N + 1)") {
    const auto ev = extreme_eigenvalues(build_hamiltonian({2, -1.0, 0.0}), Which::lowest, 2);
    REQUIRE(ev[0] == Approx(-3.0).epsilon(1e-13));
    REQUIRE(ev[1] == Approx(0.0).margin(1e-13));
  }
  SECTION("N = 2, large q: ground state is the m = 0 product state") {
    const auto gs = tracked_eigenpair({2, -1.0, 100.0});
    REQUIRE(gs.vector.probability(0) > 0.999);
  }
  SECTION("N = 4, q = 0: gap 3.5") {
    const auto ev = extreme_eigenvalues(build_hamiltonian({4, -1.0, 0.0}), Which::lowest, 2);
    REQUIRE(ev[1] - ev[0] == Approx(3.5).epsilon(1e-12));
  }
  SECTION("off-diagonal is (c1/N) times that of L^2") {
    const auto l2 = build_l2(SectorBasis(9));
    const auto h = build_hamiltonian({9, 2.5, -0.7});
    for (std::size_t j = 0; j < l2.offdiag.size(); ++j)
      REQUIRE(h.offdiag[j] == Approx(2.5 / 9.0 * l2.offdiag[j]).epsilon(1e-15));
    for (std::size_t k = 0; k < h.dim(); ++k)
      REQUIRE(h.diag[k] == Approx(2.5 / 9.0 * l2.diag[k] + 0.7 * (9.0 - 2.0 * k)).epsilon(1e-14));
  }
}

TEST_CASE("Model parameter validation and canonical units", "[hilbert]") {
  REQUIRE_THROWS_AS(build_hamiltonian({4, 0.0, 1.0}), InvalidArgument);
  REQUIRE_THROWS_AS(build_hamiltonian({0, -1.0, 1.0}), InvalidArgument);
  REQUIRE_THROWS_AS(build_hamiltonian({4, -1.0, std::nan("")}), InvalidArgument);
  const ModelParams raw{100, -2.0 * M_PI * 7.0, 3.0 * 2.0 * M_PI * 7.0};
  const ModelParams canon = raw.canonical();
  REQUIRE(canon.c1 == -1.0);
  REQUIRE(canon.q == Approx(3.0).epsilon(1e-15));
  REQUIRE(ModelParams{5, 0.25, -1.0}.canonical().c1 == 1.0);
}

TEST_CASE("Product state", "[hilbert]") {
  const SectorBasis basis(10);
  const auto psi = product_state_m0(basis);
  REQUIRE(psi.dim() == 6);
  REQUIRE(psi.amplitudes[0] == Complex(1.0, 0.0));
  for (std::size_t k = 1; k < psi.dim(); ++k) REQUIRE(psi.amplitudes[k] == Complex(0.0, 0.0));
  REQUIRE(l2_expectation(basis, psi) == 20.0);
  REQUIRE(entanglement_depth(basis, psi).xi == 2.0);
}

TEST_CASE("n0 of eigenstates lies in [0, N]", "[hilbert]") {
  for (std::size_t n : {3u, 10u, 57u})
    for (double q : {-6.0, -4.0, 0.0, 4.0, 6.0}) {
      const auto pairs = extreme_eigenpairs(build_hamiltonian({n, -1.0, q}), Which::lowest, std::min<std::size_t>(3, n / 2 + 1));
      for (const auto& p : pairs) {
        const double f = n0_fraction(SectorBasis(n), p.vector);
        REQUIRE(f >= -1e-14);
        REQUIRE(f <= 1.0 + 1e-14);
      }
    }
}
