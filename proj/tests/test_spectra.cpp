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
#include <random>

#include "spinor/hilbert.hpp"
#include "spinor/oracle.hpp"
#include "spinor/spectra.hpp"

using Catch::Approx;
using namespace spinor;

namespace {

double residual(const TridiagonalOperator& op, const EigenPair& p) {
  std::vector<Complex> y(op.dim());
  op.apply<Complex>(p.vector.amplitudes, y);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::norm(y[i] - p.value * p.vector.amplitudes[i]);
  return std::sqrt(s);
}

TridiagonalOperator random_operator(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  TridiagonalOperator op;
  op.diag.resize(n);
  op.offdiag.resize(n - 1);
  for (double& d : op.diag) d = u(rng);
  for (double& e : op.offdiag) e = u(rng);
  return op;
}

}  // namespace

TEST_CASE("Two-level examples", "[spectra]") {
  const auto l2 = build_l2(SectorBasis(2));
  const auto pairs = extreme_eigenpairs(l2, Which::lowest, 2);
  REQUIRE(pairs[0].value == Approx(0.0).margin(1e-12));
  REQUIRE(pairs[1].value == Approx(6.0).epsilon(1e-13));

  const auto gs = extreme_eigenpairs(build_hamiltonian({2, -1.0, 0.0}), Which::lowest, 1)[0];
  REQUIRE(gs.value == Approx(-3.0).epsilon(1e-13));
  REQUIRE(gs.vector.amplitudes[0].real() == Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-10));
  REQUIRE(gs.vector.amplitudes[1].real() == Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("Diagonal operator gives coordinate vectors", "[spectra]") {
  TridiagonalOperator op{{3.0, -1.5, 7.0, 0.25}, {0.0, 0.0, 0.0}};
  const auto low = extreme_eigenpairs(op, Which::lowest, 1)[0];
  REQUIRE(low.value == -1.5);
  REQUIRE(std::abs(low.vector.amplitudes[1]) == Approx(1.0).epsilon(1e-14));
  const auto high = extreme_eigenpairs(op, Which::highest, 2);
  REQUIRE(high[0].value == 7.0);
  REQUIRE(high[1].value == 3.0);
}

TEST_CASE("Agreement with dense diagonalization", "[spectra][oracle]") {
  std::mt19937_64 rng(2024);
  for (std::size_t n : {1u, 2u, 3u, 17u, 64u, 200u}) {
    const auto op = random_operator(n, rng);
    const auto dense = oracle::dense_eigenvalues(oracle::to_dense(op));
    const std::size_t count = std::min<std::size_t>(n, 5);
    const auto low = extreme_eigenpairs(op, Which::lowest, count);
    const auto high = extreme_eigenpairs(op, Which::highest, count);
    for (std::size_t i = 0; i < count; ++i) {
      REQUIRE(std::abs(low[i].value - dense[i]) < 1e-9);
      REQUIRE(std::abs(high[i].value - dense[n - 1 - i]) < 1e-9);
      REQUIRE(residual(op, low[i]) <= 1e-8 * op.norm_bound());
      REQUIRE(std::abs(low[i].vector.norm() - 1.0) < 1e-10);
    }
  }
  for (std::size_t n : {1u, 6u, 33u, 120u})
    for (double q : {-5.0, 0.0, 3.9, 5.0}) {
      const auto h = build_hamiltonian({n, -1.0, q});
      const auto dense = oracle::dense_eigenvalues(oracle::to_dense(h));
      const auto low = extreme_eigenvalues(h, Which::lowest, std::min<std::size_t>(h.dim(), 3));
      for (std::size_t i = 0; i < low.size(); ++i) REQUIRE(std::abs(low[i] - dense[i]) < 1e-9);
    }
}

TEST_CASE("Sturm count is consistent with returned eigenvalues", "[spectra]") {
  std::mt19937_64 rng(5);
  const auto op = random_operator(150, rng);
  const auto low = extreme_eigenvalues(op, Which::lowest, 10);
  for (std::size_t i = 0; i + 1 < low.size(); ++i) {
    const double mid = 0.5 * (low[i] + low[i + 1]);
    REQUIRE(sturm_count(op, mid) == i + 1);
  }
  REQUIRE(sturm_count(op, op.gershgorin().first - 1.0) == 0);
  REQUIRE(sturm_count(op, op.gershgorin().second + 1.0) == 150);
}

TEST_CASE("Degenerate cluster yields an orthonormal basis", "[spectra]") {
  // Two decoupled identical blocks: every eigenvalue is doubly degenerate.
  TridiagonalOperator op{{1.0, 2.0, 1.0, 2.0}, {0.5, 0.0, 0.5}};
  const auto pairs = extreme_eigenpairs(op, Which::lowest, 2);
  REQUIRE(pairs[0].value == Approx(pairs[1].value).epsilon(1e-14));
  REQUIRE(pairs[0].multiplicity == 2);
  REQUIRE(std::abs(inner(pairs[0].vector, pairs[1].vector)) < 1e-10);
  for (const auto& p : pairs) REQUIRE(residual(op, p) < 1e-12);
}

TEST_CASE("Analytic gap at q = 0", "[spectra]") {
  for (std::size_t n : {2u, 4u, 10u, 31u, 100u, 1000u}) {
    const auto g = gap({n, -1.0, 0.0});
    const double expected = (4.0 * n - 2.0) / n;
    REQUIRE(std::abs(g.gap - expected) < 1e-8);
    REQUIRE(g.e0 <= g.e1);
  }
  REQUIRE_THROWS_AS(gap({1, -1.0, 0.0}), InvalidArgument);
}

TEST_CASE("Spectral mirror H(-c1, -q) = -H(c1, q)", "[spectra]") {
  for (double q : {-4.2, -1.0, 0.5, 4.0}) {
    const auto a = extreme_eigenvalues(build_hamiltonian({40, -1.0, q}), Which::lowest, 4);
    const auto b = extreme_eigenvalues(build_hamiltonian({40, 1.0, -q}), Which::highest, 4);
    for (std::size_t i = 0; i < 4; ++i) REQUIRE(std::abs(a[i] + b[i]) < 1e-10);
    const auto g_ferro = gap({40, -1.0, q});
    const auto g_anti = gap({40, 1.0, -q});
    REQUIRE(std::abs(g_ferro.gap - g_anti.gap) < 1e-10);
  }
}

TEST_CASE("Large sector eigenpairs stay residual-bounded", "[spectra]") {
  const auto h = build_hamiltonian({100000, -1.0, 4.0});
  const auto pairs = extreme_eigenpairs(h, Which::lowest, 2);
  for (const auto& p : pairs) REQUIRE(residual(h, p) <= 1e-8 * h.norm_bound());
  REQUIRE(std::abs(inner(pairs[0].vector, pairs[1].vector)) < 1e-8);
}

TEST_CASE("Invalid requests", "[spectra]") {
  TridiagonalOperator op{{1.0, 2.0}, {0.5}};
  REQUIRE_THROWS_AS(extreme_eigenvalues(op, Which::lowest, 3), InvalidArgument);
  TridiagonalOperator bad{{1.0, std::nan("")}, {0.5}};
  REQUIRE_THROWS_AS(extreme_eigenpairs(bad, Which::lowest, 1), InvalidArgument);
  TridiagonalOperator ragged{{1.0, 2.0}, {}};
  REQUIRE_THROWS_AS(extreme_eigenvalues(ragged, Which::lowest, 1), InvalidArgument);
}
