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

// Brute-force reference on the full three-mode Fock space. Test fixture only:
// dense matrices built directly from L_mu = sum_{mn} a_m^dag (f_mu)_{mn} a_n
// with the spin-1 matrices f_mu, so nothing here reuses the sector closed
// forms it is meant to check.

#ifndef SPINOR_ORACLE_HPP
#define SPINOR_ORACLE_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "spinor/error.hpp"
#include "spinor/hilbert.hpp"

namespace spinor::oracle {

using DenseMatrix = Eigen::MatrixXcd;

inline constexpr std::size_t max_atoms = 12;

/// Mode index 0, 1, 2 <-> m = +1, 0, -1.
using Occupation = std::array<std::size_t, 3>;

class FullFockBasis {
 public:
  explicit FullFockBasis(std::size_t n_atoms) : n_atoms_(n_atoms) {
    if (n_atoms == 0 || n_atoms > max_atoms)
      throw InvalidArgument("FullFockBasis: n_atoms must lie in [1, 12]");
    for (std::size_t np = 0; np <= n_atoms; ++np)
      for (std::size_t nm = 0; np + nm <= n_atoms; ++nm) {
        index_[{np, n_atoms - np - nm, nm}] = states_.size();
        states_.push_back({np, n_atoms - np - nm, nm});
      }
  }

  std::size_t n_atoms() const noexcept { return n_atoms_; }
  std::size_t dim() const noexcept { return states_.size(); }
  const Occupation& state(std::size_t i) const { return states_.at(i); }

  std::ptrdiff_t find(const Occupation& occ) const {
    auto it = index_.find(occ);
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

  /// Full-space index of the sector state |k, N - 2k, k>.
  std::size_t sector_index(std::size_t k) const {
    return static_cast<std::size_t>(find({k, n_atoms_ - 2 * k, k}));
  }

 private:
  std::size_t n_atoms_;
  std::vector<Occupation> states_;
  std::map<Occupation, std::size_t> index_;
};

struct FullOperators {
  DenseMatrix lx, ly, lz, l2, n0;
};

/// sum_{m,n} f(m,n) a_m^dag a_n on the full Fock space.
inline DenseMatrix bilinear(const FullFockBasis& basis, const Eigen::Matrix3cd& f) {
  DenseMatrix out = DenseMatrix::Zero(static_cast<Eigen::Index>(basis.dim()),
                                      static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t col = 0; col < basis.dim(); ++col) {
    const Occupation& src = basis.state(col);
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n) {
        if (f(m, n) == 0.0 || src[n] == 0) continue;
        Occupation dst = src;
        double amp = std::sqrt(static_cast<double>(dst[n]));
        dst[n] -= 1;
        amp *= std::sqrt(static_cast<double>(dst[m] + 1));
        dst[m] += 1;
        const auto row = basis.find(dst);
        out(row, static_cast<Eigen::Index>(col)) += f(m, n) * amp;
      }
  }
  return out;
}

inline FullOperators build_full_operators(const FullFockBasis& basis) {
  using C = std::complex<double>;
  const double s = 1.0 / std::sqrt(2.0);
  const C i(0.0, 1.0);
  Eigen::Matrix3cd fx, fy, fz, f0;
  fx << 0, s, 0, s, 0, s, 0, s, 0;
  fy << 0, -i * s, 0, i * s, 0, -i * s, 0, i * s, 0;
  fz << 1, 0, 0, 0, 0, 0, 0, 0, -1;
  f0 << 0, 0, 0, 0, 1, 0, 0, 0, 0;
  FullOperators ops;
  ops.lx = bilinear(basis, fx);
  ops.ly = bilinear(basis, fy);
  ops.lz = bilinear(basis, fz);
  ops.n0 = bilinear(basis, f0);
  ops.l2 = ops.lx * ops.lx + ops.ly * ops.ly + ops.lz * ops.lz;
  return ops;
}

inline FullOperators build_full_operators(std::size_t n_atoms) {
  return build_full_operators(FullFockBasis(n_atoms));
}

/// Restriction of an Lz-conserving matrix to the span of |k, N - 2k, k>,
/// ordered by k ascending.
inline DenseMatrix project_lz0(const DenseMatrix& matrix, const FullFockBasis& basis) {
  const FullOperators ops = build_full_operators(basis);
  const double comm = (matrix * ops.lz - ops.lz * matrix).cwiseAbs().maxCoeff();
  if (comm > 1e-10 * std::max(1.0, matrix.cwiseAbs().maxCoeff()))
    throw InvalidArgument("project_lz0: matrix does not commute with Lz");
  const std::size_t dim = basis.n_atoms() / 2 + 1;
  DenseMatrix out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b < dim; ++b)
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          matrix(static_cast<Eigen::Index>(basis.sector_index(a)),
                 static_cast<Eigen::Index>(basis.sector_index(b)));
  return out;
}

/// (c1 / N) L^2 - q n0 on the full space.
inline DenseMatrix full_hamiltonian(const FullFockBasis& basis, double c1, double q) {
  const FullOperators ops = build_full_operators(basis);
  return (c1 / static_cast<double>(basis.n_atoms())) * ops.l2 - q * ops.n0;
}

/// Embeds a sector state into the full Fock space.
inline Eigen::VectorXcd embed(const FullFockBasis& basis, const StateVector& state) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t k = 0; k < state.dim(); ++k)
    v(static_cast<Eigen::Index>(basis.sector_index(k))) = state.amplitudes[k];
  return v;
}

inline DenseMatrix to_dense(const TridiagonalOperator& op) {
  const auto n = static_cast<Eigen::Index>(op.dim());
  DenseMatrix m = DenseMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = op.diag[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    m(i, i + 1) = op.offdiag[static_cast<std::size_t>(i)];
    m(i + 1, i) = op.offdiag[static_cast<std::size_t>(i)];
  }
  return m;
}

/// All eigenvalues, ascending, by dense diagonalization.
inline std::vector<double> dense_eigenvalues(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(m, Eigen::EigenvaluesOnly);
  const auto& v = solver.eigenvalues();
  return {v.data(), v.data() + v.size()};
}

struct LossSample {
  double variance = 0.0;
  double standard_error = 0.0;
  double mean = 0.0;
};

/// Monte-Carlo atom-loss model: draw k from |psi_k|^2, lose each of the k
/// atoms in m = +1 and the k atoms in m = -1 independently with probability
/// p, and record Lz = (k - lost_+) - (k - lost_-). Returns the sample variance
/// of Lz and its standard error.
inline LossSample monte_carlo_loss_variance(const StateVector& state, double p,
                                            std::size_t samples, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("monte_carlo_loss_variance: p in [0,1)");
  if (samples < 2) throw InvalidArgument("monte_carlo_loss_variance: need >= 2 samples");
  std::vector<double> weights(state.dim());
  for (std::size_t k = 0; k < state.dim(); ++k) weights[k] = state.probability(k);
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<double> lz(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t k = pick(rng);
    std::binomial_distribution<long> loss(static_cast<long>(k), p);
    const long lost_plus = loss(rng);
    const long lost_minus = loss(rng);
    lz[s] = static_cast<double>(lost_minus - lost_plus);
  }
  double mean = 0.0;
  for (double x : lz) mean += x;
  mean /= static_cast<double>(samples);
  double m2 = 0.0, m4 = 0.0;
  for (double x : lz) {
    const double d = (x - mean) * (x - mean);
    m2 += d;
    m4 += d * d;
  }
  const auto n = static_cast<double>(samples);
  LossSample r;
  r.mean = mean;
  r.variance = m2 / (n - 1.0);
  const double mu2 = m2 / n, mu4 = m4 / n;
  r.standard_error = std::sqrt(std::max(mu4 - mu2 * mu2, 0.0) / n);
  return r;
}

}  // namespace spinor::oracle

#endif  // SPINOR_ORACLE_HPP
