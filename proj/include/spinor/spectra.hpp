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

// Selected eigenpairs of real symmetric tridiagonal matrices.
//
// Eigenvalues are isolated by Sturm-sequence bisection, run until the
// bracketing interval stops shrinking in floating point. Eigenvectors come
// from inverse iteration on a pivoted LU factorization of (T - lambda I);
// members of a cluster are orthogonalized against each other.

#ifndef SPINOR_SPECTRA_HPP
#define SPINOR_SPECTRA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "spinor/error.hpp"
#include "spinor/hilbert.hpp"

namespace spinor {

enum class Which { lowest, highest };

struct EigenPair {
  double value = 0.0;
  StateVector vector;
  /// Number of eigenvalues (whole spectrum) within the cluster tolerance.
  std::size_t multiplicity = 1;
};

struct GapResult {
  double e0 = 0.0;
  double e1 = 0.0;
  double gap = 0.0;
};

/// Solver tolerances. Defaults follow the documented contract.
struct EigenOptions {
  /// Residual bound relative to TridiagonalOperator::norm_bound().
  double residual_tol = 1e-8;
  /// Eigenvalues closer than this times the spectral width share a cluster.
  double cluster_tol = 1e-8;
  int max_iterations = 8;
  int max_restarts = 5;
};

namespace detail {

inline double pivot_floor(const TridiagonalOperator& op) {
  double emax = 1.0;
  for (double e : op.offdiag) emax = std::max(emax, e * e);
  return std::numeric_limits<double>::min() * emax / std::numeric_limits<double>::epsilon();
}

}  // namespace detail

/// Number of eigenvalues strictly below x (negative pivots of the LDL^T
/// factorization of T - xI).
inline std::size_t sturm_count(const TridiagonalOperator& op, double x) {
  const double pivmin = detail::pivot_floor(op);
  std::size_t count = 0;
  double pivot = op.diag[0] - x;
  if (std::abs(pivot) < pivmin) pivot = -pivmin;
  if (pivot < 0.0) ++count;
  for (std::size_t i = 1; i < op.dim(); ++i) {
    const double e = op.offdiag[i - 1];
    pivot = (op.diag[i] - x) - e * e / pivot;
    if (std::abs(pivot) < pivmin) pivot = -pivmin;
    if (pivot < 0.0) ++count;
  }
  return count;
}

/// index-th smallest eigenvalue (0-based) by bisection to working precision.
inline double bisect_eigenvalue(const TridiagonalOperator& op, std::size_t index) {
  if (index >= op.dim()) throw InvalidArgument("bisect_eigenvalue: index out of range");
  auto [lo, hi] = op.gershgorin();
  const double pad = 2.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(lo), std::abs(hi)) +
                     detail::pivot_floor(op);
  lo -= pad;
  hi += pad;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(op, mid) > index)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// The count algebraically smallest (or largest) eigenvalues, sorted
/// ascending for lowest and descending for highest.
inline std::vector<double> extreme_eigenvalues(const TridiagonalOperator& op, Which which,
                                               std::size_t count) {
  op.validate();
  if (count > op.dim()) throw InvalidArgument("extreme_eigenvalues: count exceeds dim");
  std::vector<double> values;
  values.reserve(count);
  if (which == Which::lowest) {
    for (std::size_t i = 0; i < count; ++i) values.push_back(bisect_eigenvalue(op, i));
  } else {
    const TridiagonalOperator neg = -op;
    for (std::size_t i = 0; i < count; ++i) values.push_back(-bisect_eigenvalue(neg, i));
  }
  return values;
}

namespace detail {

/// Gaussian elimination with partial pivoting of (T - shift I). U has up to
/// two superdiagonals; a zero pivot is replaced by a tiny multiple of ||T||.
class ShiftedTridiagonalLU {
 public:
  ShiftedTridiagonalLU(const TridiagonalOperator& op, double shift) {
    const std::size_t n = op.dim();
    u0_.assign(n, 0.0);
    u1_.assign(n, 0.0);
    u2_.assign(n, 0.0);
    mult_.assign(n, 0.0);
    swap_.assign(n, 0);
    const double tiny = std::numeric_limits<double>::epsilon() * std::max(op.norm_bound(), 1.0);

    // Current row i holds (a, b, c) at columns (i, i+1, i+2).
    double a = op.diag[0] - shift;
    double b = n > 1 ? op.offdiag[0] : 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      // Next row: (sub, d, sup) at columns (i, i+1, i+2).
      const double sub = op.offdiag[i];
      const double d = op.diag[i + 1] - shift;
      const double sup = (i + 2 < n) ? op.offdiag[i + 1] : 0.0;
      if (std::abs(sub) > std::abs(a)) {
        swap_[i] = 1;
        const double m = a / sub;
        u0_[i] = sub;
        u1_[i] = d;
        u2_[i] = sup;
        mult_[i] = m;
        a = b - m * d;
        b = c - m * sup;
        c = 0.0;
      } else {
        if (a == 0.0) a = tiny;
        const double m = sub / a;
        u0_[i] = a;
        u1_[i] = b;
        u2_[i] = c;
        mult_[i] = m;
        a = d - m * b;
        b = sup - m * c;
        c = 0.0;
      }
    }
    if (a == 0.0) a = tiny;
    u0_[n - 1] = a;
    for (double& u : u0_)
      if (std::abs(u) < tiny) u = std::copysign(tiny, u == 0.0 ? 1.0 : u);
  }

  void solve(std::vector<double>& x) const {
    const std::size_t n = u0_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (swap_[i]) std::swap(x[i], x[i + 1]);
      x[i + 1] -= mult_[i] * x[i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x[ii];
      if (ii + 1 < n) s -= u1_[ii] * x[ii + 1];
      if (ii + 2 < n) s -= u2_[ii] * x[ii + 2];
      x[ii] = s / u0_[ii];
    }
  }

 private:
  std::vector<double> u0_, u1_, u2_, mult_;
  std::vector<std::uint8_t> swap_;
};

inline double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double residual(const TridiagonalOperator& op, const std::vector<double>& x,
                       double lambda) {
  std::vector<double> y(x.size());
  op.apply<double>(x, y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (y[i] - lambda * x[i]) * (y[i] - lambda * x[i]);
  return std::sqrt(s);
}

inline void orthogonalize(std::vector<double>& x, const std::vector<std::vector<double>>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dot += b[i] * x[i];
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= dot * b[i];
    }
  }
}

/// Sign convention: the largest-magnitude component is positive.
inline void fix_sign(std::vector<double>& x) {
  std::size_t imax = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i]) > std::abs(x[imax])) imax = i;
  if (x[imax] < 0.0)
    for (double& v : x) v = -v;
}

inline std::vector<double> inverse_iteration(const TridiagonalOperator& op, double lambda,
                                             const std::vector<std::vector<double>>& cluster,
                                             const EigenOptions& opts, std::uint64_t seed) {
  const std::size_t n = op.dim();
  const double tol = opts.residual_tol * std::max(op.norm_bound(), 1e-300);
  const double eps = std::numeric_limits<double>::epsilon();
  double best = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    // Restarts nudge the shift by growing multiples of eps * ||T||.
    const double shift =
        lambda + (restart == 0 ? 0.0 : std::ldexp(eps * op.norm_bound(), 2 * restart));
    const ShiftedTridiagonalLU lu(op, shift);
    std::mt19937_64 rng(seed + 7919u * static_cast<std::uint64_t>(restart));
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(n);
    for (double& v : x) v = 1.0 + 0.25 * dist(rng);
    orthogonalize(x, cluster);

    for (int it = 0; it < opts.max_iterations; ++it) {
      lu.solve(x);
      orthogonalize(x, cluster);
      const double nx = norm2(x);
      if (!(nx > 0.0) || !std::isfinite(nx)) break;
      for (double& v : x) v /= nx;
      const double r = residual(op, x, lambda);
      best = std::min(best, r);
      if (r <= tol && it >= 1) return x;
    }
  }
  throw ConvergenceError("inverse iteration stagnated; residual", best);
}

}  // namespace detail

/// The count lowest (ascending) or highest (descending) eigenpairs.
inline std::vector<EigenPair> extreme_eigenpairs(const TridiagonalOperator& op, Which which,
                                                 std::size_t count,
                                                 const EigenOptions& opts = {}) {
  const std::vector<double> values = extreme_eigenvalues(op, which, count);
  const auto [glo, ghi] = op.gershgorin();
  const double cluster_width = opts.cluster_tol * std::max(ghi - glo, 1e-300);

  std::vector<EigenPair> pairs;
  pairs.reserve(count);
  std::vector<std::vector<double>> cluster;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double lambda = values[i];
    if (i == 0 || std::abs(lambda - values[i - 1]) > cluster_width) cluster.clear();
    std::vector<double> x = detail::inverse_iteration(op, lambda, cluster, opts, 0x5eed + i);
    if (cluster.empty()) detail::fix_sign(x);
    cluster.push_back(x);

    EigenPair pair;
    pair.value = lambda;
    pair.multiplicity =
        sturm_count(op, lambda + cluster_width) - sturm_count(op, lambda - cluster_width);
    pair.vector = StateVector(std::vector<Complex>(x.begin(), x.end()));
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

/// The eigenstate the adiabatic sweep tracks: ground state for c1 < 0,
/// highest state for c1 > 0.
inline Which tracked_branch(const ModelParams& params) {
  return params.ferromagnetic() ? Which::lowest : Which::highest;
}

inline EigenPair tracked_eigenpair(const ModelParams& params, const EigenOptions& opts = {}) {
  return extreme_eigenpairs(build_hamiltonian(params), tracked_branch(params), 1, opts).front();
}

/// Gap above the tracked state. For c1 > 0 the energies are those of -H, so
/// e0 = -E_max and e1 = -E_second.
inline GapResult gap(const ModelParams& params) {
  params.validate();
  if (SectorBasis(params.n_atoms).dim() < 2)
    throw InvalidArgument("gap: sector dimension must be >= 2");
  const TridiagonalOperator h = build_hamiltonian(params);
  GapResult r;
  if (params.ferromagnetic()) {
    const auto v = extreme_eigenvalues(h, Which::lowest, 2);
    r.e0 = v[0];
    r.e1 = v[1];
  } else {
    const auto v = extreme_eigenvalues(h, Which::highest, 2);
    r.e0 = -v[0];
    r.e1 = -v[1];
  }
  r.gap = std::max(0.0, r.e1 - r.e0);
  return r;
}

}  // namespace spinor

#endif  // SPINOR_SPECTRA_HPP
