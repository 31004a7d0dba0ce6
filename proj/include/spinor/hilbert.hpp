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

// Zero-magnetization sector of a spin-1 condensate in the single-mode
// approximation.
//
// Three bosonic modes a_{+1}, a_0, a_{-1} hold N atoms. The Hamiltonian
//
//     H = c1 * L^2 / N - q * n_0
//
// conserves L_z, and the linear Zeeman term p * L_z is a constant on any L_z
// eigenspace, so a run that starts with every atom in m = 0 never leaves the
// L_z = 0 sector. That sector is spanned by
//
//     |k> = |n_{+1} = k, n_0 = N - 2k, n_{-1} = k>,   k = 0 .. floor(N/2),
//
// and both L^2 and n_0 are tridiagonal in k.

#ifndef SPINOR_HILBERT_HPP
#define SPINOR_HILBERT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spinor/error.hpp"

namespace spinor {

using Complex = std::complex<double>;

/// Occupations of the three Zeeman modes for one sector basis state.
struct FockOccupation {
  std::size_t n_plus;
  std::size_t n_zero;
  std::size_t n_minus;
};

class SectorBasis {
 public:
  explicit SectorBasis(std::size_t n_atoms) : n_atoms_(n_atoms) {
    if (n_atoms == 0) throw InvalidArgument("SectorBasis: n_atoms must be >= 1");
  }

  std::size_t n_atoms() const noexcept { return n_atoms_; }
  std::size_t dim() const noexcept { return n_atoms_ / 2 + 1; }

  FockOccupation occupation(std::size_t k) const {
    if (k >= dim()) throw InvalidArgument("SectorBasis: pair index out of range");
    return {k, n_atoms_ - 2 * k, k};
  }

  /// Eigenvalue of a_0^dag a_0 on |k>.
  double n_zero(std::size_t k) const {
    return static_cast<double>(n_atoms_ - 2 * k);
  }

  friend bool operator==(const SectorBasis&, const SectorBasis&) = default;

 private:
  std::size_t n_atoms_;
};

/// Physical parameters of H. Negative c1 is ferromagnetic (87Rb), positive
/// antiferromagnetic (23Na).
struct ModelParams {
  std::size_t n_atoms = 1;
  double c1 = -1.0;
  double q = 0.0;

  void validate() const {
    if (n_atoms == 0) throw InvalidArgument("ModelParams: n_atoms must be >= 1");
    if (!(c1 != 0.0) || !std::isfinite(c1))
      throw InvalidArgument("ModelParams: c1 must be finite and nonzero");
    if (!std::isfinite(q)) throw InvalidArgument("ModelParams: q must be finite");
  }

  bool ferromagnetic() const noexcept { return c1 < 0.0; }

  /// Energies in units of |c1|: c1 -> sign(c1), q -> q / |c1|.
  ModelParams canonical() const {
    validate();
    const double scale = std::abs(c1);
    return {n_atoms, c1 / scale, q / scale};
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Real symmetric tridiagonal matrix. offdiag[j] couples rows j and j + 1.
struct TridiagonalOperator {
  std::vector<double> diag;
  std::vector<double> offdiag;

  std::size_t dim() const noexcept { return diag.size(); }

  void validate() const {
    if (diag.empty()) throw InvalidArgument("TridiagonalOperator: empty");
    if (offdiag.size() + 1 != diag.size())
      throw InvalidArgument("TridiagonalOperator: offdiag must have dim - 1 entries");
    auto finite = [](double x) { return std::isfinite(x); };
    if (!std::all_of(diag.begin(), diag.end(), finite) ||
        !std::all_of(offdiag.begin(), offdiag.end(), finite))
      throw InvalidArgument("TridiagonalOperator: non-finite entry");
  }

  /// ||diag||_inf + 2 ||offdiag||_inf, an upper bound on the spectral radius.
  double norm_bound() const noexcept {
    double d = 0.0, e = 0.0;
    for (double x : diag) d = std::max(d, std::abs(x));
    for (double x : offdiag) e = std::max(e, std::abs(x));
    return d + 2.0 * e;
  }

  /// Gershgorin interval [lo, hi] containing the whole spectrum.
  std::pair<double, double> gershgorin() const noexcept {
    double lo = diag[0], hi = diag[0];
    const std::size_t n = dim();
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      if (i > 0) r += std::abs(offdiag[i - 1]);
      if (i + 1 < n) r += std::abs(offdiag[i]);
      lo = std::min(lo, diag[i] - r);
      hi = std::max(hi, diag[i] + r);
    }
    return {lo, hi};
  }

  template <class T>
  void apply(std::span<const T> in, std::span<T> out) const {
    const std::size_t n = dim();
    if (n == 1) {
      out[0] = diag[0] * in[0];
      return;
    }
    out[0] = diag[0] * in[0] + offdiag[0] * in[1];
    for (std::size_t i = 1; i + 1 < n; ++i)
      out[i] = offdiag[i - 1] * in[i - 1] + diag[i] * in[i] + offdiag[i] * in[i + 1];
    out[n - 1] = offdiag[n - 2] * in[n - 2] + diag[n - 1] * in[n - 1];
  }

  TridiagonalOperator operator-() const {
    TridiagonalOperator r = *this;
    for (double& x : r.diag) x = -x;
    for (double& x : r.offdiag) x = -x;
    return r;
  }
};

/// Many-body state over the sector basis.
struct StateVector {
  std::vector<Complex> amplitudes;

  StateVector() = default;
  explicit StateVector(std::size_t dim) : amplitudes(dim, Complex{0.0, 0.0}) {}
  explicit StateVector(std::vector<Complex> amps) : amplitudes(std::move(amps)) {}

  std::size_t dim() const noexcept { return amplitudes.size(); }

  double norm() const noexcept {
    double s = 0.0;
    for (const Complex& a : amplitudes) s += std::norm(a);
    return std::sqrt(s);
  }

  void normalize() {
    const double n = norm();
    if (!(n > 0.0)) throw InvalidArgument("StateVector: cannot normalize zero vector");
    for (Complex& a : amplitudes) a /= n;
  }

  /// |<k|psi>|^2.
  double probability(std::size_t k) const { return std::norm(amplitudes.at(k)); }
};

/// <a|b>, antilinear in the first argument.
inline Complex inner(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("inner: dimension mismatch");
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
  return s;
}

/// <psi|op|psi> for a real symmetric operator; the result is real.
inline double expectation(const TridiagonalOperator& op, const StateVector& psi) {
  if (psi.dim() != op.dim()) throw InvalidArgument("expectation: dimension mismatch");
  const auto& a = psi.amplitudes;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += op.diag[i] * std::norm(a[i]);
  for (std::size_t i = 0; i + 1 < a.size(); ++i)
    s += 2.0 * op.offdiag[i] * std::real(std::conj(a[i]) * a[i + 1]);
  return s;
}

/// L^2 restricted to the sector. On L_z = 0, L^2 = L_- L_+ with
/// L_+ = sqrt(2) (a_{+1}^dag a_0 + a_0^dag a_{-1}), which gives
///   <k|L^2|k>   = 2 [ (2k + 1)(N - 2k) + k ]
///   <k+1|L^2|k> = 2 (k + 1) sqrt((N - 2k)(N - 2k - 1)).
inline TridiagonalOperator build_l2(const SectorBasis& basis) {
  const std::size_t dim = basis.dim();
  const double n = static_cast<double>(basis.n_atoms());
  TridiagonalOperator op;
  op.diag.resize(dim);
  op.offdiag.resize(dim - 1);
  for (std::size_t k = 0; k < dim; ++k) {
    const double kk = static_cast<double>(k);
    op.diag[k] = 2.0 * ((2.0 * kk + 1.0) * (n - 2.0 * kk) + kk);
  }
  for (std::size_t k = 0; k + 1 < dim; ++k) {
    const double kk = static_cast<double>(k);
    const double n0 = n - 2.0 * kk;
    op.offdiag[k] = 2.0 * (kk + 1.0) * std::sqrt(n0 * (n0 - 1.0));
  }
  return op;
}

/// n_0 = a_0^dag a_0, diagonal in the sector basis.
inline TridiagonalOperator build_n0(const SectorBasis& basis) {
  TridiagonalOperator op;
  op.diag.resize(basis.dim());
  op.offdiag.assign(basis.dim() - 1, 0.0);
  for (std::size_t k = 0; k < basis.dim(); ++k) op.diag[k] = basis.n_zero(k);
  return op;
}

/// H = (c1 / N) L^2 - q n_0.
inline TridiagonalOperator build_hamiltonian(const ModelParams& params) {
  params.validate();
  const SectorBasis basis(params.n_atoms);
  TridiagonalOperator h = build_l2(basis);
  const double scale = params.c1 / static_cast<double>(params.n_atoms);
  for (std::size_t k = 0; k < h.dim(); ++k)
    h.diag[k] = scale * h.diag[k] - params.q * basis.n_zero(k);
  for (double& e : h.offdiag) e *= scale;
  return h;
}

/// Every atom in m = 0: the first basis vector.
inline StateVector product_state_m0(const SectorBasis& basis) {
  StateVector psi(basis.dim());
  psi.amplitudes[0] = 1.0;
  return psi;
}

}  // namespace spinor

#endif  // SPINOR_HILBERT_HPP
