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

#ifndef SPINOR_OBSERVABLES_HPP
#define SPINOR_OBSERVABLES_HPP

#include <algorithm>
#include <cmath>
#include <optional>

#include "spinor/error.hpp"
#include "spinor/hilbert.hpp"

namespace spinor {

/// Collective-spin entanglement witness
///
///     xi = (<Lx^2> + <Ly^2>) / (N (1 + 4 <dLz^2>)).
///
/// xi > m certifies at least genuine m-particle entanglement; depth_bound is
/// the largest integer m < xi, at most N.
struct DepthReport {
  double xi = 0.0;
  double perp_moment = 0.0;
  double delta_lz2 = 0.0;
  long depth_bound = 0;
};

/// Atom loss during the sweep at rate p.
struct LossModel {
  double p = 0.0;

  void validate() const {
    if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("LossModel: p must lie in [0, 1)");
  }
};

namespace detail {
inline void require_dim(const SectorBasis& basis, const StateVector& state) {
  if (state.dim() != basis.dim()) throw InvalidArgument("state does not match sector basis");
}
}  // namespace detail

/// <a_0^dag a_0> / N.
inline double n0_fraction(const SectorBasis& basis, const StateVector& state) {
  detail::require_dim(basis, state);
  double s = 0.0;
  for (std::size_t k = 0; k < basis.dim(); ++k) s += state.probability(k) * basis.n_zero(k);
  return s / static_cast<double>(basis.n_atoms());
}

/// sqrt(<N_0/N>).
inline double order_parameter(const SectorBasis& basis, const StateVector& state) {
  return std::sqrt(n0_fraction(basis, state));
}

inline double l2_expectation(const SectorBasis& basis, const StateVector& state) {
  detail::require_dim(basis, state);
  return expectation(build_l2(basis), state);
}

/// On the L_z = 0 sector <Lz> = <Lz^2> = 0, so the transverse moment equals
/// <L^2> and the variance vanishes unless a noise model supplies one.
inline DepthReport entanglement_depth(const SectorBasis& basis, const StateVector& state,
                                      std::optional<double> delta_lz2_override = std::nullopt) {
  DepthReport r;
  if (delta_lz2_override) {
    if (!(*delta_lz2_override >= 0.0))
      throw InvalidArgument("entanglement_depth: delta_lz2 override must be >= 0");
    r.delta_lz2 = *delta_lz2_override;
  }
  r.perp_moment = l2_expectation(basis, state);
  r.xi = r.perp_moment / (static_cast<double>(basis.n_atoms()) * (1.0 + 4.0 * r.delta_lz2));
  r.xi = std::max(r.xi, 0.0);
  // Largest m with xi > m, capped at N: the Dicke value N + 1 certifies all N.
  const double fl = std::floor(r.xi);
  r.depth_bound = static_cast<long>(fl == r.xi ? fl - 1.0 : fl);
  r.depth_bound = std::clamp(r.depth_bound, 0L, static_cast<long>(basis.n_atoms()));
  return r;
}

/// <dLz^2> ~ N p (1 - p) / 6 from losing m = +-1 atoms.
inline double loss_variance(std::size_t n_atoms, const LossModel& loss) {
  loss.validate();
  return static_cast<double>(n_atoms) * loss.p * (1.0 - loss.p) / 6.0;
}

/// Large-N p witness estimate xi ~ 3 / (2p). Only meaningful when N p >> 1.
inline double loss_xi_estimate(const LossModel& loss) {
  loss.validate();
  if (!(loss.p > 0.0)) throw InvalidArgument("loss_xi_estimate: p must be > 0");
  return 3.0 / (2.0 * loss.p);
}

/// Whether the N p >> 1 regime assumed by loss_xi_estimate holds (N p >= 10).
inline bool loss_estimate_applicable(std::size_t n_atoms, const LossModel& loss) {
  return static_cast<double>(n_atoms) * loss.p >= 10.0;
}

}  // namespace spinor

#endif  // SPINOR_OBSERVABLES_HPP
