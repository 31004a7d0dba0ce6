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

// Time evolution along a linear ramp q(t) = q_start + q' t.
//
// H(t) = A - q(t) B with A = (c1/N) L^2 and B = n_0. Because H is linear in
// t, the first two Magnus terms over a step [t, t + h] are exact in closed
// form:
//
//     Omega = -i h H(t + h/2) + (h^3 q' / 12) [B, A] = -i h G,
//     G     = H(t + h/2) + i (h^2 q' / 12) [B, A].
//
// [B, A] is real antisymmetric with entries +-2 A_{j,j+1}, so G is Hermitian
// tridiagonal with off-diagonal A_{j,j+1} (1 + i h^2 q' / 6). Truncating
// after Omega_2 leaves a local error O(h^5). Each exp(-i h G) is applied with
// an adaptive Lanczos exponential, so the step is
// unitary up to the Krylov tolerance.
//
// All propagation is done in canonical units (c1 = +-1, hbar = 1).

#ifndef SPINOR_DYNAMICS_HPP
#define SPINOR_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "spinor/error.hpp"
#include "spinor/hilbert.hpp"
#include "spinor/observables.hpp"
#include "spinor/spectra.hpp"

namespace spinor {

enum class Branch { ground, highest };

struct SweepSchedule {
  double q_start = 6.0;
  double q_end = 0.0;
  double speed = 1.0;
  Branch branch = Branch::ground;

  double duration() const { return std::abs(q_start - q_end) / speed; }

  /// dq/dt.
  double rate() const { return q_end >= q_start ? speed : -speed; }

  double q_at(double t) const { return q_start + rate() * t; }

  void validate() const {
    if (!std::isfinite(q_start) || !std::isfinite(q_end))
      throw InvalidArgument("SweepSchedule: endpoints must be finite");
    if (!(speed > 0.0) || !std::isfinite(speed))
      throw InvalidArgument("SweepSchedule: speed must be positive and finite");
    const double t = duration();
    if (!(t > 0.0) || !std::isfinite(t))
      throw InvalidArgument("SweepSchedule: duration must be positive and finite");
  }

  /// Ground branch needs c1 < 0, highest branch c1 > 0.
  void validate_for(const ModelParams& params) const {
    validate();
    params.validate();
    if (branch == Branch::ground && !params.ferromagnetic())
      throw InvalidArgument("SweepSchedule: ground branch requires c1 < 0");
    if (branch == Branch::highest && params.ferromagnetic())
      throw InvalidArgument("SweepSchedule: highest branch requires c1 > 0");
  }
};

inline Branch default_branch(const ModelParams& params) {
  return params.ferromagnetic() ? Branch::ground : Branch::highest;
}

/// Step control. Step lengths are in units of 1/|c1|.
struct DtControl {
  /// Upper bound on the Magnus step.
  double max_step = 0.05;
  /// Upper bound on |dq| per Magnus step, in units of |c1|.
  double max_dq = 0.05;
  /// Absolute 2-norm error allowed per Krylov exponential.
  double krylov_tol = 1e-12;
  std::size_t krylov_dim = 30;
  /// Gram-Schmidt passes against the whole Krylov basis. Plain Lanczos (0)
  /// keeps the norm to ~1e-11 at these Krylov sizes.
  int reorth_passes = 0;

  DtControl halved() const {
    DtControl c = *this;
    c.max_step *= 0.5;
    c.max_dq *= 0.5;
    return c;
  }
};

struct TrajectoryOptions {
  /// Record a sample every this many Magnus steps (0 = final state only).
  std::size_t sample_every = 0;
  bool store_states = false;
};

struct TrajectorySample {
  double t = 0.0;
  double q = 0.0;
  double xi = 0.0;
  double n0_fraction = 0.0;
  double energy = 0.0;
  std::optional<StateVector> state;
};

struct PropagationResult {
  StateVector final_state;
  std::vector<TrajectorySample> trajectory;
  double norm_drift = 0.0;
  std::size_t steps_taken = 0;
  std::size_t krylov_substeps = 0;
  std::size_t matvecs = 0;
};

namespace detail {

/// Hermitian tridiagonal matrix; upper[j] = G_{j, j+1}.
struct HermitianTridiagonal {
  std::vector<double> diag;
  std::vector<Complex> upper;

  void apply(const std::vector<Complex>& in, std::vector<Complex>& out) const {
    const std::size_t n = diag.size();
    if (n == 1) {
      out[0] = diag[0] * in[0];
      return;
    }
    out[0] = diag[0] * in[0] + upper[0] * in[1];
    for (std::size_t i = 1; i + 1 < n; ++i)
      out[i] = std::conj(upper[i - 1]) * in[i - 1] + diag[i] * in[i] + upper[i] * in[i + 1];
    out[n - 1] = std::conj(upper[n - 2]) * in[n - 2] + diag[n - 1] * in[n - 1];
  }
};

inline double norm2(const std::vector<Complex>& x) {
  double s = 0.0;
  for (const Complex& a : x) s += std::norm(a);
  return std::sqrt(s);
}

inline Complex dot(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

/// Applies exp(-i tau G) to psi in place with Lanczos. Large tau is split
/// into substeps whenever the a-posteriori error estimate exceeds tol.
class KrylovExponential {
 public:
  KrylovExponential(std::size_t max_dim, double tol, int reorth_passes)
      : max_dim_(std::max<std::size_t>(max_dim, 2)), tol_(tol), reorth_passes_(reorth_passes) {}

  std::size_t substeps() const noexcept { return substeps_; }
  std::size_t matvecs() const noexcept { return matvecs_; }

  void apply(const HermitianTridiagonal& g, std::vector<Complex>& psi, double tau) {
    const std::size_t n = psi.size();
    if (n == 1) {
      psi[0] *= std::exp(Complex(0.0, -tau * g.diag[0]));
      return;
    }
    double remaining = tau;
    int guard = 0;
    while (remaining > 0.0) {
      if (++guard > 100000) throw ConvergenceError("Krylov exponential: too many substeps", remaining);
      remaining -= substep(g, psi, remaining);
      ++substeps_;
    }
  }

 private:
  // Returns the time actually advanced (<= tau).
  double substep(const HermitianTridiagonal& g, std::vector<Complex>& psi, double tau) {
    const std::size_t n = psi.size();
    const std::size_t mmax = std::min(max_dim_, n);
    const double beta0 = norm2(psi);
    basis_.resize(mmax + 1);
    alpha_.assign(mmax, 0.0);
    beta_.assign(mmax, 0.0);
    basis_[0].resize(n);
    for (std::size_t i = 0; i < n; ++i) basis_[0][i] = psi[i] / beta0;

    // Rayleigh shift: propagate G - sigma, restore the phase at the end.
    std::vector<Complex>& w = work_;
    w.resize(n);
    g.apply(basis_[0], w);
    ++matvecs_;
    const double sigma = std::real(dot(basis_[0], w));

    std::size_t m = 0;
    double step = tau;
    bool accepted = false;
    for (std::size_t j = 0; j < mmax; ++j) {
      if (j > 0) {
        g.apply(basis_[j], w);
        ++matvecs_;
      }
      for (std::size_t i = 0; i < n; ++i) w[i] -= sigma * basis_[j][i];
      alpha_[j] = std::real(dot(basis_[j], w));
      for (std::size_t i = 0; i < n; ++i) {
        w[i] -= alpha_[j] * basis_[j][i];
        if (j > 0) w[i] -= beta_[j - 1] * basis_[j - 1][i];
      }
      for (int pass = 0; pass < reorth_passes_; ++pass) {
        for (std::size_t l = 0; l <= j; ++l) {
          const Complex c = dot(basis_[l], w);
          for (std::size_t i = 0; i < n; ++i) w[i] -= c * basis_[l][i];
        }
      }
      beta_[j] = norm2(w);
      m = j + 1;

      const bool breakdown = beta_[j] <= 1e-14 * (std::abs(alpha_[j]) + 1.0);
      if (breakdown || m == n) {
        accepted = true;
        break;
      }
      // The error estimate costs a small eigensolve; probe every few vectors.
      if (m % 4 == 0 || m == mmax) {
        project(m, step);
        if (beta_[j] * std::abs(coeff_[m - 1]) <= tol_) {
          accepted = true;
          break;
        }
      }
      basis_[j + 1].resize(n);
      for (std::size_t i = 0; i < n; ++i) basis_[j + 1][i] = w[i] / beta_[j];
    }
    if (!accepted) {
      // Krylov space exhausted: shrink the step until the estimate passes.
      for (int tries = 0; tries < 60; ++tries) {
        step *= 0.5;
        project(m, step);
        if (beta_[m - 1] * std::abs(coeff_[m - 1]) <= tol_) break;
      }
    }
    project(m, step);

    const Complex phase = std::exp(Complex(0.0, -step * sigma)) * beta0;
    for (std::size_t i = 0; i < n; ++i) {
      Complex s{0.0, 0.0};
      for (std::size_t l = 0; l < m; ++l) s += coeff_[l] * basis_[l][i];
      psi[i] = phase * s;
    }
    return step;
  }

  // coeff_ = exp(-i step T_m) e_1.
  void project(std::size_t m, double step) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(m));
    Eigen::VectorXd e(static_cast<Eigen::Index>(m > 0 ? m - 1 : 0));
    for (std::size_t i = 0; i < m; ++i) d[static_cast<Eigen::Index>(i)] = alpha_[i];
    for (std::size_t i = 0; i + 1 < m; ++i) e[static_cast<Eigen::Index>(i)] = beta_[i];
    coeff_.assign(m, Complex{0.0, 0.0});
    if (m == 1) {
      coeff_[0] = std::exp(Complex(0.0, -step * alpha_[0]));
      return;
    }
    solver_.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    const auto& vals = solver_.eigenvalues();
    const auto& vecs = solver_.eigenvectors();
    for (Eigen::Index l = 0; l < vals.size(); ++l) {
      const Complex f = std::exp(Complex(0.0, -step * vals[l])) * vecs(0, l);
      for (std::size_t i = 0; i < m; ++i) coeff_[i] += f * vecs(static_cast<Eigen::Index>(i), l);
    }
  }

  std::size_t max_dim_;
  double tol_;
  int reorth_passes_;
  std::size_t substeps_ = 0;
  std::size_t matvecs_ = 0;
  std::vector<std::vector<Complex>> basis_;
  std::vector<double> alpha_, beta_;
  std::vector<Complex> coeff_, work_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver_;
};

}  // namespace detail

/// Integrates i dpsi/dt = H(q(t)) psi from schedule.q_start to q_end. params.q
/// is ignored; c1, q and speed may be given in any consistent energy unit and
/// trajectory times are reported in the matching 1/energy unit.
inline PropagationResult evolve_sweep(const ModelParams& params, const SweepSchedule& schedule,
                                      const StateVector& initial, const DtControl& control = {},
                                      const TrajectoryOptions& sampling = {}) {
  schedule.validate_for(params);
  const SectorBasis basis(params.n_atoms);
  if (initial.dim() != basis.dim()) throw InvalidArgument("evolve_sweep: initial state dimension mismatch");
  if (std::abs(initial.norm() - 1.0) > 1e-10) throw InvalidArgument("evolve_sweep: initial state not normalized");
  if (!(control.max_step > 0.0) || !(control.max_dq > 0.0))
    throw InvalidArgument("evolve_sweep: step bounds must be positive");

  const double unit = std::abs(params.c1);
  const double c1 = params.c1 / unit;
  const double q0 = schedule.q_start / unit;
  const double rate = schedule.rate() / (unit * unit);
  const double duration = schedule.duration() * unit;

  const double h_target = std::min(control.max_step, control.max_dq / std::abs(rate));
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(duration / h_target - 1e-9)));
  const double h = duration / static_cast<double>(steps);

  const TridiagonalOperator l2 = build_l2(basis);
  const double scale = c1 / static_cast<double>(params.n_atoms);
  detail::HermitianTridiagonal g;
  g.diag.resize(basis.dim());
  g.upper.resize(basis.dim() - 1);
  const Complex twist(1.0, h * h * rate / 6.0);
  for (std::size_t j = 0; j + 1 < basis.dim(); ++j) g.upper[j] = scale * l2.offdiag[j] * twist;

  PropagationResult result;
  std::vector<Complex> psi = initial.amplitudes;
  detail::KrylovExponential expm(control.krylov_dim, control.krylov_tol, control.reorth_passes);

  auto sample = [&](double t_can) {
    TrajectorySample s;
    s.t = t_can / unit;
    const double q_can = q0 + rate * t_can;
    s.q = q_can * unit;
    StateVector state(psi);
    const double n = state.norm();
    StateVector normalized = state;
    for (Complex& a : normalized.amplitudes) a /= n;
    s.xi = expectation(l2, normalized) / static_cast<double>(params.n_atoms);
    s.n0_fraction = n0_fraction(basis, normalized);
    s.energy = expectation(build_hamiltonian({params.n_atoms, c1, q_can}), normalized) * unit;
    if (sampling.store_states) s.state = std::move(state);
    result.trajectory.push_back(std::move(s));
  };

  if (sampling.sample_every > 0) sample(0.0);
  for (std::size_t step = 0; step < steps; ++step) {
    const double q_mid = q0 + rate * (static_cast<double>(step) + 0.5) * h;
    for (std::size_t k = 0; k < basis.dim(); ++k) g.diag[k] = scale * l2.diag[k] - q_mid * basis.n_zero(k);
    expm.apply(g, psi, h);
    if (sampling.sample_every > 0 && ((step + 1) % sampling.sample_every == 0 || step + 1 == steps))
      sample(static_cast<double>(step + 1) * h);
  }

  result.final_state = StateVector(std::move(psi));
  result.norm_drift = std::abs(1.0 - result.final_state.norm());
  result.steps_taken = steps;
  result.krylov_substeps = expm.substeps();
  result.matvecs = expm.matvecs();
  return result;
}

/// 1 - |<tracked eigenstate of H(params)|state>|^2, tracking the ground
/// state for c1 < 0 and the highest state for c1 > 0.
inline double excitation_probability(const ModelParams& params, const StateVector& state) {
  const EigenPair tracked = tracked_eigenpair(params);
  if (state.dim() != tracked.vector.dim())
    throw InvalidArgument("excitation_probability: dimension mismatch");
  const double overlap = std::norm(inner(tracked.vector, state));
  return std::clamp(1.0 - overlap, 0.0, 1.0);
}

/// Observables reported for the end of a sweep.
struct FinalObservables {
  double xi_over_n = 0.0;
  double excitation = 0.0;
  double n0_fraction = 0.0;
};

inline FinalObservables final_observables(const ModelParams& params, const SweepSchedule& schedule,
                                          const StateVector& state) {
  const SectorBasis basis(params.n_atoms);
  FinalObservables f;
  f.xi_over_n = entanglement_depth(basis, state).xi / static_cast<double>(params.n_atoms);
  f.excitation = excitation_probability({params.n_atoms, params.c1, schedule.q_end}, state);
  f.n0_fraction = n0_fraction(basis, state);
  return f;
}

inline double max_shift(const FinalObservables& a, const FinalObservables& b) {
  return std::max({std::abs(a.xi_over_n - b.xi_over_n), std::abs(a.excitation - b.excitation),
                   std::abs(a.n0_fraction - b.n0_fraction)});
}

/// A sweep whose final observables are stable under halving the step.
struct ConvergedSweep {
  PropagationResult result;
  FinalObservables observables;
  /// Largest change of xi/N, Pe, N0/N between the last two step sizes.
  double step_shift = 0.0;
  DtControl control;
};

/// Runs at control and control.halved(), halving further until the final
/// observables move by less than target. Reports the finer run.
inline ConvergedSweep evolve_sweep_converged(const ModelParams& params, const SweepSchedule& schedule,
                                             const StateVector& initial, DtControl control = {},
                                             double target = 1e-6, int max_refinements = 4) {
  PropagationResult coarse = evolve_sweep(params, schedule, initial, control);
  FinalObservables coarse_obs = final_observables(params, schedule, coarse.final_state);
  double shift = 0.0;
  for (int r = 0; r <= max_refinements; ++r) {
    const DtControl finer = control.halved();
    PropagationResult fine = evolve_sweep(params, schedule, initial, finer);
    const FinalObservables fine_obs = final_observables(params, schedule, fine.final_state);
    shift = max_shift(coarse_obs, fine_obs);
    if (shift < target) return {std::move(fine), fine_obs, shift, finer};
    coarse = std::move(fine);
    coarse_obs = fine_obs;
    control = finer;
  }
  throw ConvergenceError("evolve_sweep_converged: step halving did not converge; observable shift", shift);
}

}  // namespace spinor

#endif  // SPINOR_DYNAMICS_HPP
