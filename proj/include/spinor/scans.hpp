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

// Parameter scans over the sector model: ground-branch phase diagram,
// transition location, gap scaling, sweep-speed dependence of the final
// entanglement witness and the sweep time needed to reach a target depth.

#ifndef SPINOR_SCANS_HPP
#define SPINOR_SCANS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "spinor/dynamics.hpp"
#include "spinor/error.hpp"
#include "spinor/hilbert.hpp"
#include "spinor/observables.hpp"
#include "spinor/spectra.hpp"

namespace spinor {

using MetaValue = std::variant<long long, double, std::string, std::vector<double>>;

struct PointFailure {
  std::size_t index = 0;
  std::string message;
};

/// Columnar scan result. Failed grid points hold NaN and are listed in
/// failures.
struct ScanTable {
  std::string name;
  std::vector<std::string> column_names;
  std::vector<std::vector<double>> columns;
  std::vector<std::pair<std::string, MetaValue>> metadata;
  std::vector<PointFailure> failures;

  ScanTable() = default;
  ScanTable(std::string table_name, std::vector<std::string> names)
      : name(std::move(table_name)), column_names(std::move(names)), columns(column_names.size()) {}

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  const std::vector<double>& column(const std::string& key) const {
    for (std::size_t i = 0; i < column_names.size(); ++i)
      if (column_names[i] == key) return columns[i];
    throw InvalidArgument("ScanTable '" + name + "': no column '" + key + "'");
  }

  void add_row(const std::vector<double>& row) {
    if (row.size() != columns.size()) throw InvalidArgument("ScanTable: row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) columns[i].push_back(row[i]);
  }

  void set_meta(const std::string& key, MetaValue value) {
    for (auto& [k, v] : metadata)
      if (k == key) {
        v = std::move(value);
        return;
      }
    metadata.emplace_back(key, std::move(value));
  }

  bool ok() const { return failures.empty(); }
};

/// y = prefactor * x^exponent, least squares on (log x, log y).
struct PowerLawFit {
  double prefactor = 0.0;
  double exponent = 0.0;
  /// RMS residual in log y.
  double residual = 0.0;
};

inline PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_power_law: need >= 2 paired points");
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("fit_power_law: data must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_power_law: x values must not all coincide");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  const double intercept = my - fit.exponent * mx;
  fit.prefactor = std::exp(intercept);
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = ly[i] - (intercept + fit.exponent * lx[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

// ---------------------------------------------------------------------------
// Grids and parallel evaluation

/// lo, lo + step, ..., hi (hi included when it lies on the grid within 1e-9
/// steps). Points are lo + i * step, so equal inputs give equal grids.
inline std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw InvalidArgument("linear_grid: need step > 0 and hi >= lo");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) g[i] = lo + static_cast<double>(i) * step;
  return g;
}

/// points values from lo to hi, equally spaced in log.
inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw InvalidArgument("log_grid: need 0 < lo < hi, points >= 2");
  std::vector<double> g(points);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

/// Worker count from SPINOR_THREADS, else the hardware concurrency.
inline std::size_t scan_threads() {
  if (const char* env = std::getenv("SPINOR_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates fn(i) for i in [0, n) on up to threads workers. Results and
/// errors are returned in index order whatever the completion order.
template <class T>
std::vector<std::variant<T, std::string>> parallel_map(std::size_t n, const std::function<T(std::size_t)>& fn,
                                                       std::size_t threads = scan_threads()) {
  std::vector<std::variant<T, std::string>> out(n, std::string("not evaluated"));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (const std::exception& e) {
        out[i] = std::string(e.what());
      }
    }
  };
  const std::size_t count = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(n, 1));
  if (count == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

namespace detail {

template <class T, class RowFn>
void fill_table(ScanTable& table, const std::vector<std::variant<T, std::string>>& results, RowFn row_of) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (const auto* value = std::get_if<T>(&results[i])) {
      table.add_row(row_of(i, *value));
    } else {
      std::vector<double> row(table.columns.size(), nan);
      row[0] = row_of(i, std::nullopt)[0];
      table.add_row(row);
      table.failures.push_back({i, std::get<std::string>(results[i])});
    }
  }
}

inline const char* branch_name(double c1) { return c1 < 0.0 ? "ground" : "highest"; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Phase diagram

/// Tracked-branch eigenstate observables versus q. Columns: q, n0_fraction,
/// order_parameter and ground_energy (highest_energy for c1 > 0).
inline ScanTable phase_scan(std::size_t n_atoms, double c1, const std::vector<double>& q_grid) {
  if (!std::is_sorted(q_grid.begin(), q_grid.end())) throw InvalidArgument("phase_scan: q grid must be sorted");
  ModelParams{n_atoms, c1, 0.0}.validate();
  const std::string energy = c1 < 0.0 ? "ground_energy" : "highest_energy";
  ScanTable table("phase_scan", {"q", "n0_fraction", "order_parameter", energy});
  table.set_meta("n_atoms", static_cast<long long>(n_atoms));
  table.set_meta("c1", c1);
  table.set_meta("branch", std::string(detail::branch_name(c1)));
  table.set_meta("q_grid", q_grid);

  struct Point {
    double n0, energy;
  };
  const SectorBasis basis(n_atoms);
  const auto results = parallel_map<Point>(q_grid.size(), [&](std::size_t i) {
    const EigenPair pair = tracked_eigenpair({n_atoms, c1, q_grid[i]});
    return Point{n0_fraction(basis, pair.vector), pair.value};
  });
  detail::fill_table(table, results, [&](std::size_t i, std::optional<Point> p) {
    if (!p) return std::vector<double>{q_grid[i]};
    return std::vector<double>{q_grid[i], p->n0, std::sqrt(std::max(p->n0, 0.0)), p->energy};
  });
  return table;
}

struct Transition {
  double q = 0.0;
  /// Grid resolution at the peak.
  double uncertainty = 0.0;
  /// |second difference| at the peak.
  double strength = 0.0;
};

/// Transition points as the strongest peaks of |d^2 n0_fraction / dq^2|
/// (second finite difference). Each peak is refined to the |d2|-weighted
/// centroid of its three neighbouring grid points. Returns the expected
/// strongest peaks in ascending q; throws if fewer are found.
inline std::vector<Transition> locate_transitions(const ScanTable& table, std::size_t expected = 2) {
  const auto& q = table.column("q");
  const auto& f = table.column("n0_fraction");
  const std::size_t n = q.size();
  if (n < 3) throw InvalidArgument("locate_transitions: need at least 3 grid points");
  std::vector<double> s(n, 0.0);
  double smax = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = q[i] - q[i - 1], h2 = q[i + 1] - q[i];
    const double d2 = 2.0 * ((f[i + 1] - f[i]) / h2 - (f[i] - f[i - 1]) / h1) / (h1 + h2);
    s[i] = std::isfinite(d2) ? std::abs(d2) : 0.0;
    smax = std::max(smax, s[i]);
  }
  std::vector<Transition> peaks;
  const double floor = 1e-6 * smax;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(s[i] > floor) || s[i] < s[i - 1] || !(s[i] > s[i + 1])) continue;
    // Plateau (equal neighbours to the left) belongs to this peak.
    std::size_t left = i;
    while (left > 1 && s[left - 1] == s[i]) --left;
    const std::size_t lo = left - 1, hi = i + 1;
    double w = 0.0, wq = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
      w += s[j];
      wq += s[j] * q[j];
    }
    const double step = (q[hi] - q[lo]) / static_cast<double>(hi - lo);
    peaks.push_back({wq / w, step, s[i]});
  }
  if (peaks.size() < expected)
    throw Error("locate_transitions: found " + std::to_string(peaks.size()) + " peak(s), expected " +
                std::to_string(expected));
  std::sort(peaks.begin(), peaks.end(), [](const Transition& a, const Transition& b) { return a.strength > b.strength; });
  peaks.resize(expected);
  std::sort(peaks.begin(), peaks.end(), [](const Transition& a, const Transition& b) { return a.q < b.q; });
  return peaks;
}

// ---------------------------------------------------------------------------
// Gap

/// Gap above the tracked branch versus q. Columns q, e0, e1, gap.
inline ScanTable gap_curve(std::size_t n_atoms, double c1, const std::vector<double>& q_grid) {
  ScanTable table("gap_curve", {"q", "e0", "e1", "gap"});
  table.set_meta("n_atoms", static_cast<long long>(n_atoms));
  table.set_meta("c1", c1);
  table.set_meta("q_grid", q_grid);
  const auto results = parallel_map<GapResult>(q_grid.size(), [&](std::size_t i) {
    return gap({n_atoms, c1, q_grid[i]});
  });
  detail::fill_table(table, results, [&](std::size_t i, std::optional<GapResult> g) {
    if (!g) return std::vector<double>{q_grid[i]};
    return std::vector<double>{q_grid[i], g->e0, g->e1, g->gap};
  });
  return table;
}

struct GapMinimum {
  double q = 0.0;
  double gap = 0.0;
};

/// Golden-section minimization of gap(q) on [lo, hi] to |dq| <= q_tol.
inline GapMinimum minimize_gap(std::size_t n_atoms, double c1, double lo, double hi, double q_tol = 1e-7) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double q) { return gap({n_atoms, c1, q}).gap; };
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > q_tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  GapMinimum m{0.5 * (a + b), 0.0};
  m.gap = f(m.q);
  return m;
}

/// Default search window around the upper transition: [3.5, 4.5] for
/// c1 < 0, mirrored to [-4.5, -3.5] for c1 > 0 since H(+1, q) = -H(-1, -q).
inline std::pair<double, double> gap_window(double c1) {
  return c1 < 0.0 ? std::pair{3.5, 4.5} : std::pair{-4.5, -3.5};
}

/// Minimum gap near the transition for each N and a power-law fit of it.
inline std::pair<ScanTable, PowerLawFit> gap_scan(const std::vector<std::size_t>& n_list, double c1) {
  if (n_list.size() < 2) throw InvalidArgument("gap_scan: need at least two atom numbers");
  const auto [lo, hi] = gap_window(c1);
  ScanTable table("gap_scan", {"n_atoms", "q_min", "gap_min"});
  std::vector<double> ns(n_list.begin(), n_list.end());
  table.set_meta("n_list", ns);
  table.set_meta("c1", c1);
  table.set_meta("q_window", std::vector<double>{lo, hi});
  table.set_meta("q_tol", 1e-7);
  const auto results = parallel_map<GapMinimum>(n_list.size(), [&](std::size_t i) {
    return minimize_gap(n_list[i], c1, lo, hi);
  });
  detail::fill_table(table, results, [&](std::size_t i, std::optional<GapMinimum> m) {
    if (!m) return std::vector<double>{ns[i]};
    return std::vector<double>{ns[i], m->q, m->gap};
  });
  if (!table.ok()) throw Error("gap_scan: " + table.failures.front().message);
  return {table, fit_power_law(table.column("n_atoms"), table.column("gap_min"))};
}

// ---------------------------------------------------------------------------
// Sweeps

/// Sweep settings shared by speed and time scans. The speed field of the
/// schedule is overwritten per point.
struct SweepSettings {
  SweepSchedule schedule{6.0, 0.0, 1.0, Branch::ground};
  DtControl control{};
  /// Required agreement of final observables under step halving.
  double convergence_target = 1e-6;
};

inline SweepSettings default_sweep(double c1) {
  SweepSettings s;
  if (c1 > 0.0) s.schedule = {-6.0, 0.0, 1.0, Branch::highest};
  return s;
}

struct SweepPoint {
  double speed = 0.0;
  FinalObservables observables;
  double norm_drift = 0.0;
  double step_shift = 0.0;
  std::size_t steps = 0;
};

inline SweepPoint run_sweep_point(std::size_t n_atoms, double c1, double speed, const SweepSettings& settings) {
  SweepSchedule schedule = settings.schedule;
  schedule.speed = speed;
  const ModelParams params{n_atoms, c1, schedule.q_end};
  const auto converged = evolve_sweep_converged(params, schedule, product_state_m0(SectorBasis(n_atoms)),
                                                settings.control, settings.convergence_target);
  return {speed, converged.observables, converged.result.norm_drift, converged.step_shift,
          converged.result.steps_taken};
}

/// Final xi/N and Pe versus sweep speed, starting from the m = 0 product
/// state. Columns v, xi_over_N, Pe, n0_fraction, duration,
/// norm_drift, step_shift.
inline ScanTable speed_scan(std::size_t n_atoms, double c1, const std::vector<double>& v_grid,
                            const SweepSettings& settings) {
  for (double v : v_grid)
    if (!(v > 0.0)) throw InvalidArgument("speed_scan: speeds must be positive");
  ScanTable table("speed_scan",
                  {"v", "xi_over_N", "Pe", "n0_fraction", "duration", "norm_drift", "step_shift"});
  table.set_meta("n_atoms", static_cast<long long>(n_atoms));
  table.set_meta("c1", c1);
  table.set_meta("q_start", settings.schedule.q_start);
  table.set_meta("q_end", settings.schedule.q_end);
  table.set_meta("branch", std::string(settings.schedule.branch == Branch::ground ? "ground" : "highest"));
  table.set_meta("v_grid", v_grid);
  table.set_meta("max_step", settings.control.max_step);
  table.set_meta("max_dq", settings.control.max_dq);
  table.set_meta("krylov_tol", settings.control.krylov_tol);
  table.set_meta("convergence_target", settings.convergence_target);
  const auto results = parallel_map<SweepPoint>(v_grid.size(), [&](std::size_t i) {
    return run_sweep_point(n_atoms, c1, v_grid[i], settings);
  });
  const double dq = std::abs(settings.schedule.q_start - settings.schedule.q_end);
  detail::fill_table(table, results, [&](std::size_t i, std::optional<SweepPoint> p) {
    if (!p) return std::vector<double>{v_grid[i]};
    return std::vector<double>{p->speed,      p->observables.xi_over_n, p->observables.excitation,
                               p->observables.n0_fraction, dq / p->speed, p->norm_drift,
                               p->step_shift};
  });
  return table;
}

struct SweepTimeResult {
  /// Sweep time |q_start - q_end| / speed in units of 1/|c1|.
  double duration = 0.0;
  /// Largest speed found with xi >= target (bracket low end).
  double speed = 0.0;
  /// Smallest speed found with xi < target (bracket high end).
  double speed_fail = 0.0;
  double xi_over_n = 0.0;
  bool monotone_verified = false;
  /// Every propagation evaluated, in evaluation order.
  std::vector<SweepPoint> evaluations;
};

/// Largest sweep speed whose final xi reaches target_fraction * N, by
/// geometric bisection on v to 1% in T. The bracket is found by doubling or
/// halving from v = 1; monotonicity is checked at 0.9 v on return.
inline SweepTimeResult required_sweep_time(std::size_t n_atoms, double c1, double target_fraction,
                                           const SweepSettings& settings, double rel_tol = 0.01) {
  if (!(target_fraction > 0.0 && target_fraction < 1.0))
    throw InvalidArgument("required_sweep_time: target fraction must lie in (0, 1)");
  SweepTimeResult r;
  auto eval = [&](double v) {
    r.evaluations.push_back(run_sweep_point(n_atoms, c1, v, settings));
    return r.evaluations.back().observables.xi_over_n;
  };
  const double v_min = 1e-4, v_max = 1e4;
  double lo = 1.0, hi = 1.0;
  double xi_lo = eval(1.0);
  if (xi_lo >= target_fraction) {
    do {
      lo = hi;
      hi *= 2.0;
      if (hi > v_max) throw Error("required_sweep_time: target reached at every speed up to 1e4");
    } while (eval(hi) >= target_fraction);
    xi_lo = 0.0;
    for (const auto& e : r.evaluations)
      if (e.speed == lo) xi_lo = e.observables.xi_over_n;
  } else {
    do {
      hi = lo;
      lo *= 0.5;
      if (lo < v_min) throw Error("required_sweep_time: target not reached at any speed down to 1e-4");
    } while ((xi_lo = eval(lo)) < target_fraction);
  }
  while (hi / lo > 1.0 + rel_tol) {
    const double mid = std::sqrt(lo * hi);
    const double xi = eval(mid);
    if (xi >= target_fraction) {
      lo = mid;
      xi_lo = xi;
    } else {
      hi = mid;
    }
  }
  r.speed = lo;
  r.speed_fail = hi;
  r.xi_over_n = xi_lo;
  r.duration = std::abs(settings.schedule.q_start - settings.schedule.q_end) / lo;
  r.monotone_verified = eval(0.9 * lo) >= target_fraction;
  return r;
}

/// required_sweep_time over atom numbers and targets. Columns n_atoms,
/// target_fraction, duration, speed, xi_over_n, monotone_verified.
inline ScanTable time_scaling(const std::vector<std::size_t>& n_list, const std::vector<double>& targets,
                              double c1, const SweepSettings& settings) {
  ScanTable table("time_scaling", {"n_atoms", "target_fraction", "duration", "speed", "xi_over_n",
                                   "monotone_verified"});
  std::vector<double> ns(n_list.begin(), n_list.end());
  table.set_meta("n_list", ns);
  table.set_meta("targets", targets);
  table.set_meta("c1", c1);
  table.set_meta("q_start", settings.schedule.q_start);
  table.set_meta("q_end", settings.schedule.q_end);
  table.set_meta("convergence_target", settings.convergence_target);
  const std::size_t count = n_list.size() * targets.size();
  const auto results = parallel_map<SweepTimeResult>(count, [&](std::size_t i) {
    return required_sweep_time(n_list[i / targets.size()], c1, targets[i % targets.size()], settings);
  });
  detail::fill_table(table, results, [&](std::size_t i, std::optional<SweepTimeResult> p) {
    const double n = ns[i / targets.size()];
    if (!p) return std::vector<double>{n, targets[i % targets.size()]};
    return std::vector<double>{n, targets[i % targets.size()], p->duration, p->speed, p->xi_over_n,
                               p->monotone_verified ? 1.0 : 0.0};
  });
  return table;
}

}  // namespace spinor

#endif  // SPINOR_SCANS_HPP
