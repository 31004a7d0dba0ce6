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

// Front end for the scans: run configuration (JSON file plus flag
// overrides), species unit conversion and CSV / JSON / gnuplot emission.
//
// Configuration keys (file and flag spellings):
//
//   command             positional    phase-scan | gap-scan | sweep | speed-scan | time-scaling | depth-report
//   N                   --n-atoms     atom number, default 1000
//   c1                  --c1          spin coupling, default -1 (or the species sign)
//   species             --species     custom | Rb87 | Na23
//   c1_over_hbar        --c1-over-hbar  rad/s for species custom, 0 = unknown
//   q                   --q           depth-report field, default 0
//   q_start, q_end      --q-start, --q-end   sweep endpoints, default 6 -> 0 (-6 -> 0 for c1 > 0)
//   v                   --speed       sweep speed, default 1
//   branch              --branch      auto | ground | highest
//   grid                --grid        command grid, see default_grid()
//   curve_grid          --curve-grid  gap-scan q grid for the gap(q) curve
//   targets             --targets     time-scaling target fractions of N
//   loss_p              --loss-p      depth-report atom-loss probability
//   sample_every        --sample-every  sweep trajectory stride in steps
//   max_step, max_dq, krylov_tol, krylov_dim, convergence_target
//   out_dir             --out-dir
//   format              --format      csv or csv,gnuplot
//
// parse_config resolves every default, so the config stored in the metadata
// sidecar parses back to an identical RunConfig.

#ifndef SPINOR_TOOLS_CLI_HPP
#define SPINOR_TOOLS_CLI_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinor/dynamics.hpp"
#include "spinor/observables.hpp"
#include "spinor/scans.hpp"
#include "spinor/spectra.hpp"

namespace spinor::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int {
  exit_ok = 0,
  exit_point_failures = 1,
  exit_usage = 2,
  exit_unknown_key = 3,
  exit_contradiction = 4,
  exit_bad_grid = 5,
  exit_invalid_value = 6,
  exit_io = 7,
  exit_config_file = 8,
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// ---------------------------------------------------------------------------
// Species

struct SpeciesPreset {
  std::string name = "custom";
  /// Signed angular frequency c1'/hbar in rad/s; 0 when unknown.
  double c1_over_hbar = 0.0;
};

inline SpeciesPreset species_preset(const std::string& name) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (name == "Rb87") return {"Rb87", -two_pi * 7.0};
  if (name == "Na23") return {"Na23", two_pi * 50.0};
  if (name == "custom") return {"custom", 0.0};
  throw ConfigError(exit_invalid_value, "unknown species '" + name + "' (expected custom, Rb87 or Na23)");
}

/// Time in units of 1/|c1'| to seconds.
inline double convert_units(double value, const SpeciesPreset& preset) {
  if (preset.c1_over_hbar == 0.0)
    throw InvalidArgument("convert_units: species '" + preset.name + "' has no c1/hbar");
  return value / std::abs(preset.c1_over_hbar);
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  std::string command;
  std::size_t n_atoms = 1000;
  double c1 = -1.0;
  std::string species = "custom";
  double c1_over_hbar = 0.0;
  double q = 0.0;
  double q_start = 6.0;
  double q_end = 0.0;
  double speed = 1.0;
  std::string branch = "ground";
  std::string grid;
  std::string curve_grid;
  std::vector<double> targets;
  double loss_p = 0.0;
  std::size_t sample_every = 10;
  double max_step = DtControl{}.max_step;
  double max_dq = DtControl{}.max_dq;
  double krylov_tol = DtControl{}.krylov_tol;
  std::size_t krylov_dim = DtControl{}.krylov_dim;
  double convergence_target = 1e-6;
  std::string out_dir = ".";
  std::vector<std::string> formats{"csv"};

  bool operator==(const RunConfig&) const = default;

  SpeciesPreset preset() const { return {species, c1_over_hbar}; }
  bool physical_units() const { return c1_over_hbar != 0.0; }
  bool gnuplot() const { return std::find(formats.begin(), formats.end(), "gnuplot") != formats.end(); }

  ModelParams params() const { return {n_atoms, c1, q}; }

  SweepSettings sweep_settings() const {
    SweepSettings s;
    s.schedule = {q_start, q_end, speed, branch == "ground" ? Branch::ground : Branch::highest};
    s.control.max_step = max_step;
    s.control.max_dq = max_dq;
    s.control.krylov_tol = krylov_tol;
    s.control.krylov_dim = krylov_dim;
    s.convergence_target = convergence_target;
    return s;
  }
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"phase-scan", "gap-scan",     "sweep",
                                          "speed-scan", "time-scaling", "depth-report"};
  return c;
}

inline std::string default_grid(const std::string& command) {
  if (command == "phase-scan") return "-6:6:0.05";
  if (command == "gap-scan") return "100,300,1000,3000,10000,100000";
  if (command == "speed-scan") return "log:0.01:100:17";
  if (command == "time-scaling") return "1000,10000";
  return "";
}

// Grid syntax: "lo:hi:step" (linear), "log:lo:hi:points", or "a,b,c".

inline double parse_number(const std::string& text, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    throw ConfigError(exit_bad_grid, context + ": '" + text + "' is not a finite number");
  return v;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

inline std::vector<double> parse_value_grid(const std::string& text, const std::string& key) {
  const std::string ctx = "grid '" + key + "'";
  if (text.empty()) throw ConfigError(exit_bad_grid, ctx + " is empty");
  try {
    if (text.rfind("log:", 0) == 0) {
      const auto p = split(text.substr(4), ':');
      if (p.size() != 3) throw ConfigError(exit_bad_grid, ctx + ": expected log:lo:hi:points");
      const double pts = parse_number(p[2], ctx);
      if (pts != std::floor(pts) || pts < 2) throw ConfigError(exit_bad_grid, ctx + ": points must be an integer >= 2");
      return log_grid(parse_number(p[0], ctx), parse_number(p[1], ctx), static_cast<std::size_t>(pts));
    }
    if (text.find(':') != std::string::npos) {
      const auto p = split(text, ':');
      if (p.size() != 3) throw ConfigError(exit_bad_grid, ctx + ": expected lo:hi:step");
      const double lo = parse_number(p[0], ctx), hi = parse_number(p[1], ctx), step = parse_number(p[2], ctx);
      if ((hi - lo) / step > 1e7) throw ConfigError(exit_bad_grid, ctx + ": more than 1e7 points");
      return linear_grid(lo, hi, step);
    }
    std::vector<double> out;
    for (const auto& part : split(text, ',')) out.push_back(parse_number(part, ctx));
    return out;
  } catch (const InvalidArgument& e) {
    throw ConfigError(exit_bad_grid, ctx + ": " + e.what());
  }
}

inline std::vector<std::size_t> parse_atom_list(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  for (double v : parse_value_grid(text, key)) {
    if (v < 1.0 || v != std::floor(v) || v > 1e9)
      throw ConfigError(exit_bad_grid, "grid '" + key + "': atom numbers must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> k{
      "command", "N",       "c1",     "species",      "c1_over_hbar", "q",        "q_start",
      "q_end",   "v",       "branch", "grid",         "curve_grid",   "targets",  "loss_p",
      "sample_every", "max_step", "max_dq", "krylov_tol", "krylov_dim", "convergence_target", "out_dir",
      "format"};
  return k;
}

inline double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError(exit_invalid_value, "config key '" + key + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(exit_invalid_value, "config key '" + key + "' must be finite");
  return v;
}

inline std::size_t get_count(const json& j, const std::string& key) {
  const double v = get_number(j, key);
  if (v < 0.0 || v != std::floor(v) || v > 1e12)
    throw ConfigError(exit_invalid_value, "config key '" + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError(exit_invalid_value, "config key '" + key + "' must be a string");
  return j.get<std::string>();
}

/// A grid given as a JSON array is stored as its comma list.
inline std::string get_grid(const json& j, const std::string& key) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    std::string s;
    for (const auto& e : j) {
      if (!e.is_number()) throw ConfigError(exit_bad_grid, "grid '" + key + "': array entries must be numbers");
      if (!s.empty()) s += ',';
      s += format_double(e.get<double>());
    }
    return s;
  }
  throw ConfigError(exit_bad_grid, "grid '" + key + "' must be a string or an array of numbers");
}

inline std::vector<double> get_targets(const json& j) {
  std::vector<double> out;
  if (j.is_string()) return parse_value_grid(j.get<std::string>(), "targets");
  if (!j.is_array()) throw ConfigError(exit_bad_grid, "targets must be an array of numbers");
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError(exit_bad_grid, "targets must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline std::vector<std::string> get_formats(const json& j) {
  std::vector<std::string> parts;
  if (j.is_string()) {
    parts = split(j.get<std::string>(), ',');
  } else if (j.is_array()) {
    for (const auto& e : j) parts.push_back(get_string(e, "format"));
  } else {
    throw ConfigError(exit_invalid_value, "format must be a string or an array of strings");
  }
  bool csv = false, gp = false;
  for (const auto& p : parts) {
    if (p == "csv")
      csv = true;
    else if (p == "gnuplot")
      gp = true;
    else
      throw ConfigError(exit_invalid_value, "unknown format '" + p + "' (expected csv or csv,gnuplot)");
  }
  if (!csv) throw ConfigError(exit_invalid_value, "format must include csv");
  return gp ? std::vector<std::string>{"csv", "gnuplot"} : std::vector<std::string>{"csv"};
}

}  // namespace detail

/// Builds a validated RunConfig from a flat key/value object, resolving
/// every default that depends on other keys.
inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError(exit_config_file, "configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto& known = detail::known_keys();
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(exit_unknown_key, "unknown configuration key '" + key + "'");
  }
  RunConfig c;
  auto has = [&](const char* k) { return j.contains(k) && !j.at(k).is_null(); };

  if (!has("command")) throw ConfigError(exit_usage, "no command given");
  c.command = detail::get_string(j.at("command"), "command");
  if (std::find(commands().begin(), commands().end(), c.command) == commands().end())
    throw ConfigError(exit_usage, "unknown command '" + c.command + "'");

  if (has("N")) c.n_atoms = detail::get_count(j.at("N"), "N");
  if (c.n_atoms == 0) throw ConfigError(exit_invalid_value, "N must be >= 1");

  // Species and the sign of c1.
  if (has("species")) c.species = detail::get_string(j.at("species"), "species");
  const SpeciesPreset preset = species_preset(c.species);
  c.c1_over_hbar = preset.c1_over_hbar;
  if (has("c1_over_hbar")) {
    const double w = detail::get_number(j.at("c1_over_hbar"), "c1_over_hbar");
    if (c.species != "custom" && w != preset.c1_over_hbar)
      throw ConfigError(exit_contradiction, "c1_over_hbar contradicts species " + c.species);
    c.c1_over_hbar = w;
  }
  if (has("c1")) {
    c.c1 = detail::get_number(j.at("c1"), "c1");
    if (c.c1 == 0.0) throw ConfigError(exit_invalid_value, "c1 must be nonzero");
  } else if (c.c1_over_hbar != 0.0) {
    c.c1 = c.c1_over_hbar < 0.0 ? -1.0 : 1.0;
  }
  if (c.c1_over_hbar != 0.0 && (c.c1 < 0.0) != (c.c1_over_hbar < 0.0))
    throw ConfigError(exit_contradiction, "sign of c1 contradicts " + c.species + " (c1/hbar = " +
                                              format_double(c.c1_over_hbar) + " rad/s)");
  const bool ferro = c.c1 < 0.0;

  // Schedule and branch.
  c.branch = ferro ? "ground" : "highest";
  if (has("branch")) {
    const std::string b = detail::get_string(j.at("branch"), "branch");
    if (b != "auto" && b != "ground" && b != "highest")
      throw ConfigError(exit_invalid_value, "branch must be auto, ground or highest");
    if ((b == "ground" && !ferro) || (b == "highest" && ferro))
      throw ConfigError(exit_contradiction,
                        "branch=" + b + " contradicts c1 " + (ferro ? "< 0" : "> 0") + " (ground needs c1 < 0)");
  }
  c.q_start = ferro ? 6.0 : -6.0;
  if (has("q")) c.q = detail::get_number(j.at("q"), "q");
  if (has("q_start")) c.q_start = detail::get_number(j.at("q_start"), "q_start");
  if (has("q_end")) c.q_end = detail::get_number(j.at("q_end"), "q_end");
  if (has("v")) c.speed = detail::get_number(j.at("v"), "v");
  if (!(c.speed > 0.0)) throw ConfigError(exit_invalid_value, "v must be > 0");
  if (c.q_start == c.q_end) throw ConfigError(exit_invalid_value, "q_start and q_end must differ");

  // Grids.
  c.grid = default_grid(c.command);
  if (has("grid")) {
    if (c.grid.empty()) throw ConfigError(exit_bad_grid, "command " + c.command + " takes no grid");
    c.grid = detail::get_grid(j.at("grid"), "grid");
  }
  if (c.command == "gap-scan") c.curve_grid = "-6:6:0.05";
  if (has("curve_grid")) {
    if (c.command != "gap-scan") throw ConfigError(exit_bad_grid, "curve_grid applies to gap-scan only");
    c.curve_grid = detail::get_grid(j.at("curve_grid"), "curve_grid");
  }
  if (c.command == "time-scaling") c.targets = {0.3, 0.5, 0.7};
  if (has("targets")) {
    if (c.command != "time-scaling") throw ConfigError(exit_bad_grid, "targets apply to time-scaling only");
    c.targets = detail::get_targets(j.at("targets"));
  }
  if (c.command == "phase-scan") {
    const auto g = parse_value_grid(c.grid, "grid");
    if (!std::is_sorted(g.begin(), g.end())) throw ConfigError(exit_bad_grid, "grid 'grid': q values must be sorted");
  } else if (c.command == "gap-scan") {
    if (parse_atom_list(c.grid, "grid").size() < 2)
      throw ConfigError(exit_bad_grid, "grid 'grid': gap-scan needs at least two atom numbers");
    parse_value_grid(c.curve_grid, "curve_grid");
  } else if (c.command == "speed-scan") {
    for (double v : parse_value_grid(c.grid, "grid"))
      if (!(v > 0.0)) throw ConfigError(exit_bad_grid, "grid 'grid': speeds must be positive");
  } else if (c.command == "time-scaling") {
    parse_atom_list(c.grid, "grid");
    if (c.targets.empty()) throw ConfigError(exit_bad_grid, "targets must not be empty");
    for (double t : c.targets)
      if (!(t > 0.0 && t < 1.0)) throw ConfigError(exit_bad_grid, "targets must lie in (0, 1)");
  }

  // Remaining scalars.
  if (has("loss_p")) c.loss_p = detail::get_number(j.at("loss_p"), "loss_p");
  if (!(c.loss_p >= 0.0 && c.loss_p < 1.0)) throw ConfigError(exit_invalid_value, "loss_p must lie in [0, 1)");
  if (has("sample_every")) c.sample_every = detail::get_count(j.at("sample_every"), "sample_every");
  if (c.sample_every == 0) throw ConfigError(exit_invalid_value, "sample_every must be >= 1");
  if (has("max_step")) c.max_step = detail::get_number(j.at("max_step"), "max_step");
  if (has("max_dq")) c.max_dq = detail::get_number(j.at("max_dq"), "max_dq");
  if (has("krylov_tol")) c.krylov_tol = detail::get_number(j.at("krylov_tol"), "krylov_tol");
  if (has("krylov_dim")) c.krylov_dim = detail::get_count(j.at("krylov_dim"), "krylov_dim");
  if (has("convergence_target"))
    c.convergence_target = detail::get_number(j.at("convergence_target"), "convergence_target");
  if (!(c.max_step > 0.0) || !(c.max_dq > 0.0)) throw ConfigError(exit_invalid_value, "max_step and max_dq must be > 0");
  if (!(c.krylov_tol > 0.0) || c.krylov_dim < 2)
    throw ConfigError(exit_invalid_value, "krylov_tol must be > 0 and krylov_dim >= 2");
  if (!(c.convergence_target > 0.0)) throw ConfigError(exit_invalid_value, "convergence_target must be > 0");
  if (has("out_dir")) c.out_dir = detail::get_string(j.at("out_dir"), "out_dir");
  if (c.out_dir.empty()) throw ConfigError(exit_invalid_value, "out_dir must not be empty");
  if (has("format")) c.formats = detail::get_formats(j.at("format"));
  return c;
}

inline json config_to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["N"] = c.n_atoms;
  j["c1"] = c.c1;
  j["species"] = c.species;
  j["c1_over_hbar"] = c.c1_over_hbar;
  j["q"] = c.q;
  j["q_start"] = c.q_start;
  j["q_end"] = c.q_end;
  j["v"] = c.speed;
  j["branch"] = c.branch;
  if (!c.grid.empty()) j["grid"] = c.grid;
  if (!c.curve_grid.empty()) j["curve_grid"] = c.curve_grid;
  if (!c.targets.empty()) j["targets"] = c.targets;
  j["loss_p"] = c.loss_p;
  j["sample_every"] = c.sample_every;
  j["max_step"] = c.max_step;
  j["max_dq"] = c.max_dq;
  j["krylov_tol"] = c.krylov_tol;
  j["krylov_dim"] = c.krylov_dim;
  j["convergence_target"] = c.convergence_target;
  j["out_dir"] = c.out_dir;
  j["format"] = c.formats;
  return j;
}

/// Reads a configuration file. A metadata sidecar is accepted too: its
/// "config" member is used.
inline json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(exit_config_file, "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(exit_config_file, "config file '" + path + "': " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.at("config").is_object()) return j.at("config");
  return j;
}

struct ParseOutcome {
  RunConfig config;
  bool help = false;
  std::string help_text;
};

inline std::string help_footer() {
  return "Grid syntax: lo:hi:step | log:lo:hi:points | a,b,c\n"
         "Default grids: phase-scan q -6:6:0.05; gap-scan N 100,300,1000,3000,10000,100000 "
         "(curve -6:6:0.05 at --n-atoms); speed-scan v log:0.01:100:17; time-scaling N 1000,10000, "
         "targets 0.3,0.5,0.7.\n"
         "Units: q and c1 in units of |c1|, v in |c1|^2, times in 1/|c1|. Rb87 c1/hbar = -2pi x 7 Hz, "
         "Na23 +2pi x 50 Hz.\n"
         "SPINOR_THREADS sets the number of scan worker threads (default: hardware concurrency).\n"
         "Exit codes: 0 ok, 1 failed grid points, 2 usage, 3 unknown config key, 4 contradictory "
         "settings, 5 malformed grid, 6 invalid value, 7 I/O error, 8 unreadable config file.\n";
}

/// Parses command-line arguments (without the program name). Flags
/// override values from --config.
inline ParseOutcome parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Spin-1 condensate adiabatic-sweep scans", "spinor_cli"};
  app.footer(help_footer());
  std::optional<std::string> command, config_file, species, branch, grid, curve_grid, targets, out_dir, format;
  std::optional<double> c1, c1_over_hbar, q, q_start, q_end, speed, loss_p, max_step, max_dq, krylov_tol,
      convergence_target;
  std::optional<std::size_t> n_atoms, sample_every, krylov_dim;
  app.add_option("command", command, "phase-scan | gap-scan | sweep | speed-scan | time-scaling | depth-report");
  app.add_option("--config", config_file, "JSON configuration file or metadata sidecar");
  app.add_option("--n-atoms", n_atoms, "atom number N (default 1000)");
  app.add_option("--c1", c1, "spin coupling; sign selects the phase (default -1 or the species sign)");
  app.add_option("--species", species, "custom | Rb87 | Na23 (default custom)");
  app.add_option("--c1-over-hbar", c1_over_hbar, "c1/hbar in rad/s for species custom (default 0: no units)");
  app.add_option("--q", q, "depth-report quadratic Zeeman field (default 0)");
  app.add_option("--q-start", q_start, "sweep start (default 6, or -6 for c1 > 0)");
  app.add_option("--q-end", q_end, "sweep end (default 0)");
  app.add_option("--speed", speed, "sweep speed v (default 1)");
  app.add_option("--branch", branch, "auto | ground | highest (default auto: ground for c1 < 0)");
  app.add_option("--grid", grid, "command grid (see below)");
  app.add_option("--curve-grid", curve_grid, "gap-scan q grid for the gap curve (default -6:6:0.05)");
  app.add_option("--targets", targets, "time-scaling targets as fractions of N (default 0.3,0.5,0.7)");
  app.add_option("--loss-p", loss_p, "depth-report atom-loss probability (default 0)");
  app.add_option("--sample-every", sample_every, "sweep trajectory stride in steps (default 10)");
  app.add_option("--max-step", max_step, "largest time step (default 0.05)");
  app.add_option("--max-dq", max_dq, "largest q change per step (default 0.05)");
  app.add_option("--krylov-tol", krylov_tol, "Krylov exponential tolerance (default 1e-12)");
  app.add_option("--krylov-dim", krylov_dim, "Krylov subspace size (default 30)");
  app.add_option("--convergence-target", convergence_target, "step-halving observable shift (default 1e-6)");
  app.add_option("--out-dir", out_dir, "output directory (default .)");
  app.add_option("--format", format, "csv or csv,gnuplot (default csv)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    return {RunConfig{}, true, app.help()};
  } catch (const CLI::ParseError& e) {
    throw ConfigError(exit_usage, e.what());
  }

  json merged = config_file ? read_config_file(*config_file) : json::object();
  if (!merged.is_object()) throw ConfigError(exit_config_file, "configuration must be a JSON object");
  auto put = [&](const char* key, const auto& opt) {
    if (opt) merged[key] = *opt;
  };
  put("command", command);
  put("N", n_atoms);
  put("c1", c1);
  put("species", species);
  put("c1_over_hbar", c1_over_hbar);
  put("q", q);
  put("q_start", q_start);
  put("q_end", q_end);
  put("v", speed);
  put("branch", branch);
  put("grid", grid);
  put("curve_grid", curve_grid);
  put("targets", targets);
  put("loss_p", loss_p);
  put("sample_every", sample_every);
  put("max_step", max_step);
  put("max_dq", max_dq);
  put("krylov_tol", krylov_tol);
  put("krylov_dim", krylov_dim);
  put("convergence_target", convergence_target);
  put("out_dir", out_dir);
  put("format", format);
  return {config_from_json(merged), false, {}};
}

// ---------------------------------------------------------------------------
// Output

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

/// RFC 4180 text: CRLF records, header row of column names.
inline std::string to_csv(const ScanTable& t) {
  std::string out;
  for (std::size_t c = 0; c < t.column_names.size(); ++c) {
    if (c) out += ',';
    out += csv_field(t.column_names[c]);
  }
  out += "\r\n";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (c) out += ',';
      out += format_double(t.columns[c][r]);
    }
    out += "\r\n";
  }
  return out;
}

inline json meta_to_json(const MetaValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

inline json table_json(const ScanTable& t) {
  json j;
  j["name"] = t.name;
  j["file"] = t.name + ".csv";
  j["columns"] = t.column_names;
  j["rows"] = t.rows();
  json meta = json::object();
  for (const auto& [k, v] : t.metadata) meta[k] = meta_to_json(v);
  j["metadata"] = meta;
  json fails = json::array();
  for (const auto& f : t.failures) fails.push_back({{"index", f.index}, {"message", f.message}});
  j["failures"] = fails;
  return j;
}

/// Result of a command before emission.
struct RunResult {
  std::vector<ScanTable> tables;
  std::optional<PowerLawFit> fit;
  json summary = json::object();

  bool ok() const {
    for (const auto& t : tables)
      if (!t.ok()) return false;
    return true;
  }
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(exit_io, "cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw ConfigError(exit_io, "failed writing '" + path.string() + "'");
}

inline const ScanTable* find_table(const RunResult& r, const std::string& name) {
  for (const auto& t : r.tables)
    if (t.name == name) return &t;
  return nullptr;
}

inline std::string gnuplot_header(const std::string& output) {
  return "# Generated by spinor_cli; run with: gnuplot " + output +
         ".gp\nset datafile separator \",\"\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n" +
         "set output \"" + output + ".png\"\n";
}

inline std::vector<std::pair<std::string, std::string>> gnuplot_scripts(const RunResult& r) {
  std::vector<std::pair<std::string, std::string>> out;
  if (find_table(r, "phase_scan")) {
    out.emplace_back("phase_scan", gnuplot_header("phase_scan") +
                                       "set xlabel \"q/|c1|\"\nset ylabel \"sqrt(<N0/N>)\"\n"
                                       "plot \"phase_scan.csv\" using 1:3 with lines\n");
  }
  if (find_table(r, "gap_curve")) {
    out.emplace_back("gap_curve", gnuplot_header("gap_curve") +
                                      "set xlabel \"q/|c1|\"\nset ylabel \"gap/|c1|\"\n"
                                      "plot \"gap_curve.csv\" using 1:4 with lines\n");
  }
  if (find_table(r, "gap_scan") && r.fit) {
    out.emplace_back("gap_fit", gnuplot_header("gap_fit") +
                                    "set logscale xy\nset xlabel \"N\"\nset ylabel \"min gap/|c1|\"\n"
                                    "a = " + format_double(r.fit->prefactor) + "\nb = " +
                                    format_double(r.fit->exponent) +
                                    "\nplot \"gap_scan.csv\" using 1:3 with points pt 7, "
                                    "a*x**b with lines title sprintf(\"%.3g N^{%.3g}\", a, b)\n");
  }
  if (find_table(r, "speed_scan")) {
    out.emplace_back("speed_scan", gnuplot_header("speed_scan") +
                                       "set multiplot layout 2,1\nset logscale x\nset xlabel \"v/|c1|^2\"\n"
                                       "set ylabel \"xi/N\"\nplot \"speed_scan.csv\" using 1:2 with linespoints\n"
                                       "set ylabel \"Pe\"\nplot \"speed_scan.csv\" using 1:3 with linespoints\n"
                                       "unset multiplot\n");
  }
  if (const ScanTable* t = find_table(r, "time_scaling")) {
    std::string s = gnuplot_header("time_scaling") + "set logscale x\nset xlabel \"N\"\nset ylabel \"T |c1|\"\nplot ";
    std::vector<double> targets;
    for (double v : t->column("target_fraction"))
      if (std::find(targets.begin(), targets.end(), v) == targets.end()) targets.push_back(v);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const std::string f = format_double(targets[i]);
      s += std::string(i ? ", \\\n     " : "") + "\"time_scaling.csv\" using 1:($2==" + f +
           " ? $3 : 1/0) with linespoints title \"xi = " + f + " N\"";
    }
    out.emplace_back("time_scaling", s + "\n");
  }
  if (find_table(r, "sweep_trajectory")) {
    out.emplace_back("sweep_trajectory", gnuplot_header("sweep_trajectory") +
                                             "set xlabel \"t |c1|\"\nset y2tics\nset ylabel \"xi/N\"\n"
                                             "plot \"sweep_trajectory.csv\" using 1:3 with lines, "
                                             "\"sweep_trajectory.csv\" using 1:4 with lines axes x1y2\n");
  }
  return out;
}

}  // namespace detail

/// Writes one CSV per table, metadata.json, gap_fit.json when a fit is
/// present and gnuplot scripts when requested. Returns the files written.
inline std::vector<std::filesystem::path> emit_outputs(const RunResult& result, const RunConfig& config) {
  namespace fs = std::filesystem;
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError(exit_io, "cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<fs::path> written;
  for (const auto& t : result.tables) {
    detail::write_file(dir / (t.name + ".csv"), to_csv(t));
    written.push_back(dir / (t.name + ".csv"));
  }
  if (result.fit) {
    const json fit{{"a", result.fit->prefactor}, {"b", result.fit->exponent}, {"residual", result.fit->residual}};
    detail::write_file(dir / "gap_fit.json", fit.dump(2) + "\n");
    written.push_back(dir / "gap_fit.json");
  }
  if (config.gnuplot()) {
    for (const auto& [name, script] : detail::gnuplot_scripts(result)) {
      detail::write_file(dir / (name + ".gp"), script);
      written.push_back(dir / (name + ".gp"));
    }
  }
  json meta;
  meta["command"] = config.command;
  meta["config"] = config_to_json(config);
  json units;
  units["species"] = config.species;
  units["c1_over_hbar_rad_per_s"] = config.c1_over_hbar;
  units["energy_unit"] = "|c1|";
  units["time_unit"] = "1/|c1|";
  if (config.physical_units()) units["time_unit_s"] = convert_units(std::abs(config.c1), config.preset());
  meta["units"] = units;
  json tables = json::array();
  for (const auto& t : result.tables) tables.push_back(table_json(t));
  meta["tables"] = tables;
  meta["summary"] = result.summary;
  meta["all_points_ok"] = result.ok();
  detail::write_file(dir / "metadata.json", meta.dump(2) + "\n");
  written.push_back(dir / "metadata.json");
  return written;
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

/// Appends seconds computed from a column in units of 1/|c1|.
inline void add_seconds(ScanTable& t, const RunConfig& c, const std::string& source, const std::string& name) {
  if (!c.physical_units()) return;
  std::vector<double> s;
  for (double v : t.column(source)) s.push_back(convert_units(v * std::abs(c.c1), c.preset()));
  t.column_names.push_back(name);
  t.columns.push_back(std::move(s));
}

inline RunResult run_phase_scan(const RunConfig& c) {
  RunResult r;
  r.tables.push_back(phase_scan(c.n_atoms, c.c1, parse_value_grid(c.grid, "grid")));
  try {
    json list = json::array();
    for (const auto& tr : locate_transitions(r.tables.back()))
      list.push_back({{"q", tr.q}, {"uncertainty", tr.uncertainty}, {"strength", tr.strength}});
    r.summary["transitions"] = list;
  } catch (const std::exception& e) {
    r.summary["transitions_error"] = e.what();
  }
  return r;
}

inline RunResult run_gap_scan(const RunConfig& c) {
  RunResult r;
  auto [table, fit] = gap_scan(parse_atom_list(c.grid, "grid"), c.c1);
  r.tables.push_back(std::move(table));
  r.fit = fit;
  r.tables.push_back(gap_curve(c.n_atoms, c.c1, parse_value_grid(c.curve_grid, "curve_grid")));
  r.summary["fit"] = {{"a", fit.prefactor}, {"b", fit.exponent}, {"residual", fit.residual}};
  return r;
}

inline RunResult run_speed_scan(const RunConfig& c) {
  RunResult r;
  ScanTable t = speed_scan(c.n_atoms, c.c1, parse_value_grid(c.grid, "grid"), c.sweep_settings());
  add_seconds(t, c, "duration", "duration_s");
  r.tables.push_back(std::move(t));
  return r;
}

inline RunResult run_time_scaling(const RunConfig& c) {
  RunResult r;
  ScanTable t = time_scaling(parse_atom_list(c.grid, "grid"), c.targets, c.c1, c.sweep_settings());
  add_seconds(t, c, "duration", "duration_s");
  r.tables.push_back(std::move(t));
  return r;
}

inline RunResult run_sweep(const RunConfig& c) {
  RunResult r;
  const SweepSettings settings = c.sweep_settings();
  ScanTable summary = speed_scan(c.n_atoms, c.c1, {c.speed}, settings);
  summary.name = "sweep_summary";
  add_seconds(summary, c, "duration", "duration_s");
  const bool ok = summary.ok();
  r.tables.push_back(std::move(summary));
  ScanTable traj("sweep_trajectory", {"t", "q", "xi_over_N", "n0_fraction", "energy"});
  traj.set_meta("sample_every", static_cast<long long>(c.sample_every));
  if (ok) {
    // Trajectory at the step size the convergence check settled on.
    const ModelParams params{c.n_atoms, c.c1, c.q_end};
    const SectorBasis basis(c.n_atoms);
    const auto converged =
        evolve_sweep_converged(params, settings.schedule, product_state_m0(basis), settings.control,
                               settings.convergence_target);
    const auto run = evolve_sweep(params, settings.schedule, product_state_m0(basis), converged.control,
                                  {c.sample_every, false});
    traj.set_meta("max_step", converged.control.max_step);
    traj.set_meta("max_dq", converged.control.max_dq);
    for (const auto& s : run.trajectory)
      traj.add_row({s.t, s.q, s.xi / static_cast<double>(c.n_atoms), s.n0_fraction, s.energy});
  } else {
    traj.failures.push_back({0, "sweep failed; see sweep_summary"});
  }
  add_seconds(traj, c, "t", "t_s");
  r.tables.push_back(std::move(traj));
  return r;
}

inline RunResult run_depth_report(const RunConfig& c) {
  RunResult r;
  ScanTable t("depth_report", {"n_atoms", "q", "loss_p", "xi", "xi_over_N", "perp_moment", "delta_lz2",
                               "depth_bound"});
  t.set_meta("n_atoms", static_cast<long long>(c.n_atoms));
  t.set_meta("c1", c.c1);
  t.set_meta("q", c.q);
  t.set_meta("loss_p", c.loss_p);
  t.set_meta("branch", std::string(c.c1 < 0.0 ? "ground" : "highest"));
  const SectorBasis basis(c.n_atoms);
  const EigenPair pair = tracked_eigenpair(c.params());
  std::optional<double> variance;
  if (c.loss_p > 0.0) variance = loss_variance(c.n_atoms, LossModel{c.loss_p});
  const DepthReport d = entanglement_depth(basis, pair.vector, variance);
  const auto n = static_cast<double>(c.n_atoms);
  t.add_row({n, c.q, c.loss_p, d.xi, d.xi / n, d.perp_moment, d.delta_lz2, static_cast<double>(d.depth_bound)});
  r.summary["xi"] = d.xi;
  r.summary["depth_bound"] = d.depth_bound;
  if (c.loss_p > 0.0) {
    r.summary["loss_xi_estimate"] = loss_xi_estimate(LossModel{c.loss_p});
    r.summary["loss_estimate_applicable"] = loss_estimate_applicable(c.n_atoms, LossModel{c.loss_p});
  }
  r.tables.push_back(std::move(t));
  return r;
}

}  // namespace detail

inline RunResult run_command(const RunConfig& c) {
  if (c.command == "phase-scan") return detail::run_phase_scan(c);
  if (c.command == "gap-scan") return detail::run_gap_scan(c);
  if (c.command == "speed-scan") return detail::run_speed_scan(c);
  if (c.command == "time-scaling") return detail::run_time_scaling(c);
  if (c.command == "sweep") return detail::run_sweep(c);
  if (c.command == "depth-report") return detail::run_depth_report(c);
  throw ConfigError(exit_usage, "unknown command '" + c.command + "'");
}

/// Whole program: parse, run, emit. Returns the process exit code.
inline int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const ParseOutcome parsed = parse_config(args);
    if (parsed.help) {
      out << parsed.help_text;
      return exit_ok;
    }
    const RunResult result = run_command(parsed.config);
    for (const auto& path : emit_outputs(result, parsed.config)) out << "wrote " << path.string() << "\n";
    for (const auto& t : result.tables)
      for (const auto& f : t.failures)
        err << t.name << ": point " << f.index << " failed: " << f.message << "\n";
    if (!result.summary.empty()) out << result.summary.dump() << "\n";
    return result.ok() ? exit_ok : exit_point_failures;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return e.code();
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return exit_invalid_value;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_point_failures;
  }
}

}  // namespace spinor::cli

#endif  // SPINOR_TOOLS_CLI_HPP
