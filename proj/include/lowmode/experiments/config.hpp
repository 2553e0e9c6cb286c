#pragma once

// Run configuration: a flat `key = value` file, one entry per line, `#` starts a comment,
// lists are comma separated. Unknown keys are rejected.
//
//   experiment  = convergence | mode-sweep | conditioning | compare-solvers | schur-decay
//   problem     = example1 | example2 | poisson
//   grids       = 63, 127, 255, 511      interior points per axis
//   cutoffs     = 2, 4, 8, 16            spectral cutoffs M (sweeps)
//   cutoff      = 8                      fixed M (convergence, compare-solvers)
//   mesh_grids  = 63, 127, 255           conditioning mesh-independence block
//   tol         = 1e-10                  iterative solver tolerance
//   repetitions = 5                      timed runs per measurement (median)
//   competitors = 100                    random competitors for the best-approximation check
//   full_basis  = true                   mode sweep adds the M = m row
//   averaging   = midpoint | harmonic
//   seed, threads, out_dir

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lowmode/assembly.hpp"
#include "lowmode/errors.hpp"

namespace lowmode {

inline const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"convergence", "mode-sweep", "conditioning", "compare-solvers",
                                            "schur-decay"};
  return ids;
}

struct RunConfig {
  std::string experiment = "convergence";
  std::string problem = "example1";
  std::vector<int> grids;
  std::vector<int> cutoffs;
  int cutoff = 8;
  std::vector<int> mesh_grids;
  double tol = 1e-10;
  int repetitions = 5;
  int competitors = 100;
  bool full_basis = true;
  Averaging averaging = Averaging::midpoint;
  std::uint64_t seed = 20240501;
  int threads = 1;
  std::string out_dir = "results";
};

/// Defaults per experiment. Desk scale keeps four refinement levels with m <= 511;
/// paper scale restores the larger grids.
inline RunConfig default_config(const std::string& experiment, bool paper_scale = false) {
  RunConfig c;
  c.experiment = experiment;
  if (experiment == "convergence") {
    c.grids = paper_scale ? std::vector<int>{127, 255, 511, 1023, 2047} : std::vector<int>{63, 127, 255, 511};
  } else if (experiment == "mode-sweep") {
    c.grids = {paper_scale ? 1023 : 511};
    c.cutoffs = {2, 4, 8, 16, 32};
  } else if (experiment == "conditioning") {
    c.grids = {255};
    c.cutoffs = {2, 4, 8, 16};
    c.mesh_grids = {63, 127, 255};
  } else if (experiment == "compare-solvers") {
    c.problem = "example2";
    c.grids = paper_scale ? std::vector<int>{127, 255, 511, 1023} : std::vector<int>{63, 127, 255, 511};
  } else if (experiment == "schur-decay") {
    c.grids = {31};
    c.cutoffs = {2, 4, 8, 12};
    c.repetitions = 1;
  } else {
    detail::fail(ErrorCategory::invalid_argument, "unknown experiment '" + experiment + "'");
  }
  return c;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) fail(ErrorCategory::invalid_argument, "config key '" + key + "': not an integer: '" + v + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) fail(ErrorCategory::invalid_argument, "config key '" + key + "': not a number: '" + v + "'");
  return out;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_integer(key, trim(item))));
  require(!out.empty(), ErrorCategory::invalid_argument, "config key '" + key + "': empty list");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorCategory::invalid_argument, "config key '" + key + "': expected true or false, got '" + v + "'");
}

inline std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace detail

/// Applies one key/value pair on top of `c`.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "experiment") {
    require(std::find(experiment_ids().begin(), experiment_ids().end(), value) != experiment_ids().end(),
            ErrorCategory::invalid_argument, "unknown experiment '" + value + "'");
    c.experiment = value;
  } else if (key == "problem") {
    manufactured_problem(value);  // validates the name
    c.problem = value;
  } else if (key == "grids") {
    c.grids = parse_int_list(key, value);
  } else if (key == "cutoffs") {
    c.cutoffs = parse_int_list(key, value);
  } else if (key == "cutoff") {
    c.cutoff = static_cast<int>(parse_integer(key, value));
  } else if (key == "mesh_grids") {
    c.mesh_grids = parse_int_list(key, value);
  } else if (key == "tol") {
    c.tol = parse_real(key, value);
  } else if (key == "repetitions") {
    c.repetitions = static_cast<int>(parse_integer(key, value));
  } else if (key == "competitors") {
    c.competitors = static_cast<int>(parse_integer(key, value));
  } else if (key == "full_basis") {
    c.full_basis = parse_bool(key, value);
  } else if (key == "averaging") {
    c.averaging = parse_averaging(value);
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(parse_integer(key, value));
  } else if (key == "threads") {
    c.threads = static_cast<int>(parse_integer(key, value));
  } else if (key == "out_dir") {
    c.out_dir = value;
  } else {
    fail(ErrorCategory::invalid_argument, "unknown config key '" + key + "'");
  }
}

/// Parses config text. The experiment key, when present, selects the defaults that the
/// remaining keys override; otherwise `fallback_experiment` does.
inline RunConfig parse_config(const std::string& text, const std::string& fallback_experiment = "convergence",
                              bool paper_scale = false) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string experiment = fallback_experiment;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    detail::require(eq != std::string::npos, ErrorCategory::invalid_argument,
                    "config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    detail::require(!key.empty() && !value.empty(), ErrorCategory::invalid_argument,
                    "config line " + std::to_string(lineno) + ": empty key or value");
    if (key == "experiment") experiment = value;
    entries.emplace_back(std::move(key), std::move(value));
  }
  RunConfig c = default_config(experiment, paper_scale);
  for (const auto& [k, v] : entries) apply_setting(c, k, v);
  return c;
}

inline RunConfig load_config(const std::string& path, const std::string& fallback_experiment = "convergence",
                             bool paper_scale = false) {
  std::ifstream in(path);
  detail::require(static_cast<bool>(in), ErrorCategory::io, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fallback_experiment, paper_scale);
}

/// Checks the invariants shared by all experiments.
inline void validate(const RunConfig& c) {
  using detail::fail;
  using detail::require;
  require(!c.grids.empty(), ErrorCategory::invalid_argument, "no grids configured");
  for (int m : c.grids) require(m >= 1, ErrorCategory::invalid_argument, "grid sizes must be >= 1");
  for (int m : c.mesh_grids) require(m >= 1, ErrorCategory::invalid_argument, "grid sizes must be >= 1");
  const int m_min = *std::min_element(c.grids.begin(), c.grids.end());
  for (int M : c.cutoffs) {
    require(M >= 1, ErrorCategory::invalid_argument, "cutoffs must be >= 1");
    if (M > m_min)
      fail(ErrorCategory::nyquist_violation, "cutoff " + std::to_string(M) + " exceeds the smallest grid m=" +
                                                 std::to_string(m_min));
  }
  require(c.cutoff >= 1, ErrorCategory::invalid_argument, "cutoff must be >= 1");
  require(c.repetitions >= 1, ErrorCategory::invalid_argument, "repetitions must be >= 1");
  require(c.competitors >= 0, ErrorCategory::invalid_argument, "competitors must be >= 0");
  require(c.tol > 0.0, ErrorCategory::invalid_argument, "tol must be positive");
  require(c.threads >= 1, ErrorCategory::invalid_argument, "threads must be >= 1");
}

/// Canonical text of every field, in a fixed order; the provenance hash is taken over it.
inline std::string canonical_text(const RunConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "experiment=" << c.experiment << "\nproblem=" << c.problem << "\ngrids=" << detail::join(c.grids)
    << "\ncutoffs=" << detail::join(c.cutoffs) << "\ncutoff=" << c.cutoff << "\nmesh_grids=" << detail::join(c.mesh_grids)
    << "\ntol=" << c.tol << "\nrepetitions=" << c.repetitions << "\ncompetitors=" << c.competitors
    << "\nfull_basis=" << (c.full_basis ? "true" : "false") << "\naveraging=" << to_string(c.averaging)
    << "\nseed=" << c.seed << "\nthreads=" << c.threads << "\n";
  return o.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_text(c))));
  return buf;
}

}  // namespace lowmode
