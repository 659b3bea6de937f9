#pragma once

#include <eiv/covariance.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace eiv::bench {

/// Declarative experiment description. Every field maps to one INI key
/// `section.key`; see `config_keys()` for the full list.
struct ExperimentConfig {
  // [problem]
  long d1 = 10;
  long d2 = 10;
  Corruption corruption = Corruption::Additive;

  // [truth]
  std::string truth_mode = "exact";  // exact | near
  long rank = 2;
  double scale = 3.0;
  double q = 0.5;
  double radius = 4.0;
  double decay = 0.5;

  // [noise]
  std::string sigma_x = "identity";  // identity | toeplitz
  double sigma_x_corr = 0.5;
  double sigma_w = 0.5;
  double rho = 0.3;
  double sigma_eps = 0.5;
  bool estimate_rho = false;

  // [penalty]
  std::vector<std::string> families{"scad"};
  double scad_a = 3.7;
  double mcp_b = 2.0;

  // [lambda]
  std::string policy = "oracle";  // oracle | grid | fixed
  double margin = 1.0;
  double c0 = 1.0;
  double lambda = 0.0;
  double omega = 0.0;
  long grid_points = 8;
  double grid_ratio = 0.01;
  double validation_fraction = 0.2;

  // [solver]
  double v = 0.0;  // 0 selects the default step
  long max_iters = 5000;
  double tol = 1e-7;

  // [bench]
  std::vector<long> n_list{500};
  long replications = 5;
  bool naive = true;

  // [audit]
  long trials = 1000;

  // [run]
  std::uint64_t seed = 1;
  long jobs = 1;
  std::string out = "results";

  // [output]
  bool timing = false;
  bool traces = true;

  /// Throws ConfigError on out-of-range or inconsistent values.
  void validate() const;
};

/// Sorted list of accepted `section.key` names.
std::vector<std::string> config_keys();

/// Sets one key from its textual value; throws ConfigError for unknown keys
/// or unparseable values.
void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Defaults, then the INI file (if non-empty path), then `key=value`
/// overrides in order; validates the result.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides);

/// Canonical `key = value` listing of every result-affecting key.
std::string canonical_dump(const ExperimentConfig& cfg);

/// 16 hex digits of the FNV-1a hash of canonical_dump().
std::string config_hash(const ExperimentConfig& cfg);

std::string format_double(double x);

}  // namespace eiv::bench
