#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "d2dsim/connectivity.hpp"
#include "d2dsim/mobility.hpp"
#include "d2dsim/street_graph.hpp"

namespace d2d {

struct SweepSpec {
  std::string parameter = "velocity_scale";
  std::vector<double> values;
};

struct OutputSpec {
  std::string csv_path = "results.csv";
  bool trace = false;
  bool history = false;
};

struct ExperimentConfig {
  double torus_side_m = 0.0;  ///< 2L
  double street_intensity_km_per_km2 = 0.0;
  double lambda_per_km = 0.0;
  double r_m = 0.0;
  double rho_s = 0.0;
  std::vector<double> T_s;
  WaypointKernel kernel = KappaPrime{};
  VelocityDistribution velocity = Dirac{};
  std::optional<SweepSpec> sweep;
  std::vector<std::uint64_t> seeds;
  OutputSpec outputs;

  double half_side() const { return 0.5 * torus_side_m; }
  double lambda_per_m() const { return lambda_per_km / 1000.0; }
  /// Sweep scales, or {1} without a sweep.
  std::vector<double> scales() const;
};

struct ConfigViolation {
  std::string field;    ///< dotted path
  std::string message;  ///< the constraint that failed
  int line = 0;         ///< 1-based line in the source text, 0 if unknown
};

/// Thrown by parse_config for unreadable or malformed configurations.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigViolation> v);
  const std::vector<ConfigViolation>& violations() const { return violations_; }

 private:
  std::vector<ConfigViolation> violations_;
};

/// Parses JSON text. Structural problems (syntax, missing or mistyped fields,
/// unknown fields) raise ConfigError with line numbers.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Value constraints; empty iff the configuration is valid. Lines are filled
/// in when `source` (the JSON text) is given.
std::vector<ConfigViolation> validate_config(const ExperimentConfig& cfg,
                                             const std::string* source = nullptr);

/// 1-based line of the value at a dotted path in JSON text, 0 if not found.
int locate_field(const std::string& text, const std::string& dotted_path);

std::string format_violation(const std::string& file, const ConfigViolation& v);

struct RunOptions {
  std::uint64_t seed_offset = 0;
  unsigned jobs = 1;
  std::filesystem::path out_dir = ".";
};

/// Street system of one master seed.
StreetGraph generate_streets(const ExperimentConfig& cfg, std::uint64_t master_seed);

/// All rows for one seed: one base run with contact history, evaluated per
/// horizon and scale.
std::vector<SweepRow> run_seed(const ExperimentConfig& cfg, std::uint64_t master_seed,
                               const RunOptions& opts);

/// Rows ordered by seed, horizon, scale regardless of `jobs`.
std::vector<SweepRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace d2d
