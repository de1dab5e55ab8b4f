#pragma once

// Config-driven experiment runner: temporal/spatial strong order, invariant
// measure accuracy, weak LLN, CLT and the martingale decomposition.
//
// Configs are JSON (schema_version 1). Unknown keys are rejected. Every run
// produces a JSON result, an RFC-4180 CSV table and a gnuplot .dat file.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spde/ergodic.hpp"
#include "spde/error.hpp"
#include "spde/integrator.hpp"

namespace spde {

enum class ExperimentKind {
  kTemporalOrder,
  kSpatialOrder,
  kInvariantMeasure,
  kLln,
  kClt,
  kDecomposition,
};

const char* to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

/// Pass/fail thresholds. Unset fields take per-experiment defaults in
/// `with_default_thresholds`.
struct Thresholds {
  std::optional<double> slope_min;
  std::optional<double> slope_max;
  std::optional<double> stderr_multiplier;     // invariant_measure
  std::optional<double> bias_envelope_factor;  // invariant_measure
  std::optional<double> allowed_inversions;    // lln
  std::optional<double> variance_ratio_min;    // clt
  std::optional<double> variance_ratio_max;    // clt
  std::optional<double> mean_sigma_multiplier; // clt
  std::optional<double> ks_coefficient;        // clt: D < c / sqrt(R) + allowance
  std::optional<double> ks_allowance;          // clt
  std::optional<double> band_level;            // decomposition
};

struct ExperimentConfig {
  int schema_version = 1;
  ExperimentKind experiment = ExperimentKind::kClt;
  ModelSpec model;
  std::optional<Observable> observable;
  std::vector<double> tau;
  std::vector<std::size_t> N;
  std::size_t N_ref = 128;
  std::size_t refinement = 16;
  double horizon = 1.0;
  std::size_t mode = 1;  // invariant_measure: which mode's second moment
  double alpha = 0.4;
  bool allow_coupling_violation = false;
  std::size_t replicas = 64;
  std::optional<std::size_t> burn_in;    // unset = auto
  std::size_t steps = 1'000'000;         // invariant_measure run length
  std::optional<std::size_t> batch_len;  // unset = auto
  std::size_t variance_run_steps = 2'000'000;
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;
  std::string output = "out";
  Thresholds thresholds;
};

/// Parses and validates shape (types, unknown keys). Throws kValidation.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// Fills unset thresholds with the acceptance defaults for the experiment.
Thresholds with_default_thresholds(const ExperimentConfig& config);

/// Checks every module precondition before any compute. Throws kValidation
/// naming the first violation.
void validate_config(const ExperimentConfig& config);

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string detail;
};

struct ExperimentResult {
  ExperimentConfig config;
  nlohmann::json records;  // numeric payload; deterministic given config
  std::vector<Check> checks;
  std::string csv;
  std::string dat;
  double wall_seconds = 0.0;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Validates, dispatches and evaluates thresholds. Does no file I/O.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes result.json, <experiment>.csv and <experiment>.dat into `dir`.
void write_result(const ExperimentResult& result, const std::string& dir);

/// CLI exit status: 0 all checks pass, 1 a threshold failed, 2 invalid
/// input, 3 divergence.
inline constexpr int kExitPass = 0;
inline constexpr int kExitThreshold = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitDivergence = 3;

int exit_code_for(ErrorKind kind);

struct Preset {
  std::string name;
  std::string description;
  ExperimentConfig config;
};

/// The canonical acceptance configurations.
std::vector<Preset> acceptance_presets();
const Preset& find_preset(std::string_view name);

}  // namespace spde
