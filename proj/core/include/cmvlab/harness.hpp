#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmvlab/coeff_sampling.hpp"
#include "cmvlab/report.hpp"
#include "cmvlab/tolerances.hpp"

namespace cmvlab {

/// A resolved run description. `params` holds experiment-specific statistic
/// parameters (intervals, test functions, core_fraction, ...).
struct ExperimentConfig {
  std::string experiment;
  std::optional<DecaySchedule> schedule;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> output_dir;
  nlohmann::json params = nlohmann::json::object();
  Tolerances tolerances;

  /// Parses a configuration file body. Missing n, trials and schedule take
  /// the experiment's defaults. Throws ConfigError on invalid input.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Canonical JSON of the resolved configuration, without output_dir.
  nlohmann::json resolved_json() const;
  std::string hash() const;
};

struct ExperimentSpec {
  std::string name;
  std::string description;
  std::optional<DecaySchedule> default_schedule;
  std::size_t default_n = 1;
  std::size_t default_trials = 1;
  std::function<void(const ExperimentConfig&, Report&)> run;
};

const std::vector<ExperimentSpec>& experiment_registry();
const ExperimentSpec& find_experiment(const std::string& name);

/// Runs the experiment, fills wall_time, and when output_dir is set writes
/// report.json plus the CSV files of every series into it. Deterministic in
/// (config, seed) apart from wall_time, whatever the worker count.
Report run_experiment(const ExperimentConfig& cfg);

}  // namespace cmvlab
