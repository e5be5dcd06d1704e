#include "cmvlab/harness.hpp"

#include <chrono>
#include <fstream>
#include <set>

#include "cmvlab/errors.hpp"

namespace cmvlab {

namespace {

nlohmann::json tolerances_to_json(const Tolerances& t) {
  return {{"unitarity", t.unitarity},
          {"eigen_match", t.eigen_match},
          {"bisection", t.bisection},
          {"gamma_denominator", t.gamma_denominator},
          {"sde_inversion", t.sde_inversion}};
}

Tolerances tolerances_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("tolerances must be an object");
  Tolerances t;
  const std::set<std::string> known{"unitarity", "eigen_match", "bisection", "gamma_denominator",
                                    "sde_inversion"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown tolerance '" + key + "'");
    if (!value.is_number() || !(value.get<double>() > 0.0)) {
      throw ConfigError("tolerance '" + key + "' must be a positive number");
    }
  }
  t.unitarity = j.value("unitarity", t.unitarity);
  t.eigen_match = j.value("eigen_match", t.eigen_match);
  t.bisection = j.value("bisection", t.bisection);
  t.gamma_denominator = j.value("gamma_denominator", t.gamma_denominator);
  t.sde_inversion = j.value("sde_inversion", t.sde_inversion);
  return t;
}

std::size_t positive_count(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw ConfigError(std::string(key) + " must be a positive integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  const std::set<std::string> known{"experiment", "schedule", "n", "trials", "seed",
                                    "output_dir", "params", "tolerances"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown configuration key '" + key + "'");
  }
  if (!j.contains("experiment") || !j.at("experiment").is_string()) {
    throw ConfigError("configuration requires an 'experiment' name");
  }
  ExperimentConfig c;
  c.experiment = j.at("experiment").get<std::string>();
  const ExperimentSpec& spec = find_experiment(c.experiment);
  c.schedule = spec.default_schedule;
  if (j.contains("schedule") && !j.at("schedule").is_null()) c.schedule = schedule_from_json(j.at("schedule"));
  c.n = j.contains("n") ? positive_count(j, "n") : spec.default_n;
  c.trials = j.contains("trials") ? positive_count(j, "trials") : spec.default_trials;
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("seed must be a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("output_dir") && !j.at("output_dir").is_null()) {
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw ConfigError("params must be an object");
    c.params = j.at("params");
  }
  if (j.contains("tolerances")) c.tolerances = tolerances_from_json(j.at("tolerances"));
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("configuration '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json ExperimentConfig::resolved_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["schedule"] = schedule ? schedule_to_json(*schedule) : nlohmann::json(nullptr);
  j["n"] = n;
  j["trials"] = trials;
  j["seed"] = seed;
  j["params"] = params;
  j["tolerances"] = tolerances_to_json(tolerances);
  return j;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(resolved_json().dump()); }

const ExperimentSpec& find_experiment(const std::string& name) {
  for (const ExperimentSpec& s : experiment_registry()) {
    if (s.name == name) return s;
  }
  std::string known;
  for (const ExperimentSpec& s : experiment_registry()) known += " " + s.name;
  throw ConfigError("unknown experiment '" + name + "'; known:" + known);
}

Report run_experiment(const ExperimentConfig& cfg) {
  const ExperimentSpec& spec = find_experiment(cfg.experiment);
  Report report;
  report.experiment = cfg.experiment;
  report.config = cfg.resolved_json();
  report.config_hash = cfg.hash();
  const auto start = std::chrono::steady_clock::now();
  spec.run(cfg, report);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (cfg.output_dir) {
    save_report(report, *cfg.output_dir / "report.json");
    for (SeriesKind kind : {SeriesKind::histogram, SeriesKind::decay_profile, SeriesKind::path_bundle,
                            SeriesKind::table}) {
      bool any = false;
      for (const Series& s : report.series) any = any || s.kind == kind;
      if (any) emit_plot_data(report, kind, *cfg.output_dir);
    }
  }
  return report;
}

}  // namespace cmvlab
