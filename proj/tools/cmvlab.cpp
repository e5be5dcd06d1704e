#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cmvlab/errors.hpp"
#include "cmvlab/harness.hpp"
#include "cmvlab/report.hpp"

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

void print_report(const cmvlab::Report& rep) {
  std::cout << rep.experiment << "  config_hash=" << rep.config_hash << '\n';
  for (const cmvlab::Record& r : rep.records) {
    std::cout << "  " << (r.passed ? (*r.passed ? "PASS " : "FAIL ") : "     ") << r.name << " = " << r.value;
    if (r.std_error) std::cout << " +- " << *r.std_error;
    if (r.reference) std::cout << "  (reference " << *r.reference << ")";
    std::cout << '\n';
  }
  for (const std::string& w : rep.warnings) std::cout << "  note: " << w << '\n';
  if (rep.numeric_failures) std::cout << "  numeric failures: " << rep.numeric_failures << '\n';
  std::cout << (rep.passed() ? "PASS" : "FAIL") << "  wall_time=" << rep.wall_time << "s\n";
}

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                std::optional<std::size_t> trials, std::optional<std::string> out) {
  std::ifstream in(config_path);
  if (!in) throw cmvlab::ConfigError("cannot open configuration '" + config_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw cmvlab::ConfigError("configuration is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw cmvlab::ConfigError("configuration must be a JSON object");
  if (seed) j["seed"] = *seed;
  if (trials) j["trials"] = *trials;
  if (out) j["output_dir"] = *out;
  const cmvlab::ExperimentConfig cfg = cmvlab::ExperimentConfig::from_json(j);
  const cmvlab::Report rep = cmvlab::run_experiment(cfg);
  print_report(rep);
  if (cfg.output_dir) std::cout << "report written to " << (*cfg.output_dir / "report.json").string() << '\n';
  return rep.passed() ? 0 : kExitFail;
}

int plot_command(const std::string& report_path, const std::string& kind, std::optional<std::string> out) {
  const cmvlab::Report rep = cmvlab::load_report(report_path);
  const std::filesystem::path dir =
      out ? std::filesystem::path(*out) : std::filesystem::path(report_path).parent_path();
  const auto files = cmvlab::emit_plot_data(rep, cmvlab::series_kind_from_string(kind),
                                            dir.empty() ? std::filesystem::path(".") : dir);
  for (const auto& f : files) std::cout << f.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cmvlab: eigenvalue statistics of random CMV matrices"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  auto* run = app.add_subcommand("run", "run an experiment described by a JSON configuration");
  run->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the seed");
  run->add_option("--trials", trials, "override the trial count")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "directory for report.json and CSV files");

  std::string report_path;
  std::string kind;
  std::optional<std::string> plot_out;
  auto* plot = app.add_subcommand("plot", "write plotting CSV files from a report");
  plot->add_option("--report", report_path, "report.json produced by run")->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", kind, "histogram, decay_profile or path_bundle")
      ->required()
      ->check(CLI::IsMember({"histogram", "decay_profile", "path_bundle"}));
  plot->add_option("--out", plot_out, "output directory (default: next to the report)");

  auto* list = app.add_subcommand("list", "list available experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return run_command(config_path, seed, trials, out);
    if (*plot) return plot_command(report_path, kind, plot_out);
    if (*list) {
      for (const auto& s : cmvlab::experiment_registry()) {
        std::cout << s.name << "  n=" << s.default_n << " trials=" << s.default_trials << "  " << s.description
                  << '\n';
      }
      return 0;
    }
  } catch (const cmvlab::ConfigError& e) {
    std::cerr << "cmvlab: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "cmvlab: " << e.what() << '\n';
    return kExitFail;
  }
  return 0;
}
