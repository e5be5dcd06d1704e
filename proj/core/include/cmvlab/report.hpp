#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cmvlab {

/// One statistic of an experiment and, when it is a check, its verdict.
struct Record {
  std::string name;
  double value = 0.0;
  std::optional<double> std_error;
  std::optional<double> reference;
  std::optional<double> tolerance;
  std::optional<bool> passed;
  std::size_t n_samples = 0;
  std::string claim;  // the property the statistic tests

  nlohmann::json to_json() const;
  static Record from_json(const nlohmann::json& j);
};

enum class SeriesKind { histogram, decay_profile, path_bundle, table };

std::string to_string(SeriesKind kind);
SeriesKind series_kind_from_string(const std::string& s);

/// Tabular data attached to a report for plotting.
struct Series {
  std::string name;
  SeriesKind kind = SeriesKind::table;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  nlohmann::json to_json() const;
  static Series from_json(const nlohmann::json& j);
};

struct Report {
  std::string experiment;
  std::string config_hash;
  nlohmann::json config;
  std::vector<Record> records;
  std::vector<Series> series;
  std::size_t numeric_failures = 0;
  std::vector<std::string> warnings;
  double wall_time = 0.0;

  Record& add(Record r);
  const Record* find(const std::string& name) const;
  const Series* find_series(const std::string& name) const;
  /// True unless some record failed.
  bool passed() const;

  /// Everything except wall_time; identical configurations give identical bodies.
  nlohmann::json body_json() const;
  nlohmann::json to_json() const;
  static Report from_json(const nlohmann::json& j);
};

/// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

Report load_report(const std::filesystem::path& path);
void save_report(const Report& report, const std::filesystem::path& path);

/// Writes every series of the requested kind to `out_dir` as CSV and returns
/// the files written. Throws ConfigError listing the available series when
/// the report has none of that kind.
std::vector<std::filesystem::path> emit_plot_data(const Report& report, SeriesKind kind,
                                                  const std::filesystem::path& out_dir);

}  // namespace cmvlab
