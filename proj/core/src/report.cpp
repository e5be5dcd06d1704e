#include "cmvlab/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cmvlab/errors.hpp"

namespace cmvlab {

namespace {

template <class T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> get_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

nlohmann::json Record::to_json() const {
  nlohmann::json j;
  j["statistic"] = name;
  j["value"] = value;
  put_optional(j, "stderr", std_error);
  put_optional(j, "reference_value", reference);
  put_optional(j, "tolerance", tolerance);
  put_optional(j, "pass", passed);
  j["n_samples"] = n_samples;
  j["claim"] = claim;
  return j;
}

Record Record::from_json(const nlohmann::json& j) {
  Record r;
  r.name = j.at("statistic").get<std::string>();
  r.value = j.at("value").is_null() ? std::nan("") : j.at("value").get<double>();
  r.std_error = get_optional<double>(j, "stderr");
  r.reference = get_optional<double>(j, "reference_value");
  r.tolerance = get_optional<double>(j, "tolerance");
  r.passed = get_optional<bool>(j, "pass");
  r.n_samples = j.value("n_samples", std::size_t{0});
  r.claim = j.value("claim", std::string());
  return r;
}

std::string to_string(SeriesKind kind) {
  switch (kind) {
    case SeriesKind::histogram: return "histogram";
    case SeriesKind::decay_profile: return "decay_profile";
    case SeriesKind::path_bundle: return "path_bundle";
    case SeriesKind::table: return "table";
  }
  return "table";
}

SeriesKind series_kind_from_string(const std::string& s) {
  if (s == "histogram") return SeriesKind::histogram;
  if (s == "decay_profile") return SeriesKind::decay_profile;
  if (s == "path_bundle") return SeriesKind::path_bundle;
  if (s == "table") return SeriesKind::table;
  throw ConfigError("unknown plot kind '" + s + "' (expected histogram, decay_profile or path_bundle)");
}

nlohmann::json Series::to_json() const {
  return {{"name", name}, {"kind", to_string(kind)}, {"columns", columns}, {"rows", rows}};
}

Series Series::from_json(const nlohmann::json& j) {
  Series s;
  s.name = j.at("name").get<std::string>();
  s.kind = series_kind_from_string(j.at("kind").get<std::string>());
  s.columns = j.at("columns").get<std::vector<std::string>>();
  s.rows = j.at("rows").get<std::vector<std::vector<double>>>();
  return s;
}

Record& Report::add(Record r) {
  records.push_back(std::move(r));
  return records.back();
}

const Record* Report::find(const std::string& name) const {
  for (const Record& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const Series* Report::find_series(const std::string& name) const {
  for (const Series& s : series) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

bool Report::passed() const {
  for (const Record& r : records) {
    if (r.passed && !*r.passed) return false;
  }
  return true;
}

nlohmann::json Report::body_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["config_hash"] = config_hash;
  j["config"] = config;
  j["records"] = nlohmann::json::array();
  for (const Record& r : records) {
    nlohmann::json rj = r.to_json();
    rj["config_hash"] = config_hash;
    j["records"].push_back(std::move(rj));
  }
  j["series"] = nlohmann::json::array();
  for (const Series& s : series) j["series"].push_back(s.to_json());
  j["numeric_failures"] = numeric_failures;
  j["warnings"] = warnings;
  j["pass"] = passed();
  return j;
}

nlohmann::json Report::to_json() const {
  nlohmann::json j = body_json();
  j["wall_time"] = wall_time;
  return j;
}

Report Report::from_json(const nlohmann::json& j) {
  Report r;
  r.experiment = j.at("experiment").get<std::string>();
  r.config_hash = j.value("config_hash", std::string());
  r.config = j.value("config", nlohmann::json::object());
  for (const auto& rj : j.at("records")) r.records.push_back(Record::from_json(rj));
  if (j.contains("series")) {
    for (const auto& sj : j.at("series")) r.series.push_back(Series::from_json(sj));
  }
  r.numeric_failures = j.value("numeric_failures", std::size_t{0});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.wall_time = j.value("wall_time", 0.0);
  return r;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Report load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("report '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return Report::from_json(j);
}

void save_report(const Report& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report '" + path.string() + "'");
  out << report.to_json().dump(2) << '\n';
}

std::vector<std::filesystem::path> emit_plot_data(const Report& report, SeriesKind kind,
                                                  const std::filesystem::path& out_dir) {
  std::vector<const Series*> chosen;
  for (const Series& s : report.series) {
    if (s.kind == kind) chosen.push_back(&s);
  }
  if (chosen.empty()) {
    std::ostringstream msg;
    msg << "report has no " << to_string(kind) << " series; available:";
    if (report.series.empty()) msg << " none";
    for (const Series& s : report.series) msg << ' ' << s.name << " (" << to_string(s.kind) << ')';
    throw ConfigError(msg.str());
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (const Series* s : chosen) {
    const auto path = out_dir / (report.experiment + "_" + s->name + ".csv");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << "# experiment=" << report.experiment << " config_hash=" << report.config_hash
        << " series=" << s->name << '\n';
    for (std::size_t c = 0; c < s->columns.size(); ++c) out << (c ? "," : "") << s->columns[c];
    out << '\n';
    out.precision(17);
    for (const auto& row : s->rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << '\n';
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace cmvlab
