#include <cmvlab/errors.hpp>
#include <cmvlab/harness.hpp>
#include <cmvlab/report.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using namespace cmvlab;
using nlohmann::json;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cmvlab_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string first_lines(const std::filesystem::path& p, int count) {
  std::ifstream in(p);
  std::string out, line;
  for (int i = 0; i < count && std::getline(in, line); ++i) out += line + "\n";
  return out;
}

json small_cbe_exact() {
  return {{"experiment", "cbe_exact"}, {"n", 2}, {"trials", 2000}, {"seed", 3}, {"params", {{"mc_draws", 2000}}}};
}

}  // namespace

TEST(Config, DefaultsFromRegistry) {
  const ExperimentConfig c = ExperimentConfig::from_json(json{{"experiment", "clock_limit"}});
  EXPECT_EQ(c.n, 1000u);
  EXPECT_EQ(c.trials, 200u);
  EXPECT_EQ(c.seed, 0u);
  ASSERT_TRUE(c.schedule.has_value());
  EXPECT_EQ(c.schedule->regime, Regime::fast);
  EXPECT_FALSE(c.output_dir.has_value());
  EXPECT_EQ(c.tolerances.bisection, 1e-12);

  const ExperimentConfig e = ExperimentConfig::from_json(json{{"experiment", "cbe_exact"}});
  EXPECT_FALSE(e.schedule.has_value());
  EXPECT_EQ(e.n, 2u);
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(ExperimentConfig::from_json(json::array()), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"n", 5}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"experiment", "clock_limit"}, {"colour", 1}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"experiment", "clock_limit"}, {"n", 0}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"experiment", "clock_limit"}, {"trials", 2.5}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"experiment", "clock_limit"}, {"seed", -1}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"experiment", "clock_limit"}, {"params", 3}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"experiment", "clock_limit"}, {"tolerances", {{"bisection", 0}}}}),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"experiment", "clock_limit"}, {"tolerances", {{"bogus", 1}}}}),
               ConfigError);
  try {
    ExperimentConfig::from_json(json{{"experiment", "nope"}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("clock_limit"), std::string::npos);
  }
}

TEST(Config, LoadReportsUnreadableFiles) {
  const auto dir = scratch_dir("load");
  std::filesystem::create_directories(dir);
  EXPECT_THROW(ExperimentConfig::load(dir / "missing.json"), ConfigError);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(ExperimentConfig::load(dir / "bad.json"), ConfigError);
  std::ofstream(dir / "good.json") << small_cbe_exact().dump();
  EXPECT_EQ(ExperimentConfig::load(dir / "good.json").trials, 2000u);
}

TEST(Config, HashIgnoresOutputDirOnly) {
  json j = small_cbe_exact();
  const std::string h = ExperimentConfig::from_json(j).hash();
  EXPECT_EQ(h.size(), 16u);
  j["output_dir"] = "/tmp/elsewhere";
  EXPECT_EQ(ExperimentConfig::from_json(j).hash(), h);
  j["seed"] = 4;
  EXPECT_NE(ExperimentConfig::from_json(j).hash(), h);
}

TEST(Fnv1a, KnownValues) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(ReportJson, RoundTrip) {
  Report r;
  r.experiment = "demo";
  r.config_hash = "0123456789abcdef";
  r.config = json{{"n", 3}};
  Record a;
  a.name = "x";
  a.value = 1.5;
  a.std_error = 0.1;
  a.reference = 1.0;
  a.tolerance = 0.6;
  a.passed = true;
  a.n_samples = 10;
  a.claim = "a claim";
  r.add(a);
  Record b;
  b.name = "y";
  b.value = -2.0;
  r.add(b);
  Series s;
  s.name = "h";
  s.kind = SeriesKind::histogram;
  s.columns = {"bin_left", "bin_right", "count", "density"};
  s.rows = {{0.0, 1.0, 3.0, 0.3}};
  r.series.push_back(s);
  r.numeric_failures = 2;
  r.warnings = {"w"};
  r.wall_time = 1.25;

  const Report back = Report::from_json(json::parse(r.to_json().dump()));
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_EQ(back.body_json(), r.body_json());
  EXPECT_FALSE(back.find("y")->std_error.has_value());
  EXPECT_EQ(back.find("x")->claim, "a claim");
  EXPECT_TRUE(back.passed());
  EXPECT_FALSE(r.body_json().contains("wall_time"));

  r.records[1].passed = false;
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.find("missing"), nullptr);
  EXPECT_THROW(series_kind_from_string("scatter"), ConfigError);
}

TEST(PlotData, MissingSeriesListsAvailable) {
  Report r;
  r.experiment = "demo";
  Series s;
  s.name = "core_spacings";
  s.kind = SeriesKind::histogram;
  r.series.push_back(s);
  try {
    emit_plot_data(r, SeriesKind::decay_profile, scratch_dir("missing"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("core_spacings"), std::string::npos);
  }
}

TEST(RunExperiment, WritesReportAndCsv) {
  json j = small_cbe_exact();
  const auto dir = scratch_dir("run");
  j["output_dir"] = dir.string();
  const Report rep = run_experiment(ExperimentConfig::from_json(j));
  ASSERT_NE(rep.find("gap_sup_distance"), nullptr);
  ASSERT_NE(rep.find("partition_function_mc"), nullptr);
  EXPECT_EQ(rep.config_hash, ExperimentConfig::from_json(j).hash());

  const Report loaded = load_report(dir / "report.json");
  EXPECT_EQ(loaded.body_json(), rep.body_json());
  const std::string head = first_lines(dir / "cbe_exact_gaps.csv", 2);
  EXPECT_NE(head.find("config_hash=" + rep.config_hash), std::string::npos);
  EXPECT_NE(head.find("bin_left,bin_right,count,density"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "cbe_exact_gap_reference.csv"));
}

TEST(RunExperiment, DecayAndPathCsvHeaders) {
  const auto dir = scratch_dir("headers");
  const json loc = {{"experiment", "localization_suite"},
                    {"trials", 50},
                    {"params",
                     {{"l", 40}, {"ratio_l", 20}, {"ratio_r", 40}, {"contraction_samples", 200}, {"minami_trials", 200},
                      {"resolvent_n", 32}, {"separations", {4, 8}}, {"resolvent_trials", 20}}}};
  const Report a = run_experiment(ExperimentConfig::from_json(loc));
  const auto fa = emit_plot_data(a, SeriesKind::decay_profile, dir);
  ASSERT_EQ(fa.size(), 1u);
  EXPECT_NE(first_lines(fa[0], 2).find("\nseparation,value,bound"), std::string::npos);

  const json sde = {{"experiment", "sde_convergence"}, {"n", 100}, {"trials", 40}, {"params", {{"checks", json::array()}}}};
  const Report b = run_experiment(ExperimentConfig::from_json(sde));
  const auto fb = emit_plot_data(b, SeriesKind::path_bundle, dir);
  ASSERT_EQ(fb.size(), 1u);
  EXPECT_NE(first_lines(fb[0], 2).find("\nt,path_id,x_index,value"), std::string::npos);
  // 20 paths in the bundle
  double max_id = 0.0;
  for (const auto& row : b.find_series("sde_paths")->rows) max_id = std::max(max_id, row[1]);
  EXPECT_EQ(max_id, 19.0);
}

TEST(RunExperiment, DeterministicAcrossRunsAndWorkers) {
  const json configs[] = {
      small_cbe_exact(),
      {{"experiment", "clock_limit"}, {"n", 100}, {"trials", 12}, {"seed", 9}},
      {{"experiment", "poisson_limit"}, {"n", 200}, {"trials", 40}, {"seed", 9}},
  };
  const char* old = std::getenv("CMVLAB_THREADS");
  const std::string saved = old ? old : "";
  for (const json& j : configs) {
    const ExperimentConfig c = ExperimentConfig::from_json(j);
    setenv("CMVLAB_THREADS", "1", 1);
    const std::string a = run_experiment(c).body_json().dump();
    const std::string b = run_experiment(c).body_json().dump();
    setenv("CMVLAB_THREADS", "3", 1);
    const std::string d = run_experiment(c).body_json().dump();
    EXPECT_EQ(a, b) << c.experiment;
    EXPECT_EQ(a, d) << c.experiment;
  }
  if (old) {
    setenv("CMVLAB_THREADS", saved.c_str(), 1);
  } else {
    unsetenv("CMVLAB_THREADS");
  }
}

TEST(RunExperiment, StdErrorShrinksWithTrials) {
  auto se = [](std::size_t trials) {
    json j = small_cbe_exact();
    j["trials"] = trials;
    return *run_experiment(ExperimentConfig::from_json(j)).find("arc_count_mean")->std_error;
  };
  const double ratio = se(4000) / se(16000);
  EXPECT_GT(ratio, 2.0 * 0.8);
  EXPECT_LT(ratio, 2.0 * 1.2);
}

TEST(RunExperiment, UnknownParamsValuesRejected) {
  json j = small_cbe_exact();
  j["params"]["bins"] = 0;
  EXPECT_THROW(run_experiment(ExperimentConfig::from_json(j)), ConfigError);
  const json inv = {{"experiment", "invariant_suite"}, {"params", {{"checks", {"nonsense"}}}}};
  EXPECT_THROW(run_experiment(ExperimentConfig::from_json(inv)), ConfigError);
}
