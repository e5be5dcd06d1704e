#include <cmvlab/errors.hpp>
#include <cmvlab/numeric.hpp>
#include <cmvlab/point_stats.hpp>
#include <cmvlab/sde_limit.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

using namespace cmvlab;

namespace {

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t mu) {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[mu]);
  return out;
}

}  // namespace

TEST(SdeConfig, Validation) {
  SdeConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dt = 2e-3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SdeConfig{};
  c.x_grid = {2.0, 1.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = SdeConfig{};
  c.beta = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SdeConfig{};
  c.t0 = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(simulate_paths(c, 1, RngStream(1, 0)), ConfigError);
}

TEST(Sde, InitialDataAndGrid) {
  SdeConfig c;
  c.x_grid = {1.0, 2.0};
  c.record_stride = 100;
  const std::vector<SdePath> p = simulate_paths(c, 3, RngStream(2, 0));
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p[0].times.front(), 1e-3);
  EXPECT_DOUBLE_EQ(p[0].times.back(), 1.0);
  EXPECT_DOUBLE_EQ(p[0].at(0, 0), 1e-3);
  EXPECT_DOUBLE_EQ(p[0].at(0, 1), 2e-3);
  EXPECT_EQ(p[0].values.size(), p[0].times.size() * 2);
}

TEST(Sde, NoiselessLimitFollowsDrift) {
  SdeConfig c;
  c.beta = 1e8;
  c.x_grid = {2.0};
  for (const SdePath& p : simulate_paths(c, 50, RngStream(3, 0))) {
    EXPECT_NEAR(p.final_slice()[0], 2.0, 1e-3);
  }
}

TEST(Sde, MonotoneAndSignPreserving) {
  SdeConfig c;
  c.x_grid = {-3.0, -1.0, 0.0, 1.0, 2.0, 5.0};
  c.record_stride = 10;
  for (const SdePath& p : simulate_paths(c, 200, RngStream(4, 0))) {
    ASSERT_FALSE(p.failed);
    for (std::size_t i = 0; i < p.times.size(); ++i) {
      for (std::size_t mu = 1; mu < c.x_grid.size(); ++mu) ASSERT_GE(p.at(i, mu) - p.at(i, mu - 1), -1e-9);
      for (std::size_t mu = 0; mu < c.x_grid.size(); ++mu) ASSERT_GE(c.x_grid[mu] * p.at(i, mu), -1e-9);
      ASSERT_EQ(p.at(i, 2), 0.0);
    }
  }
}

TEST(Sde, MeanLawAcrossBetaAndX) {
  for (double beta : {0.5, 2.0, 4.0}) {
    SdeConfig c;
    c.beta = beta;
    c.x_grid = {1.0, kPi, 10.0};
    c.record_stride = 250;
    const std::vector<SdePath> paths = simulate_paths(c, 2000, RngStream(5, static_cast<std::uint64_t>(beta * 10)));
    const SdePath& first = paths.front();
    for (std::size_t i = 1; i < first.times.size(); ++i) {
      const double t = first.times[i];
      for (std::size_t mu = 0; mu < c.x_grid.size(); ++mu) {
        std::vector<double> v;
        for (const SdePath& p : paths) v.push_back(p.at(i, mu));
        const MeanEstimate m = estimate_mean(v);
        EXPECT_LT(std::abs(m.mean - c.x_grid[mu] * t), 4.0 * m.std_error)
            << "beta " << beta << " x " << c.x_grid[mu] << " t " << t;
      }
    }
  }
}

TEST(Sde, MeanAtOneForPi) {
  SdeConfig c;
  c.x_grid = {kPi};
  const auto rows = terminal_values(c, 10000, RngStream(6, 0));
  const MeanEstimate m = estimate_mean(column(rows, 0));
  EXPECT_LT(std::abs(m.mean - kPi), 4.0 * m.std_error);
}

TEST(Sde, TerminalValuesMatchRecordedPaths) {
  SdeConfig c;
  c.x_grid = {1.0, 3.0};
  c.record_stride = 50;
  const auto paths = simulate_paths(c, 5, RngStream(7, 0));
  const auto rows = terminal_values(c, 5, RngStream(7, 0));
  for (std::size_t p = 0; p < 5; ++p) {
    EXPECT_EQ(rows[p][0], paths[p].final_slice()[0]);
    EXPECT_EQ(rows[p][1], paths[p].final_slice()[1]);
  }
}

TEST(Sde, ScalingLaw) {
  SdeConfig one;
  one.x_grid = {kTwoPi};
  SdeConfig two;
  two.x_grid = {kPi};
  two.t_end = 2.0;
  const auto a = column(terminal_values(one, 10000, RngStream(8, 0)), 0);
  const auto b = column(terminal_values(two, 10000, RngStream(8, 1)), 0);
  EXPECT_LT(ks_distance(a, b), 0.05);
}

TEST(Sde, TranslationLaw) {
  SdeConfig c;
  c.x_grid = {1.0, 3.0};
  SdeConfig d;
  d.x_grid = {2.0};
  const auto rows = terminal_values(c, 10000, RngStream(9, 0));
  std::vector<double> diff;
  for (const auto& r : rows) diff.push_back(r[1] - r[0]);
  const auto direct = column(terminal_values(d, 10000, RngStream(9, 1)), 0);
  EXPECT_LT(ks_distance(diff, direct), 0.05);
}

TEST(Sde, DtHalvingConsistency) {
  SdeConfig c;
  c.x_grid = {kPi};
  SdeConfig h = c;
  h.dt = 5e-4;
  const MeanEstimate a = estimate_mean(column(terminal_values(c, 10000, RngStream(10, 0)), 0));
  const MeanEstimate b = estimate_mean(column(terminal_values(h, 10000, RngStream(10, 1)), 0));
  EXPECT_LT(std::abs(a.mean - b.mean), 2.0 * std::hypot(a.std_error, b.std_error));
}

TEST(Sde, SecondMomentGrowth) {
  // E Psi(t)^2 <= C (t + t^2) with the constant fitted on the coarse grid holding after dt halving
  auto ratio = [](double dt) {
    SdeConfig c;
    c.x_grid = {kPi};
    c.dt = dt;
    c.record_stride = static_cast<std::size_t>(0.25 / dt);
    const auto paths = simulate_paths(c, 4000, RngStream(11, static_cast<std::uint64_t>(1 / dt)));
    double worst = 0.0;
    for (std::size_t i = 1; i < paths[0].times.size(); ++i) {
      const double t = paths[0].times[i];
      double s = 0.0;
      for (const SdePath& p : paths) s += p.at(i, 0) * p.at(i, 0);
      worst = std::max(worst, s / paths.size() / (t + t * t));
    }
    return worst;
  };
  const double c1 = ratio(1e-3);
  const double c2 = ratio(5e-4);
  EXPECT_LT(std::abs(c1 - c2), 0.1 * c1);
}

TEST(Invert, HandExample) {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> psi{0, kPi, 2 * kPi, 3 * kPi, 4 * kPi};
  const InversionResult r = invert_to_points(x, psi, 0.0);
  ASSERT_EQ(r.points.points.size(), 3u);
  EXPECT_NEAR(r.points.points[0], 0.0, 1e-15);
  EXPECT_NEAR(r.points.points[1], 2.0, 1e-15);
  EXPECT_NEAR(r.points.points[2], 4.0, 1e-15);
  EXPECT_FALSE(r.truncated);
  EXPECT_TRUE(invert_to_points(x, psi, 0.0, Interval{-1.0, 3.0}).truncated);
  const std::vector<double> bad{0, 2, 1, 3, 4};
  EXPECT_THROW(invert_to_points(x, bad, 0.0), DomainError);
}

TEST(Invert, DeterministicPathGivesClock) {
  SdeConfig c;
  c.beta = 1e16;
  c.x_grid.clear();
  for (int i = 0; i <= 400; ++i) c.x_grid.push_back(-20.0 + 0.1 * i);
  RngStream r(12, 0);
  const std::vector<SdePath> p = simulate_paths(c, 1, RngStream(12, 1));
  const InversionResult inv = invert_to_points(p[0], r);
  const auto& pts = inv.points.points;
  ASSERT_GE(pts.size(), 6u);
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_NEAR(pts[i] - pts[i - 1], kTwoPi, 1e-6);
}

TEST(Invert, MeanCountMatchesLength) {
  SdeConfig c;
  c.x_grid.clear();
  for (int i = 0; i <= 200; ++i) c.x_grid.push_back(kTwoPi * 3.0 * i / 200.0);
  c.record_stride = 1000;
  const std::vector<SdePath> paths = simulate_paths(c, 2000, RngStream(13, 0));
  RngStream r(13, 1);
  std::vector<double> counts;
  for (const SdePath& p : paths) {
    const InversionResult inv = invert_to_points(p, r);
    counts.push_back(static_cast<double>(count_in(inv.points, Interval{0.0, kTwoPi * 3.0})));
  }
  const MeanEstimate m = estimate_mean(counts);
  EXPECT_LT(std::abs(m.mean - 3.0), 4.0 * m.std_error);
}

TEST(Convergence, ZeroPointIsExactlyZero) {
  const std::vector<double> x{0.0};
  const ConvergenceReport r = convergence_test(2.0, x, 100, 20, 20, RngStream(14, 0));
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].phase_mean.mean, 0.0);
  EXPECT_EQ(r.entries[0].sde_mean.mean, 0.0);
  EXPECT_EQ(r.entries[0].ks, 0.0);
  EXPECT_THROW(convergence_test(2.0, x, 50, 20, 20, RngStream(14, 0)), ConfigError);
}

TEST(Convergence, MeansAgreeAtModerateSize) {
  const std::vector<double> x{kPi};
  const ConvergenceReport r = convergence_test(2.0, x, 500, 4000, 4000, RngStream(15, 0));
  EXPECT_LT(std::abs(r.entries[0].mean_difference), 0.05 * kPi);
  EXPECT_LT(r.entries[0].ks, 0.1);
  EXPECT_EQ(r.sde_failures, 0u);
}

TEST(PathCsv, Layout) {
  SdeConfig c;
  c.x_grid = {1.0, 2.0};
  c.record_stride = 500;
  const std::vector<SdePath> p = simulate_paths(c, 1, RngStream(16, 0));
  std::ostringstream out;
  write_path_csv(p[0], out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x_index,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(p[0].times.size() * 2));
}
