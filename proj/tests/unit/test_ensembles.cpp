#include <cmvlab/ensembles.hpp>
#include <cmvlab/errors.hpp>
#include <cmvlab/numeric.hpp>
#include <cmvlab/point_stats.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace cmvlab;

TEST(SampleCbe, SingleAngleUniform) {
  RngStream r(1, 0);
  std::vector<double> a(100000);
  for (double& x : a) {
    const SpectrumSample s = sample_cbe(2.0, 1, r);
    ASSERT_EQ(s.angles.size(), 1u);
    x = s.angles[0];
  }
  const double d = ks_statistic(a, [](double x) { return (x + kPi) / kTwoPi; });
  EXPECT_GT(ks_pvalue(d, 1e5), 0.01);
}

TEST(SampleCbe, MetadataAndShape) {
  RngStream r(2, 5);
  const SpectrumSample s = sample_cbe(4.0, 40, r);
  EXPECT_EQ(s.n, 40u);
  EXPECT_EQ(s.angles.size(), 40u);
  EXPECT_TRUE(std::is_sorted(s.angles.begin(), s.angles.end()));
  EXPECT_EQ(s.meta.regime, "cbe");
  ASSERT_TRUE(s.meta.beta.has_value());
  EXPECT_EQ(*s.meta.beta, 4.0);
  EXPECT_THROW(sample_cbe(0.0, 4, r), DomainError);
}

TEST(SampleCbe, TwoPointGapDensity) {
  const CbeTwoPointGap ref(2.0);
  RngStream r(3, 0);
  std::vector<double> gaps;
  for (int i = 0; i < 100000; ++i) {
    // circular gaps: the sorted difference a1 - a0 is biased towards short gaps by wraparound
    for (double g : circular_gaps(sample_cbe(2.0, 2, r))) gaps.push_back(g);
  }
  const Histogram h = make_histogram(gaps, 0.0, kTwoPi, 32);
  double sup = 0.0;
  for (std::size_t b = 0; b < 32; ++b) {
    sup = std::max(sup, std::abs(h.density(b) - ref.bin_average(h.bin_left(b), h.bin_left(b) + h.bin_width())));
  }
  EXPECT_LT(sup, 0.02);
}

TEST(TwoPointGap, NormalizedAgainstClosedForm) {
  // integral of (1 - cos g) over (0, 2pi) is 2pi, so the beta = 2 density is (1 - cos g)/(2 pi)
  const CbeTwoPointGap ref(2.0);
  for (double g : {0.3, 1.0, kPi, 5.5}) EXPECT_NEAR(ref(g), (1.0 - std::cos(g)) / kTwoPi, 1e-12);
  EXPECT_NEAR(integrate([&](double g) { return CbeTwoPointGap(4.0)(g); }, 0.0, kTwoPi), 1.0, 1e-10);
}

TEST(SampleCbe, ArcCountMean) {
  RngStream r(4, 0);
  const double a = -0.4;
  const double b = 1.1;
  std::vector<double> counts;
  for (int i = 0; i < 4000; ++i) {
    const SpectrumSample s = sample_cbe(2.0, 20, r);
    double c = 0;
    for (double t : s.angles) c += (t >= a && t < b) ? 1 : 0;
    counts.push_back(c);
  }
  const MeanEstimate m = estimate_mean(counts);
  EXPECT_LT(std::abs(m.mean - 20.0 * (b - a) / kTwoPi), 4.0 * m.std_error);
}

TEST(SampleCbe, ArcRestrictedDrawMatchesFullDraw) {
  RngStream r1(5, 0);
  RngStream r2(5, 0);
  const SpectrumSample full = sample_cbe(2.0, 64, r1);
  const std::vector<double> part = sample_cbe_in(2.0, 64, Interval{-1.0, 1.0}, r2);
  std::vector<double> want;
  for (double t : full.angles)
    if (t >= -1.0 && t < 1.0) want.push_back(t);
  ASSERT_EQ(part.size(), want.size());
  for (std::size_t i = 0; i < part.size(); ++i) EXPECT_NEAR(part[i], want[i], 1e-11);
}

TEST(SampleCbe, LargeBetaIsRigid) {
  std::size_t good = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    RngStream r(6, t);
    const SpectrumSample s = sample_cbe(1e4, 16, r);
    const PointConfiguration pc = rescale(s);
    bool all = true;
    for (double g : circular_gaps(s)) all = all && std::abs(16.0 * g - kTwoPi) < 0.5;
    good += all ? 1 : 0;
    EXPECT_EQ(pc.points.size(), 16u);
  }
  EXPECT_GE(good, 990u);
}

TEST(SampleCbe, SmallBetaIsPoissonLike) {
  std::vector<double> counts;
  for (std::uint64_t t = 0; t < 20000; ++t) {
    RngStream r(7, t);
    const SpectrumSample s = sample_cbe(1e-4, 16, r);
    // a unit-mean interval of the rescaled process is an arc of length 2pi/16
    double c = 0;
    for (double x : s.angles) c += (x >= 0.0 && x < kTwoPi / 16.0) ? 1 : 0;
    counts.push_back(c);
  }
  const double ratio = sample_variance(counts) / estimate_mean(counts).mean;
  EXPECT_GT(ratio, 0.9);
  EXPECT_LT(ratio, 1.1);
}

TEST(SampleCbe, RotationInvariantSpacings) {
  std::vector<double> plain, rotated;
  for (std::uint64_t t = 0; t < 400; ++t) {
    RngStream r(8, t);
    SpectrumSample s = sample_cbe(2.0, 50, r);
    for (double g : circular_gaps(s)) plain.push_back(g);
    RngStream q(9, t);
    SpectrumSample u = sample_cbe(2.0, 50, q);
    for (double& x : u.angles) x = wrap_angle(x + 1.234);
    std::sort(u.angles.begin(), u.angles.end());
    for (double g : circular_gaps(u)) rotated.push_back(g);
  }
  const double d = ks_distance(plain, rotated);
  const double ne = plain.size() * rotated.size() / static_cast<double>(plain.size() + rotated.size());
  EXPECT_GT(ks_pvalue(d, ne), 0.01);
}

TEST(PartitionFunction, ClosedForms) {
  EXPECT_NEAR(partition_function(1, 3.7), 1.0, 1e-14);
  EXPECT_NEAR(partition_function(2, 2.0), 2.0, 1e-13);
  EXPECT_NEAR(partition_function(3, 2.0), 6.0, 1e-12);
  EXPECT_NEAR(partition_function(5, 0.0), 1.0, 1e-14);
  EXPECT_TRUE(std::isfinite(log_partition_function(1000, 4.0)));
  EXPECT_NEAR(log_partition_function(1000, 4.0), std::lgamma(2001.0) - 1000 * std::lgamma(3.0), 1e-9);
}

TEST(PartitionFunction, MonteCarlo) {
  RngStream r(10, 0);
  const MeanEstimate z = partition_function_mc(2, 2.0, 1000000, r);
  EXPECT_NEAR(z.mean, 2.0, 0.02);
}

TEST(CbeDensity, Examples) {
  const std::vector<double> one{0.3};
  EXPECT_NEAR(cbe_log_density(2.0, one), -std::log(kTwoPi), 1e-14);
  const std::vector<double> two{0.0, kPi};
  EXPECT_NEAR(cbe_log_density(2.0, two), std::log(2.0) - 2.0 * std::log(kTwoPi), 1e-13);
  const std::vector<double> three{0.1, 1.0, -2.0};
  EXPECT_NEAR(cbe_log_density(0.0, three), -3.0 * std::log(kTwoPi), 1e-14);
  const std::vector<double> same{0.5, 0.5};
  EXPECT_TRUE(std::isinf(cbe_log_density(2.0, same)));
  EXPECT_LT(cbe_log_density(2.0, same), 0.0);
}

TEST(CbeDensity, IntegratesToOneForTwoPoints) {
  // two-dimensional integral reduced by rotation invariance: 2pi * int_0^{2pi} exp(density(0, g)) dg
  const double total = kTwoPi * integrate(
                                    [](double g) {
                                      const std::vector<double> a{0.0, g};
                                      return std::exp(cbe_log_density(2.0, a));
                                    },
                                    1e-12, kTwoPi - 1e-12);
  EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(Reference, ClockWindow) {
  RngStream r(11, 0);
  const PointConfiguration c = sample_reference(ReferenceKind::clock, Interval{-10 * kPi, 10 * kPi}, r);
  ASSERT_EQ(c.points.size(), 10u);
  for (std::size_t i = 1; i < c.points.size(); ++i) EXPECT_NEAR(c.points[i] - c.points[i - 1], kTwoPi, 1e-12);
}

TEST(Reference, PoissonCountsAndIndependence) {
  std::vector<long> counts;
  std::vector<double> a, b;
  for (std::uint64_t t = 0; t < 100000; ++t) {
    RngStream r(12, t);
    const PointConfiguration c = sample_reference(ReferenceKind::poisson, Interval{0.0, 4.0 * kPi}, r);
    counts.push_back(static_cast<long>(count_in(c, Interval{0.0, kTwoPi})));
    a.push_back(static_cast<double>(count_in(c, Interval{0.0, 1.0})));
    b.push_back(static_cast<double>(count_in(c, Interval{5.0, 6.0})));
  }
  EXPECT_LT(tv_distance_poisson(counts, 1.0), 0.01);
  EXPECT_LT(std::abs(correlation(a, b)), 0.01);
}

TEST(Reference, PoissonGapsExponential) {
  RngStream r(13, 0);
  const PointConfiguration c = sample_reference(ReferenceKind::poisson, Interval{0.0, kTwoPi * 100001.0}, r);
  std::vector<double> gaps;
  for (std::size_t i = 1; i < c.points.size() && gaps.size() < 100000; ++i) gaps.push_back(c.points[i] - c.points[i - 1]);
  const double d = ks_statistic(gaps, [](double g) { return 1.0 - std::exp(-g / kTwoPi); });
  EXPECT_LT(d, 0.02);
}
