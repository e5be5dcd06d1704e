#include <cmvlab/cmv_core.hpp>
#include <cmvlab/coeff_sampling.hpp>
#include <cmvlab/errors.hpp>
#include <cmvlab/numeric.hpp>
#include <cmvlab/prufer_phase.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

using namespace cmvlab;

namespace {

RelativePhaseState zero_state(std::size_t n, double omega) {
  RelativePhaseState s;
  s.n = n;
  s.gammas.assign(n - 1, Complex(0.0, 0.0));
  s.omega = omega;
  return s;
}

}  // namespace

TEST(Upsilon, VanishingCases) {
  for (double psi : {-3.0, -0.2, 0.0, 1.0, 3.1}) EXPECT_EQ(upsilon(psi, Complex(0.0, 0.0)), 0.0);
  for (const Complex g : {Complex(0.5, 0.0), Complex(-0.3, 0.7), Complex(0.0, -0.99)}) {
    EXPECT_NEAR(upsilon(0.0, g), 0.0, 1e-15);
  }
  EXPECT_THROW(upsilon(0.5, Complex(1.0, 0.0)), DomainError);
  EXPECT_THROW(upsilon(0.5, Complex(0.6, 0.8)), DomainError);
}

TEST(Upsilon, SeriesOracleValue) {
  const double series = upsilon_series(kPi / 2.0, Complex(0.5, 0.0), 40);
  EXPECT_NEAR(series, 0.92730, 1e-4);
  EXPECT_NEAR(upsilon(kPi / 2.0, Complex(0.5, 0.0)), series, 1e-10);
}

TEST(Upsilon, BranchMatchesSeriesOnGrid) {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double psi = -3.0 + 6.0 * i / 19.0;
    for (int j = 0; j < 20; ++j) {
      const Complex g = std::polar(0.6 * j / 19.0, 2.3 * j + 0.4);
      worst = std::max(worst, std::abs(upsilon(psi, g) - upsilon_series(psi, g, 40)));
    }
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Upsilon, RangeBound) {
  RngStream r(1, 0);
  for (int i = 0; i < 10000; ++i) {
    const double v = upsilon(r.angle() * 3.0 - 3.0 * kPi, std::polar(0.999 * r.uniform(), r.angle()));
    ASSERT_GT(v, -kTwoPi);
    ASSERT_LT(v, kTwoPi);
  }
}

TEST(RotateToGamma, RealCoefficients) {
  CoefficientSequence seq;
  seq.n = 5;
  seq.alphas = {Complex(0.3, 0), Complex(-0.5, 0), Complex(0.9, 0), Complex(0.1, 0)};
  seq.eta = 1.0;
  const RelativePhaseState s = rotate_to_gamma(seq);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(s.gammas[k] - seq.alphas[k]), 0.0, 1e-15);
  EXPECT_NEAR(s.omega, wrap_positive(-1.0), 1e-14);
}

TEST(RotateToGamma, HandCheckedBlaschkeStep) {
  CoefficientSequence seq;
  seq.n = 3;
  seq.alphas = {Complex(0.0, 0.5), Complex(0.2, 0.1)};
  const std::vector<Complex> b = blaschke_at_one(seq);
  EXPECT_EQ(b[0], Complex(1.0, 0.0));
  EXPECT_NEAR(std::abs(b[1] - Complex(0.6, 0.8)), 0.0, 1e-15);
  const RelativePhaseState s = rotate_to_gamma(seq);
  EXPECT_NEAR(std::abs(s.gammas[1] - b[1] * seq.alphas[1]), 0.0, 1e-15);
}

TEST(RotateToGamma, UnimodularAndModulusPreserving) {
  RngStream r(2, 0);
  const CoefficientSequence seq = sample_sequence(critical_schedule(2.0), 10001, r);
  const std::vector<Complex> b = blaschke_at_one(seq);
  double worst = 0.0;
  for (const Complex x : b) worst = std::max(worst, std::abs(std::abs(x) - 1.0));
  EXPECT_LT(worst, 1e-12);
  const RelativePhaseState s = rotate_to_gamma(seq);
  for (std::size_t k = 0; k < seq.alphas.size(); k += 97) {
    EXPECT_NEAR(std::abs(s.gammas[k]), std::abs(seq.alphas[k]), 1e-15);
  }
  EXPECT_NEAR(std::abs(std::polar(1.0, -s.omega) - b.back() * std::polar(1.0, seq.eta)), 0.0, 1e-12);
}

TEST(RotateToGamma, DenominatorGuard) {
  CoefficientSequence seq;
  seq.n = 2;
  seq.alphas = {Complex(1.0 - 1e-16, 0.0)};
  EXPECT_THROW(rotate_to_gamma(seq), NumericError);
}

TEST(RelativePhase, ZeroGammasLinear) {
  const RelativePhaseState s = zero_state(12, 0.0);
  const PhaseTrajectory t = relative_phase(s, 0.37);
  ASSERT_EQ(t.values.size(), 12u);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_DOUBLE_EQ(t.values[k], (k + 1.0) * 0.37);
}

TEST(RelativePhase, EvaluatorAgreesWithTrajectory) {
  RngStream r(3, 0);
  const RelativePhaseState s = sample_phase_state(slow_schedule(0.5), 3000, r);
  const PhaseEvaluator ev(s);
  for (double th : {-3.1, -1.0, -1e-3, 0.0, 0.25, 2.9}) {
    const PhaseTrajectory t = relative_phase(s, th);
    EXPECT_NEAR(ev.value(th), t.values.back(), 1e-9 * std::max(1.0, std::abs(t.values.back())));
    EXPECT_EQ(t.values.front(), th);
    for (double v : t.values) ASSERT_TRUE(th == 0.0 ? v == 0.0 : (v > 0.0) == (th > 0.0));
  }
}

TEST(RelativePhase, DerivativeMatchesFiniteDifference) {
  RngStream r(4, 0);
  const RelativePhaseState s = sample_phase_state(critical_schedule(2.0), 400, r);
  const PhaseEvaluator ev(s);
  for (double th : {-2.0, 0.3, 1.7}) {
    const double h = 1e-6;
    const double fd = (ev.value(th + h) - ev.value(th - h)) / (2 * h);
    EXPECT_NEAR(ev(th).derivative, fd, 1e-5 * std::abs(fd));
  }
}

TEST(RelativePhase, FullCircleIncrease) {
  RngStream r(5, 0);
  const RelativePhaseState s = sample_phase_state(critical_schedule(2.0), 257, r);
  const PhaseEvaluator ev(s);
  EXPECT_NEAR(ev.value(kPi) - ev.value(-kPi), kTwoPi * 257, 1e-8);
}

TEST(RelativePhase, MonotoneInTheta) {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    RngStream r(6, trial);
    const RelativePhaseState s = sample_phase_state(critical_schedule(2.0), 100, r);
    const PhaseEvaluator ev(s);
    double prev = ev.value(-kPi);
    for (int i = 1; i <= 64; ++i) {
      const double v = ev.value(-kPi + kTwoPi * i / 64.0);
      ASSERT_LT(prev, v);
      prev = v;
    }
  }
}

TEST(RelativePhase, MartingaleMean) {
  for (const DecaySchedule& sch : {critical_schedule(2.0), slow_schedule(0.5),
                                   critical_schedule(2.0, CoefficientLaw::fixed_modulus_uniform_phase)}) {
    std::vector<double> v(10000);
    for (std::size_t t = 0; t < v.size(); ++t) {
      RngStream r(7, t);
      v[t] = PhaseEvaluator(sample_phase_state(sch, 100, r)).value(0.3);
    }
    const MeanEstimate m = estimate_mean(v);
    EXPECT_LT(std::abs(m.mean - 30.0), 3.0 * m.std_error) << to_string(sch.regime);
  }
}

TEST(Locate, ZeroGammas) {
  const double omega = 0.9;
  const std::size_t n = 7;
  const SpectrumSample sp = locate_eigenvalues(zero_state(n, omega));
  ASSERT_EQ(sp.angles.size(), n);
  std::vector<double> want;
  for (std::size_t j = 0; j < n; ++j) want.push_back(wrap_angle((omega + kTwoPi * j) / n));
  std::sort(want.begin(), want.end());
  for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(sp.angles[j], want[j], 1e-12);
}

TEST(Locate, SingleSite) {
  const SpectrumSample sp = locate_eigenvalues(zero_state(1, 4.0));
  ASSERT_EQ(sp.angles.size(), 1u);
  EXPECT_NEAR(sp.angles[0], wrap_angle(4.0), 1e-12);
}

TEST(Locate, RootsSolvePhaseEquationAndGapsSumToCircle) {
  RngStream r(8, 0);
  for (const DecaySchedule& sch : {critical_schedule(2.0), slow_schedule(0.5), fast_schedule(2.0)}) {
    const RelativePhaseState s = sample_phase_state(sch, 500, r);
    const SpectrumSample sp = locate_eigenvalues(s);
    ASSERT_EQ(sp.angles.size(), 500u);
    ASSERT_TRUE(std::is_sorted(sp.angles.begin(), sp.angles.end()));
    EXPECT_GT(sp.angles.front(), -kPi);
    EXPECT_LE(sp.angles.back(), kPi);
    const PhaseEvaluator ev(s);
    // in the slow regime psi can climb 2pi within one ulp of theta, so the check is that a level
    // omega + 2pi m lies between psi(t - d) and psi(t + d) rather than a residual in psi
    for (double t : sp.angles) {
      const double below = (ev.value(t - 1e-10) - s.omega) / kTwoPi;
      const double above = (ev.value(t + 1e-10) - s.omega) / kTwoPi;
      EXPECT_LE(std::ceil(below - 1e-9), std::floor(above + 1e-9)) << "theta " << t;
    }
    double total = kTwoPi - (sp.angles.back() - sp.angles.front());
    for (std::size_t j = 1; j < sp.angles.size(); ++j) total += sp.angles[j] - sp.angles[j - 1];
    EXPECT_NEAR(total, kTwoPi, 1e-9);
  }
}

TEST(Locate, ArcAndCountAgreeWithFullSpectrum) {
  RngStream r(9, 0);
  const RelativePhaseState s = sample_phase_state(critical_schedule(2.0), 300, r);
  const SpectrumSample sp = locate_eigenvalues(s);
  const PhaseEvaluator ev(s);
  for (const Interval arc : {Interval{-kPi, kPi}, Interval{-0.5, 0.7}, Interval{2.0, kPi}, Interval{0.1, 0.1}}) {
    long expected = 0;
    for (double t : sp.angles) expected += arc.contains(t) ? 1 : 0;
    EXPECT_EQ(count_in_arc(ev, arc), expected);
    EXPECT_EQ(count_in_arc(s, arc), expected);
    if (arc.lo < arc.hi) {
      const std::vector<double> part = locate_eigenvalues_in(s, arc);
      ASSERT_EQ(static_cast<long>(part.size()), expected);
      std::vector<double> want;
      for (double t : sp.angles)
        if (arc.contains(t)) want.push_back(t);
      for (std::size_t i = 0; i < part.size(); ++i) EXPECT_NEAR(part[i], want[i], 1e-11);
    }
  }
  EXPECT_THROW(locate_eigenvalues_in(s, Interval{0.5, 0.2}), DomainError);
  EXPECT_THROW(locate_eigenvalues(s, 0.0), DomainError);
}

TEST(Locate, OracleEquivalenceAllRegimes) {
  double worst = 0.0;
  for (const DecaySchedule& sch : {critical_schedule(2.0), slow_schedule(0.5), fast_schedule(2.0)}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RngStream r(seed, 10);
      const CoefficientSequence seq = sample_sequence(sch, 32, r);
      const SpectrumSample sp = locate_eigenvalues(rotate_to_gamma(seq));
      for (double t : sp.angles) worst = std::max(worst, std::abs(char_poly_eval(seq, std::polar(1.0, t))));
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(PhaseDerivative, ClosedFormCases) {
  EXPECT_DOUBLE_EQ(phase_derivative_at_zero(zero_state(9, 0.0)), 9.0);
  RelativePhaseState s = zero_state(2, 0.0);
  s.gammas[0] = Complex(0.5, 0.0);
  EXPECT_NEAR(phase_derivative_at_zero(s), 4.0, 1e-14);
  const double h = 1e-6;
  EXPECT_NEAR((relative_phase(s, h).values.back() - relative_phase(s, -h).values.back()) / (2 * h), 4.0, 1e-6);
}

TEST(PhaseDerivative, PositiveAndMatchesFiniteDifference) {
  for (std::uint64_t t = 0; t < 20; ++t) {
    RngStream r(10, t);
    const RelativePhaseState s = sample_phase_state(critical_schedule(2.0), 50, r);
    const double d = phase_derivative_at_zero(s);
    EXPECT_GT(d, 0.0);
    const double h = 1e-7;
    const PhaseEvaluator ev(s);
    EXPECT_NEAR((ev.value(h) - ev.value(-h)) / (2 * h), d, 1e-5 * d);
  }
}

TEST(StateValidate, RejectsBadGammas) {
  RelativePhaseState s = zero_state(3, 0.0);
  s.gammas[1] = Complex(0.0, 1.0);
  EXPECT_THROW(s.validate(), DomainError);
  s.gammas.pop_back();
  EXPECT_THROW(s.validate(), DomainError);
}

TEST(SpectrumCsv, Layout) {
  SpectrumSample a;
  a.n = 2;
  a.angles = {-1.0, 2.0};
  a.meta.regime = "critical";
  a.meta.seed = 5;
  std::ostringstream out;
  write_spectrum_csv(std::span<const SpectrumSample>(&a, 1), out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# n=2", 0), 0u);
  EXPECT_NE(line.find("regime=critical"), std::string::npos);
  EXPECT_NE(line.find("seed=5"), std::string::npos);
  std::getline(in, line);
  EXPECT_EQ(line, "trial,j,theta_j");
}
