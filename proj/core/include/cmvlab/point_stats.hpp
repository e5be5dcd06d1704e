#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cmvlab/types.hpp"

namespace cmvlab {

/// Points n theta_j on the window (-pi n, pi n].
PointConfiguration rescale(const SpectrumSample& sample);

/// Points n theta_j for angles observed in the arc [a, b); window [n a, n b).
PointConfiguration rescale_arc(std::span<const double> angles, std::size_t n, Interval arc);

enum class TestFunctionKind { triangle, bump, indicator_smooth };

/// Non-negative, compactly supported on [center - width, center + width].
///   triangle          height (1 - |u|)
///   bump              height exp(1 - 1/(1 - u^2))
///   indicator_smooth  height on |u| <= 1/2, smooth C^infinity decay to 0 at |u| = 1
/// with u = (x - center)/width.
struct TestFunction {
  TestFunctionKind kind = TestFunctionKind::triangle;
  double center = 0.0;
  double width = 1.0;
  double height = 1.0;

  double operator()(double x) const;
  Interval support() const { return {center - width, center + width}; }
  void validate() const;
};

struct LaplaceValue {
  double value = 1.0;         // exp(-sum f(x_j))
  bool edge_warning = false;  // support of f leaves the window
};

LaplaceValue laplace_functional(const PointConfiguration& config, const TestFunction& f);

/// exp{ intensity * integral (e^{-f} - 1) dx } for a Poisson process, by quadrature.
double poisson_laplace_reference(const TestFunction& f, double intensity = 1.0 / kTwoPi);

/// Joint event "exactly counts[j] points in intervals[j]" for disjoint half-open intervals.
struct CountingQuery {
  std::vector<Interval> intervals;
  std::vector<std::size_t> counts;

  /// Throws DomainError unless p >= 1, sizes match and the intervals are disjoint.
  void validate() const;
};

bool counting_event(const PointConfiguration& config, const CountingQuery& query);

/// Fraction of samples in which the event occurs.
double counting_probability(std::span<const PointConfiguration> samples, const CountingQuery& query);

/// prod_j lambda_j^{k_j} e^{-lambda_j}/k_j! with lambda_j = intensity |I_j|.
double poisson_counting_probability(const CountingQuery& query, double intensity = 1.0 / kTwoPi);

/// Number of points in [a, b).
std::size_t count_in(const PointConfiguration& config, Interval interval);

/// Consecutive gaps among points in the closed central core of the window
/// (a fraction core_fraction of its length). Fewer than two points gives an empty list.
std::vector<double> spacing_sample(const PointConfiguration& config, double core_fraction = 0.5);

/// The n circular gaps of a spectrum, including the wraparound gap.
std::vector<double> circular_gaps(const SpectrumSample& sample);

/// Two-sample Kolmogorov-Smirnov distance. Throws DomainError on empty input.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// log P(N = k) for N ~ Poisson(lambda).
double poisson_log_pmf(std::size_t k, double lambda);

/// Total variation distance between the empirical law of `counts` and Poisson(lambda).
double tv_distance_poisson(std::span<const long> counts, double lambda);

}  // namespace cmvlab
