#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cmvlab {

/// Pairwise (cascade) summation; the result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // standard error of the mean
  std::size_t count = 0;
};

MeanEstimate estimate_mean(std::span<const double> values);

/// Unbiased sample variance.
double sample_variance(std::span<const double> values);

/// Pearson correlation; zero when either sample is constant.
double correlation(std::span<const double> a, std::span<const double> b);

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov tail probability P(D > d) for sample size `n`
/// (Stephens' small-sample correction of the limiting series).
double ks_pvalue(double d, double effective_n);

/// Equal-width histogram on [lo, hi); values outside are ignored.
struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;
  std::size_t total = 0;  // number of values offered, including those outside

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_left(std::size_t i) const { return lo + bin_width() * static_cast<double>(i); }
  /// counts / (total * width)
  double density(std::size_t i) const;
};

Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

/// Mean of f over `nodes` equispaced points of [0, 2pi): the trapezoid rule
/// for periodic integrands, returning the integral divided by 2pi.
double periodic_mean(const std::function<double(double)>& f, std::size_t nodes);

/// Adaptive Gauss-Kronrod quadrature on a finite interval.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double* error_estimate = nullptr);

/// Double-exponential quadrature on [a, infinity).
double integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double* error_estimate = nullptr);

/// Number of worker threads: CMVLAB_THREADS if set (>= 1), else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) across worker_count() threads.
/// Each index is processed exactly once; callers write results by index.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t max_workers = 0);

}  // namespace cmvlab
