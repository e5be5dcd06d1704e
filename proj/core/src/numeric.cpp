#include "cmvlab/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cmvlab/errors.hpp"
#include "cmvlab/types.hpp"

namespace cmvlab {

double wrap_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  if (r > kPi) r -= kTwoPi;
  return r;
}

double wrap_positive(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

double circle_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

namespace {

double pairwise_sum_impl(const double* x, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(x, half) + pairwise_sum_impl(x + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  return pairwise_sum_impl(values.data(), values.size());
}

MeanEstimate estimate_mean(std::span<const double> values) {
  MeanEstimate est;
  est.count = values.size();
  if (values.empty()) return est;
  est.mean = pairwise_sum(values) / static_cast<double>(values.size());
  if (values.size() > 1) {
    est.std_error = std::sqrt(sample_variance(values) / static_cast<double>(values.size()));
  }
  return est;
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = pairwise_sum(values) / static_cast<double>(values.size());
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  return pairwise_sum(sq) / static_cast<double>(values.size() - 1);
}

double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("correlation: need two equal samples");
  const double n = static_cast<double>(a.size());
  const double ma = pairwise_sum(a) / n;
  const double mb = pairwise_sum(b) / n;
  std::vector<double> ab(a.size()), aa(a.size()), bb(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab[i] = (a[i] - ma) * (b[i] - mb);
    aa[i] = (a[i] - ma) * (a[i] - ma);
    bb[i] = (b[i] - mb) * (b[i] - mb);
  }
  const double saa = pairwise_sum(aa);
  const double sbb = pairwise_sum(bb);
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return pairwise_sum(ab) / std::sqrt(saa * sbb);
}

double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("ks_statistic: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double ks_pvalue(double d, double effective_n) {
  const double root = std::sqrt(effective_n);
  const double lambda = (root + 0.12 + 0.11 / root) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double Histogram::density(std::size_t i) const {
  if (total == 0) return 0.0;
  return static_cast<double>(counts[i]) / (static_cast<double>(total) * bin_width());
}

Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw DomainError("make_histogram: empty range or zero bins");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  h.total = values.size();
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    if (!(v >= lo && v < hi)) continue;
    auto idx = static_cast<std::size_t>((v - lo) / width);
    if (idx >= bins) idx = bins - 1;
    ++h.counts[idx];
  }
  return h;
}

double periodic_mean(const std::function<double(double)>& f, std::size_t nodes) {
  std::vector<double> values(nodes);
  for (std::size_t j = 0; j < nodes; ++j) {
    values[j] = f(kTwoPi * static_cast<double>(j) / static_cast<double>(nodes));
  }
  return pairwise_sum(values) / static_cast<double>(nodes);
}

double integrate(const std::function<double(double)>& f, double a, double b, double* error_estimate) {
  double err = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12, &err);
  if (error_estimate) *error_estimate = err;
  return value;
}

double integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double* error_estimate) {
  boost::math::quadrature::exp_sinh<double> rule;
  double err = 0.0;
  const double value = rule.integrate(f, a, std::numeric_limits<double>::infinity(), 1e-12, &err);
  if (error_estimate) *error_estimate = err;
  return value;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("CMVLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t max_workers) {
  std::size_t workers = worker_count();
  if (max_workers > 0) workers = std::min(workers, max_workers);
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cmvlab
