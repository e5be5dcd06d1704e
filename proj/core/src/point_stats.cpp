#include "cmvlab/point_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cmvlab/errors.hpp"
#include "cmvlab/numeric.hpp"

namespace cmvlab {

PointConfiguration rescale(const SpectrumSample& sample) {
  PointConfiguration c;
  const double n = static_cast<double>(sample.n);
  c.points.reserve(sample.angles.size());
  for (double a : sample.angles) c.points.push_back(n * a);
  std::sort(c.points.begin(), c.points.end());
  c.window = {-kPi * n, kPi * n};
  return c;
}

PointConfiguration rescale_arc(std::span<const double> angles, std::size_t n, Interval arc) {
  PointConfiguration c;
  const double nn = static_cast<double>(n);
  for (double a : angles) {
    if (arc.contains(a)) c.points.push_back(nn * a);
  }
  std::sort(c.points.begin(), c.points.end());
  c.window = {nn * arc.lo, nn * arc.hi};
  return c;
}

namespace {

double smooth_step(double t) {
  // 0 at t <= 0, 1 at t >= 1, C-infinity in between
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

}  // namespace

void TestFunction::validate() const {
  if (!(width > 0.0) || !std::isfinite(width)) throw DomainError("TestFunction: width must be positive");
  if (!(height >= 0.0) || !std::isfinite(height)) throw DomainError("TestFunction: height must be non-negative");
}

double TestFunction::operator()(double x) const {
  const double u = std::abs(x - center) / width;
  if (u >= 1.0) return 0.0;
  switch (kind) {
    case TestFunctionKind::triangle:
      return height * (1.0 - u);
    case TestFunctionKind::bump:
      return height * std::exp(1.0 - 1.0 / (1.0 - u * u));
    case TestFunctionKind::indicator_smooth:
      return height * smooth_step(2.0 * (1.0 - u));
  }
  return 0.0;
}

LaplaceValue laplace_functional(const PointConfiguration& config, const TestFunction& f) {
  f.validate();
  LaplaceValue out;
  const Interval s = f.support();
  out.edge_warning = s.lo < config.window.lo || s.hi > config.window.hi;
  double sum = 0.0;
  auto first = std::lower_bound(config.points.begin(), config.points.end(), s.lo);
  for (auto it = first; it != config.points.end() && *it <= s.hi; ++it) sum += f(*it);
  out.value = std::exp(-sum);
  return out;
}

double poisson_laplace_reference(const TestFunction& f, double intensity) {
  f.validate();
  const Interval s = f.support();
  const double integral = integrate([&f](double x) { return std::expm1(-f(x)); }, s.lo, s.hi);
  return std::exp(intensity * integral);
}

void CountingQuery::validate() const {
  if (intervals.empty()) throw DomainError("CountingQuery: need at least one interval");
  if (intervals.size() != counts.size()) throw DomainError("CountingQuery: intervals and counts differ in length");
  std::vector<Interval> sorted = intervals;
  std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].lo < sorted[i].hi)) throw DomainError("CountingQuery: empty interval");
    if (i > 0 && sorted[i].lo < sorted[i - 1].hi) throw DomainError("CountingQuery: intervals overlap");
  }
}

std::size_t count_in(const PointConfiguration& config, Interval interval) {
  const auto lo = std::lower_bound(config.points.begin(), config.points.end(), interval.lo);
  const auto hi = std::lower_bound(config.points.begin(), config.points.end(), interval.hi);
  return static_cast<std::size_t>(hi - lo);
}

bool counting_event(const PointConfiguration& config, const CountingQuery& query) {
  for (std::size_t j = 0; j < query.intervals.size(); ++j) {
    if (count_in(config, query.intervals[j]) != query.counts[j]) return false;
  }
  return true;
}

double counting_probability(std::span<const PointConfiguration> samples, const CountingQuery& query) {
  query.validate();
  if (samples.empty()) throw DomainError("counting_probability: need at least one sample");
  std::size_t hits = 0;
  for (const auto& s : samples) hits += counting_event(s, query) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double poisson_log_pmf(std::size_t k, double lambda) {
  const double kk = static_cast<double>(k);
  if (lambda == 0.0) return k == 0 ? 0.0 : -INFINITY;
  return kk * std::log(lambda) - lambda - std::lgamma(kk + 1.0);
}

double poisson_counting_probability(const CountingQuery& query, double intensity) {
  query.validate();
  double log_p = 0.0;
  for (std::size_t j = 0; j < query.intervals.size(); ++j) {
    log_p += poisson_log_pmf(query.counts[j], intensity * query.intervals[j].length());
  }
  return std::exp(log_p);
}

std::vector<double> spacing_sample(const PointConfiguration& config, double core_fraction) {
  if (!(core_fraction > 0.0 && core_fraction <= 1.0)) {
    throw DomainError("spacing_sample: core_fraction must lie in (0, 1]");
  }
  const double center = 0.5 * (config.window.lo + config.window.hi);
  const double half = 0.5 * core_fraction * config.window.length();
  std::vector<double> core;
  for (double p : config.points) {
    if (p >= center - half && p <= center + half) core.push_back(p);
  }
  std::sort(core.begin(), core.end());
  std::vector<double> gaps;
  for (std::size_t i = 1; i < core.size(); ++i) gaps.push_back(core[i] - core[i - 1]);
  return gaps;
}

std::vector<double> circular_gaps(const SpectrumSample& sample) {
  std::vector<double> a = sample.angles;
  std::sort(a.begin(), a.end());
  std::vector<double> gaps;
  if (a.empty()) return gaps;
  for (std::size_t i = 1; i < a.size(); ++i) gaps.push_back(a[i] - a[i - 1]);
  gaps.push_back(a.front() + kTwoPi - a.back());
  return gaps;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_distance: samples must be nonempty");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double tv_distance_poisson(std::span<const long> counts, double lambda) {
  if (counts.empty()) throw DomainError("tv_distance_poisson: no counts");
  std::map<long, std::size_t> freq;
  for (long c : counts) ++freq[c];
  const double total = static_cast<double>(counts.size());
  double tv = 0.0;
  double covered = 0.0;
  for (const auto& [k, f] : freq) {
    const double p = k >= 0 ? std::exp(poisson_log_pmf(static_cast<std::size_t>(k), lambda)) : 0.0;
    tv += std::abs(static_cast<double>(f) / total - p);
    covered += p;
  }
  // Poisson mass on values never observed
  tv += std::max(0.0, 1.0 - covered);
  return 0.5 * tv;
}

}  // namespace cmvlab
