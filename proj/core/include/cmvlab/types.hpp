#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace cmvlab {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Half-open interval [lo, hi).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x < hi; }
};

/// Maps an angle to (-pi, pi].
double wrap_angle(double theta);

/// Maps an angle to [0, 2pi).
double wrap_positive(double theta);

/// Distance between e^{ia} and e^{ib} measured along the circle, in [0, pi].
double circle_distance(double a, double b);

struct SampleMeta {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string regime;
  std::optional<double> beta;
};

/// Eigenvalue angles of one n x n truncation, sorted, each in (-pi, pi].
struct SpectrumSample {
  std::vector<double> angles;
  std::size_t n = 0;
  SampleMeta meta;
};

/// Points on the line together with the window they were observed in.
struct PointConfiguration {
  std::vector<double> points;
  Interval window;
};

}  // namespace cmvlab
