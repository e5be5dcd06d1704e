#pragma once

#include <cstddef>
#include <span>

#include "cmvlab/numeric.hpp"
#include "cmvlab/rng.hpp"
#include "cmvlab/types.hpp"

namespace cmvlab {

/// Exact CbE_n draw: Theta_{beta(k+1)+1} coefficients fed to the phase solver.
SpectrumSample sample_cbe(double beta, std::size_t n, RngStream& rng, double tol = 1e-12);

/// Eigenvalues of an exact CbE_n draw restricted to the arc [a, b).
std::vector<double> sample_cbe_in(double beta, std::size_t n, Interval arc, RngStream& rng,
                                  double tol = 1e-12);

/// log Z_{n,beta} = log Gamma(beta n/2 + 1) - n log Gamma(beta/2 + 1).
double log_partition_function(std::size_t n, double beta);
double partition_function(std::size_t n, double beta);

/// beta sum_{j<k} log|e^{i theta_j} - e^{i theta_k}| - log Z_{n,beta} - n log 2pi.
/// Returns -infinity when two angles coincide (beta > 0).
double cbe_log_density(double beta, std::span<const double> angles);

/// Monte Carlo estimate of Z_{n,beta} as the mean of prod_{j<k}|e^{i theta_j} - e^{i theta_k}|^beta
/// over independent uniform angles.
MeanEstimate partition_function_mc(std::size_t n, double beta, std::size_t draws, RngStream& rng);

/// Density on (0, 2pi) of a circular gap of CbE_2, proportional to
/// (2 - 2 cos g)^{beta/2}; the constant is fixed by quadrature.
class CbeTwoPointGap {
 public:
  explicit CbeTwoPointGap(double beta);

  double operator()(double g) const;
  /// Mean of the density over [lo, hi].
  double bin_average(double lo, double hi) const;
  double normalization() const { return norm_; }

 private:
  double beta_;
  double norm_;
};

enum class ReferenceKind { poisson, clock };

/// Poisson: intensity 1/2pi on the window (exponential gaps of mean 2pi).
/// Clock: {2 pi k + x} with x uniform on [0, 2pi), restricted to the window.
PointConfiguration sample_reference(ReferenceKind kind, Interval window, RngStream& rng);

}  // namespace cmvlab
