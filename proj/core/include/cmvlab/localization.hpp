#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cmvlab/coeff_sampling.hpp"
#include "cmvlab/numeric.hpp"
#include "cmvlab/rng.hpp"
#include "cmvlab/types.hpp"

namespace cmvlab {

/// 2 x 2 complex matrix [[a, b], [c, d]].
struct Mat2 {
  Complex a{1.0, 0.0}, b{0.0, 0.0}, c{0.0, 0.0}, d{1.0, 0.0};

  static Mat2 identity() { return {}; }
  Mat2 operator*(const Mat2& o) const;
  Mat2& operator*=(double s);
  Complex det() const { return a * d - b * c; }
  double frobenius2() const;
  /// Largest singular value.
  double norm() const;
  /// |M v| for v = (x, y).
  double apply_norm(Complex x, Complex y) const;
};

using TransferMatrix = Mat2;

/// A = (1/rho) [[z, -conj(alpha)], [-alpha z, 1]]. Throws DomainError when |alpha| >= 1.
TransferMatrix transfer_matrix(Complex alpha, Complex z);

/// T(l, k) = A_{l-1} ... A_k from coefficients indexed from 0, without renormalization.
Mat2 transfer_product(std::span<const Complex> alphas, Complex z, std::size_t k, std::size_t l);

/// log ||T(l, k)|| with the running product rescaled every `renormalize_every`
/// factors and the scales accumulated in log form.
double product_log_norm(std::span<const Complex> alphas, Complex z, std::size_t k, std::size_t l,
                        std::size_t renormalize_every = 16);

/// log ||T(m, k)|| for every m in `marks` (ascending, >= k), from one pass.
std::vector<double> product_log_norms(std::span<const Complex> alphas, Complex z, std::size_t k,
                                      std::span<const std::size_t> marks,
                                      std::size_t renormalize_every = 16);

struct MomentReport {
  double s = 0.25;
  std::size_t k = 0;
  std::size_t l = 0;
  std::size_t r = 0;           // ratio moments only; equals l otherwise
  std::size_t trials = 0;
  std::size_t aborted = 0;     // trials whose log-norm overflowed
  double empirical = 0.0;
  double std_error = 0.0;
  double bound = 1.0;          // bound used for the check
  double bound_as_printed = 1.0;  // ratio moments: exp[-(s/4) sum_{j=k}^{r-1} m_j]
  bool ratio = false;

  /// empirical <= bound + sigmas * stderr
  bool holds(double sigmas = 3.0) const { return empirical <= bound + sigmas * std_error; }
};

/// E ||T(l,k)||^{-s} against exp[-(s/4) sum_{j=k}^{l-1} m_j].
MomentReport product_norm_samples(const DecaySchedule& schedule, Complex z, std::size_t k,
                                  std::size_t l, double s, std::size_t trials, const RngStream& rng);

/// E (||T(l,k)|| / ||T(r,k)||)^s against exp[-(s/4) sum_{j=l}^{r-1} m_j].
MomentReport ratio_moment_samples(const DecaySchedule& schedule, Complex z, std::size_t k,
                                  std::size_t l, std::size_t r, double s, std::size_t trials,
                                  const RngStream& rng);

/// Trapezoid rule (4096 nodes) for the mean over theta of
/// sqrt(1 - r^2) / sqrt(1 - 2 R r cos theta + r^2).
double lemma_a_integral(double r, double R, std::size_t nodes = 4096);

/// Monte Carlo mean of ||A v||^{-1} for |alpha| = r with uniform phase, v a unit vector.
MeanEstimate lemma_a_monte_carlo(double r, Complex vx, Complex vy, Complex z, std::size_t samples,
                                 RngStream& rng);

struct MinamiReport {
  std::size_t N = 0;
  double L = 0.0;
  std::size_t trials = 0;
  double probability = 0.0;
  double std_error = 0.0;
  double bound = 0.0;  // L^2 N^2 / 2

  bool holds(double sigmas = 3.0) const { return probability <= bound + sigmas * std_error; }
};

/// Frequency of two or more eigenvalues of an N x N truncation (uniform
/// boundary phase) in the arc [0, 2 pi L). Requires 0 <= L <= 1/2.
MinamiReport minami_check(const DecaySchedule& schedule, std::size_t N, double L, std::size_t trials,
                          const RngStream& rng);

/// 2^{2-s} sec(s pi / 2).
double kolmogorov_bound(double s);

/// Distance from z to the spectrum of the truncation (eigenvalues from the phase solver).
double distance_to_spectrum(const CoefficientSequence& seq, Complex z);

/// (C - z)^{-1} by dense LU. Throws NumericError, quoting the distance, when
/// z lies within `min_distance` of the spectrum.
Eigen::MatrixXcd resolvent(const CoefficientSequence& seq, Complex z, double min_distance = 1e-10);

Complex resolvent_entry(const CoefficientSequence& seq, Complex z, std::size_t k, std::size_t l,
                        double min_distance = 1e-10);

struct DecayPoint {
  std::size_t separation = 0;
  double value = 0.0;         // E |G_{k0, k0+separation}|^s
  double std_error = 0.0;
  double bound = 0.0;         // Kolmogorov bound
  double median_log_batch = 0.0;  // median over batches of log(batch mean)
};

struct DecayProfile {
  std::size_t n = 0;
  std::size_t k0 = 0;
  double s = 0.25;
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::vector<DecayPoint> points;
};

/// Fractional moments of resolvent entries at z uniform on the circle.
DecayProfile resolvent_decay_profile(const DecaySchedule& schedule, std::size_t n, std::size_t k0,
                                     std::span<const std::size_t> separations, double s,
                                     std::size_t trials, const RngStream& rng, std::size_t batches = 10);

}  // namespace cmvlab
