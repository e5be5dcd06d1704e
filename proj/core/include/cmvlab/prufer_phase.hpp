#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "cmvlab/coeff_sampling.hpp"
#include "cmvlab/rng.hpp"
#include "cmvlab/types.hpp"

namespace cmvlab {

/// Rotated coefficients gamma_k = B_k(1) alpha_k and the boundary phase omega.
/// Eigenvalue angles are the solutions of psi_{n-1}(theta) - omega in 2 pi Z.
struct RelativePhaseState {
  std::vector<Complex> gammas;  // length n - 1
  double omega = 0.0;           // in [0, 2pi)
  std::size_t n = 1;

  /// Throws DomainError unless |gamma_k| < 1 and gammas.size() == n - 1.
  void validate() const;
};

struct PhaseTrajectory {
  double theta = 0.0;
  std::vector<double> values;  // psi_0(theta) .. psi_{n-1}(theta)
};

/// psi_{n-1}(theta) and its theta-derivative.
struct PhaseValue {
  double value = 0.0;
  double derivative = 0.0;
};

/// Upsilon(psi, gamma) = 2 (Arg(1 - gamma) - Arg(1 - gamma e^{i psi})), principal branches.
/// Throws DomainError when |gamma| >= 1.
double upsilon(double psi, Complex gamma);

/// Partial sum of sum_{l=1}^{terms} (2/l) Im{(e^{i l psi} - 1) gamma^l}.
double upsilon_series(double psi, Complex gamma, std::size_t terms);

/// Blaschke rotation at z = 1. Throws NumericError if a denominator
/// 1 - alpha_k B_k(1) falls below `denominator_tolerance` in modulus.
RelativePhaseState rotate_to_gamma(const CoefficientSequence& seq,
                                   double denominator_tolerance = 1e-14);

/// The unimodular values B_0(1) .. B_{n-1}(1).
std::vector<Complex> blaschke_at_one(const CoefficientSequence& seq,
                                     double denominator_tolerance = 1e-14);

/// Draws gamma_k directly from the schedule law (they share the law of
/// alpha_k for rotationally invariant coefficients) and a uniform omega.
/// omega is drawn first, then gamma_0, gamma_1, ...
RelativePhaseState sample_phase_state(const DecaySchedule& schedule, std::size_t n, RngStream& rng);

/// Full trajectory psi_0(theta) .. psi_{n-1}(theta); theta in (-pi, pi).
PhaseTrajectory relative_phase(const RelativePhaseState& state, double theta);

/// Precomputed form of a state for repeated evaluation of psi_{n-1}.
class PhaseEvaluator {
 public:
  explicit PhaseEvaluator(const RelativePhaseState& state);

  /// psi_{n-1}(theta) and d/dtheta; theta in [-pi, pi].
  PhaseValue operator()(double theta) const;
  /// psi_{n-1}(theta) only.
  double value(double theta) const;

  std::size_t n() const { return n_; }
  double omega() const { return omega_; }

 private:
  std::size_t n_;
  double omega_;
  std::vector<Complex> gammas_;
  std::vector<Complex> rot_;       // ((1 - gamma)/|1 - gamma|)^2
  std::vector<double> arg_base_;   // Arg(1 - gamma)
};

/// All n eigenvalue angles in (-pi, pi], sorted ascending.
///
/// Crossing levels omega + 2 pi m in (psi(-pi), psi(pi)] are assigned to the
/// cells of a 4n-point grid and each root is polished by safeguarded Newton
/// iteration to `tol`. A root that fails to converge triggers a retry on a
/// grid refined by 2 (at most 3 times) before NumericError is thrown.
SpectrumSample locate_eigenvalues(const RelativePhaseState& state, double tol = 1e-12);

/// Eigenvalue angles in the arc [a, b), -pi <= a < b <= pi, sorted ascending.
std::vector<double> locate_eigenvalues_in(const RelativePhaseState& state, Interval arc,
                                          double tol = 1e-12);

/// Number of eigenvalue angles in [a, b), -pi <= a < b <= pi, from two phase evaluations.
long count_in_arc(const PhaseEvaluator& phase, Interval arc);
long count_in_arc(const RelativePhaseState& state, Interval arc);

/// psi'_{n-1}(0) = 1 + sum_{k=0}^{n-2} prod_{l=k}^{n-2} Re[(1 + gamma_l)/(1 - gamma_l)].
double phase_derivative_at_zero(const RelativePhaseState& state);

/// CSV "trial,j,theta_j" with a comment header carrying n, regime and seed.
void write_spectrum_csv(std::span<const SpectrumSample> samples, std::ostream& out);

}  // namespace cmvlab
