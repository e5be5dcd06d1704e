#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmvlab/rng.hpp"
#include "cmvlab/types.hpp"

namespace cmvlab {

/// Verblunsky coefficients alpha_0..alpha_{n-2} of an n x n truncation plus
/// the boundary phase eta (alpha_{n-1} is replaced by e^{i eta}).
struct CoefficientSequence {
  std::vector<Complex> alphas;
  double eta = 0.0;
  std::size_t n = 1;

  /// rho_k = sqrt(1 - |alpha_k|^2)
  double rho(std::size_t k) const;
  /// Throws DomainError unless |alpha_k| < 1, eta finite and alphas.size() == n - 1.
  void validate() const;
};

enum class Regime { fast, critical, slow, custom };
enum class CoefficientLaw { theta_nu, fixed_modulus_uniform_phase };

std::string to_string(Regime r);
std::string to_string(CoefficientLaw law);
Regime regime_from_string(const std::string& s);
CoefficientLaw law_from_string(const std::string& s);

/// Decay schedule for independent rotationally invariant coefficients.
///
/// Target second moments m_k = E|alpha_k|^2:
///   fast      min((k+1)^{-d}, cap)
///   critical  2/(nu_k + 1) with nu_k = beta(k+1) + 1 for the Theta law,
///             min(2/(beta(k+1)), cap) for the fixed-modulus law
///   slow      min((k+1)^{eps-1}, cap)
///   custom    tabulated, last entry held
/// Non-critical Theta schedules use nu_k = 2/m_k - 1.
struct DecaySchedule {
  Regime regime = Regime::critical;
  CoefficientLaw law = CoefficientLaw::theta_nu;
  std::optional<double> beta;
  std::optional<double> epsilon;
  std::optional<double> decay_exponent;
  std::vector<double> second_moments;  // custom only
  double max_second_moment = 0.5;

  double second_moment(std::size_t k) const;
  /// nu_k of the Theta law; throws ConfigError for the fixed-modulus law.
  double theta_parameter(std::size_t k) const;
};

struct ScheduleParams {
  Regime regime = Regime::critical;
  CoefficientLaw law = CoefficientLaw::theta_nu;
  std::optional<double> beta;
  std::optional<double> epsilon;
  std::optional<double> decay_exponent;
  std::vector<double> second_moments;
  double max_second_moment = 0.5;
};

/// Validates parameters against the regime and returns the schedule.
/// Throws ConfigError on any mismatch.
DecaySchedule make_schedule(const ScheduleParams& params);

DecaySchedule fast_schedule(double decay_exponent,
                            CoefficientLaw law = CoefficientLaw::theta_nu);
DecaySchedule critical_schedule(double beta, CoefficientLaw law = CoefficientLaw::theta_nu);
DecaySchedule slow_schedule(double epsilon, CoefficientLaw law = CoefficientLaw::theta_nu);
/// alpha == 0 identically (custom, fixed modulus, m_k = 0).
DecaySchedule zero_schedule();

nlohmann::json schedule_to_json(const DecaySchedule& schedule);
DecaySchedule schedule_from_json(const nlohmann::json& j);

/// Exact Theta_nu draw: |alpha|^2 = 1 - U^{2/(nu-1)}, arg alpha uniform.
Complex sample_theta_nu(double nu, RngStream& rng);

/// One coefficient at index k.
Complex sample_coefficient(const DecaySchedule& schedule, std::size_t k, RngStream& rng);

/// n - 1 independent coefficients and a uniform boundary phase. eta is drawn
/// first, then alpha_0, alpha_1, ... in order.
CoefficientSequence sample_sequence(const DecaySchedule& schedule, std::size_t n, RngStream& rng);

// ---------------------------------------------------------------------------
// Moment diagnostics

/// E log^p[1/(1-|X|^2)] = Gamma(p+1) (2/(nu-1))^p for X ~ Theta_nu.
double theta_log_moment(double nu, double p);
/// E (1-|X|^2)^{-s} = (nu-1)/(nu-1-2s); +infinity when nu - 1 <= 2s.
double theta_negative_moment(double nu, double s);

enum class MomentMethod { closed_form, quadrature };

/// E g(t) with t = log[1/(1-|alpha_k|^2)], computed from the radial law by
/// numerical integration. Used as the fallback and as the cross-check of the
/// closed forms.
double radial_moment_quadrature(const DecaySchedule& schedule, std::size_t k,
                                 const std::function<double(double)>& g,
                                 double* error_estimate = nullptr);

struct ScheduleDiagnostics {
  std::size_t k_max = 0;
  double s0 = 0.1;
  MomentMethod method = MomentMethod::closed_form;
  double quadrature_tolerance = 0.0;  // largest reported error estimate, quadrature only

  std::vector<double> second_moment;    // E|a_k|^2
  std::vector<double> log2_moment;      // E log^2[1/(1-|a_k|^2)]
  std::vector<double> log32_moment;     // E log^{3/2}[1/(1-|a_k|^2)]
  std::vector<double> log1_moment;      // E log[1/(1-|a_k|^2)]
  std::vector<double> negative_moment;  // E (1-|a_k|^2)^{-s0}

  // Hypothesis flags for the three limit regimes.
  bool clock_hypotheses = false;    // k m_k = o(1)
  bool cbe_hypotheses = false;      // k |m_k - 2/(beta(k+1))| = o(1), k E log^2 = o(1)
  bool poisson_hypotheses = false;  // m_k >~ (k+1)^{eps-1}, E(1-|a|^2)^{-s0} bounded
  double beta_effective = 0.0;      // beta used for the CbE check
  double epsilon_effective = 0.0;   // fitted 1 + slope of log m_k
  std::string summary;

  nlohmann::json to_json() const;
};

/// Analytic moments for k = 0..k_max and the regime classification. Requires
/// k_max >= 1; the classification needs k_max >= 16 to be meaningful.
ScheduleDiagnostics validate_schedule(const DecaySchedule& schedule, std::size_t k_max,
                                      double s0 = 0.1, bool force_quadrature = false);

}  // namespace cmvlab
