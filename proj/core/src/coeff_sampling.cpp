#include "cmvlab/coeff_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cmvlab/errors.hpp"
#include "cmvlab/numeric.hpp"

namespace cmvlab {

namespace {

// |polar(r, phi)| can round up by an ulp or two, so the cap keeps some room below 1
constexpr double kModulusCap = 1.0 - 0x1.0p-50;

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

double CoefficientSequence::rho(std::size_t k) const {
  return std::sqrt(std::max(0.0, 1.0 - std::norm(alphas.at(k))));
}

void CoefficientSequence::validate() const {
  if (n < 1) throw DomainError("CoefficientSequence: n must be positive");
  if (alphas.size() != n - 1) throw DomainError("CoefficientSequence: expected n-1 coefficients");
  if (!std::isfinite(eta)) throw DomainError("CoefficientSequence: eta is not finite");
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (!(std::abs(alphas[k]) < 1.0)) {
      throw DomainError("CoefficientSequence: |alpha_" + std::to_string(k) + "| >= 1");
    }
  }
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::fast: return "fast";
    case Regime::critical: return "critical";
    case Regime::slow: return "slow";
    case Regime::custom: return "custom";
  }
  return "unknown";
}

std::string to_string(CoefficientLaw law) {
  return law == CoefficientLaw::theta_nu ? "theta_nu" : "fixed_modulus_uniform_phase";
}

Regime regime_from_string(const std::string& s) {
  if (s == "fast") return Regime::fast;
  if (s == "critical") return Regime::critical;
  if (s == "slow") return Regime::slow;
  if (s == "custom") return Regime::custom;
  throw ConfigError("unknown regime '" + s + "'");
}

CoefficientLaw law_from_string(const std::string& s) {
  if (s == "theta_nu") return CoefficientLaw::theta_nu;
  if (s == "fixed_modulus_uniform_phase" || s == "fixed_modulus") {
    return CoefficientLaw::fixed_modulus_uniform_phase;
  }
  throw ConfigError("unknown coefficient law '" + s + "'");
}

double DecaySchedule::second_moment(std::size_t k) const {
  const double k1 = static_cast<double>(k) + 1.0;
  switch (regime) {
    case Regime::fast:
      return std::min(std::pow(k1, -*decay_exponent), max_second_moment);
    case Regime::critical:
      if (law == CoefficientLaw::theta_nu) return 2.0 / (*beta * k1 + 2.0);
      return std::min(2.0 / (*beta * k1), max_second_moment);
    case Regime::slow:
      return std::min(std::pow(k1, *epsilon - 1.0), max_second_moment);
    case Regime::custom:
      return second_moments[std::min(k, second_moments.size() - 1)];
  }
  return 0.0;
}

double DecaySchedule::theta_parameter(std::size_t k) const {
  if (law != CoefficientLaw::theta_nu) throw ConfigError("theta_parameter: schedule law is not theta_nu");
  if (regime == Regime::critical) return *beta * (static_cast<double>(k) + 1.0) + 1.0;
  return 2.0 / second_moment(k) - 1.0;
}

DecaySchedule make_schedule(const ScheduleParams& p) {
  require(p.max_second_moment > 0.0 && p.max_second_moment < 1.0,
          "max_second_moment must lie in (0,1)");
  DecaySchedule s;
  s.regime = p.regime;
  s.law = p.law;
  s.max_second_moment = p.max_second_moment;
  switch (p.regime) {
    case Regime::fast:
      require(p.decay_exponent.has_value(), "fast regime requires decay_exponent");
      require(!p.beta && !p.epsilon, "fast regime takes only decay_exponent");
      require(*p.decay_exponent > 1.0, "decay_exponent must exceed 1");
      s.decay_exponent = p.decay_exponent;
      break;
    case Regime::critical:
      require(p.beta.has_value(), "critical regime requires beta");
      require(!p.epsilon && !p.decay_exponent, "critical regime takes only beta");
      require(*p.beta > 0.0 && std::isfinite(*p.beta), "beta must be positive and finite");
      s.beta = p.beta;
      break;
    case Regime::slow:
      require(p.epsilon.has_value(), "slow regime requires epsilon");
      require(!p.beta && !p.decay_exponent, "slow regime takes only epsilon");
      require(*p.epsilon > 0.0 && *p.epsilon < 1.0, "epsilon must lie in (0,1)");
      s.epsilon = p.epsilon;
      break;
    case Regime::custom: {
      require(!p.second_moments.empty(), "custom regime requires second_moments");
      require(!p.beta && !p.epsilon && !p.decay_exponent,
              "custom regime takes only second_moments");
      const bool theta = p.law == CoefficientLaw::theta_nu;
      for (double m : p.second_moments) {
        require(std::isfinite(m) && m < 1.0 && (theta ? m > 0.0 : m >= 0.0),
                theta ? "custom second moments must lie in (0,1) for theta_nu"
                      : "custom second moments must lie in [0,1)");
      }
      s.second_moments = p.second_moments;
      break;
    }
  }
  return s;
}

DecaySchedule fast_schedule(double decay_exponent, CoefficientLaw law) {
  ScheduleParams p;
  p.regime = Regime::fast;
  p.law = law;
  p.decay_exponent = decay_exponent;
  return make_schedule(p);
}

DecaySchedule critical_schedule(double beta, CoefficientLaw law) {
  ScheduleParams p;
  p.regime = Regime::critical;
  p.law = law;
  p.beta = beta;
  return make_schedule(p);
}

DecaySchedule slow_schedule(double epsilon, CoefficientLaw law) {
  ScheduleParams p;
  p.regime = Regime::slow;
  p.law = law;
  p.epsilon = epsilon;
  return make_schedule(p);
}

DecaySchedule zero_schedule() {
  ScheduleParams p;
  p.regime = Regime::custom;
  p.law = CoefficientLaw::fixed_modulus_uniform_phase;
  p.second_moments = {0.0};
  return make_schedule(p);
}

nlohmann::json schedule_to_json(const DecaySchedule& s) {
  nlohmann::json j;
  j["regime"] = to_string(s.regime);
  j["law"] = to_string(s.law);
  j["beta"] = s.beta ? nlohmann::json(*s.beta) : nlohmann::json(nullptr);
  j["epsilon"] = s.epsilon ? nlohmann::json(*s.epsilon) : nlohmann::json(nullptr);
  j["decay_exponent"] =
      s.decay_exponent ? nlohmann::json(*s.decay_exponent) : nlohmann::json(nullptr);
  if (s.regime == Regime::custom) j["second_moments"] = s.second_moments;
  j["max_second_moment"] = s.max_second_moment;
  return j;
}

DecaySchedule schedule_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("schedule must be a JSON object");
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number()) throw ConfigError(std::string("schedule.") + key + " must be a number");
    return j.at(key).get<double>();
  };
  ScheduleParams p;
  if (!j.contains("regime")) throw ConfigError("schedule.regime is required");
  p.regime = regime_from_string(j.at("regime").get<std::string>());
  if (j.contains("law") && !j.at("law").is_null()) p.law = law_from_string(j.at("law").get<std::string>());
  p.beta = opt("beta");
  p.epsilon = opt("epsilon");
  p.decay_exponent = opt("decay_exponent");
  if (auto cap = opt("max_second_moment")) p.max_second_moment = *cap;
  if (j.contains("second_moments")) p.second_moments = j.at("second_moments").get<std::vector<double>>();
  return make_schedule(p);
}

Complex sample_theta_nu(double nu, RngStream& rng) {
  if (!(nu > 1.0)) throw DomainError("sample_theta_nu: nu must exceed 1");
  const double u = rng.uniform_open();
  const double phase = rng.angle();
  // 1 - |alpha|^2 = U^{2/(nu-1)}
  const double modulus2 = -std::expm1(std::log(u) * 2.0 / (nu - 1.0));
  const double modulus = std::min(std::sqrt(modulus2), kModulusCap);
  return std::polar(modulus, phase);
}

Complex sample_coefficient(const DecaySchedule& schedule, std::size_t k, RngStream& rng) {
  if (schedule.law == CoefficientLaw::theta_nu) {
    return sample_theta_nu(schedule.theta_parameter(k), rng);
  }
  const double modulus = std::sqrt(schedule.second_moment(k));
  return std::polar(modulus, rng.angle());
}

CoefficientSequence sample_sequence(const DecaySchedule& schedule, std::size_t n, RngStream& rng) {
  if (n < 1) throw DomainError("sample_sequence: n must be at least 1");
  CoefficientSequence seq;
  seq.n = n;
  seq.eta = rng.angle();
  seq.alphas.resize(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) seq.alphas[k] = sample_coefficient(schedule, k, rng);
  return seq;
}

double theta_log_moment(double nu, double p) {
  if (!(nu > 1.0)) throw DomainError("theta_log_moment: nu must exceed 1");
  return std::tgamma(p + 1.0) * std::pow(2.0 / (nu - 1.0), p);
}

double theta_negative_moment(double nu, double s) {
  if (!(nu > 1.0)) throw DomainError("theta_negative_moment: nu must exceed 1");
  if (nu - 1.0 <= 2.0 * s) return std::numeric_limits<double>::infinity();
  return (nu - 1.0) / (nu - 1.0 - 2.0 * s);
}

double radial_moment_quadrature(const DecaySchedule& schedule, std::size_t k,
                                const std::function<double(double)>& g, double* error_estimate) {
  if (schedule.law == CoefficientLaw::fixed_modulus_uniform_phase) {
    if (error_estimate) *error_estimate = 0.0;
    return g(-std::log1p(-schedule.second_moment(k)));
  }
  // t = log[1/(1-|alpha|^2)] is exponential with rate (nu-1)/2.
  const double rate = 0.5 * (schedule.theta_parameter(k) - 1.0);
  return integrate_to_infinity(
      [&](double t) {
        const double w = rate * std::exp(-rate * t);
        return w > 0.0 ? g(t) * w : 0.0;
      },
      0.0, error_estimate);
}

namespace {

// Least-squares slope of log y against log(k+1) over a geometric grid in
// [k_max/16, k_max]. Returns -infinity when y vanishes on the whole tail.
double tail_slope(const std::vector<double>& y, std::size_t k_max) {
  const std::size_t k_lo = std::max<std::size_t>(1, k_max / 16);
  std::vector<double> lx, ly;
  bool all_zero = true;
  for (double kk = static_cast<double>(k_lo); kk <= static_cast<double>(k_max) + 0.5; kk *= 1.25) {
    const auto k = static_cast<std::size_t>(kk);
    if (y[k] > 1e-300) {
      all_zero = false;
      lx.push_back(std::log(static_cast<double>(k) + 1.0));
      ly.push_back(std::log(y[k]));
    }
    if (kk * 1.25 > static_cast<double>(k_max) && k != k_max && y[k_max] > 1e-300) {
      lx.push_back(std::log(static_cast<double>(k_max) + 1.0));
      ly.push_back(std::log(y[k_max]));
      break;
    }
  }
  if (all_zero || lx.size() < 2) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return 0.0;
  return (n * sxy - sx * sy) / den;
}

constexpr double kSlopeMargin = 0.05;

}  // namespace

nlohmann::json ScheduleDiagnostics::to_json() const {
  nlohmann::json j;
  j["k_max"] = k_max;
  j["s0"] = s0;
  j["method"] = method == MomentMethod::closed_form ? "closed_form" : "quadrature";
  j["quadrature_tolerance"] = quadrature_tolerance;
  j["second_moment"] = second_moment;
  j["log2_moment"] = log2_moment;
  j["log32_moment"] = log32_moment;
  j["log1_moment"] = log1_moment;
  j["negative_moment"] = negative_moment;
  j["hypotheses"] = {{"clock", clock_hypotheses},
                     {"cbe", cbe_hypotheses},
                     {"poisson", poisson_hypotheses},
                     {"beta_effective", beta_effective},
                     {"epsilon_effective", epsilon_effective}};
  j["summary"] = summary;
  return j;
}

ScheduleDiagnostics validate_schedule(const DecaySchedule& schedule, std::size_t k_max, double s0,
                                      bool force_quadrature) {
  if (k_max < 1) throw ConfigError("validate_schedule: k_max must be at least 1");
  ScheduleDiagnostics d;
  d.k_max = k_max;
  d.s0 = s0;
  d.method = force_quadrature ? MomentMethod::quadrature : MomentMethod::closed_form;
  const std::size_t count = k_max + 1;
  d.second_moment.resize(count);
  d.log2_moment.resize(count);
  d.log32_moment.resize(count);
  d.log1_moment.resize(count);
  d.negative_moment.resize(count);

  for (std::size_t k = 0; k < count; ++k) {
    const double m = schedule.second_moment(k);
    d.second_moment[k] = m;
    if (force_quadrature) {
      double e1 = 0, e2 = 0, e3 = 0, e4 = 0;
      d.log1_moment[k] = radial_moment_quadrature(schedule, k, [](double t) { return t; }, &e1);
      d.log2_moment[k] = radial_moment_quadrature(schedule, k, [](double t) { return t * t; }, &e2);
      d.log32_moment[k] =
          radial_moment_quadrature(schedule, k, [](double t) { return std::pow(t, 1.5); }, &e3);
      const bool finite = schedule.law != CoefficientLaw::theta_nu ||
                          schedule.theta_parameter(k) - 1.0 > 2.0 * s0;
      d.negative_moment[k] =
          finite ? radial_moment_quadrature(schedule, k, [s0](double t) { return std::exp(s0 * t); }, &e4)
                 : std::numeric_limits<double>::infinity();
      d.quadrature_tolerance = std::max({d.quadrature_tolerance, e1, e2, e3, e4});
    } else if (schedule.law == CoefficientLaw::theta_nu) {
      const double nu = schedule.theta_parameter(k);
      d.log1_moment[k] = theta_log_moment(nu, 1.0);
      d.log2_moment[k] = theta_log_moment(nu, 2.0);
      d.log32_moment[k] = theta_log_moment(nu, 1.5);
      d.negative_moment[k] = theta_negative_moment(nu, s0);
    } else {
      const double t = -std::log1p(-m);
      d.log1_moment[k] = t;
      d.log2_moment[k] = t * t;
      d.log32_moment[k] = std::pow(t, 1.5);
      d.negative_moment[k] = std::pow(1.0 - m, -s0);
    }
  }

  std::vector<double> k_m(count), cbe_dev(count), k_log2(count);
  d.beta_effective = schedule.beta ? *schedule.beta
                                   : (d.second_moment[k_max] > 0.0
                                          ? 2.0 / ((static_cast<double>(k_max) + 1.0) * d.second_moment[k_max])
                                          : std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < count; ++k) {
    const double k1 = static_cast<double>(k) + 1.0;
    k_m[k] = k1 * d.second_moment[k];
    cbe_dev[k] = std::isfinite(d.beta_effective)
                     ? k1 * std::abs(d.second_moment[k] - 2.0 / (d.beta_effective * k1))
                     : k_m[k];
    k_log2[k] = k1 * d.log2_moment[k];
  }

  const double clock_slope = tail_slope(k_m, k_max);
  d.clock_hypotheses = clock_slope < -kSlopeMargin;
  // a fitted beta makes the deviation vanish at k_max by construction, so it only counts when beta is given
  const bool dev_ok = !schedule.beta || tail_slope(cbe_dev, k_max) < -kSlopeMargin;
  d.cbe_hypotheses = !d.clock_hypotheses && std::abs(clock_slope) <= kSlopeMargin &&
                     std::isfinite(d.beta_effective) && dev_ok && tail_slope(k_log2, k_max) < -kSlopeMargin;
  const double m_slope = tail_slope(d.second_moment, k_max);
  d.epsilon_effective = std::isfinite(m_slope) ? 1.0 + m_slope : 0.0;
  const bool negative_bounded =
      std::isfinite(d.negative_moment[k_max]) && tail_slope(d.negative_moment, k_max) <= kSlopeMargin;
  d.poisson_hypotheses = clock_slope > kSlopeMargin && negative_bounded;

  std::ostringstream out;
  out << "regime " << to_string(schedule.regime) << " (" << to_string(schedule.law) << "): ";
  if (k_max < 16) out << "k_max < 16, classification indeterminate; ";
  out << (d.clock_hypotheses ? "clock" : d.cbe_hypotheses ? "CbE" : d.poisson_hypotheses ? "Poisson" : "none");
  d.summary = out.str();
  return d;
}

}  // namespace cmvlab
