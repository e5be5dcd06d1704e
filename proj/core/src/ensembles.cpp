#include "cmvlab/ensembles.hpp"

#include <cmath>
#include <limits>

#include "cmvlab/coeff_sampling.hpp"
#include "cmvlab/errors.hpp"
#include "cmvlab/prufer_phase.hpp"

namespace cmvlab {

SpectrumSample sample_cbe(double beta, std::size_t n, RngStream& rng, double tol) {
  if (!(beta > 0.0)) throw DomainError("sample_cbe: beta must be positive");
  if (n < 1) throw DomainError("sample_cbe: n must be at least 1");
  const RelativePhaseState state = sample_phase_state(critical_schedule(beta), n, rng);
  SpectrumSample s = locate_eigenvalues(state, tol);
  s.meta.seed = rng.seed();
  s.meta.stream = rng.stream_index();
  s.meta.regime = "cbe";
  s.meta.beta = beta;
  return s;
}

std::vector<double> sample_cbe_in(double beta, std::size_t n, Interval arc, RngStream& rng, double tol) {
  if (!(beta > 0.0)) throw DomainError("sample_cbe_in: beta must be positive");
  const RelativePhaseState state = sample_phase_state(critical_schedule(beta), n, rng);
  return locate_eigenvalues_in(state, arc, tol);
}

double log_partition_function(std::size_t n, double beta) {
  if (n < 1) throw DomainError("partition_function: n must be at least 1");
  if (!(beta >= 0.0)) throw DomainError("partition_function: beta must be non-negative");
  const double nn = static_cast<double>(n);
  return std::lgamma(beta * nn / 2.0 + 1.0) - nn * std::lgamma(beta / 2.0 + 1.0);
}

double partition_function(std::size_t n, double beta) {
  return std::exp(log_partition_function(n, beta));
}

double cbe_log_density(double beta, std::span<const double> angles) {
  const std::size_t n = angles.size();
  if (n < 1) throw DomainError("cbe_log_density: need at least one angle");
  double interaction = 0.0;
  if (beta != 0.0) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const double d = std::abs(std::polar(1.0, angles[j]) - std::polar(1.0, angles[k]));
        if (d == 0.0) return -std::numeric_limits<double>::infinity();
        interaction += std::log(d);
      }
    }
  }
  return beta * interaction - log_partition_function(n, beta) -
         static_cast<double>(n) * std::log(kTwoPi);
}

MeanEstimate partition_function_mc(std::size_t n, double beta, std::size_t draws, RngStream& rng) {
  std::vector<double> values(draws);
  std::vector<double> theta(n);
  for (std::size_t d = 0; d < draws; ++d) {
    for (double& t : theta) t = rng.angle();
    double log_prod = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        log_prod += std::log(std::abs(std::polar(1.0, theta[j]) - std::polar(1.0, theta[k])));
      }
    }
    values[d] = std::exp(beta * log_prod);
  }
  return estimate_mean(values);
}

CbeTwoPointGap::CbeTwoPointGap(double beta) : beta_(beta), norm_(1.0) {
  if (!(beta >= 0.0)) throw DomainError("CbeTwoPointGap: beta must be non-negative");
  const double total =
      integrate([beta](double g) { return std::pow(2.0 - 2.0 * std::cos(g), beta / 2.0); }, 0.0, kTwoPi);
  norm_ = 1.0 / total;
}

double CbeTwoPointGap::operator()(double g) const {
  if (g <= 0.0 || g >= kTwoPi) return 0.0;
  return norm_ * std::pow(2.0 - 2.0 * std::cos(g), beta_ / 2.0);
}

double CbeTwoPointGap::bin_average(double lo, double hi) const {
  return integrate([this](double g) { return (*this)(g); }, lo, hi) / (hi - lo);
}

PointConfiguration sample_reference(ReferenceKind kind, Interval window, RngStream& rng) {
  if (!(std::isfinite(window.lo) && std::isfinite(window.hi) && window.lo <= window.hi)) {
    throw DomainError("sample_reference: window must be finite");
  }
  PointConfiguration c;
  c.window = window;
  if (kind == ReferenceKind::clock) {
    const double x = rng.angle();
    const double k_first = std::ceil((window.lo - x) / kTwoPi);
    for (double k = k_first;; k += 1.0) {
      const double p = kTwoPi * k + x;
      if (p >= window.hi) break;
      if (p >= window.lo) c.points.push_back(p);
    }
    return c;
  }
  double p = window.lo;
  while (true) {
    p += -kTwoPi * std::log(rng.uniform_open());
    if (p >= window.hi) break;
    c.points.push_back(p);
  }
  return c;
}

}  // namespace cmvlab
