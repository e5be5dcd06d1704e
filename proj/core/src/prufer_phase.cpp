#include "cmvlab/prufer_phase.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cmvlab/errors.hpp"

namespace cmvlab {

namespace {

constexpr std::size_t kRenormalizeEvery = 32;
constexpr int kMaxNewtonIterations = 100;
constexpr int kMaxGridRetries = 3;

}  // namespace

void RelativePhaseState::validate() const {
  if (n < 1) throw DomainError("RelativePhaseState: n must be positive");
  if (gammas.size() != n - 1) throw DomainError("RelativePhaseState: expected n-1 coefficients");
  for (const Complex& g : gammas) {
    if (!(std::abs(g) < 1.0)) throw DomainError("RelativePhaseState: |gamma| >= 1");
  }
}

double upsilon(double psi, Complex gamma) {
  if (!(std::abs(gamma) < 1.0)) throw DomainError("upsilon: |gamma| must be < 1");
  const Complex w = 1.0 - gamma * std::polar(1.0, psi);
  return 2.0 * (std::arg(1.0 - gamma) - std::arg(w));
}

double upsilon_series(double psi, Complex gamma, std::size_t terms) {
  double sum = 0.0;
  Complex power = 1.0;
  for (std::size_t l = 1; l <= terms; ++l) {
    power *= gamma;
    const double dl = static_cast<double>(l);
    sum += (2.0 / dl) * ((std::polar(1.0, dl * psi) - 1.0) * power).imag();
  }
  return sum;
}

std::vector<Complex> blaschke_at_one(const CoefficientSequence& seq, double denominator_tolerance) {
  seq.validate();
  std::vector<Complex> b(seq.n);
  b[0] = 1.0;
  for (std::size_t k = 0; k + 1 < seq.n; ++k) {
    const Complex a = seq.alphas[k];
    const Complex den = 1.0 - a * b[k];
    if (std::abs(den) < denominator_tolerance) {
      throw NumericError("rotate_to_gamma: vanishing denominator at k = " + std::to_string(k));
    }
    Complex next = b[k] * (1.0 - std::conj(a) * std::conj(b[k])) / den;
    b[k + 1] = next / std::abs(next);
  }
  return b;
}

RelativePhaseState rotate_to_gamma(const CoefficientSequence& seq, double denominator_tolerance) {
  const std::vector<Complex> b = blaschke_at_one(seq, denominator_tolerance);
  RelativePhaseState state;
  state.n = seq.n;
  state.gammas.resize(seq.n - 1);
  for (std::size_t k = 0; k + 1 < seq.n; ++k) state.gammas[k] = b[k] * seq.alphas[k];
  // e^{-i omega} = B_{n-1}(1) e^{i eta}
  state.omega = wrap_positive(-(std::arg(b[seq.n - 1]) + seq.eta));
  return state;
}

RelativePhaseState sample_phase_state(const DecaySchedule& schedule, std::size_t n, RngStream& rng) {
  if (n < 1) throw DomainError("sample_phase_state: n must be at least 1");
  RelativePhaseState state;
  state.n = n;
  state.omega = rng.angle();
  state.gammas.resize(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) state.gammas[k] = sample_coefficient(schedule, k, rng);
  return state;
}

PhaseTrajectory relative_phase(const RelativePhaseState& state, double theta) {
  PhaseTrajectory t;
  t.theta = theta;
  t.values.resize(state.n);
  double psi = theta;
  t.values[0] = psi;
  for (std::size_t k = 0; k + 1 < state.n; ++k) {
    psi = psi + theta + upsilon(psi, state.gammas[k]);
    t.values[k + 1] = psi;
  }
  return t;
}

PhaseEvaluator::PhaseEvaluator(const RelativePhaseState& state)
    : n_(state.n), omega_(state.omega), gammas_(state.gammas) {
  state.validate();
  rot_.resize(gammas_.size());
  arg_base_.resize(gammas_.size());
  for (std::size_t k = 0; k < gammas_.size(); ++k) {
    const Complex c = 1.0 - gammas_[k];
    const Complex unit = c / std::abs(c);
    rot_[k] = unit * unit;
    arg_base_[k] = std::arg(c);
  }
}

PhaseValue PhaseEvaluator::operator()(double theta) const {
  // u = e^{i psi_k} is carried alongside psi_k:
  // e^{i Upsilon} = ((1-gamma)/|1-gamma|)^2 conj(w)^2/|w|^2 with w = 1 - gamma u.
  const Complex step = std::polar(1.0, theta);
  Complex u = step;
  double psi = theta;
  double deriv = 1.0;
  const std::size_t m = gammas_.size();
  // psi_k(0) = 0 for every k; carrying u would only add rounding drift
  const bool at_zero = theta == 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const Complex w = 1.0 - gammas_[k] * u;
    const double w2 = std::norm(w);
    deriv = deriv * (2.0 * w.real() / w2 - 1.0) + 1.0;
    if (at_zero) continue;
    psi += theta + 2.0 * (arg_base_[k] - std::atan2(w.imag(), w.real()));
    const Complex cw = std::conj(w);
    u = u * step * rot_[k] * (cw * cw) / w2;
    if ((k + 1) % kRenormalizeEvery == 0) u /= std::abs(u);
  }
  return {psi, deriv};
}

double PhaseEvaluator::value(double theta) const { return (*this)(theta).value; }

namespace {

struct RootFailure {};

// Root of psi(theta) = level on [a, b] with psi(a) <= level <= psi(b).
double polish_root(const PhaseEvaluator& phase, double a, double b, double fa, double fb,
                   double level, double tol) {
  double lo = a;
  double hi = b;
  double flo = fa - level;
  double fhi = fb - level;
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  double x = lo + (hi - lo) * (-flo) / (fhi - flo);
  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    const PhaseValue v = phase(x);
    const double f = v.value - level;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = x - f / v.derivative;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double dx = std::abs(next - x);
    x = next;
    if (dx < tol || hi - lo < tol) return x;
  }
  throw RootFailure{};
}

// Roots of psi = levels on [a, b]; levels sorted ascending and inside [psi(a), psi(b)].
std::vector<double> solve_levels(const PhaseEvaluator& phase, double a, double b, double psi_a,
                                 double psi_b, const std::vector<double>& levels, double tol) {
  std::vector<double> roots;
  if (levels.empty()) return roots;
  for (int attempt = 0; attempt <= kMaxGridRetries; ++attempt) {
    const std::size_t cells = (4 * levels.size()) << attempt;
    std::vector<double> grid(cells + 1);
    std::vector<double> values(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) {
      grid[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(cells);
    }
    grid[cells] = b;
    values[0] = psi_a;
    values[cells] = psi_b;
    for (std::size_t i = 1; i < cells; ++i) values[i] = phase.value(grid[i]);
    try {
      roots.clear();
      for (double level : levels) {
        auto it = std::lower_bound(values.begin(), values.end(), level);
        std::size_t j = static_cast<std::size_t>(it - values.begin());
        if (j == 0) {
          roots.push_back(grid[0]);
          continue;
        }
        if (j > cells) {
          roots.push_back(grid[cells]);
          continue;
        }
        roots.push_back(polish_root(phase, grid[j - 1], grid[j], values[j - 1], values[j], level, tol));
      }
      return roots;
    } catch (const RootFailure&) {
    }
  }
  throw NumericError("locate_eigenvalues: root refinement failed after grid retries");
}

}  // namespace

SpectrumSample locate_eigenvalues(const RelativePhaseState& state, double tol) {
  if (!(tol > 0.0)) throw DomainError("locate_eigenvalues: tol must be positive");
  const PhaseEvaluator phase(state);
  const double n = static_cast<double>(state.n);
  const double psi_lo = phase.value(-kPi);
  // psi(pi) - psi(-pi) = 2 pi n exactly, since Upsilon(pi, .) = Upsilon(-pi, .).
  const double psi_hi = psi_lo + kTwoPi * n;
  // levels omega + 2 pi m in (psi_lo, psi_hi]
  const double m0 = std::floor((psi_lo - state.omega) / kTwoPi) + 1.0;
  std::vector<double> levels(state.n);
  for (std::size_t j = 0; j < state.n; ++j) {
    levels[j] = state.omega + kTwoPi * (m0 + static_cast<double>(j));
  }
  if (levels.front() <= psi_lo) {
    // rounding placed the first level on the excluded end; shift by one.
    for (double& l : levels) l += kTwoPi;
  }
  SpectrumSample out;
  out.n = state.n;
  out.angles = solve_levels(phase, -kPi, kPi, psi_lo, psi_hi, levels, tol);
  if (out.angles.size() != state.n) throw NumericError("locate_eigenvalues: wrong number of roots");
  for (double& a : out.angles) {
    if (a <= -kPi) a = kPi;
  }
  std::sort(out.angles.begin(), out.angles.end());
  return out;
}

std::vector<double> locate_eigenvalues_in(const RelativePhaseState& state, Interval arc, double tol) {
  if (!(tol > 0.0)) throw DomainError("locate_eigenvalues_in: tol must be positive");
  if (!(arc.lo >= -kPi && arc.lo < arc.hi && arc.hi <= kPi)) {
    throw DomainError("locate_eigenvalues_in: arc must satisfy -pi <= a < b <= pi");
  }
  const PhaseEvaluator phase(state);
  const double psi_a = phase.value(arc.lo);
  const double psi_b = phase.value(arc.hi);
  // levels in [psi_a, psi_b)
  const double m_first = std::ceil((psi_a - state.omega) / kTwoPi);
  const double m_end = std::ceil((psi_b - state.omega) / kTwoPi);
  std::vector<double> levels;
  for (double m = m_first; m < m_end; m += 1.0) levels.push_back(state.omega + kTwoPi * m);
  std::vector<double> roots = solve_levels(phase, arc.lo, arc.hi, psi_a, psi_b, levels, tol);
  std::sort(roots.begin(), roots.end());
  return roots;
}

long count_in_arc(const PhaseEvaluator& phase, Interval arc) {
  if (!(arc.lo >= -kPi && arc.lo <= arc.hi && arc.hi <= kPi)) {
    throw DomainError("count_in_arc: arc must satisfy -pi <= a <= b <= pi");
  }
  const double w = phase.omega();
  const double hi = std::ceil((phase.value(arc.hi) - w) / kTwoPi);
  const double lo = std::ceil((phase.value(arc.lo) - w) / kTwoPi);
  return static_cast<long>(hi - lo);
}

long count_in_arc(const RelativePhaseState& state, Interval arc) {
  return count_in_arc(PhaseEvaluator(state), arc);
}

double phase_derivative_at_zero(const RelativePhaseState& state) {
  state.validate();
  double d = 1.0;
  for (const Complex& g : state.gammas) {
    d = d * ((1.0 + g) / (1.0 - g)).real() + 1.0;
  }
  return d;
}

void write_spectrum_csv(std::span<const SpectrumSample> samples, std::ostream& out) {
  if (!samples.empty()) {
    const SpectrumSample& s = samples.front();
    out << "# n=" << s.n << " regime=" << s.meta.regime << " seed=" << s.meta.seed << '\n';
  }
  out << "trial,j,theta_j\n";
  out.precision(17);
  for (std::size_t t = 0; t < samples.size(); ++t) {
    for (std::size_t j = 0; j < samples[t].angles.size(); ++j) {
      out << t << ',' << j << ',' << samples[t].angles[j] << '\n';
    }
  }
}

}  // namespace cmvlab
