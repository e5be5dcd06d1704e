#include "cmvlab/localization.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "cmvlab/cmv_core.hpp"
#include "cmvlab/errors.hpp"
#include "cmvlab/prufer_phase.hpp"

namespace cmvlab {

Mat2 Mat2::operator*(const Mat2& o) const {
  return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
}

Mat2& Mat2::operator*=(double s) {
  a *= s;
  b *= s;
  c *= s;
  d *= s;
  return *this;
}

double Mat2::frobenius2() const { return std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d); }

double Mat2::norm() const {
  const double f = frobenius2();
  const double dt = std::norm(det());
  const double disc = std::max(0.0, f * f - 4.0 * dt);
  return std::sqrt(0.5 * (f + std::sqrt(disc)));
}

double Mat2::apply_norm(Complex x, Complex y) const {
  return std::sqrt(std::norm(a * x + b * y) + std::norm(c * x + d * y));
}

TransferMatrix transfer_matrix(Complex alpha, Complex z) {
  if (!(std::abs(alpha) < 1.0)) throw DomainError("transfer_matrix: |alpha| must be < 1");
  const double inv_rho = 1.0 / std::sqrt(1.0 - std::norm(alpha));
  Mat2 m{z, -std::conj(alpha), -alpha * z, 1.0};
  m *= inv_rho;
  return m;
}

Mat2 transfer_product(std::span<const Complex> alphas, Complex z, std::size_t k, std::size_t l) {
  if (l < k || l > alphas.size()) throw DomainError("transfer_product: need k <= l <= alphas.size()");
  Mat2 t = Mat2::identity();
  for (std::size_t j = k; j < l; ++j) t = transfer_matrix(alphas[j], z) * t;
  return t;
}

std::vector<double> product_log_norms(std::span<const Complex> alphas, Complex z, std::size_t k,
                                      std::span<const std::size_t> marks, std::size_t renormalize_every) {
  if (renormalize_every < 1) throw DomainError("product_log_norms: renormalize_every must be >= 1");
  std::vector<double> out;
  out.reserve(marks.size());
  Mat2 t = Mat2::identity();
  double log_scale = 0.0;
  std::size_t j = k;
  for (std::size_t mark : marks) {
    if (mark < j || mark > alphas.size()) throw DomainError("product_log_norms: marks must ascend within range");
    for (; j < mark; ++j) {
      t = transfer_matrix(alphas[j], z) * t;
      if ((j - k + 1) % renormalize_every == 0) {
        const double nrm = t.norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericError("transfer product overflow");
        t *= 1.0 / nrm;
        log_scale += std::log(nrm);
      }
    }
    out.push_back(log_scale + std::log(t.norm()));
  }
  return out;
}

double product_log_norm(std::span<const Complex> alphas, Complex z, std::size_t k, std::size_t l,
                        std::size_t renormalize_every) {
  const std::size_t marks[] = {l};
  return product_log_norms(alphas, z, k, marks, renormalize_every).front();
}

namespace {

double sum_moments(const DecaySchedule& schedule, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t j = from; j < to; ++j) s += schedule.second_moment(j);
  return s;
}

struct TrialValues {
  std::vector<double> values;
  std::size_t aborted = 0;
};

// Runs `f(alphas)` per trial with alphas_0..alphas_{len-1} drawn from the schedule.
template <class F>
TrialValues run_trials(const DecaySchedule& schedule, std::size_t len, std::size_t trials,
                       const RngStream& rng, F f) {
  std::vector<double> raw(trials);
  std::vector<char> ok(trials, 1);
  parallel_for(trials, [&](std::size_t t) {
    RngStream r = rng.substream(t);
    std::vector<Complex> alphas(len);
    for (std::size_t j = 0; j < len; ++j) alphas[j] = sample_coefficient(schedule, j, r);
    try {
      raw[t] = f(alphas);
      if (!std::isfinite(raw[t])) ok[t] = 0;
    } catch (const NumericError&) {
      ok[t] = 0;
    }
  });
  TrialValues out;
  for (std::size_t t = 0; t < trials; ++t) {
    if (ok[t]) {
      out.values.push_back(raw[t]);
    } else {
      ++out.aborted;
    }
  }
  return out;
}

void fill_estimate(MomentReport& rep, const TrialValues& tv) {
  rep.aborted = tv.aborted;
  const MeanEstimate m = estimate_mean(tv.values);
  rep.empirical = m.mean;
  rep.std_error = m.std_error;
}

void check_moment_args(Complex z, double s, std::size_t trials) {
  if (std::abs(std::abs(z) - 1.0) > 1e-12) throw DomainError("moment check: |z| must be 1");
  if (!(s > 0.0 && s <= 1.0)) throw DomainError("moment check: s must lie in (0, 1]");
  if (trials < 2) throw DomainError("moment check: need at least two trials");
}

}  // namespace

MomentReport product_norm_samples(const DecaySchedule& schedule, Complex z, std::size_t k,
                                  std::size_t l, double s, std::size_t trials, const RngStream& rng) {
  check_moment_args(z, s, trials);
  if (l < k) throw DomainError("product_norm_samples: need k <= l");
  MomentReport rep;
  rep.s = s;
  rep.k = k;
  rep.l = l;
  rep.r = l;
  rep.trials = trials;
  rep.bound = std::exp(-(s / 4.0) * sum_moments(schedule, k, l));
  rep.bound_as_printed = rep.bound;
  fill_estimate(rep, run_trials(schedule, l, trials, rng, [&](const std::vector<Complex>& a) {
                  return std::exp(-s * product_log_norm(a, z, k, l));
                }));
  return rep;
}

MomentReport ratio_moment_samples(const DecaySchedule& schedule, Complex z, std::size_t k,
                                  std::size_t l, std::size_t r, double s, std::size_t trials,
                                  const RngStream& rng) {
  check_moment_args(z, s, trials);
  if (!(k <= l && l <= r)) throw DomainError("ratio_moment_samples: need k <= l <= r");
  MomentReport rep;
  rep.s = s;
  rep.k = k;
  rep.l = l;
  rep.r = r;
  rep.ratio = true;
  rep.trials = trials;
  rep.bound = std::exp(-(s / 4.0) * sum_moments(schedule, l, r));
  rep.bound_as_printed = std::exp(-(s / 4.0) * sum_moments(schedule, k, r));
  const std::size_t marks[] = {l, r};
  fill_estimate(rep, run_trials(schedule, r, trials, rng, [&](const std::vector<Complex>& a) {
                  const auto logs = product_log_norms(a, z, k, marks);
                  return std::exp(s * (logs[0] - logs[1]));
                }));
  return rep;
}

double lemma_a_integral(double r, double R, std::size_t nodes) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("lemma_a_integral: r must lie in [0, 1)");
  if (!(R >= 0.0 && R <= 1.0)) throw DomainError("lemma_a_integral: R must lie in [0, 1]");
  const double num = std::sqrt(1.0 - r * r);
  return periodic_mean([&](double th) { return num / std::sqrt(1.0 - 2.0 * R * r * std::cos(th) + r * r); },
                       nodes);
}

MeanEstimate lemma_a_monte_carlo(double r, Complex vx, Complex vy, Complex z, std::size_t samples,
                                 RngStream& rng) {
  const double len = std::sqrt(std::norm(vx) + std::norm(vy));
  if (!(len > 0.0)) throw DomainError("lemma_a_monte_carlo: v must be nonzero");
  std::vector<double> values(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const Mat2 a = transfer_matrix(std::polar(r, rng.angle()), z);
    values[i] = len / a.apply_norm(vx, vy);
  }
  return estimate_mean(values);
}

MinamiReport minami_check(const DecaySchedule& schedule, std::size_t N, double L, std::size_t trials,
                          const RngStream& rng) {
  if (!(L >= 0.0 && L <= 0.5)) throw DomainError("minami_check: L must lie in [0, 1/2]");
  if (N < 1 || trials < 1) throw DomainError("minami_check: need N >= 1 and trials >= 1");
  MinamiReport rep;
  rep.N = N;
  rep.L = L;
  rep.trials = trials;
  const double nn = static_cast<double>(N);
  rep.bound = 0.5 * L * L * nn * nn;
  std::vector<double> hit(trials);
  const Interval arc{0.0, kTwoPi * L};
  parallel_for(trials, [&](std::size_t t) {
    RngStream r = rng.substream(t);
    const RelativePhaseState st = sample_phase_state(schedule, N, r);
    hit[t] = L > 0.0 && count_in_arc(st, arc) >= 2 ? 1.0 : 0.0;
  });
  const MeanEstimate m = estimate_mean(hit);
  rep.probability = m.mean;
  rep.std_error = m.std_error;
  return rep;
}

double kolmogorov_bound(double s) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("kolmogorov_bound: s must lie in (0, 1)");
  return std::pow(2.0, 2.0 - s) / std::cos(s * kPi / 2.0);
}

double distance_to_spectrum(const CoefficientSequence& seq, Complex z) {
  const SpectrumSample sp = locate_eigenvalues(rotate_to_gamma(seq));
  double best = INFINITY;
  for (double a : sp.angles) best = std::min(best, std::abs(z - std::polar(1.0, a)));
  return best;
}

Eigen::MatrixXcd resolvent(const CoefficientSequence& seq, Complex z, double min_distance) {
  const double dist = distance_to_spectrum(seq, z);
  if (dist < min_distance) {
    throw NumericError("resolvent: z is within " + std::to_string(dist) + " of the spectrum");
  }
  const DenseUnitary u = build_truncation(seq);
  const auto n = u.entries.rows();
  const Eigen::MatrixXcd shifted = u.entries - z * Eigen::MatrixXcd::Identity(n, n);
  return shifted.partialPivLu().inverse();
}

Complex resolvent_entry(const CoefficientSequence& seq, Complex z, std::size_t k, std::size_t l,
                        double min_distance) {
  if (k >= seq.n || l >= seq.n) throw DomainError("resolvent_entry: index out of range");
  return resolvent(seq, z, min_distance)(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
}

DecayProfile resolvent_decay_profile(const DecaySchedule& schedule, std::size_t n, std::size_t k0,
                                     std::span<const std::size_t> separations, double s,
                                     std::size_t trials, const RngStream& rng, std::size_t batches) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("resolvent_decay_profile: s must lie in (0, 1)");
  for (std::size_t d : separations) {
    if (k0 + d >= n) throw DomainError("resolvent_decay_profile: separation exceeds matrix size");
  }
  if (batches < 1 || batches > trials) throw DomainError("resolvent_decay_profile: bad batch count");
  const std::size_t m = separations.size();
  std::vector<std::vector<double>> values(trials, std::vector<double>(m, 0.0));
  std::vector<char> ok(trials, 1);
  parallel_for(trials, [&](std::size_t t) {
    RngStream r = rng.substream(t);
    const CoefficientSequence seq = sample_sequence(schedule, n, r);
    const Complex z = std::polar(1.0, r.angle());
    try {
      const Eigen::MatrixXcd g = resolvent(seq, z);
      for (std::size_t i = 0; i < m; ++i) {
        values[t][i] = std::pow(std::abs(g(static_cast<Eigen::Index>(k0),
                                           static_cast<Eigen::Index>(k0 + separations[i]))),
                                s);
      }
    } catch (const NumericError&) {
      ok[t] = 0;
    }
  });
  DecayProfile prof;
  prof.n = n;
  prof.k0 = k0;
  prof.s = s;
  prof.trials = trials;
  std::vector<std::size_t> good;
  for (std::size_t t = 0; t < trials; ++t) {
    if (ok[t]) {
      good.push_back(t);
    } else {
      ++prof.failures;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> col;
    col.reserve(good.size());
    for (std::size_t t : good) col.push_back(values[t][i]);
    DecayPoint p;
    p.separation = separations[i];
    const MeanEstimate e = estimate_mean(col);
    p.value = e.mean;
    p.std_error = e.std_error;
    p.bound = kolmogorov_bound(s);
    std::vector<double> logs;
    const std::size_t per = col.size() / batches;
    for (std::size_t b = 0; b < batches && per > 0; ++b) {
      const std::span<const double> chunk(col.data() + b * per, per);
      logs.push_back(std::log(pairwise_sum(chunk) / static_cast<double>(per)));
    }
    std::sort(logs.begin(), logs.end());
    if (!logs.empty()) {
      const std::size_t h = logs.size() / 2;
      p.median_log_batch = logs.size() % 2 ? logs[h] : 0.5 * (logs[h - 1] + logs[h]);
    }
    prof.points.push_back(p);
  }
  return prof;
}

}  // namespace cmvlab
