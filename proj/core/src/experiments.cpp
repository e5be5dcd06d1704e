#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cmvlab/cmv_core.hpp"
#include "cmvlab/ensembles.hpp"
#include "cmvlab/errors.hpp"
#include "cmvlab/harness.hpp"
#include "cmvlab/localization.hpp"
#include "cmvlab/numeric.hpp"
#include "cmvlab/point_stats.hpp"
#include "cmvlab/prufer_phase.hpp"
#include "cmvlab/sde_limit.hpp"

namespace cmvlab {

namespace {

// Stream indices above this value are reserved for auxiliary draws, so they
// never collide with the per-trial streams (seed, trial_index).
constexpr std::uint64_t kAuxStream = 0xFFFFFFFF00000000ULL;

RngStream trial_stream(const ExperimentConfig& c, std::size_t t) { return RngStream(c.seed, t); }
RngStream aux_stream(const ExperimentConfig& c, std::uint64_t tag) { return RngStream(c.seed, kAuxStream + tag); }

// ---------------------------------------------------------------------------
// parameter access

const nlohmann::json* find_param(const ExperimentConfig& c, const char* key) {
  if (!c.params.contains(key) || c.params.at(key).is_null()) return nullptr;
  return &c.params.at(key);
}

double param(const ExperimentConfig& c, const char* key, double fallback) {
  const auto* v = find_param(c, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(std::string("params.") + key + " must be a number");
  return v->get<double>();
}

std::size_t param_count(const ExperimentConfig& c, const char* key, std::size_t fallback) {
  const auto* v = find_param(c, key);
  if (!v) return fallback;
  if (!v->is_number_integer() || v->get<long long>() < 1) {
    throw ConfigError(std::string("params.") + key + " must be a positive integer");
  }
  return v->get<std::size_t>();
}

bool param_bool(const ExperimentConfig& c, const char* key, bool fallback) {
  const auto* v = find_param(c, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(std::string("params.") + key + " must be a boolean");
  return v->get<bool>();
}

std::vector<double> param_list(const ExperimentConfig& c, const char* key, std::vector<double> fallback) {
  const auto* v = find_param(c, key);
  if (!v) return fallback;
  if (!v->is_array()) throw ConfigError(std::string("params.") + key + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number()) throw ConfigError(std::string("params.") + key + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::string> param_strings(const ExperimentConfig& c, const char* key,
                                       std::vector<std::string> fallback) {
  const auto* v = find_param(c, key);
  if (!v) return fallback;
  if (!v->is_array()) throw ConfigError(std::string("params.") + key + " must be an array of strings");
  return v->get<std::vector<std::string>>();
}

Interval param_interval(const ExperimentConfig& c, const char* key, Interval fallback) {
  const auto* v = find_param(c, key);
  if (!v) return fallback;
  if (!v->is_array() || v->size() != 2) throw ConfigError(std::string("params.") + key + " must be [lo, hi]");
  Interval i{(*v)[0].get<double>(), (*v)[1].get<double>()};
  if (!(i.lo < i.hi)) throw ConfigError(std::string("params.") + key + " must satisfy lo < hi");
  return i;
}

TestFunction param_test_function(const ExperimentConfig& c, const char* key, TestFunction fallback) {
  const auto* v = find_param(c, key);
  if (!v) return fallback;
  if (!v->is_object()) throw ConfigError(std::string("params.") + key + " must be an object");
  TestFunction f = fallback;
  const std::string kind = v->value("kind", std::string("triangle"));
  if (kind == "triangle") {
    f.kind = TestFunctionKind::triangle;
  } else if (kind == "bump") {
    f.kind = TestFunctionKind::bump;
  } else if (kind == "indicator_smooth") {
    f.kind = TestFunctionKind::indicator_smooth;
  } else {
    throw ConfigError("unknown test function kind '" + kind + "'");
  }
  f.center = v->value("center", f.center);
  f.width = v->value("width", f.width);
  f.height = v->value("height", f.height);
  try {
    f.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return f;
}

double core_fraction(const ExperimentConfig& c, double fallback) {
  const double f = param(c, "core_fraction", fallback);
  if (!(f > 0.0 && f <= 1.0)) throw ConfigError("params.core_fraction must lie in (0, 1]");
  return f;
}

const DecaySchedule& require_schedule(const ExperimentConfig& c) {
  if (!c.schedule) throw ConfigError(c.experiment + " requires a schedule");
  return *c.schedule;
}

// ---------------------------------------------------------------------------
// records and series

Record info(std::string name, double value, std::size_t n, std::string claim,
            std::optional<double> se = std::nullopt, std::optional<double> ref = std::nullopt) {
  Record r;
  r.name = std::move(name);
  r.value = value;
  r.n_samples = n;
  r.claim = std::move(claim);
  r.std_error = se;
  r.reference = ref;
  return r;
}

Record check(std::string name, double value, std::optional<double> ref, double tol, bool passed,
             std::size_t n, std::string claim, std::optional<double> se = std::nullopt) {
  Record r = info(std::move(name), value, n, std::move(claim), se, ref);
  r.tolerance = tol;
  r.passed = passed;
  return r;
}

Series histogram_series(std::string name, const std::vector<double>& values, double lo, double hi,
                        std::size_t bins) {
  Series s;
  s.name = std::move(name);
  s.kind = SeriesKind::histogram;
  s.columns = {"bin_left", "bin_right", "count", "density"};
  const Histogram h = make_histogram(values, lo, hi, bins);
  for (std::size_t i = 0; i < bins; ++i) {
    s.rows.push_back({h.bin_left(i), h.bin_left(i) + h.bin_width(), static_cast<double>(h.counts[i]),
                      h.density(i)});
  }
  return s;
}

void note_schedule(const ExperimentConfig& c, Report& rep) {
  if (!c.schedule) return;
  const ScheduleDiagnostics d = validate_schedule(*c.schedule, std::max<std::size_t>(c.n, 16));
  rep.warnings.push_back("schedule diagnostics: " + d.summary);
}

// Evaluates fn(t) for every trial in parallel; NumericError marks the trial failed.
template <class T, class F>
std::vector<std::optional<T>> run_trials(std::size_t trials, F fn, std::size_t& failures) {
  std::vector<std::optional<T>> out(trials);
  parallel_for(trials, [&](std::size_t t) {
    try {
      out[t] = fn(t);
    } catch (const NumericError&) {
      out[t].reset();
    }
  });
  failures = 0;
  for (const auto& o : out) failures += o ? 0 : 1;
  return out;
}

template <class T>
std::vector<T> flatten(const std::vector<std::optional<std::vector<T>>>& parts) {
  std::vector<T> out;
  for (const auto& p : parts) {
    if (p) out.insert(out.end(), p->begin(), p->end());
  }
  return out;
}

// Rescaled core spacings of one realization: eigenvalues in [-pi f, pi f).
std::vector<double> core_spacings(const RelativePhaseState& st, double f, double tol) {
  const Interval arc{-kPi * f, kPi * f};
  const std::vector<double> angles = locate_eigenvalues_in(st, arc, tol);
  return spacing_sample(rescale_arc(angles, st.n, arc), 1.0);
}

// ---------------------------------------------------------------------------
// clock_limit

void run_clock_limit(const ExperimentConfig& c, Report& rep) {
  const DecaySchedule& schedule = require_schedule(c);
  note_schedule(c, rep);
  const double f = core_fraction(c, 0.5);
  const double tol = param(c, "spacing_tolerance", 0.5);
  const double need = param(c, "required_fraction", 0.95);
  const bool doubling = param_bool(c, "doubling", true);
  const double bis = c.tolerances.bisection;

  auto collect = [&](std::size_t n, std::uint64_t tag, std::size_t& failures) {
    return flatten(run_trials<std::vector<double>>(
        c.trials,
        [&](std::size_t t) {
          RngStream r = trial_stream(c, t);
          if (tag) r = r.substream(tag);
          return core_spacings(sample_phase_state(schedule, n, r), f, bis);
        },
        failures));
  };

  std::size_t failures = 0;
  const std::vector<double> gaps = collect(c.n, 0, failures);
  rep.numeric_failures += failures;
  if (gaps.empty()) throw NumericError("clock_limit: no core spacings");
  std::size_t within = 0;
  for (double g : gaps) within += std::abs(g - kTwoPi) <= tol ? 1 : 0;
  const double frac = static_cast<double>(within) / static_cast<double>(gaps.size());
  rep.add(check("core_spacing_fraction_within", frac, need, tol, frac >= need, gaps.size(),
                "clock limit: rescaled spacings concentrate at 2pi"));
  const MeanEstimate m = estimate_mean(gaps);
  rep.add(info("core_spacing_mean", m.mean, gaps.size(), "clock limit: mean spacing 2pi", m.std_error, kTwoPi));
  const double var = sample_variance(gaps);
  rep.add(info("core_spacing_variance", var, gaps.size(), "clock limit: spacing variance at n"));
  if (doubling) {
    const std::vector<double> gaps2 = collect(2 * c.n, 1, failures);
    rep.numeric_failures += failures;
    if (gaps2.size() < 2) throw NumericError("clock_limit: no core spacings at 2n");
    const double var2 = sample_variance(gaps2);
    rep.add(info("core_spacing_variance_doubled", var2, gaps2.size(), "clock limit: spacing variance at 2n"));
    rep.add(check("core_spacing_variance_decreases", var2 < var ? 1.0 : 0.0, 1.0, 0.0, var2 < var,
                  gaps.size() + gaps2.size(), "clock limit: spacings become more rigid as n grows"));
  }
  rep.series.push_back(histogram_series("core_spacings", gaps, 0.0, 2.0 * kTwoPi, 64));
}

// ---------------------------------------------------------------------------
// poisson_limit

void run_poisson_limit(const ExperimentConfig& c, Report& rep) {
  const DecaySchedule& schedule = require_schedule(c);
  note_schedule(c, rep);
  const Interval ia = param_interval(c, "interval_a", {0.0, kTwoPi});
  const Interval ib = param_interval(c, "interval_b", {2.0 * kTwoPi, 3.0 * kTwoPi});
  const double vm_lo = param(c, "variance_to_mean_lo", 0.9);
  const double vm_hi = param(c, "variance_to_mean_hi", 1.1);
  const double tv_max = param(c, "tv_max", 0.05);
  const double corr_max = param(c, "correlation_max", 0.05);
  const TestFunction fn = param_test_function(c, "test_function", {TestFunctionKind::triangle, kPi, kPi, 1.0});
  const double n = static_cast<double>(c.n);
  auto to_arc = [&](Interval i) {
    Interval a{i.lo / n, i.hi / n};
    if (!(a.lo >= -kPi && a.hi <= kPi)) throw ConfigError("poisson_limit: interval leaves the rescaled window");
    return a;
  };
  const Interval arc_a = to_arc(ia);
  const Interval arc_b = to_arc(ib);
  const Interval sup = fn.support();
  const Interval arc_f{std::max(-kPi, sup.lo / n), std::min(kPi, sup.hi / n)};
  if (ia.hi > ib.lo && ib.hi > ia.lo) throw ConfigError("poisson_limit: intervals must be disjoint");

  struct TrialOut {
    long a, b;
    double laplace;
  };
  std::size_t failures = 0;
  const auto outs = run_trials<TrialOut>(
      c.trials,
      [&](std::size_t t) {
        RngStream r = trial_stream(c, t);
        const RelativePhaseState st = sample_phase_state(schedule, c.n, r);
        const PhaseEvaluator ev(st);
        TrialOut o{count_in_arc(ev, arc_a), count_in_arc(ev, arc_b), 1.0};
        const std::vector<double> angles = locate_eigenvalues_in(st, arc_f, c.tolerances.bisection);
        o.laplace = laplace_functional(rescale_arc(angles, c.n, arc_f), fn).value;
        return o;
      },
      failures);
  rep.numeric_failures += failures;
  std::vector<long> ca, cb;
  std::vector<double> da, db, lap, zero;
  for (const auto& o : outs) {
    if (!o) continue;
    ca.push_back(o->a);
    cb.push_back(o->b);
    da.push_back(static_cast<double>(o->a));
    db.push_back(static_cast<double>(o->b));
    lap.push_back(o->laplace);
    zero.push_back(o->a == 0 ? 1.0 : 0.0);
  }
  if (ca.size() < 2) throw NumericError("poisson_limit: too few successful trials");
  const std::size_t used = ca.size();
  const double lambda = ia.length() / kTwoPi;
  const MeanEstimate mean = estimate_mean(da);
  rep.add(info("count_mean", mean.mean, used, "Poisson limit: intensity 1/2pi", mean.std_error, lambda));
  const double vm = sample_variance(da) / mean.mean;
  rep.add(check("count_variance_to_mean", vm, 1.0, vm_hi - 1.0, vm >= vm_lo && vm <= vm_hi, used,
                "Poisson limit: counts have variance equal to their mean"));
  const double tv = tv_distance_poisson(ca, lambda);
  rep.add(check("count_tv_poisson", tv, 0.0, tv_max, tv < tv_max, used,
                "Poisson limit: count law is Poisson"));
  const double rho = correlation(da, db);
  rep.add(check("count_correlation", rho, 0.0, corr_max, std::abs(rho) < corr_max, used,
                "Poisson limit: counts in disjoint intervals are independent"));
  const MeanEstimate p0 = estimate_mean(zero);
  rep.add(info("prob_zero_count", p0.mean, used, "Poisson limit: P(no point) = e^{-lambda}", p0.std_error,
               std::exp(-lambda)));
  const MeanEstimate lf = estimate_mean(lap);
  rep.add(info("laplace_functional", lf.mean, used, "Poisson limit: Laplace functional of a test function",
               lf.std_error, poisson_laplace_reference(fn)));
  long max_count = 0;
  for (long k : ca) max_count = std::max(max_count, k);
  rep.series.push_back(histogram_series("counts", da, -0.5, static_cast<double>(max_count) + 0.5,
                                        static_cast<std::size_t>(max_count) + 1));
}

// ---------------------------------------------------------------------------
// cbe_universality

void run_cbe_universality(const ExperimentConfig& c, Report& rep) {
  const DecaySchedule& schedule = require_schedule(c);
  note_schedule(c, rep);
  const double beta = param(c, "beta", schedule.beta.value_or(2.0));
  const double f = core_fraction(c, 0.1);
  const double ks_max = param(c, "ks_max", 0.05);
  const double bis = c.tolerances.bisection;
  const DecaySchedule reference = critical_schedule(beta);

  std::size_t failures = 0;
  const auto test_gaps = flatten(run_trials<std::vector<double>>(
      c.trials,
      [&](std::size_t t) {
        RngStream r = trial_stream(c, t);
        return core_spacings(sample_phase_state(schedule, c.n, r), f, bis);
      },
      failures));
  rep.numeric_failures += failures;
  const auto ref_gaps = flatten(run_trials<std::vector<double>>(
      c.trials,
      [&](std::size_t t) {
        RngStream r = trial_stream(c, t).substream(1);
        return core_spacings(sample_phase_state(reference, c.n, r), f, bis);
      },
      failures));
  rep.numeric_failures += failures;
  if (test_gaps.empty() || ref_gaps.empty()) throw NumericError("cbe_universality: empty spacing sample");
  const double ks = ks_distance(test_gaps, ref_gaps);
  rep.add(check("ks_spacing", ks, 0.0, ks_max, ks < ks_max, test_gaps.size() + ref_gaps.size(),
                "CbE limit: local spacings match exact CbE_n draws"));
  const MeanEstimate mt = estimate_mean(test_gaps);
  const MeanEstimate mr = estimate_mean(ref_gaps);
  rep.add(info("spacing_mean_test", mt.mean, test_gaps.size(), "mean rescaled spacing", mt.std_error, kTwoPi));
  rep.add(info("spacing_mean_reference", mr.mean, ref_gaps.size(), "mean rescaled spacing", mr.std_error, kTwoPi));
  rep.series.push_back(histogram_series("spacings_test", test_gaps, 0.0, 3.0 * kTwoPi, 96));
  rep.series.push_back(histogram_series("spacings_reference", ref_gaps, 0.0, 3.0 * kTwoPi, 96));
}

// ---------------------------------------------------------------------------
// cbe_exact

void run_cbe_exact(const ExperimentConfig& c, Report& rep) {
  const double beta = param(c, "beta", c.schedule && c.schedule->beta ? *c.schedule->beta : 2.0);
  if (!(beta > 0.0)) throw ConfigError("cbe_exact: beta must be positive");
  const std::size_t bins = param_count(c, "bins", 32);
  const double sup_max = param(c, "sup_max", 0.02);
  const std::size_t mc_draws = param_count(c, "mc_draws", 1000000);
  const double z_tol = param(c, "partition_tolerance", 0.02);
  const Interval arc = param_interval(c, "arc", {0.0, kPi / 2.0});
  if (!(arc.lo >= -kPi && arc.hi <= kPi)) throw ConfigError("cbe_exact: arc must lie in [-pi, pi]");

  struct TrialOut {
    std::vector<double> gaps;
    double first_angle;
    double count;
  };
  std::size_t failures = 0;
  const auto outs = run_trials<TrialOut>(
      c.trials,
      [&](std::size_t t) {
        RngStream r = trial_stream(c, t);
        const SpectrumSample s = sample_cbe(beta, c.n, r, c.tolerances.bisection);
        double count = 0.0;
        for (double a : s.angles) count += arc.contains(a) ? 1.0 : 0.0;
        return TrialOut{circular_gaps(s), s.angles.front(), count};
      },
      failures);
  rep.numeric_failures += failures;
  std::vector<double> gaps, firsts, counts;
  for (const auto& o : outs) {
    if (!o) continue;
    gaps.insert(gaps.end(), o->gaps.begin(), o->gaps.end());
    firsts.push_back(o->first_angle);
    counts.push_back(o->count);
  }
  if (counts.empty()) throw NumericError("cbe_exact: no successful draws");
  const double expected = static_cast<double>(c.n) * arc.length() / kTwoPi;
  const MeanEstimate mc = estimate_mean(counts);
  const bool count_ok = std::abs(mc.mean - expected) <= 4.0 * mc.std_error + 1e-12;
  rep.add(check("arc_count_mean", mc.mean, expected, 4.0 * mc.std_error, count_ok, counts.size(),
                "CbE_n: expected count in an arc is n (b-a)/2pi", mc.std_error));

  if (c.n == 1) {
    const double d = ks_statistic(firsts, [](double x) { return (x + kPi) / kTwoPi; });
    const double p = ks_pvalue(d, static_cast<double>(firsts.size()));
    rep.add(check("uniformity_ks_pvalue", p, std::nullopt, 0.01, p > 0.01, firsts.size(),
                  "CbE_1: the single angle is uniform"));
  }
  if (c.n == 2) {
    const CbeTwoPointGap density(beta);
    const Histogram h = make_histogram(gaps, 0.0, kTwoPi, bins);
    double sup = 0.0;
    Series ref;
    ref.name = "gap_reference";
    ref.kind = SeriesKind::table;
    ref.columns = {"bin_left", "bin_right", "empirical_density", "reference_density"};
    for (std::size_t i = 0; i < bins; ++i) {
      const double lo = h.bin_left(i);
      const double hi = lo + h.bin_width();
      const double expect = density.bin_average(lo, hi);
      sup = std::max(sup, std::abs(h.density(i) - expect));
      ref.rows.push_back({lo, hi, h.density(i), expect});
    }
    rep.add(check("gap_sup_distance", sup, 0.0, sup_max, sup < sup_max, gaps.size(),
                  "CbE_2: gap density proportional to |e^{ig} - 1|^beta"));
    rep.series.push_back(histogram_series("gaps", gaps, 0.0, kTwoPi, bins));
    rep.series.push_back(std::move(ref));
  }
  RngStream zr = aux_stream(c, 1);
  const MeanEstimate z = partition_function_mc(c.n, beta, mc_draws, zr);
  const double exact = partition_function(c.n, beta);
  rep.add(check("partition_function_mc", z.mean, exact, z_tol, std::abs(z.mean - exact) < z_tol, mc_draws,
                "partition function Gamma(beta n/2 + 1)/Gamma(beta/2 + 1)^n", z.std_error));
}

// ---------------------------------------------------------------------------
// sde_convergence

SdeConfig sde_config(const ExperimentConfig& c, double beta) {
  SdeConfig s;
  s.beta = beta;
  s.t0 = param(c, "t0", s.t0);
  s.dt = param(c, "dt", s.dt);
  s.max_noise_step = param(c, "max_noise_step", s.max_noise_step);
  s.inversion_tolerance = c.tolerances.sde_inversion;
  return s;
}

void run_sde_convergence(const ExperimentConfig& c, Report& rep) {
  const double beta = param(c, "beta", c.schedule && c.schedule->beta ? *c.schedule->beta : 2.0);
  std::vector<double> xs = param_list(c, "x", {kPi, kTwoPi});
  std::sort(xs.begin(), xs.end());
  if (xs.empty()) throw ConfigError("sde_convergence: params.x must be nonempty");
  const std::size_t paths = param_count(c, "paths", c.trials);
  const std::vector<std::string> checks = param_strings(c, "checks", {"properties", "convergence"});
  const double ks_conv = param(c, "ks_max_convergence", 0.1);
  const double ks_scale = param(c, "ks_max_scaling", 0.05);
  const double mean_sigmas = param(c, "mean_sigmas", 4.0);
  const double mean_diff_tol = param(c, "mean_difference_tolerance", 0.05 * kPi);
  const SdeConfig base = sde_config(c, beta);
  const double x0 = xs.front();
  auto wants = [&](const char* name) { return std::find(checks.begin(), checks.end(), name) != checks.end(); };

  if (wants("properties")) {
    SdeConfig one = base;
    one.x_grid = {x0, 2.0 * x0};
    one.t_end = 1.0;
    std::size_t failed = 0;
    const auto term = terminal_values(one, paths, aux_stream(c, 1), &failed);
    std::vector<double> at_x, at_2x;
    std::size_t sign_violations = 0;
    for (const auto& row : term) {
      at_x.push_back(row[0]);
      at_2x.push_back(row[1]);
      sign_violations += (x0 * row[0] < 0.0 || 2.0 * x0 * row[1] < 0.0) ? 1 : 0;
    }
    rep.add(check("monotonicity_violations", static_cast<double>(failed), 0.0, 0.0, failed == 0, paths,
                  "Psi(t; x) is non-decreasing in x on every path"));
    rep.add(check("sign_violations", static_cast<double>(sign_violations), 0.0, 0.0, sign_violations == 0,
                  term.size(), "x Psi(t; x) is non-negative"));
    if (!at_x.empty()) {
      const MeanEstimate m = estimate_mean(at_x);
      const double z = (m.mean - x0) / m.std_error;
      rep.add(check("mean_psi_t1", m.mean, x0, mean_sigmas * m.std_error, std::abs(z) < mean_sigmas,
                    at_x.size(), "E Psi(t; x) = x t", m.std_error));
      SdeConfig two = base;
      two.x_grid = {x0};
      two.t_end = 2.0;
      std::size_t failed2 = 0;
      const auto term2 = terminal_values(two, paths, aux_stream(c, 2), &failed2);
      std::vector<double> at_t2;
      for (const auto& row : term2) at_t2.push_back(row[0]);
      if (!at_t2.empty()) {
        const double ks = ks_distance(at_2x, at_t2);
        rep.add(check("ks_scaling", ks, 0.0, ks_scale, ks < ks_scale, at_2x.size() + at_t2.size(),
                      "Psi(2t; x) and Psi(t; 2x) have the same law"));
      }
      rep.numeric_failures += failed2;
    }
    rep.numeric_failures += failed;
  }
  if (wants("convergence")) {
    const std::size_t phase_trials = param_count(c, "phase_trials", c.trials);
    const ConvergenceReport cr = convergence_test(beta, xs, c.n, phase_trials, paths, aux_stream(c, 3), base);
    rep.numeric_failures += cr.sde_failures;
    for (const ConvergenceEntry& e : cr.entries) {
      const std::string tag = "_x" + std::to_string(static_cast<long>(std::lround(e.x * 1000.0)));
      rep.add(check("ks_phase_vs_sde" + tag, e.ks, 0.0, ks_conv, e.ks < ks_conv, phase_trials + paths,
                    "psi_{n-1}(x/n) converges in law to Psi(1; x)"));
      rep.add(check("mean_difference" + tag, e.mean_difference, 0.0, mean_diff_tol,
                    std::abs(e.mean_difference) < mean_diff_tol, phase_trials + paths,
                    "both phases have mean x"));
    }
  }
  const std::size_t bundle = std::min<std::size_t>(param_count(c, "bundle_paths", 20), paths);
  SdeConfig show = base;
  show.x_grid = xs;
  show.record_stride = param_count(c, "bundle_stride", 10);
  const auto bundle_paths = simulate_paths(show, bundle, aux_stream(c, 4));
  Series s;
  s.name = "sde_paths";
  s.kind = SeriesKind::path_bundle;
  s.columns = {"t", "path_id", "x_index", "value"};
  for (std::size_t p = 0; p < bundle_paths.size(); ++p) {
    const SdePath& path = bundle_paths[p];
    for (std::size_t i = 0; i < path.times.size(); ++i) {
      for (std::size_t mu = 0; mu < path.x_grid.size(); ++mu) {
        s.rows.push_back({path.times[i], static_cast<double>(p), static_cast<double>(mu), path.at(i, mu)});
      }
    }
  }
  rep.series.push_back(std::move(s));
}

// ---------------------------------------------------------------------------
// localization_suite

void run_localization_suite(const ExperimentConfig& c, Report& rep) {
  const DecaySchedule& schedule = require_schedule(c);
  note_schedule(c, rep);
  const double s = param(c, "s", 0.25);
  const Complex z = std::polar(1.0, param(c, "z_angle", 0.0));
  const double sig = param(c, "sigmas", 3.0);
  const std::size_t moment_trials = param_count(c, "moment_trials", c.trials);
  const auto k = static_cast<std::size_t>(param(c, "k", 0));
  const auto l = static_cast<std::size_t>(param(c, "l", 200));
  const auto rl = static_cast<std::size_t>(param(c, "ratio_l", 100));
  const auto rr = static_cast<std::size_t>(param(c, "ratio_r", 200));

  const MomentReport t1 = product_norm_samples(schedule, z, k, l, s, moment_trials, aux_stream(c, 1));
  rep.add(check("product_norm_moment", t1.empirical, t1.bound, sig * t1.std_error, t1.holds(sig), t1.trials,
                "E||T(l,k)||^{-s} <= exp[-(s/4) sum m_j]", t1.std_error));
  const MomentReport t2 = ratio_moment_samples(schedule, z, k, rl, rr, s, moment_trials, aux_stream(c, 2));
  rep.add(check("norm_ratio_moment", t2.empirical, t2.bound, sig * t2.std_error, t2.holds(sig), t2.trials,
                "E(||T(l,k)||/||T(r,k)||)^s <= exp[-(s/4) sum_{j=l}^{r-1} m_j]", t2.std_error));
  rep.add(info("norm_ratio_bound_summed_from_k", t2.bound_as_printed, t2.trials,
               "exp[-(s/4) sum_{j=k}^{r-1} m_j], for comparison"));
  rep.numeric_failures += t1.aborted + t2.aborted;

  // disk integral: bound at R = 1 and monotonicity in R
  double worst_bound = -INFINITY;
  bool monotone = true;
  for (double r = 0.1; r < 0.95; r += 0.1) {
    double prev = -INFINITY;
    for (double R = 0.0; R <= 1.0 + 1e-12; R += 0.125) {
      const double v = lemma_a_integral(r, std::min(R, 1.0));
      monotone = monotone && v >= prev - 1e-14;
      prev = v;
    }
    worst_bound = std::max(worst_bound, prev - (1.0 - r * r / 4.0));
  }
  rep.add(check("disk_integral_margin", worst_bound, 0.0, 0.0, worst_bound <= 0.0, 9,
                "integral at R = 1 is at most 1 - r^2/4"));
  rep.add(check("disk_integral_monotone", monotone ? 1.0 : 0.0, 1.0, 0.0, monotone, 9,
                "integral increases with R"));

  const std::size_t la_samples = param_count(c, "contraction_samples", 20000);
  const std::size_t la_vectors = param_count(c, "contraction_vectors", 5);
  RngStream vr = aux_stream(c, 3);
  double worst_z = -INFINITY;
  for (double r : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (std::size_t v = 0; v < la_vectors; ++v) {
      const double a = vr.uniform() * kPi / 2.0;
      const Complex vx = std::polar(std::cos(a), vr.angle());
      const Complex vy = std::polar(std::sin(a), vr.angle());
      const MeanEstimate m = lemma_a_monte_carlo(r, vx, vy, z, la_samples, vr);
      worst_z = std::max(worst_z, (m.mean - (1.0 - r * r / 4.0)) / m.std_error);
    }
  }
  rep.add(check("one_step_contraction_worst_z", worst_z, 0.0, sig, worst_z <= sig, la_samples * la_vectors * 5,
                "E||A v||^{-1} <= (1 - |alpha|^2/4) ||v||^{-1}"));

  const auto mn = param_count(c, "minami_N", 50);
  const double ml = param(c, "minami_L", 0.01);
  const MinamiReport mr = minami_check(schedule, mn, ml, param_count(c, "minami_trials", 100000), aux_stream(c, 4));
  rep.add(check("minami_probability", mr.probability, mr.bound, sig * mr.std_error, mr.holds(sig), mr.trials,
                "P(two or more eigenvalues in an arc of length 2pi L) <= L^2 N^2/2", mr.std_error));

  const auto rn = param_count(c, "resolvent_n", 256);
  std::vector<std::size_t> seps;
  for (double d : param_list(c, "separations", {10, 25, 50, 100, 200})) seps.push_back(static_cast<std::size_t>(d));
  const DecayProfile prof = resolvent_decay_profile(schedule, rn, 0, seps, s,
                                                    param_count(c, "resolvent_trials", 400), aux_stream(c, 5));
  rep.numeric_failures += prof.failures;
  double worst_kolm = -INFINITY;
  bool decreasing = true;
  Series dp;
  dp.name = "resolvent_decay";
  dp.kind = SeriesKind::decay_profile;
  dp.columns = {"separation", "value", "bound"};
  for (std::size_t i = 0; i < prof.points.size(); ++i) {
    const DecayPoint& p = prof.points[i];
    worst_kolm = std::max(worst_kolm, (p.value - p.bound) / std::max(p.std_error, 1e-300));
    if (i > 0) decreasing = decreasing && p.median_log_batch < prof.points[i - 1].median_log_batch;
    dp.rows.push_back({static_cast<double>(p.separation), p.value, p.bound});
  }
  rep.add(check("kolmogorov_worst_z", worst_kolm, 0.0, sig, worst_kolm <= sig, prof.trials,
                "E|G_kl|^s <= 2^{2-s} sec(s pi/2)"));
  rep.add(check("resolvent_decay_monotone", decreasing ? 1.0 : 0.0, 1.0, 0.0, decreasing, prof.trials,
                "fractional moments of G_{0,l} decrease in l"));
  rep.series.push_back(std::move(dp));

  // determinant and incremental norm bookkeeping on a few realizations
  double det_err = 0.0;
  double norm_err = 0.0;
  RngStream dr = aux_stream(c, 6);
  for (int rep_i = 0; rep_i < 5; ++rep_i) {
    const CoefficientSequence seq = sample_sequence(schedule, 202, dr);
    const Complex zz = std::polar(1.0, dr.angle());
    const Mat2 t = transfer_product(seq.alphas, zz, 0, 200);
    // a*d - b*c cancels down from ||T||^2, so the error is measured on that scale
    det_err = std::max(det_err, std::abs(t.det() - std::pow(zz, 200)) / std::max(1.0, t.frobenius2()));
    for (std::size_t len : {1, 15, 16, 17, 50, 100}) {
      const double inc = product_log_norm(seq.alphas, zz, 0, len);
      const double direct = std::log(transfer_product(seq.alphas, zz, 0, len).norm());
      norm_err = std::max(norm_err, std::abs(inc - direct));
    }
  }
  rep.add(check("transfer_det_error", det_err, 0.0, 1e-10, det_err < 1e-10, 5, "det T(l,k) = z^{l-k}, relative to ||T||_F^2"));
  rep.add(check("norm_accounting_error", norm_err, 0.0, 1e-8, norm_err < 1e-8, 30,
                "renormalized log-norms equal direct log-norms"));
}

// ---------------------------------------------------------------------------
// invariant_suite

void upsilon_checks(Report& rep) {
  double branch = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double psi = -3.0 + 6.0 * i / 19.0;
    for (int j = 0; j < 20; ++j) {
      const Complex g = std::polar(0.6 * j / 19.0, 2.3 * j + 0.4);
      branch = std::max(branch, std::abs(upsilon(psi, g) - upsilon_series(psi, g, 40)));
    }
  }
  rep.add(check("upsilon_branch_error", branch, 0.0, 1e-8, branch < 1e-8, 400,
                "principal-branch Upsilon equals its power series"));

  constexpr std::size_t nodes = 4096;
  constexpr double slack = 1e-10;
  double worst[5] = {-INFINITY, -INFINITY, -INFINITY, -INFINITY, -INFINITY};
  const double angles[] = {0.5, 1.5, 3.0};
  for (double r : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double lg = std::log(1.0 / (1.0 - r * r));
    for (double psi : angles) {
      auto u = [&](double p, double th) { return upsilon(p, std::polar(r, th)); };
      const double mean = periodic_mean([&](double th) { return u(psi, th); }, nodes);
      worst[0] = std::max(worst[0], std::abs(mean));
      const double second = periodic_mean([&](double th) { return std::pow(u(psi, th), 2); }, nodes);
      worst[1] = std::max(worst[1], second - (4.0 * kPi * kPi / 3.0) * r * r );
      const double fourth = periodic_mean(
          [&](double th) {
            return std::pow(std::abs(std::log((1.0 - std::polar(r, th)) / (1.0 - std::polar(r, th + psi)))), 4);
          },
          nodes);
      worst[4] = std::max(worst[4], fourth - 16.0 * std::abs(psi) * lg * lg );
      for (double phi : angles) {
        const double cross = periodic_mean([&](double th) { return u(psi, th) * u(phi, th); }, nodes);
        worst[2] = std::max(worst[2], std::abs(cross) - 2.0 * (psi + phi) * lg );
        const double lead =
            2.0 * r * r * ((std::polar(1.0, psi) - 1.0) * (std::polar(1.0, -phi) - 1.0)).real();
        worst[3] = std::max(worst[3], std::abs(lead - cross) - 2.0 * (psi + phi) * r * r * lg );
      }
    }
  }
  const char* names[] = {"upsilon_mean_zero", "upsilon_second_moment", "upsilon_cross_moment",
                         "upsilon_cross_leading_term", "upsilon_fourth_moment"};
  const char* claims[] = {"mean of Upsilon over arg gamma vanishes",
                          "mean of Upsilon^2 is at most (4 pi^2/3) r^2",
                          "|mean Upsilon(psi) Upsilon(phi)| <= 2(|psi|+|phi|) log 1/(1-r^2)",
                          "cross moment is 2r^2 Re{(e^{i psi}-1)(e^{-i phi}-1)} up to 2(|psi|+|phi|) r^2 log 1/(1-r^2)",
                          "mean |log|^4 is at most 16 |psi| log^2(1-r^2)"};
  for (int i = 0; i < 5; ++i) {
    rep.add(check(names[i], worst[i], 0.0, slack, worst[i] <= slack, 15, claims[i]));
  }
}

void theta_moment_checks(const ExperimentConfig& c, Report& rep) {
  const std::size_t samples = param_count(c, "theta_samples", 1000000);
  std::uint64_t tag = 10;
  for (double nu : {3.0, 5.0, 11.0}) {
    std::vector<double> m2(samples), l2(samples);
    RngStream r = aux_stream(c, tag++);
    for (std::size_t i = 0; i < samples; ++i) {
      const double a2 = std::norm(sample_theta_nu(nu, r));
      m2[i] = a2;
      const double t = -std::log1p(-a2);
      l2[i] = t * t;
    }
    const MeanEstimate e2 = estimate_mean(m2);
    const MeanEstimate el = estimate_mean(l2);
    const std::string tagname = "_nu" + std::to_string(static_cast<int>(nu));
    const double ref2 = 2.0 / (nu + 1.0);
    const double refl = 2.0 * std::pow(2.0 / (nu - 1.0), 2);
    rep.add(check("theta_second_moment" + tagname, e2.mean, ref2, 1e-3, std::abs(e2.mean - ref2) < 1e-3, samples,
                  "E|alpha|^2 = 2/(nu+1)", e2.std_error));
    rep.add(check("theta_log2_moment" + tagname, el.mean, refl, 5e-3, std::abs(el.mean - refl) < 5e-3, samples,
                  "E log^2 1/(1-|alpha|^2) = 2 (2/(nu-1))^2", el.std_error));
  }
}

void martingale_checks(const ExperimentConfig& c, Report& rep) {
  const std::size_t trials = param_count(c, "martingale_trials", 10000);
  const double theta = 0.3;
  const std::size_t s = 99;
  const std::pair<const char*, DecaySchedule> laws[] = {
      {"critical_theta", critical_schedule(2.0)},
      {"critical_fixed_modulus", critical_schedule(2.0, CoefficientLaw::fixed_modulus_uniform_phase)},
      {"slow_theta", slow_schedule(0.5)},
      {"fast_fixed_modulus", fast_schedule(2.0, CoefficientLaw::fixed_modulus_uniform_phase)}};
  std::uint64_t tag = 20;
  for (const auto& [name, law] : laws) {
    const RngStream base = aux_stream(c, tag++);
    std::vector<double> v(trials);
    parallel_for(trials, [&](std::size_t t) {
      RngStream r = base.substream(t);
      v[t] = PhaseEvaluator(sample_phase_state(law, s + 1, r)).value(theta);
    });
    const MeanEstimate m = estimate_mean(v);
    const double ref = static_cast<double>(s + 1) * theta;
    rep.add(check(std::string("phase_mean_") + name, m.mean, ref, 4.0 * m.std_error,
                  std::abs(m.mean - ref) < 4.0 * m.std_error, trials, "E psi_s(theta) = (s+1) theta", m.std_error));
  }
}

void phase_structure_checks(const ExperimentConfig& c, Report& rep) {
  // strict monotonicity in theta
  std::size_t violations = 0;
  RngStream r = aux_stream(c, 30);
  const DecaySchedule crit = critical_schedule(2.0);
  for (int t = 0; t < 100; ++t) {
    const PhaseEvaluator ev(sample_phase_state(crit, 100, r));
    double prev = -INFINITY;
    for (int i = 1; i < 64; ++i) {
      const double v = ev.value(-kPi + kTwoPi * i / 64.0);
      violations += v > prev ? 0 : 1;
      prev = v;
    }
  }
  rep.add(check("phase_monotonicity_violations", static_cast<double>(violations), 0.0, 0.0, violations == 0, 100,
                "psi_{n-1} is strictly increasing in theta"));

  // characteristic polynomial residual at the phase-solver eigenvalues
  double residual = 0.0;
  for (int t = 0; t < 50; ++t) {
    const CoefficientSequence seq = sample_sequence(crit, 16, r);
    const auto coeffs = char_poly_coefficients(seq);
    double cmax = 0.0;
    for (const Complex& a : coeffs) cmax = std::max(cmax, std::abs(a));
    for (double a : locate_eigenvalues(rotate_to_gamma(seq), c.tolerances.bisection).angles) {
      residual = std::max(residual, std::abs(char_poly_eval(seq, std::polar(1.0, a))) / cmax);
    }
  }
  rep.add(check("char_poly_residual", residual, 0.0, c.tolerances.eigen_match, residual < c.tolerances.eigen_match,
                50, "eigenvalues from the phase are roots of det(z - C)"));

  // psi'(0) against a central difference
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const RelativePhaseState st = sample_phase_state(crit, 50, r);
    const PhaseEvaluator ev(st);
    const double h = 1e-6;
    const double fd = (ev.value(h) - ev.value(-h)) / (2.0 * h);
    const double exact = phase_derivative_at_zero(st);
    worst = std::max(worst, std::abs(fd - exact) / exact);
  }
  rep.add(check("phase_derivative_relative_error", worst, 0.0, 1e-5, worst < 1e-5, 20,
                "psi'(0) from the product formula matches differentiation"));

  // variance identity: Var[psi_m - psi_k - (m-k) theta] = sum E Upsilon^2
  const std::size_t trials = param_count(c, "variance_trials", 10000);
  const std::size_t n = 500, k = 100, m = 400;
  const double theta = kPi / static_cast<double>(n);
  std::vector<double> d(trials), ups(trials);
  const RngStream base = aux_stream(c, 31);
  parallel_for(trials, [&](std::size_t t) {
    RngStream rr = base.substream(t);
    const RelativePhaseState st = sample_phase_state(crit, n, rr);
    const PhaseTrajectory tr = relative_phase(st, theta);
    double sum = 0.0;
    for (std::size_t j = k; j < m; ++j) sum += std::pow(upsilon(tr.values[j], st.gammas[j]), 2);
    d[t] = tr.values[m] - tr.values[k] - static_cast<double>(m - k) * theta;
    ups[t] = sum;
  });
  const double mean_d = estimate_mean(d).mean;
  std::vector<double> sq(trials);
  for (std::size_t t = 0; t < trials; ++t) sq[t] = std::pow(d[t] - mean_d, 2);
  const MeanEstimate var = estimate_mean(sq);
  const MeanEstimate up = estimate_mean(ups);
  const double se = std::hypot(var.std_error, up.std_error);
  const double diff = var.mean - up.mean;
  rep.add(check("variance_identity_difference", diff, 0.0, 4.0 * se, std::abs(diff) < 4.0 * se, trials,
                "increment variance equals summed mean square of Upsilon", se));
}

void run_invariant_suite(const ExperimentConfig& c, Report& rep) {
  const auto checks = param_strings(c, "checks", {"upsilon", "theta_moments", "martingale", "phase_structure"});
  for (const std::string& name : checks) {
    if (name == "upsilon") {
      upsilon_checks(rep);
    } else if (name == "theta_moments") {
      theta_moment_checks(c, rep);
    } else if (name == "martingale") {
      martingale_checks(c, rep);
    } else if (name == "phase_structure") {
      phase_structure_checks(c, rep);
    } else {
      throw ConfigError("invariant_suite: unknown check '" + name + "'");
    }
  }
}

}  // namespace

const std::vector<ExperimentSpec>& experiment_registry() {
  static const std::vector<ExperimentSpec> registry = {
      {"clock_limit", "rigid 2pi spacings for fast coefficient decay",
       fast_schedule(2.0), 1000, 200, run_clock_limit},
      {"poisson_limit", "Poisson counting statistics for slow coefficient decay",
       slow_schedule(0.5), 2000, 2000, run_poisson_limit},
      {"cbe_universality", "critical decay with fixed-modulus coefficients against exact CbE_n spacings",
       critical_schedule(2.0, CoefficientLaw::fixed_modulus_uniform_phase), 2000, 2000, run_cbe_universality},
      {"cbe_exact", "exact CbE_n sampler against the small-n density and partition function",
       std::nullopt, 2, 100000, run_cbe_exact},
      {"sde_convergence", "limiting phase SDE properties and convergence of the finite-n phase",
       std::nullopt, 2000, 10000, run_sde_convergence},
      {"localization_suite", "transfer matrix, Minami and resolvent bounds for slow decay",
       slow_schedule(0.5), 256, 10000, run_localization_suite},
      {"invariant_suite", "Upsilon identities, Theta moments and phase recurrence invariants",
       std::nullopt, 1, 1, run_invariant_suite},
  };
  return registry;
}

}  // namespace cmvlab
