#include "cmvlab/sde_limit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cmvlab/coeff_sampling.hpp"
#include "cmvlab/errors.hpp"
#include "cmvlab/point_stats.hpp"
#include "cmvlab/prufer_phase.hpp"

namespace cmvlab {

void SdeConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("sde: beta must be positive");
  if (x_grid.empty()) throw ConfigError("sde: x_grid must be nonempty");
  if (!std::is_sorted(x_grid.begin(), x_grid.end())) throw ConfigError("sde: x_grid must be sorted");
  if (!(t0 > 0.0)) throw ConfigError("sde: t0 must be positive");
  if (!(t0 < t_end)) throw ConfigError("sde: t0 must be below t_end");
  if (!(dt > 0.0)) throw ConfigError("sde: dt must be positive");
  if (dt > t0) throw ConfigError("sde: dt must not exceed t0");
  if (max_noise_step < 0.0) throw ConfigError("sde: max_noise_step must be non-negative");
  if (record_stride < 1) throw ConfigError("sde: record_stride must be at least 1");
}

namespace {

struct PathState {
  std::vector<double> psi;
  bool failed = false;
  double max_repaired = 0.0;
};

// Advances psi from t to t + span with adaptive Euler substeps.
void advance(const SdeConfig& cfg, PathState& s, double t, double span, RngStream& rng) {
  const std::size_t m = cfg.x_grid.size();
  double done = 0.0;
  while (done < span && !s.failed) {
    const double now = t + done;
    double h = span - done;
    if (cfg.max_noise_step > 0.0) {
      h = std::min(h, 0.25 * cfg.max_noise_step * cfg.max_noise_step * cfg.beta * now);
    }
    if (span - done - h < 1e-15 * span) h = span - done;
    const double sh = std::sqrt(h);
    const double db1 = rng.normal() * sh;
    const double db2 = rng.normal() * sh;
    const double coef = 2.0 / std::sqrt(cfg.beta * now);
    for (std::size_t mu = 0; mu < m; ++mu) {
      const double p = s.psi[mu];
      // Im{(e^{ip} - 1)(db1 + i db2)} = (cos p - 1) db2 + sin p db1
      const double noise = (std::cos(p) - 1.0) * db2 + std::sin(p) * db1;
      s.psi[mu] = p + cfg.x_grid[mu] * h + coef * noise;
    }
    bool repaired = false;
    for (std::size_t mu = 1; mu < m; ++mu) {
      const double gap = s.psi[mu] - s.psi[mu - 1];
      if (gap < 0.0 && cfg.x_grid[mu] > cfg.x_grid[mu - 1]) {
        if (-gap > cfg.inversion_tolerance) {
          s.failed = true;
          break;
        }
        s.max_repaired = std::max(s.max_repaired, -gap);
        repaired = true;
      }
    }
    if (!s.failed && repaired) std::sort(s.psi.begin(), s.psi.end());
    done += h;
  }
}

std::size_t grid_steps(const SdeConfig& cfg) {
  return static_cast<std::size_t>(std::ceil((cfg.t_end - cfg.t0) / cfg.dt - 1e-9));
}

double grid_time(const SdeConfig& cfg, std::size_t j, std::size_t steps) {
  return j == steps ? cfg.t_end : cfg.t0 + cfg.dt * static_cast<double>(j);
}

SdePath run_path(const SdeConfig& cfg, RngStream rng, bool record) {
  const std::size_t m = cfg.x_grid.size();
  PathState s;
  s.psi.resize(m);
  for (std::size_t mu = 0; mu < m; ++mu) s.psi[mu] = cfg.x_grid[mu] * cfg.t0;
  SdePath path;
  path.x_grid = cfg.x_grid;
  auto store = [&](double t) {
    path.times.push_back(t);
    path.values.insert(path.values.end(), s.psi.begin(), s.psi.end());
  };
  if (record) store(cfg.t0);
  const std::size_t steps = grid_steps(cfg);
  for (std::size_t j = 0; j < steps && !s.failed; ++j) {
    const double t = grid_time(cfg, j, steps);
    const double t_next = grid_time(cfg, j + 1, steps);
    advance(cfg, s, t, t_next - t, rng);
    if (s.failed) break;
    if (record && ((j + 1) % cfg.record_stride == 0 || j + 1 == steps)) store(t_next);
  }
  if (!record && !s.failed) store(cfg.t_end);
  path.failed = s.failed;
  path.max_repaired_inversion = s.max_repaired;
  return path;
}

}  // namespace

std::vector<SdePath> simulate_paths(const SdeConfig& cfg, std::size_t n_paths, const RngStream& rng) {
  cfg.validate();
  std::vector<SdePath> paths(n_paths);
  parallel_for(n_paths, [&](std::size_t p) { paths[p] = run_path(cfg, rng.substream(p), true); });
  return paths;
}

std::vector<std::vector<double>> terminal_values(const SdeConfig& cfg, std::size_t n_paths,
                                                 const RngStream& rng, std::size_t* failures) {
  cfg.validate();
  std::vector<SdePath> paths(n_paths);
  parallel_for(n_paths, [&](std::size_t p) { paths[p] = run_path(cfg, rng.substream(p), false); });
  std::vector<std::vector<double>> out;
  std::size_t failed = 0;
  for (const SdePath& p : paths) {
    if (p.failed) {
      ++failed;
      continue;
    }
    const auto last = p.final_slice();
    out.emplace_back(last.begin(), last.end());
  }
  if (failures) *failures = failed;
  return out;
}

InversionResult invert_to_points(std::span<const double> x_grid, std::span<const double> psi,
                                 double omega, std::optional<Interval> target) {
  if (x_grid.size() != psi.size() || x_grid.size() < 2) {
    throw DomainError("invert_to_points: need matching grids with at least two points");
  }
  for (std::size_t i = 1; i < psi.size(); ++i) {
    if (psi[i] < psi[i - 1]) throw DomainError("invert_to_points: final slice is not non-decreasing");
  }
  InversionResult r;
  double lo = x_grid.front();
  double hi = x_grid.back();
  if (target) {
    r.truncated = target->lo < lo || target->hi > hi;
    lo = std::max(lo, target->lo);
    hi = std::min(hi, target->hi);
  }
  r.points.window = {lo, hi};
  const double m_first = std::ceil((psi.front() - omega) / kTwoPi);
  std::size_t seg = 0;
  for (double m = m_first;; m += 1.0) {
    const double level = omega + kTwoPi * m;
    if (level > psi.back()) break;
    while (seg + 1 < psi.size() && psi[seg + 1] < level) ++seg;
    double x;
    if (seg + 1 == psi.size() || psi[seg] == level) {
      x = x_grid[seg];
    } else {
      const double f = (level - psi[seg]) / (psi[seg + 1] - psi[seg]);
      x = x_grid[seg] + f * (x_grid[seg + 1] - x_grid[seg]);
    }
    if (x >= lo && x <= hi) r.points.points.push_back(x);
  }
  return r;
}

InversionResult invert_to_points(const SdePath& path, double omega, std::optional<Interval> target) {
  if (path.times.empty()) throw DomainError("invert_to_points: empty path");
  return invert_to_points(path.x_grid, path.final_slice(), omega, target);
}

InversionResult invert_to_points(const SdePath& path, RngStream& rng, std::optional<Interval> target) {
  return invert_to_points(path, rng.angle(), target);
}

ConvergenceReport convergence_test(double beta, std::span<const double> x_grid, std::size_t n,
                                   std::size_t trials, std::size_t paths, const RngStream& rng,
                                   const SdeConfig& sde) {
  if (n < 100) throw ConfigError("convergence_test: n must be at least 100");
  if (trials < 1 || paths < 1) throw ConfigError("convergence_test: need at least one trial and path");
  ConvergenceReport rep;
  rep.beta = beta;
  rep.n = n;
  rep.trials = trials;
  rep.paths = paths;
  const std::size_t m = x_grid.size();
  const DecaySchedule schedule = critical_schedule(beta);
  const RngStream phase_rng = rng.substream(0);
  std::vector<std::vector<double>> phase(m, std::vector<double>(trials));
  parallel_for(trials, [&](std::size_t t) {
    RngStream r = phase_rng.substream(t);
    const PhaseEvaluator ev(sample_phase_state(schedule, n, r));
    for (std::size_t mu = 0; mu < m; ++mu) {
      phase[mu][t] = ev.value(x_grid[mu] / static_cast<double>(n));
    }
  });
  SdeConfig cfg = sde;
  cfg.beta = beta;
  cfg.x_grid.assign(x_grid.begin(), x_grid.end());
  cfg.t_end = 1.0;
  const auto terminal = terminal_values(cfg, paths, rng.substream(1), &rep.sde_failures);
  for (std::size_t mu = 0; mu < m; ++mu) {
    std::vector<double> sde_sample(terminal.size());
    for (std::size_t p = 0; p < terminal.size(); ++p) sde_sample[p] = terminal[p][mu];
    ConvergenceEntry e;
    e.x = x_grid[mu];
    e.phase_mean = estimate_mean(phase[mu]);
    e.sde_mean = estimate_mean(sde_sample);
    e.mean_difference = e.phase_mean.mean - e.sde_mean.mean;
    e.ks = sde_sample.empty() ? 1.0 : ks_distance(phase[mu], sde_sample);
    rep.entries.push_back(e);
  }
  return rep;
}

void write_path_csv(const SdePath& path, std::ostream& out) {
  out << "t,x_index,value\n";
  out.precision(17);
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    for (std::size_t mu = 0; mu < path.x_grid.size(); ++mu) {
      out << path.times[i] << ',' << mu << ',' << path.at(i, mu) << '\n';
    }
  }
}

}  // namespace cmvlab
