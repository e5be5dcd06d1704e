#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "cmvlab/numeric.hpp"
#include "cmvlab/rng.hpp"
#include "cmvlab/types.hpp"

namespace cmvlab {

/// d Psi = x dt + (2/sqrt(beta t)) Im{(e^{i Psi} - 1)(dB1 + i dB2)} on [t0, t_end],
/// Psi(t0; x) = x t0, one pair of Brownian motions shared by every x.
///
/// Each grid interval of length dt is split into Euler substeps of length
/// h <= (max_noise_step^2/4) beta t, which keeps the noise factor
/// (2/sqrt(beta t)) sqrt(h) below max_noise_step. max_noise_step = 0 uses h = dt.
struct SdeConfig {
  double beta = 2.0;
  std::vector<double> x_grid{kPi};
  double t0 = 1e-3;
  double dt = 1e-3;
  double t_end = 1.0;
  double max_noise_step = 0.1;
  std::size_t record_stride = 1;   // record every k-th grid time; t0 and t_end always kept
  double inversion_tolerance = 1e-9;

  /// Throws ConfigError when beta <= 0, x_grid unsorted or empty, t0 >= t_end, dt > t0.
  void validate() const;
};

struct SdePath {
  std::vector<double> x_grid;
  std::vector<double> times;
  std::vector<double> values;  // row-major, times.size() x x_grid.size()
  bool failed = false;         // aborted after a monotonicity inversion above tolerance
  double max_repaired_inversion = 0.0;

  double at(std::size_t time_index, std::size_t x_index) const {
    return values[time_index * x_grid.size() + x_index];
  }
  std::span<const double> slice(std::size_t time_index) const {
    return {values.data() + time_index * x_grid.size(), x_grid.size()};
  }
  std::span<const double> final_slice() const { return slice(times.size() - 1); }
};

/// Path p uses rng.substream(p); results do not depend on the thread count.
std::vector<SdePath> simulate_paths(const SdeConfig& cfg, std::size_t n_paths, const RngStream& rng);

/// Psi(t_end; x_mu) for every non-failed path, one row per path, without
/// storing trajectories. `failures` receives the number of aborted paths.
std::vector<std::vector<double>> terminal_values(const SdeConfig& cfg, std::size_t n_paths,
                                                 const RngStream& rng, std::size_t* failures = nullptr);

struct InversionResult {
  PointConfiguration points;
  bool truncated = false;  // the requested window extends beyond the x grid
};

/// Solutions of Psi(t_end; x) = 2 pi m + omega by linear interpolation on the
/// grid, ends included. Points are restricted to `target` intersected with
/// the grid span (the whole span by default).
InversionResult invert_to_points(std::span<const double> x_grid, std::span<const double> psi,
                                 double omega, std::optional<Interval> target = std::nullopt);
InversionResult invert_to_points(const SdePath& path, double omega,
                                 std::optional<Interval> target = std::nullopt);
/// As above with omega uniform on [0, 2pi) drawn from `rng`.
InversionResult invert_to_points(const SdePath& path, RngStream& rng,
                                 std::optional<Interval> target = std::nullopt);

struct ConvergenceEntry {
  double x = 0.0;
  double ks = 0.0;
  MeanEstimate phase_mean;  // psi_{n-1}(x/n)
  MeanEstimate sde_mean;    // Psi(1; x)
  double mean_difference = 0.0;
};

struct ConvergenceReport {
  double beta = 2.0;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::size_t paths = 0;
  std::size_t sde_failures = 0;
  std::vector<ConvergenceEntry> entries;
};

/// Compares psi_{n-1}(x/n) under the critical Theta schedule with Psi(1; x).
/// The phase samples use rng.substream(0), the SDE paths rng.substream(1).
ConvergenceReport convergence_test(double beta, std::span<const double> x_grid, std::size_t n,
                                   std::size_t trials, std::size_t paths, const RngStream& rng,
                                   const SdeConfig& sde = {});

/// CSV "t,x_index,value" of one path.
void write_path_csv(const SdePath& path, std::ostream& out);

}  // namespace cmvlab
