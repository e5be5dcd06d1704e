#include <benchmark/benchmark.h>

#include "cmvlab/coeff_sampling.hpp"
#include "cmvlab/ensembles.hpp"
#include "cmvlab/localization.hpp"
#include "cmvlab/prufer_phase.hpp"
#include "cmvlab/rng.hpp"

namespace {

cmvlab::RelativePhaseState state_for(std::size_t n) {
  cmvlab::RngStream rng(42, 0);
  return cmvlab::sample_phase_state(cmvlab::critical_schedule(2.0), n, rng);
}

void BM_PhaseEvaluation(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const cmvlab::PhaseEvaluator ev(state_for(n));
  double theta = 0.1;
  for (auto _ : st) {
    benchmark::DoNotOptimize(ev(theta));
    theta += 1e-7;
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_PhaseEvaluation)->Arg(100)->Arg(1000)->Arg(10000);

void BM_LocateEigenvalues(benchmark::State& st) {
  const auto state = state_for(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(cmvlab::locate_eigenvalues(state));
}
BENCHMARK(BM_LocateEigenvalues)->Arg(64)->Arg(256)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_LocateCoreArc(benchmark::State& st) {
  const auto state = state_for(2000);
  const double f = static_cast<double>(st.range(0)) / 100.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(cmvlab::locate_eigenvalues_in(state, {-cmvlab::kPi * f, cmvlab::kPi * f}));
  }
}
BENCHMARK(BM_LocateCoreArc)->Arg(10)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_SampleCbe(benchmark::State& st) {
  cmvlab::RngStream rng(7, 0);
  const auto n = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(cmvlab::sample_cbe(2.0, n, rng));
}
BENCHMARK(BM_SampleCbe)->Arg(16)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ThetaSampler(benchmark::State& st) {
  cmvlab::RngStream rng(9, 0);
  for (auto _ : st) benchmark::DoNotOptimize(cmvlab::sample_theta_nu(5.0, rng));
}
BENCHMARK(BM_ThetaSampler);

void BM_TransferLogNorm(benchmark::State& st) {
  cmvlab::RngStream rng(11, 0);
  const auto seq = cmvlab::sample_sequence(cmvlab::slow_schedule(0.5), 1001, rng);
  for (auto _ : st) benchmark::DoNotOptimize(cmvlab::product_log_norm(seq.alphas, 1.0, 0, 1000));
}
BENCHMARK(BM_TransferLogNorm);

}  // namespace

BENCHMARK_MAIN();
