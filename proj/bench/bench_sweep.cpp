// Serial reference vs OpenMP kernel on a log-spaced sweep-time grid,
// plus a single global fit evaluation.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>
#include <vector>

#include "arpsim/estimation.hpp"
#include "arpsim/kernels.hpp"

using namespace arp;

namespace {

std::vector<double> grid(int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(1e-8 * std::pow(5e3, i / double(n - 1)));
  return g;
}

SpinSystemParams params() {
  SpinSystemParams p;
  p.nu1 = nu1_from_b1(30e-6);
  p.t2 = 44e-6;
  return p;
}

void BM_sweep_curve_serial(benchmark::State& st) {
  const auto ts = grid(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(sweep_curve_serial(ts, {}, params()));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_sweep_curve_omp(benchmark::State& st) {
  const auto ts = grid(static_cast<int>(st.range(0)));
  omp_set_num_threads(static_cast<int>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(sweep_curve(ts, {}, params()));
  st.SetItemsProcessed(st.iterations() * st.range(0));
  st.counters["threads"] = static_cast<double>(st.range(1));
}

void BM_single_sweep(benchmark::State& st) {
  const SweepProtocol s{25e6, st.range(0) * 1e-6};
  for (auto _ : st) benchmark::DoNotOptimize(simulate_sweep_pup(s, params()));
}

}  // namespace

BENCHMARK(BM_sweep_curve_serial)->Arg(60)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_curve_omp)
    ->ArgsProduct({{60}, benchmark::CreateRange(1, omp_get_num_procs(), 2)})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_single_sweep)->Arg(1)->Arg(6)->Arg(50)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
