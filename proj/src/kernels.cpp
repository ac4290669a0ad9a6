#include "arpsim/kernels.hpp"

#include <exception>
#include <omp.h>

namespace arp {

namespace {

SweepJob job_for(double duration, const SweepProtocol& base, const SpinSystemParams& p) {
  SweepProtocol s = base;
  s.duration = duration;
  return {s, p};
}

}  // namespace

std::vector<double> sweep_batch_serial(std::span<const SweepJob> jobs,
                                       const EvolutionSettings& opts) {
  std::vector<double> out(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i)
    out[i] = simulate_sweep_pup(jobs[i].protocol, jobs[i].params, opts);
  return out;
}

std::vector<double> sweep_batch(std::span<const SweepJob> jobs, const EvolutionSettings& opts) {
  std::vector<double> out(jobs.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = simulate_sweep_pup(jobs[i].protocol, jobs[i].params, opts);
    } catch (...) {
#pragma omp critical(arp_sweep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<double> sweep_curve_serial(std::span<const double> durations,
                                       const SweepProtocol& base, const SpinSystemParams& p,
                                       const EvolutionSettings& opts) {
  std::vector<SweepJob> jobs;
  jobs.reserve(durations.size());
  for (double d : durations) jobs.push_back(job_for(d, base, p));
  return sweep_batch_serial(jobs, opts);
}

std::vector<double> sweep_curve(std::span<const double> durations, const SweepProtocol& base,
                                const SpinSystemParams& p, const EvolutionSettings& opts) {
  std::vector<SweepJob> jobs;
  jobs.reserve(durations.size());
  for (double d : durations) jobs.push_back(job_for(d, base, p));
  return sweep_batch(jobs, opts);
}

}  // namespace arp
