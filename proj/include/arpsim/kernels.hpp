#pragma once

// Data-parallel sweep kernels. Each point is an independent ODE solve, so
// the OpenMP variants distribute points across threads; the serial
// variants are kept as the reference the parallel ones are tested against.
// Results are bitwise identical regardless of thread count.

#include <span>
#include <vector>

#include "arpsim/dynamics.hpp"

namespace arp {

// Final p_up for each sweep duration in `durations`; `base` supplies span,
// offset and direction.
std::vector<double> sweep_curve(std::span<const double> durations, const SweepProtocol& base,
                                const SpinSystemParams& p, const EvolutionSettings& opts = {});
std::vector<double> sweep_curve_serial(std::span<const double> durations,
                                       const SweepProtocol& base, const SpinSystemParams& p,
                                       const EvolutionSettings& opts = {});

struct SweepJob {
  SweepProtocol protocol;
  SpinSystemParams params;
};

// Heterogeneous batch, one simulate_sweep_pup per job.
std::vector<double> sweep_batch(std::span<const SweepJob> jobs, const EvolutionSettings& opts = {});
std::vector<double> sweep_batch_serial(std::span<const SweepJob> jobs,
                                       const EvolutionSettings& opts = {});

}  // namespace arp
