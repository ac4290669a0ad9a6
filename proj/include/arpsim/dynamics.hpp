#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "arpsim/model.hpp"

namespace arp {

// Coherence decay rate of the sigma_z dephaser: `paper` keeps the operator
// (1/2T2)(2 sz rho sz - sz sz rho - rho sz sz) literally, which damps the
// off-diagonals at 2/T2; `conventional` damps them at 1/T2.
enum class DephasingConvention { paper, conventional };

enum class StepMethod { fixed, adaptive };

struct EvolutionSettings {
  StepMethod method = StepMethod::adaptive;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 0.0;  // seconds; 0 selects duration * max_step_fraction
  double max_step_fraction = 1e-3;
  bool store_trajectory = false;
  DephasingConvention dephasing = DephasingConvention::paper;
  std::uint64_t max_steps = 2'000'000'000;

  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix2> states;
  std::vector<double> p_up;
  std::uint64_t accepted_steps = 0;
  std::uint64_t rejected_steps = 0;

  const DensityMatrix2& final_state() const { return states.back(); }
};

// H(t) = 1/2 Delta(t) sigma_z + nu1 sigma_x, in Hz.
Matrix2c hamiltonian_at(double t, const SweepProtocol& s, double nu1);

// d rho/dt = -i 2 pi [H, rho] + L(rho). t2 = infinity skips L.
Matrix2c lindblad_rhs(const Matrix2c& rho, const Matrix2c& h, double t2,
                      DephasingConvention conv = DephasingConvention::paper);

Trajectory evolve(const DensityMatrix2& rho0, const SweepProtocol& s, const SpinSystemParams& p,
                  const EvolutionSettings& opts = {});

// Final rho_00 for a spin loaded in |down>.
double simulate_sweep_pup(const SweepProtocol& s, const SpinSystemParams& p,
                          const EvolutionSettings& opts = {});

// Columns: time_s,rho00_re,rho01_re,rho01_im,rho11_re,p_up
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

}  // namespace arp
