#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arpsim/dynamics.hpp"
#include "arpsim/lm.hpp"
#include "arpsim/readout.hpp"
#include "arpsim/units.hpp"

namespace arp {

/// R_up versus sweep time at one microwave power.
struct SweepDataset {
  PowerSetting power;
  std::vector<MeasuredPoint> points;
  double protocol_span = 25e6;
  double center_offset = 0.0;

  void validate() const;
};

// Shot-noise samples of the readout-composed curve `p_up` (one value per
// sweep time). Point i draws from seed stream derive_seed(seed, i).
SweepDataset synthesize_dataset(std::span<const double> ts, std::span<const double> p_up,
                                const PowerSetting& power, const ReadoutModel& readout,
                                std::uint64_t seed, double span = 25e6, double offset = 0.0);

struct FitResult {
  std::vector<double> b1_per_power;  // T, one per dataset
  double f_up = 0.93;
  double t2 = 44e-6;

  double residual_norm = 0.0;  // sqrt of the weighted sum of squares
  std::vector<double> b1_std_errors;
  double f_up_std_error = 0.0;
  double t2_std_error = 0.0;
  bool converged = false;
  bool rank_deficient = false;
  bool at_bound = false;
  std::vector<std::string> unidentifiable;  // e.g. "b1[0]", "f_up", "t2"
  int iterations = 0;
  std::vector<double> cost_history;
  // Model R_up at every data point, per dataset, at the optimum.
  std::vector<std::vector<double>> model;

  void validate() const;
};

enum class T2Parameterization { log, linear };

struct GlobalFitOptions {
  PhysConstants constants;
  EvolutionSettings ode = [] {
    EvolutionSettings s;
    s.rel_tol = 1e-10;
    s.abs_tol = 1e-12;
    return s;
  }();
  LmOptions lm = [] {
    LmOptions o;
    o.max_iterations = 100;
    o.ftol = 1e-10;
    o.xtol = 1e-10;
    o.gtol = 1e-10;
    return o;
  }();
  T2Parameterization t2_param = T2Parameterization::log;
  // Binomial weights are evaluated on the model: first at `init`, then
  // again at each pass's optimum.
  int weight_passes = 2;
  // A parameter whose standard error in its fit coordinate (log B1,
  // logit F_up, log T2) exceeds this is reported as unidentifiable.
  double identifiability_limit = 1.0;
};

// Readout-composed sweep response. The background F_up * P_upI is held
// fixed, so P_upI = background / f_up.
double forward_model(double ts, double b1, double f_up, double t2, double span, double offset,
                     double background, const PhysConstants& c = {},
                     const EvolutionSettings& ode = {});

std::vector<double> forward_curve(std::span<const double> ts, double b1, double f_up, double t2,
                                  double span, double offset, double background,
                                  const PhysConstants& c = {}, const EvolutionSettings& ode = {});

// Rough starting values: B1 per dataset from the readout-corrected
// half-inversion time through the Landau-Zener relation.
FitResult initial_guess(std::span<const SweepDataset> data, double background, double f_up = 0.93,
                        double t2 = 44e-6, const PhysConstants& c = {});

// Joint weighted least squares over all datasets: B1 per dataset, F_up and
// T2 shared.
FitResult fit_global(std::span<const SweepDataset> data, const FitResult& init,
                     double fixed_background, const GlobalFitOptions& opts = {});

struct SqrtPowerLaw {
  double slope = 0.0;  // T per sqrt(mW)
  double r_squared = 1.0;
  double max_relative_deviation = 0.0;
};

// B1 = slope * sqrt(P_delivered), through the origin. Residuals are
// weighted by 1/B1^2, i.e. relative deviations are minimized.
SqrtPowerLaw fit_sqrtp_law(std::span<const double> b1_values, std::span<const PowerSetting> powers);

}  // namespace arp
