#pragma once

#include <cstdint>

#include "arpsim/model.hpp"

namespace arp {

struct MeasuredPoint {
  double sweep_time = 0.0;  // s
  double r_up = 0.0;
  int shots = 1;
};

// R_up = F_up [P_up + (1 - P_up) P_upI].
double observe(double p_up, const ReadoutModel& m);

struct Corrected {
  double p_up;
  bool clamped;
};

// Inverse of observe, clamped to [0, 1].
Corrected correct(double r_up, const ReadoutModel& m);

// k ~ Binomial(m.shots, observe(p_up)); r_up = k / shots.
MeasuredPoint synthesize_shots(double p_up, const ReadoutModel& m, std::uint64_t seed,
                               double sweep_time = 0.0);

// Binomial variance of a measured fraction, floored at 1/shots^2 so
// that all-zero or all-one points keep a finite weight.
double binomial_variance(double r_up, int shots);

}  // namespace arp
