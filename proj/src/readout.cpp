#include "arpsim/readout.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "arpsim/errors.hpp"
#include "arpsim/rng.hpp"

namespace arp {

double observe(double p_up, const ReadoutModel& m) {
  m.validate();
  if (!(p_up >= 0.0 && p_up <= 1.0)) throw DomainError("observe: p_up must lie in [0, 1]");
  return m.f_up * (p_up + (1.0 - p_up) * m.p_up_i);
}

Corrected correct(double r_up, const ReadoutModel& m) {
  m.validate();
  if (!(r_up >= 0.0 && r_up <= 1.0)) throw DomainError("correct: r_up must lie in [0, 1]");
  if (m.f_up == 0.0 || m.p_up_i == 1.0) throw DomainError("correct: degenerate readout model");
  const double p = (r_up / m.f_up - m.p_up_i) / (1.0 - m.p_up_i);
  const double c = std::clamp(p, 0.0, 1.0);
  return {c, c != p};
}

MeasuredPoint synthesize_shots(double p_up, const ReadoutModel& m, std::uint64_t seed,
                               double sweep_time) {
  const double q = observe(p_up, m);
  auto eng = make_engine(seed, streams::kShots);
  std::binomial_distribution<int> dist(m.shots, std::clamp(q, 0.0, 1.0));
  const int k = dist(eng);
  return {sweep_time, static_cast<double>(k) / m.shots, m.shots};
}

double binomial_variance(double r_up, int shots) {
  if (shots < 1) throw DomainError("binomial_variance: shots must be >= 1");
  const double n = shots;
  return std::max(r_up * (1.0 - r_up), 1.0 / (n * n)) / n;
}

}  // namespace arp
