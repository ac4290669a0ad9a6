#include "arpsim/lz.hpp"

#include <cmath>
#include <numbers>

#include "arpsim/errors.hpp"

namespace arp {

namespace {
constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

void check_domain(double nu1, double rate) {
  if (!(nu1 >= 0.0) || !std::isfinite(nu1)) throw DomainError("nu1 must be >= 0");
  if (!(rate > 0.0) || std::isnan(rate)) throw DomainError("sweep rate must be > 0");
}
}  // namespace

double adiabaticity(double nu1, double rate) {
  check_domain(nu1, rate);
  return kFourPiSq * nu1 * nu1 / rate;
}

double landau_zener_pd(double nu1, double rate) { return std::exp(-adiabaticity(nu1, rate)); }

double inversion_prob_coherent(double nu1, double rate) {
  return -std::expm1(-adiabaticity(nu1, rate));
}

LzPoint lz_point(double nu1, double rate) { return {nu1, rate, landau_zener_pd(nu1, rate)}; }

double sweep_time_for_up_prob(double p, double nu1, double span) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("target probability must lie in (0, 1)");
  if (!(nu1 > 0.0) || !std::isfinite(nu1)) throw DomainError("nu1 must be > 0 for a finite sweep time");
  if (!(span > 0.0) || !std::isfinite(span)) throw DomainError("span must be > 0");
  return -span * std::log1p(-p) / (kFourPiSq * nu1 * nu1);
}

double inversion_fidelity_from_control(double fc) {
  if (!(fc >= 0.0 && fc <= 1.0)) throw DomainError("control fidelity must lie in [0, 1]");
  return 0.5 * std::cos((1.0 - fc) * std::numbers::pi) + 0.5;
}

}  // namespace arp
