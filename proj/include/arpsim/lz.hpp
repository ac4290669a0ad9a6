#pragma once

// Closed-form Landau-Zener results for an infinite linear sweep with
// coupling nu1 (Hz) and detuning rate d(Delta nu)/dt (Hz/s).

namespace arp {

struct LzPoint {
  double nu1;
  double rate;
  double p_diabatic;
};

// 4 pi^2 nu1^2 / rate.
double adiabaticity(double nu1, double rate);

// exp(-adiabaticity).
double landau_zener_pd(double nu1, double rate);

double inversion_prob_coherent(double nu1, double rate);

LzPoint lz_point(double nu1, double rate);

// Sweep time over `span` after which an initially down spin is up with
// probability p.
double sweep_time_for_up_prob(double p, double nu1, double span);

// Inversion fidelity of a resonant pulse with angle control fidelity fc:
// 0.5 cos((1 - fc) pi) + 0.5.
double inversion_fidelity_from_control(double fc);

}  // namespace arp
