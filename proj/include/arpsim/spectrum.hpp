#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "arpsim/lm.hpp"
#include "arpsim/model.hpp"

namespace arp {

struct GaussianPeak {
  double amplitude = 0.0;
  double center = 0.0;  // Hz
  double fwhm = 1.0;    // Hz

  void validate() const;
  double value(double f) const;
};

/// Two Gaussian lines sharing one width, on a flat baseline. The
/// separation between the centers is the splitting.
struct BimodalModel {
  std::array<double, 2> amplitude{0.0, 0.0};
  std::array<double, 2> center{0.0, 0.0};
  double fwhm = 1.0;
  double baseline = 0.0;

  static BimodalModel symmetric(double mid, double splitting, double fwhm, double amplitude,
                                double baseline = 0.0);

  void validate() const;
  GaussianPeak peak(int i) const { return {amplitude[i], center[i], fwhm}; }
  double splitting() const { return std::abs(center[1] - center[0]); }
  double midpoint() const { return 0.5 * (center[0] + center[1]); }
  // Peaks ordered so that center[0] <= center[1].
  BimodalModel canonical() const;
};

double spectrum_value(double f, const BimodalModel& m);

// Width between the outermost half-maximum crossings, linearly
// interpolated. The half level sits halfway between `baseline` (defaults to
// the curve minimum) and the global maximum. Needs >= 100 samples with
// strictly increasing frequencies.
double fwhm_numeric(std::span<const double> freqs, std::span<const double> values,
                    std::optional<double> baseline = std::nullopt);

/// Stationary Ornstein-Uhlenbeck drift of the resonance (slow nuclear field).
struct DriftProcess {
  double stddev = 2.6e6;            // Hz
  double correlation_time = 3600.0; // s
  std::uint64_t seed = 0;

  void validate() const;
  // Values at t = 0, dt, 2 dt, ...; the first sample is drawn from the
  // stationary law. Exact discretization.
  std::vector<double> sample(std::size_t n, double dt) const;
};

// FWHM of a Gaussian with standard deviation sigma.
double gaussian_fwhm(double sigma);

// Drift stddev that broadens a snapshot line of width `snapshot_fwhm` into
// a time-averaged line of width `averaged_fwhm`.
double drift_stddev_for_fwhm(double snapshot_fwhm, double averaged_fwhm);

// Expected time-averaged line model (before readout) for a snapshot model
// broadened by Gaussian drift.
BimodalModel averaged_model(const BimodalModel& snapshot, const DriftProcess& d);

struct SpectrumPoint {
  double freq_hz = 0.0;
  double r_up = 0.0;
  int shots = 1;
};

struct SpectrumRow {
  double freq_hz = 0.0;
  double r_up = 0.0;
  int shots = 1;
  int snapshot_index = 0;
  double wallclock_min = 0.0;
};

struct SpectrumSeries {
  std::vector<SpectrumRow> rows;
  std::vector<double> drift;  // resonance shift per snapshot, Hz

  // Shot-weighted average over snapshots at each frequency.
  std::vector<SpectrumPoint> average() const;
};

std::vector<SpectrumPoint> average_spectrum(std::span<const SpectrumRow> rows);

struct SpectrumSynthOptions {
  int n_spectra = 75;
  int per_point_shots = 100;
  double minutes_per_spectrum = 660.0 / 75.0;
};

// Each snapshot scans `freq_grid` with the snapshot line model shifted by
// the drift at that snapshot; the spin-up probability passes through the
// readout model and is sampled with per_point_shots shots.
SpectrumSeries synth_spectrum_series(const BimodalModel& m, const DriftProcess& d,
                                     std::span<const double> freq_grid,
                                     const ReadoutModel& readout,
                                     const SpectrumSynthOptions& opts = {});

struct BimodalFit {
  BimodalModel model;  // canonical
  double amplitude_err[2] = {0.0, 0.0};
  double center_err[2] = {0.0, 0.0};
  double fwhm_err = 0.0;
  double baseline_err = 0.0;
  double splitting_err = 0.0;
  // Cost increase, in units of the reduced chi-square, when both lines are
  // forced onto one center. Near zero splitting the linearized error is
  // unreliable, so splitting_err is at least splitting / sqrt(this).
  double merge_delta_chi2 = 0.0;
  double residual_sum = 0.0;  // weighted sum of squares
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;
};

// Starting point: the two highest local maxima of a 5-point smoothed
// curve, width half the numeric FWHM; a symmetric split around the main
// peak when only one maximum stands out.
BimodalModel guess_bimodal(std::span<const SpectrumPoint> data);

// Binomially weighted least squares, Levenberg-Marquardt.
BimodalFit fit_bimodal(std::span<const SpectrumPoint> data, const BimodalModel& init,
                       const LmOptions& opts = {});

}  // namespace arp
