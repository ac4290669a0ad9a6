#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "arpsim/dynamics.hpp"
#include "arpsim/model.hpp"
#include "arpsim/units.hpp"

namespace arp {

/// Flat key-value run configuration. Every field has a default taken from
/// the reference device; a config file and then `--key value` overrides
/// replace them in that order. Unknown keys are errors.
struct RunConfig {
  // physics
  double b0 = 1.3;
  double a_hf = 114.4e6;
  double gamma_e = 27.97e9;
  double t2 = 44e-6;
  std::string dephasing_convention = "paper";
  // readout
  double f_up = 0.93;
  double background = 0.022;
  int shots = 100;
  // sweep
  double span = 25e6;
  double attenuation_db = 30.0;
  // integrator
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step_fraction = 1e-3;
  // spectra
  double snapshot_fwhm = 1.5e6;
  double snapshot_amplitude = 0.25;
  double splitting = 6.0e6;
  double peak_fwhm = 6.3e6;
  int n_spectra = 75;
  double minutes_per_spectrum = 660.0 / 75.0;
  double drift_correlation_min = 60.0;
  double freq_halfwidth = 20e6;
  int freq_points = 161;
  // run
  std::uint64_t seed = 1;
  std::string output_dir = ".";

  static const std::vector<std::string>& keys();

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  void load(std::istream& in);
  void load_file(const std::string& path);
  void validate() const;

  // "key=value" lines in key order; output_dir is excluded so the hash
  // only reflects what changes the numbers.
  std::string canonical() const;
  std::uint64_t hash() const;

  PhysConstants constants() const;
  SpinSystemParams spin_params(double nu1) const;
  ReadoutModel readout() const;
  EvolutionSettings evolution(double duration) const;
};

std::uint64_t fnv1a64(const std::string& s);

}  // namespace arp
