#pragma once

#include <Eigen/Core>
#include <complex>
#include <limits>

#include "arpsim/units.hpp"

namespace arp {

using Matrix2c = Eigen::Matrix2cd;
using Complex = std::complex<double>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Electron spin state in the basis (|up>, |down>); |up> is the +1
/// eigenstate of sigma_z. Construction validates Hermiticity, unit trace
/// and positivity.
class DensityMatrix2 {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-9;
  static constexpr double kPositivityTol = 1e-9;

  DensityMatrix2() : DensityMatrix2(spin_down()) {}
  explicit DensityMatrix2(const Matrix2c& m);

  static DensityMatrix2 spin_down();
  static DensityMatrix2 spin_up();
  // No validation; used by the integrator, which checks invariants itself.
  static DensityMatrix2 unchecked(const Matrix2c& m);

  const Matrix2c& matrix() const { return m_; }
  Complex operator()(int r, int c) const { return m_(r, c); }

  double p_up() const { return m_(0, 0).real(); }
  double purity() const;
  double min_eigenvalue() const;
  double trace_error() const;
  double hermiticity_error() const;

 private:
  struct NoCheck {};
  DensityMatrix2(const Matrix2c& m, NoCheck) : m_(m) {}
  Matrix2c m_;
};

// Smallest eigenvalue of a 2x2 Hermitian matrix, closed form.
double hermitian_min_eigenvalue(const Matrix2c& m);

enum class SweepDirection { up, down };

/// Linear frequency chirp. Detuning runs from center_offset - span/2 to
/// center_offset + span/2 (reversed for direction = down).
struct SweepProtocol {
  double span = 25e6;       // Hz
  double duration = 1e-6;   // s
  double center_offset = 0; // sweep center minus spin resonance, Hz
  SweepDirection direction = SweepDirection::up;

  void validate() const;
  double sweep_rate() const { return span / duration; }
};

double detuning_at(double t, const SweepProtocol& s);

enum class NuclearState { down, up };

struct SpinSystemParams {
  double b0 = 1.3;         // T
  double a_hf = 114.4e6;   // Hz
  NuclearState nuclear_state = NuclearState::down;
  double nu1 = 0.0;        // Hz
  double t2 = kInfinity;   // s; infinity disables dephasing

  void validate() const;
};

double esr_frequency(const SpinSystemParams& p, const PhysConstants& c = {});

/// Single-shot readout: F_up and the no-excitation tunnelling probability
/// P_upI. Only their product (the background) is measured directly.
struct ReadoutModel {
  double f_up = 0.93;
  double p_up_i = 0.022 / 0.93;
  int shots = 100;

  static ReadoutModel from_background(double f_up, double background, int shots = 100);
  double background() const { return f_up * p_up_i; }
  void validate() const;
};

}  // namespace arp
