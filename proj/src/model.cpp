#include "arpsim/model.hpp"

#include <cmath>

#include "arpsim/errors.hpp"

namespace arp {

double hermitian_min_eigenvalue(const Matrix2c& m) {
  const double a = m(0, 0).real();
  const double d = m(1, 1).real();
  const double half_gap = std::hypot(0.5 * (a - d), std::abs(m(0, 1)));
  return 0.5 * (a + d) - half_gap;
}

DensityMatrix2::DensityMatrix2(const Matrix2c& m) : m_(m) {
  if (!m_.allFinite()) throw DomainError("density matrix has non-finite entries");
  if (hermiticity_error() > kHermitianTol) throw DomainError("density matrix is not Hermitian");
  if (trace_error() > kTraceTol) throw DomainError("density matrix trace differs from 1");
  if (min_eigenvalue() < -kPositivityTol) throw DomainError("density matrix is not positive");
}

DensityMatrix2 DensityMatrix2::spin_down() {
  Matrix2c m = Matrix2c::Zero();
  m(1, 1) = 1.0;
  return DensityMatrix2(m, NoCheck{});
}

DensityMatrix2 DensityMatrix2::spin_up() {
  Matrix2c m = Matrix2c::Zero();
  m(0, 0) = 1.0;
  return DensityMatrix2(m, NoCheck{});
}

DensityMatrix2 DensityMatrix2::unchecked(const Matrix2c& m) { return DensityMatrix2(m, NoCheck{}); }

double DensityMatrix2::purity() const { return (m_ * m_).trace().real(); }

double DensityMatrix2::min_eigenvalue() const { return hermitian_min_eigenvalue(m_); }

double DensityMatrix2::trace_error() const { return std::abs(m_.trace() - Complex(1.0, 0.0)); }

double DensityMatrix2::hermiticity_error() const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

void SweepProtocol::validate() const {
  if (!(span > 0.0) || !std::isfinite(span)) throw DomainError("sweep span must be > 0");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw DomainError("sweep duration must be > 0");
  if (!std::isfinite(center_offset)) throw DomainError("center offset must be finite");
  if (!std::isfinite(sweep_rate())) throw DomainError("sweep rate is not finite");
}

double detuning_at(double t, const SweepProtocol& s) {
  s.validate();
  if (!(t >= 0.0 && t <= s.duration)) throw DomainError("detuning_at: t outside sweep window");
  const double ramp = -0.5 * s.span + s.sweep_rate() * t;
  return s.center_offset + (s.direction == SweepDirection::up ? ramp : -ramp);
}

void SpinSystemParams::validate() const {
  if (!(b0 > 0.0) || !std::isfinite(b0)) throw DomainError("b0 must be > 0");
  if (!(a_hf >= 0.0) || !std::isfinite(a_hf)) throw DomainError("a_hf must be >= 0");
  if (!(nu1 >= 0.0) || !std::isfinite(nu1)) throw DomainError("nu1 must be >= 0");
  if (!(t2 > 0.0)) throw DomainError("t2 must be > 0 (or infinite)");
}

double esr_frequency(const SpinSystemParams& p, const PhysConstants& c) {
  p.validate();
  c.validate();
  const double zeeman = c.gamma_e * p.b0;
  return p.nuclear_state == NuclearState::down ? zeeman - 0.5 * p.a_hf : zeeman + 0.5 * p.a_hf;
}

ReadoutModel ReadoutModel::from_background(double f_up, double background, int shots) {
  if (!(f_up > 0.0)) throw DomainError("from_background: f_up must be > 0");
  ReadoutModel m{f_up, background / f_up, shots};
  m.validate();
  return m;
}

void ReadoutModel::validate() const {
  if (!(f_up >= 0.0 && f_up <= 1.0)) throw DomainError("f_up must lie in [0, 1]");
  if (!(p_up_i >= 0.0 && p_up_i <= 1.0)) throw DomainError("p_up_i must lie in [0, 1]");
  if (shots < 1) throw DomainError("shots must be >= 1");
}

}  // namespace arp
