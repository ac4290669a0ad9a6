#include "arpsim/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

#include "arpsim/errors.hpp"

namespace arp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const Complex kI(0.0, 1.0);

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b_hat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class SweepRhs {
 public:
  SweepRhs(const SweepProtocol& s, const SpinSystemParams& p, DephasingConvention conv)
      : nu1_(p.nu1), t2_(p.t2), conv_(conv) {
    const double sign = s.direction == SweepDirection::up ? 1.0 : -1.0;
    start_ = s.center_offset - sign * 0.5 * s.span;
    slope_ = sign * s.sweep_rate();
  }

  Matrix2c operator()(double t, const Matrix2c& rho) const {
    const double delta = start_ + slope_ * t;
    Matrix2c h;
    h << 0.5 * delta, nu1_, nu1_, -0.5 * delta;
    return lindblad_rhs(rho, h, t2_, conv_);
  }

 private:
  double start_ = 0.0;
  double slope_ = 0.0;
  double nu1_;
  double t2_;
  DephasingConvention conv_;
};

double error_norm(const Matrix2c& err, const Matrix2c& y0, const Matrix2c& y1, double rtol,
                  double atol) {
  double acc = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Complex e = err(k), a = y0(k), b = y1(k);
    const double sr = atol + rtol * std::max(std::abs(a.real()), std::abs(b.real()));
    const double si = atol + rtol * std::max(std::abs(a.imag()), std::abs(b.imag()));
    acc += (e.real() / sr) * (e.real() / sr) + (e.imag() / si) * (e.imag() / si);
  }
  return std::sqrt(acc / 8.0);
}

void check_invariants(const Matrix2c& rho, double t) {
  if (!rho.allFinite()) throw NumericalInstability("non-finite density matrix", t);
  if (std::abs(rho.trace() - Complex(1.0, 0.0)) > DensityMatrix2::kTraceTol)
    throw NumericalInstability("trace drifted beyond 1e-9", t);
  if (hermitian_min_eigenvalue(rho) < -1e-8)
    throw NumericalInstability("density matrix lost positivity", t);
}

}  // namespace

void EvolutionSettings::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("tolerances must be > 0");
  if (!(max_step >= 0.0) || !std::isfinite(max_step)) throw DomainError("max_step must be > 0");
  if (!(max_step_fraction > 0.0 && max_step_fraction <= 1.0))
    throw DomainError("max_step_fraction must lie in (0, 1]");
  if (max_steps == 0) throw DomainError("max_steps must be > 0");
}

Matrix2c hamiltonian_at(double t, const SweepProtocol& s, double nu1) {
  const double delta = detuning_at(t, s);
  Matrix2c h;
  h << 0.5 * delta, nu1, nu1, -0.5 * delta;
  return h;
}

Matrix2c lindblad_rhs(const Matrix2c& rho, const Matrix2c& h, double t2, DephasingConvention conv) {
  if (!(t2 > 0.0)) throw DomainError("lindblad_rhs: t2 must be > 0");
  Matrix2c d = (-kTwoPi * kI) * (h * rho - rho * h);
  if (std::isfinite(t2)) {
    // sz rho sz - rho only touches the coherences: -2 rho_01, -2 rho_10.
    const double kappa = conv == DephasingConvention::paper ? 1.0 / t2 : 0.5 / t2;
    d(0, 1) -= 2.0 * kappa * rho(0, 1);
    d(1, 0) -= 2.0 * kappa * rho(1, 0);
  }
  return d;
}

Trajectory evolve(const DensityMatrix2& rho0, const SweepProtocol& s, const SpinSystemParams& p,
                  const EvolutionSettings& opts) {
  s.validate();
  p.validate();
  opts.validate();

  const double t_end = s.duration;
  const double h_max =
      opts.max_step > 0.0 ? std::min(opts.max_step, t_end) : t_end * opts.max_step_fraction;
  const SweepRhs f(s, p, opts.dephasing);

  Trajectory tr;
  auto record = [&](double t, const Matrix2c& m) {
    tr.times.push_back(t);
    tr.states.push_back(DensityMatrix2::unchecked(m));
    tr.p_up.push_back(m(0, 0).real());
  };

  Matrix2c y = rho0.matrix();
  double t = 0.0;
  record(t, y);

  const bool adaptive = opts.method == StepMethod::adaptive;
  double h = adaptive ? h_max * 1e-2 : h_max;
  Matrix2c k1 = f(t, y);

  while (t < t_end) {
    if (tr.accepted_steps + tr.rejected_steps >= opts.max_steps)
      throw IntegrationFailure("step budget exhausted", t);
    bool last = false;
    if (t + h >= t_end) {
      h = t_end - t;
      last = true;
    }
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(t, h_max))
      throw IntegrationFailure("step size underflow", t);

    const Matrix2c k2 = f(t + c2 * h, y + h * (a21 * k1));
    const Matrix2c k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Matrix2c k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Matrix2c k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Matrix2c k6 =
        f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Matrix2c y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double t_new = last ? t_end : t + h;
    const Matrix2c k7 = f(t_new, y_new);

    double h_next = h_max;
    if (adaptive) {
      const Matrix2c err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double en = error_norm(err, y, y_new, opts.rel_tol, opts.abs_tol);
      const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (en > 1.0) {
        ++tr.rejected_steps;
        h *= std::min(factor, 0.9);
        continue;
      }
      h_next = std::min(h * factor, h_max);
    }

    y_new = 0.5 * (y_new + y_new.adjoint()).eval();
    check_invariants(y_new, t_new);
    y = y_new;
    t = t_new;
    // Re-symmetrization changes y slightly, so k7 is only reusable when it
    // did not move; recomputing is cheap for a 2x2 system.
    k1 = f(t, y);
    ++tr.accepted_steps;
    if (opts.store_trajectory || t >= t_end) record(t, y);
    if (!last) h = h_next;
  }
  return tr;
}

double simulate_sweep_pup(const SweepProtocol& s, const SpinSystemParams& p,
                          const EvolutionSettings& opts) {
  EvolutionSettings o = opts;
  o.store_trajectory = false;
  return std::clamp(evolve(DensityMatrix2::spin_down(), s, p, o).final_state().p_up(), 0.0, 1.0);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "time_s,rho00_re,rho01_re,rho01_im,rho11_re,p_up\n";
  char buf[256];
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const auto& m = tr.states[i].matrix();
    std::snprintf(buf, sizeof buf, "%.12e,%.15g,%.15g,%.15g,%.15g,%.15g\n", tr.times[i],
                  m(0, 0).real(), m(0, 1).real(), m(0, 1).imag(), m(1, 1).real(), tr.p_up[i]);
    os << buf;
  }
}

}  // namespace arp
