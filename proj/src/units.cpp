#include "arpsim/units.hpp"

#include <cmath>

#include "arpsim/errors.hpp"

namespace arp {

void PhysConstants::validate() const {
  if (!(gamma_e > 0.0) || !std::isfinite(gamma_e))
    throw DomainError("gamma_e must be positive and finite");
}

void PowerSetting::validate() const {
  if (std::isnan(p_mw_dbm) || p_mw_dbm == INFINITY)
    throw DomainError("source power must be finite or -inf");
  if (!(attenuation_db >= 0.0) || !std::isfinite(attenuation_db))
    throw DomainError("attenuation_db must be >= 0");
}

double PowerSetting::delivered_mw() const {
  validate();
  if (p_mw_dbm == -INFINITY) return 0.0;
  return dbm_to_mw(delivered_dbm());
}

double dbm_to_mw(double p_dbm) {
  if (!std::isfinite(p_dbm)) throw DomainError("dbm_to_mw: power must be finite");
  return std::pow(10.0, p_dbm / 10.0);
}

double b1_from_power(const PowerSetting& p, double cal) {
  if (!(cal > 0.0) || !std::isfinite(cal))
    throw DomainError("b1_from_power: calibration must be positive");
  return cal * std::sqrt(p.delivered_mw());
}

double calibration_for(const PowerSetting& p, double b1) {
  if (!(b1 > 0.0)) throw DomainError("calibration_for: b1 must be positive");
  const double mw = p.delivered_mw();
  if (!(mw > 0.0)) throw DomainError("calibration_for: zero delivered power");
  return b1 / std::sqrt(mw);
}

double nu1_from_b1(double b1, const PhysConstants& c) {
  c.validate();
  if (!(b1 >= 0.0) || !std::isfinite(b1)) throw DomainError("nu1_from_b1: b1 must be >= 0");
  return c.gamma_e * b1;
}

double b1_from_nu1(double nu1, const PhysConstants& c) {
  c.validate();
  if (!(nu1 >= 0.0) || !std::isfinite(nu1)) throw DomainError("b1_from_nu1: nu1 must be >= 0");
  return nu1 / c.gamma_e;
}

}  // namespace arp
