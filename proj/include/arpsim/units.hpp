#pragma once

// Physical constants and the microwave power -> drive amplitude chain.
// Internally everything is SI: Hz, seconds, Tesla. Milliwatts only appear
// on the power side of the calibration.

namespace arp {

struct PhysConstants {
  double gamma_e = 27.97e9;  // Hz/T

  void validate() const;
};

struct PowerSetting {
  double p_mw_dbm = 0.0;         // at the source
  double attenuation_db = 30.0;  // source -> device

  void validate() const;
  double delivered_dbm() const { return p_mw_dbm - attenuation_db; }
  double delivered_mw() const;
};

double dbm_to_mw(double p_dbm);

// B1 = cal * sqrt(P_delivered / 1 mW). cal in T/sqrt(mW).
double b1_from_power(const PowerSetting& p, double cal);

// Calibration constant that maps `p` onto `b1`.
double calibration_for(const PowerSetting& p, double b1);

// Rotating-frame coupling nu1 = gamma_e * B1. The linearly polarized lab
// field is twice the rotating-frame amplitude; callers work with the
// rotating-frame value throughout.
double nu1_from_b1(double b1, const PhysConstants& c = {});
double b1_from_nu1(double nu1, const PhysConstants& c = {});

}  // namespace arp
