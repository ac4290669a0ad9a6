#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "arpsim/errors.hpp"
#include "arpsim/units.hpp"

using namespace arp;

TEST_CASE("dbm_to_mw") {
  CHECK(dbm_to_mw(0.0) == 1.0);
  CHECK(dbm_to_mw(-4.0) == doctest::Approx(0.398107).epsilon(1e-5));
  CHECK(dbm_to_mw(5.0) == doctest::Approx(3.162278).epsilon(1e-6));
  CHECK_THROWS_AS(dbm_to_mw(NAN), DomainError);

  // +3 dB is a factor 10^0.3 everywhere, and the map is strictly increasing.
  for (double a = -60.0; a <= 30.0; a += 7.3) {
    CHECK(dbm_to_mw(a + 3.0) / dbm_to_mw(a) == doctest::Approx(1.99526).epsilon(1e-5));
    CHECK(dbm_to_mw(a + 1e-3) > dbm_to_mw(a));
  }
}

TEST_CASE("b1 follows the square root of delivered power") {
  const PowerSetting low{-4.0, 30.0};
  const double cal = calibration_for(low, 8.8e-6);
  CHECK(b1_from_power(low, cal) == doctest::Approx(8.8e-6));
  // 9 dB more power -> sqrt(10^0.9)
  CHECK(b1_from_power({5.0, 30.0}, cal) == doctest::Approx(8.8e-6 * std::pow(10.0, 9.0 / 20.0)));
  CHECK(b1_from_power({5.0, 30.0}, cal) == doctest::Approx(24.80e-6).epsilon(1e-3));

  // Doubling delivered power multiplies B1 by sqrt(2); B1^2 is linear in mW.
  const PowerSetting p1{0.0, 10.0};
  const PowerSetting p2{10.0 * std::log10(2.0), 10.0};
  CHECK(b1_from_power(p2, 1e-5) / b1_from_power(p1, 1e-5) == doctest::Approx(std::sqrt(2.0)));
  for (double dbm : {-20.0, -3.0, 4.0, 11.0}) {
    const PowerSetting p{dbm, 30.0};
    const double b = b1_from_power(p, 2e-4);
    CHECK(b * b / p.delivered_mw() == doctest::Approx(4e-8));
  }

  CHECK(b1_from_power({-INFINITY, 30.0}, cal) == 0.0);
  CHECK(b1_from_power({-300.0, 30.0}, cal) < 1e-18);
  CHECK_THROWS_AS(b1_from_power(low, 0.0), DomainError);
  CHECK_THROWS_AS(b1_from_power(low, -1.0), DomainError);
  CHECK_THROWS_AS(b1_from_power({0.0, -1.0}, 1.0), DomainError);
}

TEST_CASE("nu1_from_b1") {
  CHECK(nu1_from_b1(8.8e-6) == doctest::Approx(246.136e3));
  CHECK(nu1_from_b1(30e-6) == doctest::Approx(839.1e3));
  CHECK(nu1_from_b1(0.0) == 0.0);
  CHECK_THROWS_AS(nu1_from_b1(-1e-6), DomainError);
  CHECK_THROWS_AS(nu1_from_b1(1e-6, PhysConstants{0.0}), DomainError);
  // linear and homogeneous
  CHECK(nu1_from_b1(3e-6 + 5e-6) == doctest::Approx(nu1_from_b1(3e-6) + nu1_from_b1(5e-6)));
  CHECK(nu1_from_b1(7.0 * 2e-6) == doctest::Approx(7.0 * nu1_from_b1(2e-6)));
  CHECK(b1_from_nu1(nu1_from_b1(12e-6)) == doctest::Approx(12e-6));
}
