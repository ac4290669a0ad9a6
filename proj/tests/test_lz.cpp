#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "arpsim/errors.hpp"
#include "arpsim/lz.hpp"
#include "arpsim/units.hpp"

using namespace arp;

TEST_CASE("landau_zener_pd") {
  CHECK(landau_zener_pd(0.0, 1e12) == 1.0);
  CHECK(landau_zener_pd(242e3, 25e6 / 7.5e-6) == doctest::Approx(0.500).epsilon(2e-3));
  const double pd = landau_zener_pd(839.1e3, 25e6 / 6e-6);
  CHECK(pd == doctest::Approx(1.27e-3).epsilon(1e-2));
  CHECK(std::log(pd) == doctest::Approx(-6.67).epsilon(1e-3));
  CHECK_THROWS_AS(landau_zener_pd(1e5, 0.0), DomainError);
  CHECK_THROWS_AS(landau_zener_pd(1e5, -1.0), DomainError);
  CHECK_THROWS_AS(landau_zener_pd(-1.0, 1e12), DomainError);
}

TEST_CASE("inversion_prob_coherent and adiabaticity") {
  CHECK(inversion_prob_coherent(0.0, 1e12) == 0.0);
  CHECK(inversion_prob_coherent(839.1e3, 25e6 / 6e-6) == doctest::Approx(0.9987).epsilon(1e-4));
  CHECK(adiabaticity(839.1e3, 25e6 / 6e-6) == doctest::Approx(6.67).epsilon(1e-3));
  CHECK(adiabaticity(1e6, 1e300) < 1e-280);

  // adiabaticity = ln 2 exactly when P_D = 1/2
  const double rate = 3e12;
  const double nu1 = std::sqrt(std::log(2.0) * rate) / (2.0 * M_PI);
  CHECK(adiabaticity(nu1, rate) == doctest::Approx(std::log(2.0)));
  CHECK(landau_zener_pd(nu1, rate) == doctest::Approx(0.5));
  CHECK(inversion_prob_coherent(nu1, rate) == doctest::Approx(0.5));
}

TEST_CASE("sweep_time_for_up_prob") {
  CHECK(sweep_time_for_up_prob(0.5, 246.1e3, 25e6) == doctest::Approx(7.25e-6).epsilon(2e-3));
  CHECK(sweep_time_for_up_prob(0.5, 839.1e3, 25e6) == doctest::Approx(0.623e-6).epsilon(2e-3));
  CHECK(sweep_time_for_up_prob(1e-12, 246.1e3, 25e6) < 1e-15);
  CHECK_THROWS_AS(sweep_time_for_up_prob(0.0, 1e5, 1e6), DomainError);
  CHECK_THROWS_AS(sweep_time_for_up_prob(1.0, 1e5, 1e6), DomainError);
  CHECK_THROWS_AS(sweep_time_for_up_prob(0.5, 0.0, 1e6), DomainError);
}

TEST_CASE("LZ properties on random draws") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lnu(std::log(1e3), std::log(5e6));
  std::uniform_real_distribution<double> lrate(std::log(1e9), std::log(1e16));
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 500; ++i) {
    const double nu1 = std::exp(lnu(rng)), rate = std::exp(lrate(rng)), k = std::exp(lnu(rng) - 9.0);
    CHECK(landau_zener_pd(nu1, rate) + inversion_prob_coherent(nu1, rate) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(landau_zener_pd(k * nu1, k * k * rate) ==
          doctest::Approx(landau_zener_pd(nu1, rate)).epsilon(1e-12));
    CHECK(landau_zener_pd(nu1 * 1.01, rate) <= landau_zener_pd(nu1, rate));
    CHECK(landau_zener_pd(nu1, rate * 1.01) >= landau_zener_pd(nu1, rate));

    const double p = u(rng), span = 25e6;
    const double ts = sweep_time_for_up_prob(p, nu1, span);
    CHECK(landau_zener_pd(nu1, span / ts) == doctest::Approx(1.0 - p).epsilon(1e-12));
  }
}

TEST_CASE("resonant-pulse fidelity conversion") {
  CHECK(inversion_fidelity_from_control(0.57) == doctest::Approx(0.609).epsilon(1e-3));
  CHECK(inversion_fidelity_from_control(1.0) == 1.0);
  CHECK(inversion_fidelity_from_control(0.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(inversion_fidelity_from_control(1.5), DomainError);
}
