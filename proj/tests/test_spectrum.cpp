#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "arpsim/errors.hpp"
#include "arpsim/readout.hpp"
#include "arpsim/rng.hpp"
#include "arpsim/spectrum.hpp"
#include "oracles.hpp"

using namespace arp;

namespace {

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

std::vector<double> eval(const std::vector<double>& f, const BimodalModel& m) {
  std::vector<double> v;
  for (double x : f) v.push_back(spectrum_value(x, m));
  return v;
}

std::vector<SpectrumPoint> noisy(const BimodalModel& m, const std::vector<double>& f, int shots,
                                 std::uint64_t seed) {
  auto eng = make_engine(seed, 99);
  std::vector<SpectrumPoint> out;
  for (double x : f) {
    std::binomial_distribution<int> b(shots, spectrum_value(x, m));
    out.push_back({x, static_cast<double>(b(eng)) / shots, shots});
  }
  return out;
}

struct Stats {
  double mean, sd;
};

Stats stats(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / (v.size() - 1))};
}

}  // namespace

TEST_CASE("spectrum_value") {
  const auto far = BimodalModel::symmetric(0.0, 200e6, 6.3e6, 0.3, 0.02);
  CHECK(spectrum_value(far.center[0], far) == doctest::Approx(0.32).epsilon(1e-12));
  const auto m = BimodalModel::symmetric(5e6, 6e6, 6.3e6, 0.25, 0.01);
  const double ratio = 6.0 / 6.3;
  CHECK(spectrum_value(5e6, m) ==
        doctest::Approx(0.01 + 0.5 * std::exp(-std::log(2.0) * ratio * ratio)).epsilon(1e-12));
  for (double f = -200e6; f <= 200e6; f += 1e6) CHECK(spectrum_value(f, m) >= m.baseline);
  CHECK(spectrum_value(1e12, m) == doctest::Approx(0.01));

  // label symmetry
  BimodalModel sw = m;
  std::swap(sw.center[0], sw.center[1]);
  std::swap(sw.amplitude[0], sw.amplitude[1]);
  for (double f = -20e6; f <= 20e6; f += 0.37e6) CHECK(std::abs(spectrum_value(f, sw) - spectrum_value(f, m)) < 1e-15);
  const auto c = sw.canonical();
  CHECK(c.center[0] <= c.center[1]);

  GaussianPeak g{0.4, 1e6, 2e6};
  CHECK(g.value(1e6) == 0.4);
  CHECK(g.value(2e6) == doctest::Approx(0.2));
  CHECK_THROWS_AS(BimodalModel::symmetric(0.0, 1e6, 0.0, 0.2), DomainError);
  CHECK_THROWS_AS(BimodalModel::symmetric(0.0, 1e6, 1e6, -0.2), DomainError);
}

TEST_CASE("fwhm_numeric") {
  const auto f = grid(-40e6, 40e6, 4001);
  SUBCASE("single Gaussian") {
    const auto m = BimodalModel::symmetric(0.0, 0.0, 6.3e6, 0.25);
    CHECK(std::abs(fwhm_numeric(f, eval(f, m)) - 6.3e6) < 0.05e6);
  }
  SUBCASE("two Gaussians 6.3 MHz wide, 6.0 MHz apart") {
    const auto m = BimodalModel::symmetric(0.0, 6e6, 6.3e6, 0.25);
    const double w = fwhm_numeric(f, eval(f, m));
    // Bisection on the analytic sum; frozen value from an independent
    // root-finder: 11.85117519570715 MHz.
    const double ref = oracle::bisect_fwhm([&](double x) { return spectrum_value(x, m); }, 0.0, -40e6, 40e6);
    CHECK(ref == doctest::Approx(11.85117519570715e6).epsilon(1e-9));
    CHECK(std::abs(w - ref) < 0.01e6);
    CHECK(std::abs(w - 11.9e6) < 0.1e6);
  }
  SUBCASE("baseline offset does not change the width") {
    const auto m0 = BimodalModel::symmetric(0.0, 6e6, 6.3e6, 0.25);
    const auto m1 = BimodalModel::symmetric(0.0, 6e6, 6.3e6, 0.25, 0.05);
    CHECK(fwhm_numeric(f, eval(f, m1)) == doctest::Approx(fwhm_numeric(f, eval(f, m0))));
    CHECK(fwhm_numeric(f, eval(f, m1), 0.05) == doctest::Approx(fwhm_numeric(f, eval(f, m0))));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(fwhm_numeric(grid(0, 1, 50), std::vector<double>(50, 1.0)), DomainError);
    CHECK_THROWS_AS(fwhm_numeric(f, std::vector<double>(f.size(), 0.3)), CurveShapeError);
    // peak cut off at the grid edge: no crossing on the left
    const auto edge = BimodalModel::symmetric(-40e6, 0.0, 30e6, 0.3);
    CHECK_THROWS_AS(fwhm_numeric(f, eval(f, edge)), CurveShapeError);
    std::vector<double> rev(f.rbegin(), f.rend());
    CHECK_THROWS_AS(fwhm_numeric(rev, eval(rev, edge)), DomainError);
  }
}

TEST_CASE("drift process") {
  DriftProcess d{2.6e6, 3600.0, 11};
  const auto x = d.sample(10000, 3600.0 / 20.0);
  double s2 = 0.0;
  for (double v : x) s2 += v * v;
  // Correlated samples: 10^4 steps at dt = tau/20 still give ~250
  // independent draws, so a long run is needed for the 5 % band.
  const auto y = d.sample(200000, 3600.0 / 20.0);
  double t2 = 0.0;
  for (double v : y) t2 += v * v;
  CHECK(std::abs(std::sqrt(t2 / y.size()) / 2.6e6 - 1.0) < 0.05);

  DriftProcess fast{2.6e6, 3600.0, 12};
  const auto z = fast.sample(10000, 10.0 * 3600.0);
  double m = 0.0, v2 = 0.0;
  for (double v : z) m += v;
  m /= z.size();
  for (double v : z) v2 += (v - m) * (v - m);
  CHECK(std::abs(std::sqrt(v2 / (z.size() - 1)) / 2.6e6 - 1.0) < 0.05);
  CHECK(d.sample(5, 1.0) == d.sample(5, 1.0));

  DriftProcess frozen{0.0, 3600.0, 3};
  for (double v : frozen.sample(20, 60.0)) CHECK(v == 0.0);
  CHECK_THROWS_AS((DriftProcess{-1.0, 3600.0, 0}.sample(3, 1.0)), DomainError);
  CHECK_THROWS_AS((DriftProcess{1.0, 0.0, 0}.sample(3, 1.0)), DomainError);

  CHECK(gaussian_fwhm(1.0) == doctest::Approx(2.0 * std::sqrt(2.0 * std::log(2.0))));
  const double sd = drift_stddev_for_fwhm(1.5e6, 6.3e6);
  CHECK(std::hypot(1.5e6, gaussian_fwhm(sd)) == doctest::Approx(6.3e6));
  CHECK(sd == doctest::Approx(2.6e6).epsilon(0.01));
  const auto avg = averaged_model(BimodalModel::symmetric(0.0, 6e6, 1.5e6, 0.25), {sd, 3600.0, 0});
  CHECK(avg.fwhm == doctest::Approx(6.3e6));
  CHECK(avg.amplitude[0] == doctest::Approx(0.25 * 1.5 / 6.3));
}

TEST_CASE("synthetic spectrum series") {
  const auto snap = BimodalModel::symmetric(0.0, 6e6, 1.5e6, 0.25);
  const auto f = grid(-20e6, 20e6, 161);
  const ReadoutModel ro;
  SUBCASE("frozen bath gives identical snapshots") {
    SpectrumSynthOptions o;
    o.n_spectra = 4;
    o.per_point_shots = 100000;
    const auto s = synth_spectrum_series(snap, {0.0, 3600.0, 5}, f, ro, o);
    CHECK(s.rows.size() == 4 * f.size());
    for (double d : s.drift) CHECK(d == 0.0);
    for (std::size_t j = 0; j < f.size(); ++j)
      for (int k = 1; k < 4; ++k)
        CHECK(std::abs(s.rows[k * f.size() + j].r_up - s.rows[j].r_up) < 0.01);
  }
  SUBCASE("layout and determinism") {
    const DriftProcess d{2.6e6, 3600.0, 9};
    const auto a = synth_spectrum_series(snap, d, f, ro);
    const auto b = synth_spectrum_series(snap, d, f, ro);
    CHECK(a.rows.size() == 75 * f.size());
    CHECK(a.drift.size() == 75);
    bool same = true;
    for (std::size_t i = 0; i < a.rows.size(); ++i) same &= a.rows[i].r_up == b.rows[i].r_up;
    CHECK(same);
    CHECK(a.rows.back().snapshot_index == 74);
    CHECK(a.rows.back().wallclock_min < 660.0);
    CHECK(a.rows.back().wallclock_min > 650.0);
    const auto avg = a.average();
    CHECK(avg.size() == f.size());
    CHECK(avg[0].shots == 7500);
    const auto other = synth_spectrum_series(snap, {2.6e6, 3600.0, 10}, f, ro);
    CHECK(other.drift != a.drift);
  }
  SUBCASE("envelope width over many series") {
    // Per series the width scatters with the realised drift; on average
    // the fitted envelope sits within 10 % of 11.9 MHz.
    const DriftProcess base{drift_stddev_for_fwhm(1.5e6, 6.3e6), 3600.0, 0};
    const auto dense = grid(-40e6, 40e6, 2001);
    std::vector<double> widths;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      DriftProcess d = base;
      d.seed = seed;
      const auto avg = synth_spectrum_series(snap, d, f, ro).average();
      const auto fit = fit_bimodal(avg, guess_bimodal(avg));
      widths.push_back(fwhm_numeric(dense, eval(dense, fit.model)));
    }
    const auto s = stats(widths);
    MESSAGE("fitted envelope FWHM over 50 series: " << s.mean / 1e6 << " +- " << s.sd / 1e6 << " MHz");
    CHECK(std::abs(s.mean - 11.9e6) < 0.1 * 11.9e6);
  }
  SUBCASE("peak height of the average") {
    // observe(0.5) diluted by the drift envelope
    const DriftProcess d{drift_stddev_for_fwhm(1.5e6, 6.3e6), 60.0, 4};
    SpectrumSynthOptions o;
    o.n_spectra = 2000;
    const auto avg = synth_spectrum_series(snap, d, f, ro, o).average();
    const auto env = averaged_model(snap, d);
    double top = 0.0;
    for (const auto& p : avg) top = std::max(top, p.r_up);
    double expect = 0.0;
    for (double x : f) expect = std::max(expect, observe(spectrum_value(x, env), ro));
    CHECK(std::abs(top - expect) < 0.01);
  }
  CHECK_THROWS_AS(synth_spectrum_series(snap, {}, std::vector<double>{2.0, 1.0}, ro), DomainError);
  SpectrumSynthOptions none;
  none.n_spectra = 0;
  CHECK_THROWS_AS(synth_spectrum_series(snap, {}, f, ro, none), DomainError);
}

TEST_CASE("fit_bimodal: noiseless recovery") {
  const auto truth = BimodalModel::symmetric(1.3e6, 6e6, 6.3e6, 0.25, 0.022);
  std::vector<SpectrumPoint> data;
  for (double x : grid(-20e6, 20e6, 161)) data.push_back({x, spectrum_value(x, truth), 100});
  BimodalModel init = guess_bimodal(data);
  const auto fit = fit_bimodal(data, init);
  CHECK(fit.converged);
  CHECK(fit.residual_sum < 1e-10);
  CHECK(fit.model.fwhm == doctest::Approx(6.3e6).epsilon(1e-6));
  CHECK(fit.model.splitting() == doctest::Approx(6e6).epsilon(1e-6));
  CHECK(fit.model.center[0] == doctest::Approx(-1.7e6).epsilon(1e-6));
  CHECK(fit.model.amplitude[1] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(fit.model.baseline == doctest::Approx(0.022).epsilon(1e-6));

  // Starting with the labels swapped gives the same canonical answer.
  BimodalModel swapped = init;
  std::swap(swapped.center[0], swapped.center[1]);
  const auto fit2 = fit_bimodal(data, swapped);
  CHECK(fit2.model.center[0] == doctest::Approx(fit.model.center[0]).epsilon(1e-6));
  CHECK(fit2.model.center[0] <= fit2.model.center[1]);

  std::vector<SpectrumPoint> few(data.begin(), data.begin() + 7);
  CHECK_THROWS_AS(fit_bimodal(few, init), DomainError);
}

TEST_CASE("fit_bimodal: binomial noise") {
  const auto truth = BimodalModel::symmetric(0.0, 6e6, 6.3e6, 0.25);
  const auto f = grid(-20e6, 20e6, 161);
  const ReadoutModel ro;
  auto run = [&](int shots, int seeds) {
    std::vector<double> w, d;
    for (int seed = 1; seed <= seeds; ++seed) {
      auto eng = make_engine(static_cast<std::uint64_t>(seed), 99);
      std::vector<SpectrumPoint> data;
      for (double x : f) {
        std::binomial_distribution<int> b(shots, observe(spectrum_value(x, truth), ro));
        data.push_back({x, static_cast<double>(b(eng)) / shots, shots});
      }
      const auto fit = fit_bimodal(data, guess_bimodal(data));
      REQUIRE(fit.converged);
      w.push_back(fit.model.fwhm);
      d.push_back(fit.model.splitting());
    }
    return std::pair{stats(w), stats(d)};
  };

  SUBCASE("100 shots per point: small bias") {
    // The 2-sigma spread here is ~1.3 MHz in fwhm and ~0.4 MHz in the
    // splitting: with overlapping lines the two are strongly correlated.
    const auto [sw, sd] = run(100, 60);
    MESSAGE("100 shots: fwhm " << sw.mean / 1e6 << " +- " << sw.sd / 1e6 << ", split "
                               << sd.mean / 1e6 << " +- " << sd.sd / 1e6 << " MHz");
    CHECK(std::abs(sw.mean - 6.3e6) < 0.15e6);
    CHECK(std::abs(sd.mean - 6.0e6) < 0.15e6);
  }
  SUBCASE("7500 shots per point (75 averaged spectra): within 0.3 MHz at 2 sigma") {
    const auto [sw, sd] = run(7500, 50);
    MESSAGE("7500 shots: fwhm " << sw.mean / 1e6 << " +- " << sw.sd / 1e6 << ", split "
                                << sd.mean / 1e6 << " +- " << sd.sd / 1e6 << " MHz");
    CHECK(std::abs(sw.mean - 6.3e6) + 2.0 * sw.sd <= 0.3e6);
    CHECK(std::abs(sd.mean - 6.0e6) + 2.0 * sd.sd <= 0.3e6);
  }
}

TEST_CASE("fit_bimodal: a single line gives a splitting consistent with zero") {
  const auto truth = BimodalModel::symmetric(0.0, 0.0, 6.3e6, 0.2, 0.022);
  const auto f = grid(-20e6, 20e6, 161);
  SUBCASE("noiseless") {
    std::vector<SpectrumPoint> data;
    for (double x : f) data.push_back({x, spectrum_value(x, truth), 100});
    const auto fit = fit_bimodal(data, guess_bimodal(data));
    CHECK(fit.model.splitting() <= fit.splitting_err);
    CHECK(fit.model.fwhm == doctest::Approx(6.3e6).epsilon(1e-3));
  }
  SUBCASE("400 shots per point") {
    // A spurious split beyond 3 sigma should be rare (<= 5 % of seeds).
    int spurious = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const auto data = noisy(truth, f, 400, seed);
      const auto fit = fit_bimodal(data, guess_bimodal(data));
      if (fit.model.splitting() > 3.0 * fit.splitting_err) ++spurious;
    }
    CHECK(spurious <= 2);
  }
  SUBCASE("a resolved pair is not mistaken for one line") {
    const auto pair = BimodalModel::symmetric(0.0, 6e6, 6.3e6, 0.2, 0.022);
    const auto data = noisy(pair, f, 400, 1);
    const auto fit = fit_bimodal(data, guess_bimodal(data));
    CHECK(fit.merge_delta_chi2 > 25.0);
    CHECK(fit.model.splitting() > 5.0 * fit.splitting_err);
  }
}
