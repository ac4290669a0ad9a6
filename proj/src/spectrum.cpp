#include "arpsim/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "arpsim/errors.hpp"
#include "arpsim/readout.hpp"
#include "arpsim/rng.hpp"

namespace arp {

namespace {

const double kFourLn2 = 4.0 * std::numbers::ln2;

double gauss(double f, double center, double fwhm) {
  const double x = (f - center) / fwhm;
  return std::exp(-kFourLn2 * x * x);
}

// Outermost half-maximum crossings, no sample-count requirement.
double half_max_width(std::span<const double> f, std::span<const double> v, double base) {
  const auto imax = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  const double top = v[imax];
  if (!(top > base)) throw CurveShapeError("curve is flat: no maximum above baseline");
  const double half = base + 0.5 * (top - base);

  std::size_t lo = 0;
  while (lo < v.size() && v[lo] < half) ++lo;
  std::size_t hi = v.size() - 1;
  while (hi > 0 && v[hi] < half) --hi;
  if (lo == 0 || hi == v.size() - 1)
    throw CurveShapeError("no half-maximum crossing on one side of the peak");

  auto cross = [&](std::size_t below, std::size_t above) {
    const double t = (half - v[below]) / (v[above] - v[below]);
    return f[below] + t * (f[above] - f[below]);
  };
  return cross(hi + 1, hi) - cross(lo - 1, lo);
}

}  // namespace

void GaussianPeak::validate() const {
  if (!(amplitude >= 0.0)) throw DomainError("peak amplitude must be >= 0");
  if (!(fwhm > 0.0) || !std::isfinite(fwhm)) throw DomainError("peak fwhm must be > 0");
  if (!std::isfinite(center)) throw DomainError("peak center must be finite");
}

double GaussianPeak::value(double f) const { return amplitude * gauss(f, center, fwhm); }

BimodalModel BimodalModel::symmetric(double mid, double splitting, double fwhm, double amplitude,
                                     double baseline) {
  BimodalModel m;
  m.amplitude = {amplitude, amplitude};
  m.center = {mid - 0.5 * splitting, mid + 0.5 * splitting};
  m.fwhm = fwhm;
  m.baseline = baseline;
  m.validate();
  return m;
}

void BimodalModel::validate() const {
  peak(0).validate();
  peak(1).validate();
  if (!std::isfinite(baseline)) throw DomainError("baseline must be finite");
}

BimodalModel BimodalModel::canonical() const {
  BimodalModel m = *this;
  if (m.center[1] < m.center[0]) {
    std::swap(m.center[0], m.center[1]);
    std::swap(m.amplitude[0], m.amplitude[1]);
  }
  return m;
}

double spectrum_value(double f, const BimodalModel& m) {
  return m.baseline + m.amplitude[0] * gauss(f, m.center[0], m.fwhm) +
         m.amplitude[1] * gauss(f, m.center[1], m.fwhm);
}

double fwhm_numeric(std::span<const double> freqs, std::span<const double> values,
                    std::optional<double> baseline) {
  if (freqs.size() != values.size()) throw DomainError("fwhm_numeric: size mismatch");
  if (freqs.size() < 100) throw DomainError("fwhm_numeric: need at least 100 samples");
  for (std::size_t i = 1; i < freqs.size(); ++i)
    if (!(freqs[i] > freqs[i - 1])) throw DomainError("fwhm_numeric: frequencies must increase");
  const double base = baseline ? *baseline : *std::min_element(values.begin(), values.end());
  return half_max_width(freqs, values, base);
}

void DriftProcess::validate() const {
  if (!(stddev >= 0.0) || !std::isfinite(stddev)) throw DomainError("drift stddev must be >= 0");
  if (!(correlation_time > 0.0)) throw DomainError("drift correlation time must be > 0");
}

std::vector<double> DriftProcess::sample(std::size_t n, double dt) const {
  validate();
  if (!(dt >= 0.0)) throw DomainError("drift step must be >= 0");
  std::vector<double> x(n);
  if (n == 0) return x;
  auto eng = make_engine(seed, streams::kDrift);
  std::normal_distribution<double> z(0.0, 1.0);
  const double decay = std::exp(-dt / correlation_time);
  const double kick = stddev * std::sqrt(-std::expm1(-2.0 * dt / correlation_time));
  x[0] = stddev * z(eng);
  for (std::size_t i = 1; i < n; ++i) x[i] = decay * x[i - 1] + kick * z(eng);
  return x;
}

double gaussian_fwhm(double sigma) { return 2.0 * std::sqrt(2.0 * std::numbers::ln2) * sigma; }

double drift_stddev_for_fwhm(double snapshot_fwhm, double averaged_fwhm) {
  if (!(averaged_fwhm >= snapshot_fwhm) || !(snapshot_fwhm > 0.0))
    throw DomainError("averaged width must be >= snapshot width > 0");
  return std::sqrt(averaged_fwhm * averaged_fwhm - snapshot_fwhm * snapshot_fwhm) /
         gaussian_fwhm(1.0);
}

BimodalModel averaged_model(const BimodalModel& snapshot, const DriftProcess& d) {
  snapshot.validate();
  d.validate();
  BimodalModel m = snapshot;
  const double w = gaussian_fwhm(d.stddev);
  m.fwhm = std::hypot(snapshot.fwhm, w);
  const double dilution = snapshot.fwhm / m.fwhm;
  m.amplitude = {snapshot.amplitude[0] * dilution, snapshot.amplitude[1] * dilution};
  return m;
}

std::vector<SpectrumPoint> average_spectrum(std::span<const SpectrumRow> rows) {
  std::map<double, std::pair<double, long>> acc;  // freq -> (up counts, shots)
  for (const auto& r : rows) {
    auto& [k, n] = acc[r.freq_hz];
    k += r.r_up * r.shots;
    n += r.shots;
  }
  std::vector<SpectrumPoint> out;
  out.reserve(acc.size());
  for (const auto& [f, kn] : acc) {
    const auto shots = static_cast<int>(kn.second);
    out.push_back({f, std::round(kn.first) / shots, shots});
  }
  return out;
}

std::vector<SpectrumPoint> SpectrumSeries::average() const { return average_spectrum(rows); }

SpectrumSeries synth_spectrum_series(const BimodalModel& m, const DriftProcess& d,
                                     std::span<const double> freq_grid,
                                     const ReadoutModel& readout,
                                     const SpectrumSynthOptions& opts) {
  m.validate();
  d.validate();
  readout.validate();
  if (opts.n_spectra < 1) throw DomainError("need at least one spectrum");
  if (opts.per_point_shots < 1) throw DomainError("per_point_shots must be >= 1");
  if (!(opts.minutes_per_spectrum > 0.0)) throw DomainError("minutes_per_spectrum must be > 0");
  if (freq_grid.empty()) throw DomainError("empty frequency grid");
  for (std::size_t i = 1; i < freq_grid.size(); ++i)
    if (!(freq_grid[i] > freq_grid[i - 1])) throw DomainError("frequency grid must be sorted");

  SpectrumSeries out;
  out.drift = d.sample(static_cast<std::size_t>(opts.n_spectra), opts.minutes_per_spectrum * 60.0);
  out.rows.reserve(freq_grid.size() * static_cast<std::size_t>(opts.n_spectra));

  auto eng = make_engine(d.seed, streams::kSpectrumShots);
  const double step_min = opts.minutes_per_spectrum / static_cast<double>(freq_grid.size());
  for (int s = 0; s < opts.n_spectra; ++s) {
    const double shift = out.drift[static_cast<std::size_t>(s)];
    for (std::size_t j = 0; j < freq_grid.size(); ++j) {
      const double p = std::clamp(spectrum_value(freq_grid[j] - shift, m), 0.0, 1.0);
      std::binomial_distribution<int> dist(opts.per_point_shots, observe(p, readout));
      const int k = dist(eng);
      out.rows.push_back({freq_grid[j], static_cast<double>(k) / opts.per_point_shots,
                          opts.per_point_shots, s,
                          s * opts.minutes_per_spectrum + static_cast<double>(j) * step_min});
    }
  }
  return out;
}

BimodalModel guess_bimodal(std::span<const SpectrumPoint> data) {
  if (data.size() < 8) throw DomainError("guess_bimodal: need at least 8 points");
  std::vector<SpectrumPoint> pts(data.begin(), data.end());
  std::sort(pts.begin(), pts.end(),
            [](const SpectrumPoint& a, const SpectrumPoint& b) { return a.freq_hz < b.freq_hz; });
  const std::size_t n = pts.size();
  std::vector<double> f(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = pts[i].freq_hz;
    double acc = 0.0;
    int cnt = 0;
    for (std::size_t j = i >= 2 ? i - 2 : 0; j <= std::min(n - 1, i + 2); ++j, ++cnt)
      acc += pts[j].r_up;
    v[i] = acc / cnt;
  }
  const double base = *std::min_element(v.begin(), v.end());
  const double width = half_max_width(f, v, base);

  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (v[i] > v[i - 1] && v[i] >= v[i + 1]) maxima.push_back(i);
  std::sort(maxima.begin(), maxima.end(), [&](auto a, auto b) { return v[a] > v[b]; });

  const std::size_t top = maxima.empty()
                              ? static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin())
                              : maxima.front();
  std::optional<std::size_t> second;
  for (std::size_t k = 1; k < maxima.size(); ++k) {
    const std::size_t cand = maxima[k];
    const std::size_t gap = cand > top ? cand - top : top - cand;
    if (gap >= 5 && v[cand] - base > 0.5 * (v[top] - base)) {
      second = cand;
      break;
    }
  }

  BimodalModel m;
  m.baseline = base;
  m.fwhm = 0.5 * width;
  if (second) {
    const auto [a, b] = std::minmax(top, *second);
    m.center = {f[a], f[b]};
    m.amplitude = {v[a] - base, v[b] - base};
  } else {
    m.center = {f[top] - 0.25 * width, f[top] + 0.25 * width};
    m.amplitude = {0.5 * (v[top] - base), 0.5 * (v[top] - base)};
  }
  m.validate();
  return m;
}

BimodalFit fit_bimodal(std::span<const SpectrumPoint> data, const BimodalModel& init,
                       const LmOptions& opts) {
  if (data.size() < 8) throw DomainError("fit_bimodal: need at least 8 points");
  init.validate();

  // Work in MHz relative to the mean frequency so parameters are O(1).
  constexpr double kScale = 1e6;
  double ref = 0.0;
  for (const auto& p : data) ref += p.freq_hz;
  ref /= static_cast<double>(data.size());

  const auto n = static_cast<Eigen::Index>(data.size());
  Vec x(n), y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = data[static_cast<std::size_t>(i)];
    if (!std::isfinite(p.freq_hz) || !std::isfinite(p.r_up))
      throw DomainError("fit_bimodal: non-finite data");
    x[i] = (p.freq_hz - ref) / kScale;
    y[i] = p.r_up;
    w[i] = 1.0 / std::sqrt(binomial_variance(p.r_up, p.shots));
  }

  // theta = [a0, a1, mid, split, fwhm, baseline]
  Vec theta(6);
  theta << init.amplitude[0], init.amplitude[1], (init.midpoint() - ref) / kScale,
      (init.center[1] - init.center[0]) / kScale, init.fwhm / kScale, init.baseline;

  const auto residuals = [&](const Vec& t) {
    const double c0 = t[2] - 0.5 * t[3], c1 = t[2] + 0.5 * t[3];
    const double fw = std::abs(t[4]);
    Vec r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double model = t[5] + t[0] * gauss(x[i], c0, fw) + t[1] * gauss(x[i], c1, fw);
      r[i] = (model - y[i]) * w[i];
    }
    return r;
  };

  // The caller's start plus rescaled splittings and widths; keep the
  // lowest cost. Merged-peak and over-wide local minima are common on
  // lumpy drift-averaged data.
  LmResult lm;
  bool have = false;
  for (const auto& [ks, kw] : {std::pair{1.0, 1.0}, {0.6, 1.0}, {1.5, 1.0}, {1.0, 0.6}, {1.0, 1.5},
                               {1.5, 0.6}}) {
    Vec start = theta;
    start[3] *= ks;
    start[4] *= kw;
    LmResult trial = levenberg_marquardt(residuals, start, opts);
    if (!have || (trial.converged && !lm.converged) ||
        (trial.converged == lm.converged && trial.cost < lm.cost)) {
      lm = std::move(trial);
      have = true;
    }
  }
  const Covariance cov = covariance_from_jacobian(lm.jacobian, lm.cost, static_cast<int>(n) - 6);

  Vec t = lm.x;
  const double inf = std::numeric_limits<double>::infinity();
  auto var = [&](int i) { return cov.cov(i, i); };
  auto sd = [&](double v) { return std::isfinite(v) && v >= 0.0 ? std::sqrt(v) : inf; };

  BimodalFit out;
  out.model.amplitude = {t[0], t[1]};
  out.model.center = {ref + (t[2] - 0.5 * t[3]) * kScale, ref + (t[2] + 0.5 * t[3]) * kScale};
  out.model.fwhm = std::abs(t[4]) * kScale;
  out.model.baseline = t[5];
  out.amplitude_err[0] = sd(var(0));
  out.amplitude_err[1] = sd(var(1));
  const double vmid = var(2), vsplit = var(3), cms = cov.cov(2, 3);
  if (std::isfinite(vmid) && std::isfinite(vsplit)) {
    out.center_err[0] = sd(vmid + 0.25 * vsplit - cms) * kScale;
    out.center_err[1] = sd(vmid + 0.25 * vsplit + cms) * kScale;
  } else {
    out.center_err[0] = out.center_err[1] = inf;
  }
  out.splitting_err = sd(vsplit) * kScale;
  out.fwhm_err = sd(var(4)) * kScale;
  out.baseline_err = sd(var(5));
  if (out.model.center[1] < out.model.center[0]) {
    std::swap(out.model.center[0], out.model.center[1]);
    std::swap(out.model.amplitude[0], out.model.amplitude[1]);
    std::swap(out.center_err[0], out.center_err[1]);
    std::swap(out.amplitude_err[0], out.amplitude_err[1]);
  }
  // Profile against a single merged line: [a, mid, fwhm, baseline].
  const auto merged = [&](const Vec& u) {
    const double fw = std::abs(u[2]);
    Vec r(n);
    for (Eigen::Index i = 0; i < n; ++i) r[i] = (u[3] + u[0] * gauss(x[i], u[1], fw) - y[i]) * w[i];
    return r;
  };
  Vec u(4);
  u << t[0] + t[1], t[2], std::max(std::abs(t[4]), std::abs(t[3])), t[5];
  const LmResult lm0 = levenberg_marquardt(merged, u, opts);
  const double s2 = n > 6 ? lm.cost / static_cast<double>(n - 6) : 1.0;
  out.merge_delta_chi2 = std::max(lm0.cost - lm.cost, 0.0) / (s2 > 0.0 ? s2 : 1.0);
  if (out.model.splitting() > 0.0) {
    const double profile_err = out.merge_delta_chi2 > 0.0
                                   ? out.model.splitting() / std::sqrt(out.merge_delta_chi2)
                                   : inf;
    out.splitting_err = std::max(out.splitting_err, profile_err);
  }

  out.residual_sum = lm.cost;
  out.iterations = lm.iterations;
  out.converged = lm.converged;
  out.rank_deficient = cov.rank_deficient;
  return out;
}

}  // namespace arp
