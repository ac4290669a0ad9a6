#include "arpsim/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

#include "arpsim/errors.hpp"
#include "arpsim/kernels.hpp"
#include "arpsim/lz.hpp"
#include "arpsim/rng.hpp"

namespace arp {

namespace {

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

SpinSystemParams spin_params(double b1, double t2, const PhysConstants& c) {
  SpinSystemParams p;
  p.nu1 = nu1_from_b1(b1, c);
  p.t2 = t2;
  return p;
}

double compose(double p_up, double f_up, double background) {
  return f_up * p_up + (1.0 - p_up) * background;
}

void check_readout(double f_up, double background) {
  if (!(f_up > 0.0 && f_up <= 1.0)) throw DomainError("f_up must lie in (0, 1]");
  if (!(background >= 0.0 && background <= f_up))
    throw DomainError("background must lie in [0, f_up]");
}

// p_up curves keyed by (dataset, b1, t2); every miss in one request is
// solved as a single parallel batch.
class CurveCache {
 public:
  CurveCache(std::span<const SweepDataset> data, const GlobalFitOptions& opts)
      : data_(data), opts_(opts) {}

  using Key = std::tuple<std::size_t, double, double>;

  void ensure(const std::vector<Key>& keys) {
    std::vector<SweepJob> jobs;
    std::vector<Key> pending;
    for (const auto& k : keys) {
      if (cache_.count(k) || std::find(pending.begin(), pending.end(), k) != pending.end())
        continue;
      pending.push_back(k);
      const auto& [ds, b1, t2] = k;
      const auto& d = data_[ds];
      for (const auto& pt : d.points) {
        SweepProtocol s;
        s.span = d.protocol_span;
        s.duration = pt.sweep_time;
        s.center_offset = d.center_offset;
        jobs.push_back({s, spin_params(b1, t2, opts_.constants)});
      }
    }
    if (jobs.empty()) return;
    if (cache_.size() > 512) cache_.clear();
    const std::vector<double> p = sweep_batch(jobs, opts_.ode);
    std::size_t off = 0;
    for (const auto& k : pending) {
      const std::size_t n = data_[std::get<0>(k)].points.size();
      cache_[k].assign(p.begin() + static_cast<std::ptrdiff_t>(off),
                       p.begin() + static_cast<std::ptrdiff_t>(off + n));
      off += n;
    }
  }

  const std::vector<double>& get(const Key& k) const { return cache_.at(k); }

 private:
  std::span<const SweepDataset> data_;
  const GlobalFitOptions& opts_;
  std::map<Key, std::vector<double>> cache_;
};

}  // namespace

void SweepDataset::validate() const {
  power.validate();
  if (points.size() < 5) throw DomainError("dataset needs at least 5 points");
  if (!(protocol_span > 0.0)) throw DomainError("dataset span must be > 0");
  if (!std::isfinite(center_offset)) throw DomainError("dataset offset must be finite");
  std::vector<double> ts;
  for (const auto& p : points) {
    if (!(p.sweep_time > 0.0) || !std::isfinite(p.sweep_time))
      throw DomainError("sweep times must be positive");
    if (!(p.r_up >= 0.0 && p.r_up <= 1.0)) throw DomainError("r_up must lie in [0, 1]");
    if (p.shots < 1) throw DomainError("shots must be >= 1");
    ts.push_back(p.sweep_time);
  }
  std::sort(ts.begin(), ts.end());
  if (std::adjacent_find(ts.begin(), ts.end()) != ts.end())
    throw DomainError("sweep times must be distinct");
}

SweepDataset synthesize_dataset(std::span<const double> ts, std::span<const double> p_up,
                                const PowerSetting& power, const ReadoutModel& readout,
                                std::uint64_t seed, double span, double offset) {
  if (ts.size() != p_up.size()) throw DomainError("synthesize_dataset: size mismatch");
  SweepDataset d;
  d.power = power;
  d.protocol_span = span;
  d.center_offset = offset;
  for (std::size_t i = 0; i < ts.size(); ++i)
    d.points.push_back(synthesize_shots(p_up[i], readout, derive_seed(seed, i), ts[i]));
  return d;
}

void FitResult::validate() const {
  if (b1_per_power.empty()) throw DomainError("fit needs at least one B1");
  for (double b : b1_per_power)
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("B1 must be > 0");
  if (!(f_up > 0.0 && f_up <= 1.0)) throw DomainError("f_up must lie in (0, 1]");
  if (!(t2 > 0.0) || !std::isfinite(t2)) throw DomainError("t2 must be > 0 and finite");
}

double forward_model(double ts, double b1, double f_up, double t2, double span, double offset,
                     double background, const PhysConstants& c, const EvolutionSettings& ode) {
  check_readout(f_up, background);
  SweepProtocol s;
  s.span = span;
  s.duration = ts;
  s.center_offset = offset;
  return compose(simulate_sweep_pup(s, spin_params(b1, t2, c), ode), f_up, background);
}

std::vector<double> forward_curve(std::span<const double> ts, double b1, double f_up, double t2,
                                  double span, double offset, double background,
                                  const PhysConstants& c, const EvolutionSettings& ode) {
  check_readout(f_up, background);
  SweepProtocol s;
  s.span = span;
  s.center_offset = offset;
  std::vector<double> r = sweep_curve(ts, s, spin_params(b1, t2, c), ode);
  for (double& v : r) v = compose(v, f_up, background);
  return r;
}

FitResult initial_guess(std::span<const SweepDataset> data, double background, double f_up,
                        double t2, const PhysConstants& c) {
  check_readout(f_up, background);
  FitResult g;
  g.f_up = f_up;
  g.t2 = t2;
  for (const auto& d : data) {
    d.validate();
    std::vector<MeasuredPoint> pts = d.points;
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.sweep_time < b.sweep_time; });
    const double gain = f_up - background;
    auto corrected = [&](const MeasuredPoint& p) { return (p.r_up - background) / gain; };

    double t_half = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double pi = corrected(pts[i]);
      if (pi >= 0.5) {
        if (i == 0) {
          t_half = pts[0].sweep_time;
        } else {
          const double pp = corrected(pts[i - 1]);
          const double w = (0.5 - pp) / (pi - pp);
          t_half = pts[i - 1].sweep_time + w * (pts[i].sweep_time - pts[i - 1].sweep_time);
        }
        break;
      }
    }
    double b1 = 1e-6;
    if (t_half > 0.0) {
      const double nu1 = std::sqrt(d.protocol_span * std::numbers::ln2 /
                                   (4.0 * std::numbers::pi * std::numbers::pi * t_half));
      b1 = b1_from_nu1(nu1, c);
    }
    g.b1_per_power.push_back(b1);
  }
  return g;
}

FitResult fit_global(std::span<const SweepDataset> data, const FitResult& init,
                     double fixed_background, const GlobalFitOptions& opts) {
  if (data.empty()) throw DomainError("fit_global: no datasets");
  for (const auto& d : data) d.validate();
  init.validate();
  if (init.b1_per_power.size() != data.size())
    throw DomainError("fit_global: one initial B1 per dataset required");
  check_readout(init.f_up, fixed_background);

  const std::size_t nds = data.size();
  const auto i_f = static_cast<Eigen::Index>(nds);
  const auto i_t2 = i_f + 1;
  const bool log_t2 = opts.t2_param == T2Parameterization::log;
  constexpr double kMicro = 1e-6;

  std::vector<std::size_t> row0(nds + 1, 0);
  for (std::size_t i = 0; i < nds; ++i) row0[i + 1] = row0[i] + data[i].points.size();
  const auto n_rows = static_cast<Eigen::Index>(row0.back());

  auto b1_of = [&](const Vec& th, std::size_t i) { return std::exp(th[static_cast<Eigen::Index>(i)]); };
  auto f_of = [&](const Vec& th) { return logistic(th[i_f]); };
  auto t2_of = [&](const Vec& th) { return log_t2 ? std::exp(th[i_t2]) : th[i_t2] * kMicro; };

  Vec theta(static_cast<Eigen::Index>(nds) + 2);
  for (std::size_t i = 0; i < nds; ++i)
    theta[static_cast<Eigen::Index>(i)] = std::log(init.b1_per_power[i]);
  theta[i_f] = logit(std::min(init.f_up, 1.0 - 1e-9));
  theta[i_t2] = log_t2 ? std::log(init.t2) : init.t2 / kMicro;

  CurveCache cache(data, opts);

  auto params_ok = [&](const Vec& th) {
    const double f = f_of(th), t2 = t2_of(th);
    if (!th.allFinite() || !(t2 > 0.0) || !std::isfinite(t2)) return false;
    if (!(f > fixed_background)) return false;
    for (std::size_t i = 0; i < nds; ++i)
      if (!(b1_of(th, i) > 0.0) || !std::isfinite(b1_of(th, i))) return false;
    return true;
  };

  // Per-point binomial sigma, taken from the model rather than the data:
  // observed fractions near the background are often 0 or 1/shots, and
  // weighting by them pulls the fit towards those points.
  std::vector<double> sigma(static_cast<std::size_t>(n_rows), 1.0);

  auto fill_rows = [&](const Vec& th, std::size_t ds, Vec& r) {
    const auto& p = cache.get({ds, b1_of(th, ds), t2_of(th)});
    const double f = f_of(th);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const auto row = row0[ds] + k;
      r[static_cast<Eigen::Index>(row)] =
          (compose(p[k], f, fixed_background) - data[ds].points[k].r_up) / sigma[row];
    }
  };

  auto keys_for = [&](const Vec& th) {
    std::vector<CurveCache::Key> keys;
    for (std::size_t i = 0; i < nds; ++i) keys.emplace_back(i, b1_of(th, i), t2_of(th));
    return keys;
  };

  auto reweight = [&](const Vec& th) {
    cache.ensure(keys_for(th));
    for (std::size_t i = 0; i < nds; ++i) {
      const auto& p = cache.get({i, b1_of(th, i), t2_of(th)});
      for (std::size_t k = 0; k < p.size(); ++k)
        sigma[row0[i] + k] = std::sqrt(
            binomial_variance(compose(p[k], f_of(th), fixed_background), data[i].points[k].shots));
    }
  };

  const ResidualFn residuals = [&](const Vec& th) -> Vec {
    if (!params_ok(th)) throw DomainError("fit_global: parameters left the physical region");
    cache.ensure(keys_for(th));
    Vec r(n_rows);
    for (std::size_t i = 0; i < nds; ++i) fill_rows(th, i, r);
    return r;
  };

  auto step_for = [&](double v) { return opts.lm.fd_step * (v != 0.0 ? std::abs(v) : 1.0); };

  const JacobianFn jacobian = [&](const Vec& th, const Vec& r0) -> Mat {
    const Eigen::Index np = th.size();
    std::vector<Vec> shifted(static_cast<std::size_t>(np), th);
    std::vector<CurveCache::Key> keys;
    for (Eigen::Index j = 0; j < np; ++j) {
      shifted[static_cast<std::size_t>(j)][j] += step_for(th[j]);
      const Vec& s = shifted[static_cast<std::size_t>(j)];
      if (j < i_f) {
        keys.emplace_back(static_cast<std::size_t>(j), b1_of(s, static_cast<std::size_t>(j)), t2_of(s));
      } else if (j == i_t2) {
        auto more = keys_for(s);
        keys.insert(keys.end(), more.begin(), more.end());
      }
    }
    cache.ensure(keys);

    Mat jac = Mat::Zero(n_rows, np);
    for (Eigen::Index j = 0; j < np; ++j) {
      const Vec& s = shifted[static_cast<std::size_t>(j)];
      const double h = s[j] - th[j];
      Vec r = r0;
      if (j < i_f) {
        fill_rows(s, static_cast<std::size_t>(j), r);
      } else {
        for (std::size_t i = 0; i < nds; ++i) fill_rows(s, i, r);
      }
      jac.col(j) = (r - r0) / h;
    }
    return jac;
  };

  // Weights from the starting point, then refreshed at each optimum.
  LmResult lm;
  int total_iterations = 0;
  Vec start = theta;
  for (int pass = 0; pass < std::max(1, opts.weight_passes); ++pass) {
    reweight(start);
    lm = levenberg_marquardt(residuals, start, opts.lm, jacobian);
    total_iterations += lm.iterations;
    start = lm.x;
  }
  const int dof = static_cast<int>(n_rows) - static_cast<int>(theta.size());
  const Covariance cov = covariance_from_jacobian(lm.jacobian, lm.cost, dof);
  // Residuals are already divided by the binomial sigma, so (J^T J)^-1 is
  // the covariance under the known noise model. Identifiability is judged
  // on that, not on the s^2-scaled one, which collapses on noise-free data.
  const Covariance fisher = covariance_from_jacobian(lm.jacobian, 1.0, 1);

  const Vec& th = lm.x;
  FitResult out;
  out.f_up = f_of(th);
  out.t2 = t2_of(th);
  out.residual_norm = std::sqrt(lm.cost);
  out.converged = lm.converged;
  out.iterations = total_iterations;
  out.cost_history = lm.cost_history;  // final weighting pass

  auto name_of = [&](Eigen::Index j) -> std::string {
    if (j < i_f) return "b1[" + std::to_string(j) + "]";
    return j == i_f ? "f_up" : "t2";
  };
  std::vector<bool> weak(static_cast<std::size_t>(th.size()), false);
  for (int j : cov.unidentifiable) weak[static_cast<std::size_t>(j)] = true;
  auto root = [](double v) { return std::isfinite(v) && v >= 0.0 ? std::sqrt(v) : INFINITY; };
  std::vector<double> sd(static_cast<std::size_t>(th.size()));
  for (Eigen::Index j = 0; j < th.size(); ++j) {
    sd[static_cast<std::size_t>(j)] = root(cov.cov(j, j));
    // Linear T2 is in microseconds; compare its relative error instead.
    const double f_err = root(fisher.cov(j, j));
    const double coord_err = (j == i_t2 && !log_t2) ? f_err / std::abs(th[j]) : f_err;
    if (!(coord_err <= opts.identifiability_limit)) weak[static_cast<std::size_t>(j)] = true;
  }
  for (Eigen::Index j = 0; j < th.size(); ++j)
    if (weak[static_cast<std::size_t>(j)]) out.unidentifiable.push_back(name_of(j));
  out.rank_deficient = !out.unidentifiable.empty();

  for (std::size_t i = 0; i < nds; ++i) {
    out.b1_per_power.push_back(b1_of(th, i));
    out.b1_std_errors.push_back(out.b1_per_power.back() * sd[i]);
  }
  out.f_up_std_error = out.f_up * (1.0 - out.f_up) * sd[static_cast<std::size_t>(i_f)];
  out.t2_std_error = log_t2 ? out.t2 * sd[static_cast<std::size_t>(i_t2)]
                            : sd[static_cast<std::size_t>(i_t2)] * kMicro;
  out.at_bound = out.f_up > 1.0 - 1e-6 || out.f_up - fixed_background < 1e-6 || out.t2 > 1.0 ||
                 std::any_of(out.b1_per_power.begin(), out.b1_per_power.end(),
                             [](double b) { return b < 1e-12; });

  cache.ensure(keys_for(th));
  for (std::size_t i = 0; i < nds; ++i) {
    const auto& p = cache.get({i, b1_of(th, i), t2_of(th)});
    std::vector<double> m(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) m[k] = compose(p[k], out.f_up, fixed_background);
    out.model.push_back(std::move(m));
  }
  return out;
}

SqrtPowerLaw fit_sqrtp_law(std::span<const double> b1_values, std::span<const PowerSetting> powers) {
  if (b1_values.size() != powers.size()) throw DomainError("fit_sqrtp_law: size mismatch");
  if (b1_values.empty()) throw DomainError("fit_sqrtp_law: need at least one point");
  const std::size_t n = b1_values.size();
  std::vector<double> x(n), y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = b1_values[i];
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) throw DomainError("fit_sqrtp_law: B1 must be > 0");
    x[i] = std::sqrt(powers[i].delivered_mw());
    w[i] = 1.0 / (y[i] * y[i]);
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += w[i] * x[i] * y[i];
    sxx += w[i] * x[i] * x[i];
  }
  if (!(sxx > 0.0)) throw DomainError("fit_sqrtp_law: all powers are zero");

  SqrtPowerLaw law;
  law.slope = sxy / sxx;
  double sw = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    swy += w[i] * y[i];
  }
  const double ybar = swy / sw;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = law.slope * x[i];
    ss_res += w[i] * (y[i] - fit) * (y[i] - fit);
    ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
    if (fit > 0.0)
      law.max_relative_deviation = std::max(law.max_relative_deviation, std::abs(y[i] - fit) / fit);
  }
  if (n == 1 || ss_tot == 0.0)
    law.r_squared = ss_res <= 1e-30 * sw ? 1.0 : 0.0;
  else
    law.r_squared = 1.0 - ss_res / ss_tot;
  return law;
}

}  // namespace arp
