#include "arpsim/lm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "arpsim/errors.hpp"

namespace arp {

Mat forward_difference_jacobian(const ResidualFn& f, const Vec& x, const Vec& r0, double rel_step) {
  Mat jac(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x;
    const double h = rel_step * std::max(std::abs(x[j]), 1.0);
    xp[j] += h;
    jac.col(j) = (f(xp) - r0) / (xp[j] - x[j]);
  }
  return jac;
}

LmResult levenberg_marquardt(const ResidualFn& f, const Vec& x0, const LmOptions& opts,
                             const JacobianFn& jac_fn) {
  const auto jacobian = [&](const Vec& x, const Vec& r) {
    return jac_fn ? jac_fn(x, r) : forward_difference_jacobian(f, x, r, opts.fd_step);
  };

  LmResult res;
  res.x = x0;
  res.residuals = f(x0);
  if (!res.residuals.allFinite()) throw DomainError("levenberg_marquardt: non-finite residuals at start");
  res.cost = res.residuals.squaredNorm();
  res.cost_history.push_back(res.cost);
  res.jacobian = jacobian(res.x, res.residuals);

  double mu = -1.0;
  double nu = 2.0;
  Vec scale;

  for (res.iterations = 0; res.iterations < opts.max_iterations;) {
    const Mat a = res.jacobian.transpose() * res.jacobian;
    const Vec g = res.jacobian.transpose() * res.residuals;
    // Running-max scaling with a relative floor, so columns that vanish
    // at the current point (e.g. a splitting at zero) stay damped.
    if (scale.size())
      scale = scale.cwiseMax(a.diagonal());
    else
      scale = a.diagonal();
    const double floor = std::max(scale.maxCoeff() * 1e-12, 1e-300);
    const Vec d = scale.cwiseMax(floor);
    if (mu < 0.0) mu = opts.tau;

    if (res.cost <= 1e-30) {
      res.converged = true;
      res.stop_reason = "zero residual";
      return res;
    }
    const double gscaled = (g.array().abs() / (d.array().sqrt() * std::sqrt(res.cost))).maxCoeff();
    if (gscaled < opts.gtol) {
      res.converged = true;
      res.stop_reason = "gradient";
      return res;
    }

    Mat damped = a;
    damped.diagonal() += mu * d;
    const Vec step = damped.ldlt().solve(-g);
    ++res.iterations;

    if (step.norm() <= opts.xtol * (res.x.norm() + opts.xtol)) {
      res.converged = true;
      res.stop_reason = "step";
      return res;
    }

    const Vec x_new = res.x + step;
    Vec r_new;
    bool ok = true;
    try {
      r_new = f(x_new);
      ok = r_new.allFinite();
    } catch (const std::exception&) {
      ok = false;
    }
    const double cost_new = ok ? r_new.squaredNorm() : std::numeric_limits<double>::infinity();
    const double predicted = -(2.0 * step.dot(g) + step.dot(a * step));
    const double rho = predicted > 0.0 ? (res.cost - cost_new) / predicted : -1.0;

    if (ok && cost_new < res.cost) {
      const double decrease = res.cost - cost_new;
      res.x = x_new;
      res.residuals = r_new;
      res.cost = cost_new;
      res.cost_history.push_back(cost_new);
      if (decrease <= opts.ftol * cost_new) {
        res.jacobian = jacobian(res.x, res.residuals);
        res.converged = true;
        res.stop_reason = "cost";
        return res;
      }
      res.jacobian = jacobian(res.x, res.residuals);
      const double t = 2.0 * std::max(rho, 0.0) - 1.0;
      mu *= std::max(1.0 / 3.0, 1.0 - t * t * t);
      nu = 2.0;
    } else {
      mu *= nu;
      nu *= 2.0;
      if (mu > 1e20) {
        // No descent left in any direction at working precision.
        res.converged = true;
        res.stop_reason = "damping saturated";
        return res;
      }
    }
  }
  res.stop_reason = "max iterations";
  return res;
}

Covariance covariance_from_jacobian(const Mat& jac, double cost, int dof, double rcond) {
  const Eigen::Index n = jac.cols();
  Covariance out;
  out.cov = Mat::Zero(n, n);

  Vec scale(n);
  for (Eigen::Index j = 0; j < n; ++j) scale[j] = jac.col(j).norm();

  std::vector<Eigen::Index> live;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (scale[j] > 0.0 && std::isfinite(scale[j]))
      live.push_back(j);
    else
      out.unidentifiable.push_back(static_cast<int>(j));
  }

  Mat js(jac.rows(), static_cast<Eigen::Index>(live.size()));
  for (std::size_t k = 0; k < live.size(); ++k) js.col(k) = jac.col(live[k]) / scale[live[k]];

  const double s2 = dof > 0 ? cost / dof : 1.0;
  if (!live.empty()) {
    Eigen::JacobiSVD<Mat> svd(js, Eigen::ComputeThinV);
    const Vec sv = svd.singularValues();
    const Mat& v = svd.matrixV();
    const double smax = sv.size() ? sv[0] : 0.0;
    Mat pinv = Mat::Zero(js.cols(), js.cols());
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv[k] > rcond * smax) {
        ++out.rank;
        pinv += v.col(k) * v.col(k).transpose() / (sv[k] * sv[k]);
      } else {
        for (Eigen::Index j = 0; j < v.rows(); ++j)
          if (std::abs(v(j, k)) > 0.1) out.unidentifiable.push_back(static_cast<int>(live[j]));
      }
    }
    for (std::size_t a = 0; a < live.size(); ++a)
      for (std::size_t b = 0; b < live.size(); ++b)
        out.cov(live[a], live[b]) = s2 * pinv(a, b) / (scale[live[a]] * scale[live[b]]);
  }

  std::sort(out.unidentifiable.begin(), out.unidentifiable.end());
  out.unidentifiable.erase(std::unique(out.unidentifiable.begin(), out.unidentifiable.end()),
                           out.unidentifiable.end());
  out.rank_deficient = !out.unidentifiable.empty();
  const double inf = std::numeric_limits<double>::infinity();
  for (int j : out.unidentifiable) out.cov(j, j) = inf;
  return out;
}

}  // namespace arp
