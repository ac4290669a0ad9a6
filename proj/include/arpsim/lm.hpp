#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

namespace arp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using ResidualFn = std::function<Vec(const Vec&)>;
// Jacobian at x given the residuals already evaluated there.
using JacobianFn = std::function<Mat(const Vec& x, const Vec& r)>;

struct LmOptions {
  int max_iterations = 200;
  double tau = 1e-3;       // initial damping relative to max diag(J^T J)
  double ftol = 1e-12;     // relative cost decrease
  double xtol = 1e-12;     // relative step
  double gtol = 1e-14;     // scaled gradient
  double fd_step = 1e-6;   // relative forward-difference step
};

struct LmResult {
  Vec x;
  Vec residuals;
  Mat jacobian;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<double> cost_history;  // cost after each accepted iteration, starting with x0
};

Mat forward_difference_jacobian(const ResidualFn& f, const Vec& x, const Vec& r0, double rel_step);

LmResult levenberg_marquardt(const ResidualFn& f, const Vec& x0, const LmOptions& opts = {},
                             const JacobianFn& jac = {});

struct Covariance {
  Mat cov;
  int rank = 0;
  bool rank_deficient = false;
  std::vector<int> unidentifiable;  // parameter indices spanning the numerical null space
};

// s^2 (J^T J)^+ with s^2 = cost/dof (1 when dof <= 0). Columns are
// normalized before the SVD so the rank test is unit-free; parameters in
// the null space get infinite variance.
Covariance covariance_from_jacobian(const Mat& jac, double cost, int dof, double rcond = 1e-9);

}  // namespace arp
