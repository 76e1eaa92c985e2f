#pragma once

#include <Eigen/Dense>
#include <functional>

namespace qfc::fit {

struct Options {
  int max_iterations = 200;
  double rss_tol = 1e-14;   // relative RSS improvement
  double step_tol = 1e-12;  // parameter step norm
};

struct Result {
  Eigen::VectorXd params;
  double rss = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Gauss-Newton for small dense problems. `eval` fills the residual
// vector and Jacobian (one row per sample) at the given parameters.
Result gauss_newton(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>& eval,
    Eigen::VectorXd initial, const Options& opts = {});

struct NnlsResult {
  Eigen::VectorXd coeffs;
  double rss = 0.0;
};

// Exact nonnegative least squares by active-set enumeration. Meant for a
// handful of columns (the power fits use 3); throws for more than 12.
NnlsResult nnls(const Eigen::MatrixXd& design, const Eigen::VectorXd& target);

}  // namespace qfc::fit
