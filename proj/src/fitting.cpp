#include "qfc/fitting.hpp"

#include <cmath>
#include <limits>

#include "qfc/errors.hpp"

namespace qfc::fit {

Result gauss_newton(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>& eval,
    Eigen::VectorXd initial, const Options& opts) {
  Result result;
  result.params = std::move(initial);
  const int n = static_cast<int>(result.params.size());

  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
  eval(result.params, residual, jacobian);
  result.rss = residual.squaredNorm();

  double lambda = 1e-3;
  for (int it = 0; it < opts.max_iterations; ++it) {
    result.iterations = it + 1;
    const Eigen::MatrixXd jtj = jacobian.transpose() * jacobian;
    const Eigen::VectorXd jtr = jacobian.transpose() * residual;

    bool stepped = false;
    for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (int i = 0; i < n; ++i) {
        damped(i, i) += lambda * (jtj(i, i) + 1e-30);
      }
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd trial = result.params + step;
      Eigen::VectorXd trial_residual;
      Eigen::MatrixXd trial_jacobian;
      eval(trial, trial_residual, trial_jacobian);
      const double trial_rss = trial_residual.squaredNorm();
      if (std::isfinite(trial_rss) && trial_rss <= result.rss) {
        const double improvement = result.rss - trial_rss;
        const double step_norm = step.norm();
        result.params = trial;
        residual.swap(trial_residual);
        jacobian.swap(trial_jacobian);
        result.rss = trial_rss;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (improvement <= opts.rss_tol * (result.rss + 1e-30) || step_norm <= opts.step_tol) {
          result.converged = true;
          return result;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!stepped) {
      // No downhill step available at any damping: local minimum.
      result.converged = true;
      return result;
    }
  }
  return result;
}

NnlsResult nnls(const Eigen::MatrixXd& design, const Eigen::VectorXd& target) {
  const int n = static_cast<int>(design.cols());
  if (n > 12) {
    throw InvalidInput("nnls: subset enumeration supports at most 12 columns");
  }
  if (design.rows() != target.size()) {
    throw InvalidInput("nnls: design/target size mismatch");
  }

  NnlsResult best;
  best.coeffs = Eigen::VectorXd::Zero(n);
  best.rss = target.squaredNorm();

  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> cols;
    for (int j = 0; j < n; ++j) {
      if (mask & (1u << j)) {
        cols.push_back(j);
      }
    }
    Eigen::MatrixXd sub(design.rows(), static_cast<int>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) {
      sub.col(static_cast<int>(j)) = design.col(cols[j]);
    }
    const Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(target);
    bool feasible = true;
    for (int j = 0; j < sol.size(); ++j) {
      if (sol(j) < -1e-12) {
        feasible = false;
        break;
      }
    }
    if (!feasible) {
      continue;
    }
    const double rss = (sub * sol - target).squaredNorm();
    if (rss < best.rss - 1e-15 * (best.rss + 1.0)) {
      best.coeffs.setZero();
      for (size_t j = 0; j < cols.size(); ++j) {
        best.coeffs(cols[j]) = std::max(0.0, sol(static_cast<int>(j)));
      }
      best.rss = rss;
    }
  }
  return best;
}

}  // namespace qfc::fit
