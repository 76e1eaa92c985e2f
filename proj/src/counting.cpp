#include "qfc/counting.hpp"

#include <algorithm>
#include <cmath>

#include "qfc/fitting.hpp"

namespace qfc::counting {

long long sample_counts(double rate_hz, double integration_time_s, std::uint64_t seed) {
  if (!(rate_hz >= 0.0)) {
    throw InvalidInput("sample_counts: rate must be >= 0");
  }
  if (!(integration_time_s > 0.0)) {
    throw InvalidInput("sample_counts: integration time must be > 0");
  }
  rng::Generator gen(seed);
  return gen.poisson(rate_hz * integration_time_s);
}

double visibility(double cc_dd, double cc_da, double cc_ad, double cc_aa) {
  for (double c : {cc_dd, cc_da, cc_ad, cc_aa}) {
    if (!(c >= 0.0)) {
      throw InvalidInput("visibility: counts must be >= 0");
    }
  }
  const double total = cc_dd + cc_da + cc_ad + cc_aa;
  if (!(total > 0.0)) {
    throw UndefinedValue("visibility: all coincidence counts are zero");
  }
  return ((cc_dd + cc_aa) - (cc_da + cc_ad)) / total;
}

double car(double coincidences, double accidentals) {
  if (!(coincidences >= 0.0)) {
    throw InvalidInput("car: coincidences must be >= 0");
  }
  if (!(accidentals > 0.0)) {
    throw UndefinedValue("car: accidentals must be positive; report a lower bound instead");
  }
  return coincidences / accidentals;
}

DelayHistogram histogram_generate(double delta_nu_hz, double peak_counts,
                                  double baseline_counts, double bin_width_s, int n_bins) {
  if (!(delta_nu_hz > 0.0)) throw InvalidInput("histogram_generate: delta_nu must be > 0");
  if (!(peak_counts > 0.0)) throw InvalidInput("histogram_generate: peak must be > 0");
  if (!(baseline_counts >= 0.0)) throw InvalidInput("histogram_generate: baseline must be >= 0");
  if (!(bin_width_s > 0.0)) throw InvalidInput("histogram_generate: bin width must be > 0");
  if (n_bins < 21 || n_bins % 2 == 0) {
    throw InvalidInput("histogram_generate: n_bins must be odd and >= 21");
  }
  const double tau_d = 1.0 / (2.0 * M_PI * delta_nu_hz);
  const int half = n_bins / 2;
  DelayHistogram h;
  h.delay_s.reserve(static_cast<size_t>(n_bins));
  h.counts.reserve(static_cast<size_t>(n_bins));
  for (int k = -half; k <= half; ++k) {
    const double t = k * bin_width_s;
    h.delay_s.push_back(t);
    h.counts.push_back(peak_counts * std::exp(-std::fabs(t) / tau_d) + baseline_counts);
  }
  return h;
}

DelayHistogram histogram_sample(const DelayHistogram& expected, std::uint64_t seed) {
  DelayHistogram out;
  out.delay_s = expected.delay_s;
  out.counts.reserve(expected.counts.size());
  for (size_t i = 0; i < expected.counts.size(); ++i) {
    rng::Generator gen(rng::derive_seed(seed, i));
    out.counts.push_back(static_cast<double>(gen.poisson(expected.counts[i])));
  }
  return out;
}

double histogram_bandwidth(const DelayHistogram& histogram) {
  const size_t n = histogram.delay_s.size();
  if (n != histogram.counts.size() || n < 21) {
    throw InvalidInput("histogram_bandwidth: need >= 21 aligned bins");
  }

  size_t peak_index = 0;
  double peak = histogram.counts[0];
  for (size_t i = 1; i < n; ++i) {
    if (histogram.counts[i] > peak) {
      peak = histogram.counts[i];
      peak_index = i;
    }
  }

  // Baseline from the outer fifth of the bins.
  double baseline = 0.0;
  size_t edge = std::max<size_t>(1, n / 10);
  for (size_t i = 0; i < edge; ++i) {
    baseline += histogram.counts[i] + histogram.counts[n - 1 - i];
  }
  baseline /= static_cast<double>(2 * edge);
  const double amp0 = peak - baseline;
  if (!(amp0 > 5.0 * std::sqrt(baseline + 1.0))) {
    throw FitFailure("histogram_bandwidth: no peak above the baseline");
  }
  if (peak_index < 10 || peak_index + 10 >= n) {
    throw InvalidInput("histogram_bandwidth: need >= 10 bins on each side of the peak");
  }

  // Initial decay time from the first 1/e crossing right of the peak.
  const double level = baseline + amp0 / M_E;
  double tau0 = 0.0;
  for (size_t i = peak_index + 1; i < n; ++i) {
    if (histogram.counts[i] <= level) {
      tau0 = histogram.delay_s[i] - histogram.delay_s[peak_index];
      break;
    }
  }
  if (!(tau0 > 0.0)) {
    throw FitFailure("histogram_bandwidth: no decay detected");
  }

  const double t_peak = histogram.delay_s[peak_index];
  auto eval = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const double amp = p(0);
    const double t0 = p(1);
    const double tau = std::max(p(2), 1e-6 * tau0);
    const double base = p(3);
    r.resize(static_cast<int>(n));
    jac.resize(static_cast<int>(n), 4);
    for (size_t k = 0; k < n; ++k) {
      const double dt = histogram.delay_s[k] - t0;
      const double e = std::exp(-std::fabs(dt) / tau);
      r(static_cast<int>(k)) = amp * e + base - histogram.counts[k];
      jac(static_cast<int>(k), 0) = e;
      const double sign = dt > 0.0 ? 1.0 : (dt < 0.0 ? -1.0 : 0.0);
      jac(static_cast<int>(k), 1) = amp * e * sign / tau;
      jac(static_cast<int>(k), 2) = amp * e * std::fabs(dt) / (tau * tau);
      jac(static_cast<int>(k), 3) = 1.0;
    }
  };

  Eigen::VectorXd init(4);
  init << amp0, t_peak, tau0, baseline;
  fit::Options opts;
  opts.max_iterations = 300;
  const fit::Result res = fit::gauss_newton(eval, init, opts);
  const double tau_d = res.params(2);
  if (!res.converged || !(tau_d > 0.0) || !(res.params(0) > 0.0)) {
    throw FitFailure("histogram_bandwidth: exponential fit failed");
  }
  return 1.0 / (2.0 * M_PI * tau_d);
}

}  // namespace qfc::counting
