#include "qfc/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qfc/fitting.hpp"

namespace qfc::cavity {

double RingSpec::fwhm_for(int resonance_index) const {
  const auto it = fwhm_overrides_hz.find(resonance_index);
  return it == fwhm_overrides_hz.end() ? fwhm_hz : it->second;
}

void RingSpec::validate() const {
  if (!(pump_frequency_hz > 0.0)) throw InvalidInput("ring.pump_frequency_hz: must be > 0");
  if (!(fsr_hz > 0.0)) throw InvalidInput("ring.fsr_hz: must be > 0");
  if (!(fwhm_hz > 0.0)) throw InvalidInput("ring.fwhm_hz: must be > 0");
  if (!(min_transmission >= 0.0 && min_transmission < 1.0)) {
    throw InvalidInput("ring.min_transmission: must be in [0, 1)");
  }
  if (!(heater_resistance_ohm > 0.0)) throw InvalidInput("ring.heater_resistance_ohm: must be > 0");
  if (!(thermal_tau_s > 0.0)) throw InvalidInput("ring.thermal_tau_s: must be > 0");
  for (const auto& [index, value] : fwhm_overrides_hz) {
    if (!(value > 0.0)) {
      throw InvalidInput("ring.fwhm_overrides_hz[" + std::to_string(index) + "]: must be > 0");
    }
  }
}

double transmission(double detuning_hz, double fwhm_hz, double min_transmission) {
  if (!(fwhm_hz > 0.0)) {
    throw InvalidInput("transmission: fwhm must be > 0");
  }
  if (!(min_transmission >= 0.0 && min_transmission < 1.0)) {
    throw InvalidInput("transmission: min_transmission must be in [0, 1)");
  }
  const double hw = 0.5 * fwhm_hz;
  const double lorentz = hw * hw / (detuning_hz * detuning_hz + hw * hw);
  return 1.0 - (1.0 - min_transmission) * lorentz;
}

std::vector<ChannelPair> comb_grid(double pump_frequency_hz, double grid_spacing_hz,
                                   int pair_count) {
  if (pair_count < 0) {
    throw InvalidInput("comb_grid: pair_count must be >= 0");
  }
  if (!(grid_spacing_hz > 0.0)) {
    throw InvalidInput("comb_grid: grid_spacing must be > 0");
  }
  std::vector<ChannelPair> pairs;
  pairs.reserve(static_cast<size_t>(pair_count));
  for (int m = 1; m <= pair_count; ++m) {
    pairs.push_back({m, pump_frequency_hz + m * grid_spacing_hz,
                     pump_frequency_hz - m * grid_spacing_hz});
  }
  return pairs;
}

double thermal_shift(double delta_temp_c, double heater_current_ma, const RingSpec& spec) {
  return spec.k_temp_hz_per_c * delta_temp_c +
         spec.k_current_hz_per_ma2 * heater_current_ma * heater_current_ma;
}

namespace {

// Interpolated half-depth crossings around the minimum sample; returns the
// initial width guess or a span-based fallback.
double initial_width(const std::vector<TransmissionSample>& s, size_t min_index,
                     double half_level) {
  double left = s.front().frequency_hz;
  bool found_left = false;
  for (size_t i = min_index; i-- > 0;) {
    if (s[i].transmission >= half_level) {
      const double t0 = s[i].transmission, t1 = s[i + 1].transmission;
      const double f0 = s[i].frequency_hz, f1 = s[i + 1].frequency_hz;
      left = t1 == t0 ? f0 : f0 + (half_level - t0) * (f1 - f0) / (t1 - t0);
      found_left = true;
      break;
    }
  }
  double right = s.back().frequency_hz;
  bool found_right = false;
  for (size_t i = min_index + 1; i < s.size(); ++i) {
    if (s[i].transmission >= half_level) {
      const double t0 = s[i - 1].transmission, t1 = s[i].transmission;
      const double f0 = s[i - 1].frequency_hz, f1 = s[i].frequency_hz;
      right = t1 == t0 ? f1 : f0 + (half_level - t0) * (f1 - f0) / (t1 - t0);
      found_right = true;
      break;
    }
  }
  if (found_left && found_right && right > left) {
    return right - left;
  }
  return (s.back().frequency_hz - s.front().frequency_hz) / 6.0;
}

}  // namespace

LorentzianFit fit_lorentzian(const std::vector<TransmissionSample>& samples) {
  if (samples.size() < 5) {
    throw InvalidInput("fit_lorentzian: need at least 5 samples");
  }
  std::vector<TransmissionSample> s(samples);
  std::sort(s.begin(), s.end(), [](const TransmissionSample& a, const TransmissionSample& b) {
    return a.frequency_hz < b.frequency_hz;
  });
  for (const auto& p : s) {
    if (!std::isfinite(p.frequency_hz) || !(p.transmission >= -1e-9 && p.transmission <= 1.0 + 1e-9)) {
      throw InvalidInput("fit_lorentzian: transmissions must lie in [0, 1]");
    }
  }

  size_t min_index = 0;
  double t_min = s[0].transmission, t_max = s[0].transmission;
  for (size_t i = 1; i < s.size(); ++i) {
    if (s[i].transmission < t_min) {
      t_min = s[i].transmission;
      min_index = i;
    }
    t_max = std::max(t_max, s[i].transmission);
  }

  // Dip detection: compare the depth against the scatter of the upper half
  // of the samples, which approximates the off-resonance noise level.
  std::vector<double> upper;
  for (const auto& p : s) {
    if (p.transmission >= 0.5 * (t_min + t_max)) {
      upper.push_back(p.transmission);
    }
  }
  double noise = 0.0;
  if (upper.size() > 1) {
    double mean = 0.0;
    for (double v : upper) mean += v;
    mean /= static_cast<double>(upper.size());
    for (double v : upper) noise += (v - mean) * (v - mean);
    noise = std::sqrt(noise / static_cast<double>(upper.size() - 1));
  }
  const double depth = t_max - t_min;
  if (depth < std::max(0.01, 5.0 * noise)) {
    throw FitFailure("fit_lorentzian: no dip detected above the noise level");
  }

  const double f0_init = s[min_index].frequency_hz;
  const double w_init = initial_width(s, min_index, 0.5 * (1.0 + t_min));
  if (!(w_init > 0.0)) {
    throw FitFailure("fit_lorentzian: could not estimate an initial width");
  }

  // Scaled parameters: u = (f0 - f0_init)/w_init, v = fwhm/w_init, tmin.
  auto eval = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const double u = p(0);
    const double v = std::max(p(1), 1e-9);
    const double tmin = std::min(std::max(p(2), 0.0), 1.0 - 1e-9);
    r.resize(static_cast<int>(s.size()));
    jac.resize(static_cast<int>(s.size()), 3);
    const double hw = 0.5 * v;
    for (size_t k = 0; k < s.size(); ++k) {
      const double x = (s[k].frequency_hz - f0_init) / w_init - u;
      const double denom = x * x + hw * hw;
      const double lor = hw * hw / denom;
      const double model = 1.0 - (1.0 - tmin) * lor;
      r(static_cast<int>(k)) = model - s[k].transmission;
      // d model / du = -(1-tmin) * dlor/du;  dlor/dx = -2 x hw^2 / denom^2
      const double dlor_dx = -2.0 * x * hw * hw / (denom * denom);
      jac(static_cast<int>(k), 0) = (1.0 - tmin) * dlor_dx;  // dx/du = -1
      // dlor/dv = d/dv [hw^2/(x^2+hw^2)], hw = v/2
      const double dlor_dv = x * x * hw / (denom * denom);
      jac(static_cast<int>(k), 1) = -(1.0 - tmin) * dlor_dv;
      jac(static_cast<int>(k), 2) = lor;
    }
  };

  Eigen::VectorXd init(3);
  init << 0.0, 1.0, std::max(t_min, 0.0);
  fit::Options opts;
  opts.max_iterations = 300;
  const fit::Result res = fit::gauss_newton(eval, init, opts);
  if (!res.converged) {
    throw FitFailure("fit_lorentzian: Gauss-Newton did not converge");
  }

  LorentzianFit out;
  out.f0_hz = f0_init + res.params(0) * w_init;
  out.fwhm_hz = std::max(res.params(1), 1e-9) * w_init;
  out.min_transmission = std::min(std::max(res.params(2), 0.0), 1.0 - 1e-9);
  out.q_factor = out.f0_hz / out.fwhm_hz;
  out.iterations = res.iterations;
  return out;
}

}  // namespace qfc::cavity
