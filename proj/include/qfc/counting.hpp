#pragma once

#include <cstdint>
#include <vector>

#include "qfc/errors.hpp"
#include "qfc/random.hpp"

namespace qfc::counting {

struct CountRecord {
  long long singles_s = 0;
  long long singles_i = 0;
  long long coincidences = 0;
  double accidentals = 0.0;  // model estimate in counts, not sampled
  double integration_time_s = 0.0;
  double power_mw = 0.0;
  std::uint64_t seed = 0;
};

// One Poisson draw with mean rate * time, deterministic for a given seed.
long long sample_counts(double rate_hz, double integration_time_s, std::uint64_t seed);

// ((DD + AA) - (DA + AD)) / (DD + AA + DA + AD).
double visibility(double cc_dd, double cc_da, double cc_ad, double cc_aa);

// coincidences / accidentals; accidentals must be positive.
double car(double coincidences, double accidentals);

struct DelayHistogram {
  std::vector<double> delay_s;
  std::vector<double> counts;
};

// Expected two-sided exponential correlation peak,
// A exp(-|t|/tau_d) + B with tau_d = 1/(2 pi delta_nu), centered on the
// middle bin. n_bins must be odd and >= 21 so both sides carry the decay.
DelayHistogram histogram_generate(double delta_nu_hz, double peak_counts,
                                  double baseline_counts, double bin_width_s, int n_bins);

// Poisson-samples each bin of an expected histogram.
DelayHistogram histogram_sample(const DelayHistogram& expected, std::uint64_t seed);

// Fits A exp(-|t - t0|/tau_d) + B and returns delta_nu = 1/(2 pi tau_d).
// The 1/(2 pi tau_d) convention is fixed project-wide.
double histogram_bandwidth(const DelayHistogram& histogram);

}  // namespace qfc::counting
