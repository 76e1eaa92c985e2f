#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qfc/pair_source.hpp"

namespace qfc::spectral {

struct PowerPoint {
  double power_mw = 0.0;
  double rate_hz = 0.0;
};

struct PowerSeries {
  std::vector<PowerPoint> points;
  double channel_frequency_hz = 0.0;
  void validate() const;  // >= 4 points, powers positive and distinct
};

struct QuadraticFit {
  double a = 0.0;  // s^-1 mW^-2
  double b = 0.0;  // s^-1 mW^-1
  double c = 0.0;  // s^-1
  double sigma_a = 0.0;
  double sigma_b = 0.0;
  double rss = 0.0;
};

// Nonnegative least squares of rate = a P^2 + b P + c. The sigmas come from
// the unconstrained fit covariance and feed the resonance classifier.
QuadraticFit fit_power_quadratic(const PowerSeries& series);

struct ChannelFit {
  int channel = 0;
  double frequency_hz = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double sigma_a = 0.0;
};

struct ClassifyOptions {
  double a_significance_sigma = 2.0;
  double b_median_factor = 3.0;
};

struct ResonancePartition {
  std::vector<int> on_resonance;   // indices into the input vector
  std::vector<int> off_resonance;
};

// A line is on-resonance when its quadratic term is significant against its
// fit uncertainty and its linear term exceeds the off-resonance median by
// the configured factor.
ResonancePartition classify_resonant(const std::vector<ChannelFit>& fits,
                                     const ClassifyOptions& opts = {});

// Intrinsic pair generation rate rs * ri / rc.
double pgr(double rs, double ri, double rc);

// pgr / bandwidth, s^-1 mW^-2 MHz^-1.
double spectral_brightness(double pgr_per_mw2, double bandwidth_mhz);

struct EfficiencyBudget {
  double eta_s = 0.0;
  double eta_i = 0.0;
  double extraction_s = 0.0;
  double extraction_i = 0.0;
  bool consistent = true;  // false when an extraction exceeds 1
};

EfficiencyBudget efficiencies(double rs, double ri, double rc, double transmission_s,
                              double transmission_i, double detection);

// Counts per (signal channel, idler channel) cell. Diagonal cells sample the
// channel's true coincidences plus the flat accidental rate, off-diagonal
// cells accidentals only. Cell seeds follow the documented splitting rule
// with stream index row * N + col.
using JsiGrid = Eigen::MatrixXd;
JsiGrid jsi(const std::vector<pairs::ChannelRateModel>& channels, double power_mw,
            double cross_accidental_rate_hz, double time_s, std::uint64_t seed);

}  // namespace qfc::spectral
