#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qfc/counting.hpp"
#include "qfc/spectral.hpp"

using namespace qfc;

namespace {

spectral::PowerSeries synth_series(double a, double b, double c,
                                   const std::vector<double>& powers) {
  spectral::PowerSeries series;
  for (double p : powers) {
    series.points.push_back({p, a * p * p + b * p + c});
  }
  return series;
}

std::vector<double> default_powers() {
  std::vector<double> powers;
  for (int i = 0; i < 10; ++i) {
    powers.push_back(0.1 + (2.0 - 0.1) * i / 9.0);
  }
  return powers;
}

std::vector<pairs::ChannelRateModel> reference_channels(int n) {
  std::vector<pairs::ChannelRateModel> channels;
  pairs::EnvelopeSpec env;
  const auto grid = cavity::comb_grid(193.5e12, 99e9, n);
  for (const auto& pair : grid) {
    pairs::ChannelRateModel m;
    m.index = pair.index;
    m.eta_s = 0.1836;
    m.eta_i = 0.1836;
    m.pgr_per_mw2 = 2.229e4 * pairs::pgr_envelope(pair, 193.5e12, env);
    m.raman_s_per_mw = 9.36e3;
    m.raman_i_per_mw = 1.084e4;
    m.dark_s_hz = 100.0;
    m.dark_i_hz = 100.0;
    m.coincidence_window_s = 5e-8;
    channels.push_back(m);
  }
  return channels;
}

}  // namespace

TEST_CASE("quadratic power fit recovers noiseless coefficients exactly") {
  const auto series = synth_series(3.90e3, 8.12e3, 100.0, default_powers());
  const auto fit = spectral::fit_power_quadratic(series);
  CHECK(fit.a == doctest::Approx(3.90e3).epsilon(1e-9));
  CHECK(fit.b == doctest::Approx(8.12e3).epsilon(1e-9));
  CHECK(fit.c == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("pure-linear data pins the quadratic term at zero") {
  const auto series = synth_series(0.0, 1.22e3, 50.0, default_powers());
  const auto fit = spectral::fit_power_quadratic(series);
  CHECK(fit.a == 0.0);
  CHECK(fit.b == doctest::Approx(1.22e3).epsilon(1e-9));
}

TEST_CASE("poisson-noised fits land within 5% in the median") {
  const double a = 3.90e3, b = 8.12e3, c = 100.0, time = 10.0;
  std::vector<double> errors_a, errors_b;
  for (int trial = 0; trial < 20; ++trial) {
    spectral::PowerSeries series;
    for (size_t j = 0; j < default_powers().size(); ++j) {
      const double p = default_powers()[j];
      const double rate = a * p * p + b * p + c;
      const auto counts = counting::sample_counts(
          rate, time, rng::derive_seed(600 + trial, j));
      series.points.push_back({p, static_cast<double>(counts) / time});
    }
    const auto fit = spectral::fit_power_quadratic(series);
    errors_a.push_back(std::fabs(fit.a - a) / a);
    errors_b.push_back(std::fabs(fit.b - b) / b);
  }
  std::sort(errors_a.begin(), errors_a.end());
  std::sort(errors_b.begin(), errors_b.end());
  CHECK(errors_a[errors_a.size() / 2] < 0.05);
  CHECK(errors_b[errors_b.size() / 2] < 0.05);
}

TEST_CASE("power series validation") {
  spectral::PowerSeries bad;
  bad.points = {{0.1, 1.0}, {0.2, 2.0}, {0.3, 3.0}};
  CHECK_THROWS_AS(spectral::fit_power_quadratic(bad), InvalidInput);
  bad.points = {{0.1, 1.0}, {0.2, 2.0}, {0.2, 3.0}, {0.4, 4.0}};
  CHECK_THROWS_AS(spectral::fit_power_quadratic(bad), InvalidInput);
  bad.points = {{-0.1, 1.0}, {0.2, 2.0}, {0.3, 3.0}, {0.4, 4.0}};
  CHECK_THROWS_AS(spectral::fit_power_quadratic(bad), InvalidInput);
}

TEST_CASE("classifier separates on- and off-resonance lines") {
  std::vector<spectral::ChannelFit> fits;
  rng::Generator gen(8);
  // 40 off-resonance lines around the characterized averages, Stokes side higher.
  for (int i = 0; i < 40; ++i) {
    spectral::ChannelFit f;
    f.channel = i;
    const bool low_side = i % 2 == 0;
    f.frequency_hz = low_side ? 193.0e12 : 194.0e12;
    f.a = std::fabs(5.0 * gen.normal());
    f.sigma_a = 20.0;
    f.b = (low_side ? 1.32e3 : 1.14e3) * (1.0 + 0.05 * gen.normal());
    fits.push_back(f);
  }
  // 20 on-resonance lines.
  for (int i = 40; i < 60; ++i) {
    spectral::ChannelFit f;
    f.channel = i;
    f.frequency_hz = 193.5e12 + (i - 50) * 99e9;
    f.a = 3.9e3 * (1.0 + 0.1 * gen.normal());
    f.sigma_a = 40.0;
    f.b = 1.01e4 * (1.0 + 0.05 * gen.normal());
    fits.push_back(f);
  }
  const auto partition = spectral::classify_resonant(fits);
  CHECK(partition.on_resonance.size() == 20);
  CHECK(partition.off_resonance.size() == 40);
  for (int idx : partition.on_resonance) {
    CHECK(idx >= 40);
  }

  // Stokes asymmetry survives classification.
  double low = 0.0, high = 0.0;
  int n_low = 0, n_high = 0;
  for (int idx : partition.off_resonance) {
    if (fits[static_cast<size_t>(idx)].frequency_hz < 193.5e12) {
      low += fits[static_cast<size_t>(idx)].b;
      ++n_low;
    } else {
      high += fits[static_cast<size_t>(idx)].b;
      ++n_high;
    }
  }
  CHECK(low / n_low > high / n_high);
}

TEST_CASE("classifier needs at least two channels") {
  std::vector<spectral::ChannelFit> one(1);
  CHECK_THROWS_AS(spectral::classify_resonant(one), InvalidInput);
}

TEST_CASE("pgr algebra") {
  CHECK(spectral::pgr(0.1 * 1e6, 0.12 * 1e6, 0.1 * 0.12 * 1e6) == doctest::Approx(1e6));
  CHECK(spectral::pgr(5.0, 5.0, 5.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(spectral::pgr(1.0, 1.0, 0.0), UndefinedValue);
  // Scale invariance in the efficiencies.
  const double base = spectral::pgr(2e3, 3e3, 0.6e3);
  CHECK(spectral::pgr(2e3 * 7.0, 3e3, 0.6e3 * 7.0) == doctest::Approx(base));
}

TEST_CASE("spectral brightness") {
  CHECK(spectral::spectral_brightness(1e6, 100.0) == doctest::Approx(1e4));
  CHECK(spectral::spectral_brightness(1e6, 200.0) == doctest::Approx(5e3));
  CHECK_THROWS_AS(spectral::spectral_brightness(1e6, 0.0), UndefinedValue);
}

TEST_CASE("efficiency budget arithmetic") {
  const auto unity = spectral::efficiencies(3.0, 5.0, 5.0, 1.0, 1.0, 1.0);
  CHECK(unity.eta_s == doctest::Approx(1.0));

  // eta 0.1836 against a 50% transmission and 90% detection budget.
  const double r = 1e4;
  const auto budget =
      spectral::efficiencies(0.1836 * r, 0.1836 * r, 0.1836 * 0.1836 * r, 0.5, 0.5, 0.9);
  CHECK(budget.eta_s == doctest::Approx(0.1836));
  CHECK(budget.extraction_s == doctest::Approx(0.408).epsilon(1e-3));
  CHECK(budget.consistent);

  const auto bare = spectral::efficiencies(10.0, 10.0, 3.0, 1.0, 1.0, 1.0);
  CHECK(bare.extraction_s == doctest::Approx(bare.eta_s));

  // Symmetry under exchanging the arms.
  const auto ab = spectral::efficiencies(2.0, 7.0, 1.5, 1.0, 1.0, 1.0);
  const auto ba = spectral::efficiencies(7.0, 2.0, 1.5, 1.0, 1.0, 1.0);
  CHECK(ab.eta_s == doctest::Approx(ba.eta_i));

  const auto broken = spectral::efficiencies(10.0, 10.0, 9.0, 0.5, 0.5, 0.9);
  CHECK(!broken.consistent);

  CHECK_THROWS_AS(spectral::efficiencies(0.0, 1.0, 0.5, 1.0, 1.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(spectral::efficiencies(1.0, 1.0, 0.5, 0.0, 1.0, 1.0), InvalidInput);
}

TEST_CASE("jsi without accidentals is strictly diagonal") {
  const auto channels = reference_channels(6);
  const auto grid = spectral::jsi(channels, 1.0, 0.0, 5.0, 404);
  for (int i = 0; i < grid.rows(); ++i) {
    for (int j = 0; j < grid.cols(); ++j) {
      if (i == j) {
        CHECK(grid(i, j) > 0.0);
      } else {
        CHECK(grid(i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("jsi is diagonally dominant with reference settings") {
  const auto channels = reference_channels(22);
  const double cross = 8.0;  // accidental rate per cell
  const auto grid = spectral::jsi(channels, 1.0, cross, 20.0, 405);
  double min_diag = 1e300, max_off = 0.0;
  for (int i = 0; i < grid.rows(); ++i) {
    for (int j = 0; j < grid.cols(); ++j) {
      if (i == j) {
        min_diag = std::min(min_diag, grid(i, j));
      } else {
        max_off = std::max(max_off, grid(i, j));
      }
    }
  }
  CHECK(min_diag / max_off > 10.0);
}

TEST_CASE("jsi conserves total counts within statistics") {
  const auto channels = reference_channels(22);
  const double cross = 12.0, time = 10.0, power = 1.0;
  const auto grid = spectral::jsi(channels, power, cross, time, 406);
  double total = 0.0, expected = 0.0;
  for (int i = 0; i < grid.rows(); ++i) {
    for (int j = 0; j < grid.cols(); ++j) {
      total += grid(i, j);
    }
    expected += pairs::expected_coincidences(channels[static_cast<size_t>(i)], power)
                    .true_rate_hz * time;
  }
  expected += 22.0 * 22.0 * cross * time;
  CHECK(std::fabs(total - expected) < 4.0 * std::sqrt(expected));
}

TEST_CASE("outer jsi channels are weaker under the 3 THz envelope") {
  const auto channels = reference_channels(22);
  const auto grid = spectral::jsi(channels, 1.0, 5.0, 20.0, 407);
  double inner_min = 1e300, outer_max = 0.0;
  for (int i = 0; i < 16; ++i) {
    inner_min = std::min(inner_min, grid(i, i));
  }
  for (int i = 16; i < 22; ++i) {
    outer_max = std::max(outer_max, grid(i, i));
  }
  CHECK(outer_max < inner_min);
}
