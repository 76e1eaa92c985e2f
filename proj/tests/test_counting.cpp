#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qfc/counting.hpp"
#include "qfc/jones.hpp"
#include "qfc/pair_source.hpp"

using namespace qfc;

TEST_CASE("poisson sampling basics") {
  CHECK(counting::sample_counts(0.0, 10.0, 1) == 0);
  CHECK(counting::sample_counts(123.0, 2.0, 42) == counting::sample_counts(123.0, 2.0, 42));
  CHECK_THROWS_AS(counting::sample_counts(-1.0, 1.0, 0), InvalidInput);
  CHECK_THROWS_AS(counting::sample_counts(1.0, 0.0, 0), InvalidInput);
}

TEST_CASE("poisson mean and variance at mean 100") {
  const int n = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(
        counting::sample_counts(10.0, 10.0, rng::derive_seed(1234, static_cast<std::uint64_t>(i))));
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::fabs(mean - 100.0) < 0.3);  // 3 sigma of the sample mean
  CHECK(var / mean > 0.9);
  CHECK(var / mean < 1.1);
}

TEST_CASE("poisson sampler is sane at small and large means") {
  rng::Generator gen(5);
  double sum3 = 0.0, sum_big = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    sum3 += static_cast<double>(gen.poisson(3.0));
    sum_big += static_cast<double>(gen.poisson(5000.0));
  }
  CHECK(std::fabs(sum3 / n - 3.0) < 3.0 * std::sqrt(3.0 / n));
  CHECK(std::fabs(sum_big / n - 5000.0) < 3.0 * std::sqrt(5000.0 / n));
}

TEST_CASE("visibility arithmetic and errors") {
  CHECK(counting::visibility(500, 0, 0, 500) == doctest::Approx(1.0));
  CHECK(counting::visibility(100, 100, 100, 100) == doctest::Approx(0.0));
  CHECK(counting::visibility(0, 300, 300, 0) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(counting::visibility(0, 0, 0, 0), UndefinedValue);
  CHECK_THROWS_AS(counting::visibility(-1, 0, 0, 5), InvalidInput);
}

TEST_CASE("simulated D/A visibility of the theta = pi/3 state is cos(theta)") {
  const auto state = pairs::ideal_state(M_PI / 3.0);
  const double n_total = 2e5;
  const double p_dd = jones::born_probability(state, jones::PolState::D, jones::PolState::D);
  const double p_da = jones::born_probability(state, jones::PolState::D, jones::PolState::A);
  const double p_ad = jones::born_probability(state, jones::PolState::A, jones::PolState::D);
  const double p_aa = jones::born_probability(state, jones::PolState::A, jones::PolState::A);
  const double dd = static_cast<double>(counting::sample_counts(p_dd * n_total, 1.0, 11));
  const double da = static_cast<double>(counting::sample_counts(p_da * n_total, 1.0, 12));
  const double ad = static_cast<double>(counting::sample_counts(p_ad * n_total, 1.0, 13));
  const double aa = static_cast<double>(counting::sample_counts(p_aa * n_total, 1.0, 14));
  const double v = counting::visibility(dd, da, ad, aa);
  const double expected = std::cos(M_PI / 3.0);
  const double sigma = std::sqrt((1.0 - expected * expected) / n_total);
  CHECK(std::fabs(v - expected) < 3.0 * sigma);
}

TEST_CASE("car arithmetic and errors") {
  CHECK(counting::car(410, 10) == doctest::Approx(41.0));
  CHECK(counting::car(100, 100) == doctest::Approx(1.0));
  CHECK_THROWS_AS(counting::car(100, 0), UndefinedValue);
  CHECK_THROWS_AS(counting::car(-1, 10), InvalidInput);
}

TEST_CASE("histogram bandwidth round-trips over the working range") {
  for (double mhz : {50.0, 100.0, 190.41, 400.0, 1000.0}) {
    const double delta_nu = mhz * 1e6;
    const double tau = 1.0 / (2.0 * M_PI * delta_nu);
    // Bin width resolving the decay, window about ten decay times.
    const double bin = tau / 8.0;
    const auto h = counting::histogram_generate(delta_nu, 2e4, 150.0, bin, 161);
    const double extracted = counting::histogram_bandwidth(h);
    CHECK(std::fabs(extracted - delta_nu) / delta_nu < 0.01);
  }
}

TEST_CASE("histogram bandwidth round-trips on Poisson-sampled data") {
  const double delta_nu = 190.41e6;
  const double tau = 1.0 / (2.0 * M_PI * delta_nu);
  const auto expected = counting::histogram_generate(delta_nu, 2e4, 200.0, tau / 8.0, 161);
  const auto sampled = counting::histogram_sample(expected, 321);
  const double extracted = counting::histogram_bandwidth(sampled);
  CHECK(std::fabs(extracted - delta_nu) / delta_nu < 0.01);
}

TEST_CASE("doubling the decay time halves the extracted bandwidth") {
  const double delta_nu = 200e6;
  const double tau = 1.0 / (2.0 * M_PI * delta_nu);
  const auto h1 = counting::histogram_generate(delta_nu, 1e4, 100.0, tau / 8.0, 161);
  const auto h2 = counting::histogram_generate(0.5 * delta_nu, 1e4, 100.0, tau / 8.0, 161);
  const double r = counting::histogram_bandwidth(h1) / counting::histogram_bandwidth(h2);
  CHECK(r == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("histogram fit failures and input validation") {
  counting::DelayHistogram flat;
  for (int i = 0; i < 101; ++i) {
    flat.delay_s.push_back((i - 50) * 1e-10);
    flat.counts.push_back(500.0);
  }
  CHECK_THROWS_AS(counting::histogram_bandwidth(flat), FitFailure);

  counting::DelayHistogram tiny;
  tiny.delay_s = {0.0, 1.0};
  tiny.counts = {1.0, 2.0};
  CHECK_THROWS_AS(counting::histogram_bandwidth(tiny), InvalidInput);

  // Peak too close to the edge: fewer than 10 bins on one side.
  counting::DelayHistogram lopsided;
  for (int i = 0; i < 41; ++i) {
    lopsided.delay_s.push_back(i * 1e-10);
    lopsided.counts.push_back(i == 2 ? 1000.0 : 10.0);
  }
  CHECK_THROWS_AS(counting::histogram_bandwidth(lopsided), InvalidInput);

  CHECK_THROWS_AS(counting::histogram_generate(0.0, 1e3, 0.0, 1e-10, 81), InvalidInput);
  CHECK_THROWS_AS(counting::histogram_generate(1e8, 1e3, 0.0, 1e-10, 80), InvalidInput);
}

TEST_CASE("seed derivation is stable and collision-resistant in practice") {
  CHECK(rng::derive_seed(1, 0) == rng::derive_seed(1, 0));
  CHECK(rng::derive_seed(1, 0) != rng::derive_seed(1, 1));
  CHECK(rng::derive_seed(1, 0) != rng::derive_seed(2, 0));
}
