#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qfc/thermal.hpp"

using namespace qfc;

namespace {

std::vector<double> ramp(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) {
    v.push_back(lo + (hi - lo) * i / (n - 1));
  }
  return v;
}

double max_abs_diff(const std::vector<thermal::SweepPoint>& trace,
                    const std::vector<double>& reference) {
  double worst = 0.0;
  for (size_t i = 0; i < trace.size(); ++i) {
    worst = std::max(worst, std::fabs(trace[i].transmission - reference[i]));
  }
  return worst;
}

std::vector<double> static_trace(const cavity::RingSpec& spec, const std::vector<double>& currents) {
  std::vector<double> out;
  for (double current : currents) {
    thermal::ThermalState cold;
    cold.heater_current_ma = current;
    const double detuning = spec.pump_frequency_hz - thermal::resonance_frequency_hz(cold, spec);
    out.push_back(cavity::transmission(detuning, spec.fwhm_for(0), spec.min_transmission));
  }
  return out;
}

}  // namespace

TEST_CASE("self-heating decays exponentially at zero power") {
  cavity::RingSpec spec;
  thermal::ThermalState state;
  state.self_heat_shift_hz = -5e8;
  const double s0 = state.self_heat_shift_hz;
  const double dt = spec.thermal_tau_s / 20.0;
  const int steps = static_cast<int>(std::round(3.0 * spec.thermal_tau_s / dt));
  for (int i = 0; i < steps; ++i) {
    state = thermal::thermal_step(state, 0.0, spec.pump_frequency_hz, spec, dt);
  }
  // First-order integration of the homogeneous equation.
  const double discrete = s0 * std::pow(1.0 - dt / spec.thermal_tau_s, steps);
  CHECK(state.self_heat_shift_hz == doctest::Approx(discrete).epsilon(1e-9));
  CHECK(std::fabs(state.self_heat_shift_hz) < std::fabs(s0) * std::exp(-2.5));
}

TEST_CASE("thermal step enforces the stability bound") {
  cavity::RingSpec spec;
  thermal::ThermalState state;
  CHECK_THROWS_AS(thermal::thermal_step(state, 1.0, spec.pump_frequency_hz, spec,
                                        spec.thermal_tau_s / 5.0),
                  StabilityError);
  CHECK_THROWS_AS(thermal::thermal_step(state, 1.0, spec.pump_frequency_hz, spec, 0.0),
                  InvalidInput);
  CHECK_THROWS_AS(thermal::thermal_step(state, -1.0, spec.pump_frequency_hz, spec, 1e-4),
                  InvalidInput);
}

TEST_CASE("integrated steady state matches the fixed-point oracle") {
  cavity::RingSpec spec;
  const double power = 1.7;
  thermal::ThermalState state;
  state.heater_current_ma = 1.2;
  const double dt = spec.thermal_tau_s / 10.0;
  const int steps = static_cast<int>(std::round(60.0 * spec.thermal_tau_s / dt));
  for (int i = 0; i < steps; ++i) {
    state = thermal::thermal_step(state, power, spec.pump_frequency_hz, spec, dt);
  }

  // Independent oracle: fixed-point iteration of s = kappa P (1 - T(delta(s))).
  thermal::ThermalState probe = state;
  double s_fixed = 0.0;
  for (int i = 0; i < 10000; ++i) {
    probe.self_heat_shift_hz = s_fixed;
    const double detuning =
        spec.pump_frequency_hz - thermal::resonance_frequency_hz(probe, spec);
    const double t = cavity::transmission(detuning, spec.fwhm_for(0), spec.min_transmission);
    const double next = spec.self_heating_hz_per_mw * power * (1.0 - t);
    if (std::fabs(next - s_fixed) < 1e-6) {
      s_fixed = next;
      break;
    }
    // Damped update keeps the iteration contractive near the resonance.
    s_fixed = 0.5 * (s_fixed + next);
  }
  CHECK(std::fabs(state.self_heat_shift_hz - s_fixed) <
        1e-3 * std::max(1.0, std::fabs(s_fixed)));
}

TEST_CASE("near-cold sweep reproduces the static lineshape within 2%") {
  cavity::RingSpec spec;
  const auto currents = ramp(0.0, 3.0, 241);
  const auto reference = static_trace(spec, currents);
  const auto fwd =
      thermal::sweep_trace(spec, 0.015, currents, thermal::SweepDirection::Forward);
  CHECK(max_abs_diff(fwd, reference) < 0.02);

  std::vector<double> reversed(currents.rbegin(), currents.rend());
  std::vector<double> reference_rev(reference.rbegin(), reference.rend());
  const auto bwd =
      thermal::sweep_trace(spec, 0.015, reversed, thermal::SweepDirection::Backward);
  CHECK(max_abs_diff(bwd, reference_rev) < 0.02);
}

TEST_CASE("zero-power sweep equals the static lineshape exactly") {
  cavity::RingSpec spec;
  const auto currents = ramp(0.0, 3.0, 101);
  const auto reference = static_trace(spec, currents);
  const auto trace = thermal::sweep_trace(spec, 0.0, currents, thermal::SweepDirection::Forward);
  CHECK(max_abs_diff(trace, reference) < 1e-12);
}

TEST_CASE("high-power sweeps are hysteretic") {
  cavity::RingSpec spec;
  const auto currents = ramp(0.0, 3.0, 241);
  const auto fwd = thermal::sweep_trace(spec, 2.773, currents, thermal::SweepDirection::Forward);
  std::vector<double> reversed(currents.rbegin(), currents.rend());
  const auto bwd =
      thermal::sweep_trace(spec, 2.773, reversed, thermal::SweepDirection::Backward);
  double gap = 0.0;
  for (size_t i = 0; i < fwd.size(); ++i) {
    gap = std::max(gap, std::fabs(fwd[i].transmission - bwd[bwd.size() - 1 - i].transmission));
  }
  CHECK(gap > 0.1);
}

TEST_CASE("hysteresis area vanishes at low power and grows with power") {
  cavity::RingSpec spec;
  const auto currents = ramp(0.0, 3.0, 161);
  std::vector<double> reversed(currents.rbegin(), currents.rend());
  const double di = currents[1] - currents[0];
  double previous_area = -1.0;
  for (double power : {0.015, 0.8, 1.6, 2.773}) {
    const auto fwd = thermal::sweep_trace(spec, power, currents, thermal::SweepDirection::Forward);
    const auto bwd =
        thermal::sweep_trace(spec, power, reversed, thermal::SweepDirection::Backward);
    double area = 0.0;
    for (size_t i = 0; i < fwd.size(); ++i) {
      area += std::fabs(fwd[i].transmission - bwd[bwd.size() - 1 - i].transmission) * di;
    }
    CHECK(area > previous_area);
    if (power == 0.015) {
      CHECK(area < 0.01);
    }
    previous_area = area;
  }
}

TEST_CASE("sweep trace validates its ramp") {
  cavity::RingSpec spec;
  std::vector<double> not_monotone{0.0, 0.5, 0.3, 1.0};
  CHECK_THROWS_AS(
      thermal::sweep_trace(spec, 1.0, not_monotone, thermal::SweepDirection::Forward),
      InvalidInput);
  CHECK_THROWS_AS(
      thermal::sweep_trace(spec, 1.0, ramp(0.0, 1.0, 10), thermal::SweepDirection::Backward),
      InvalidInput);
}

TEST_CASE("lock step implements the sign law with deadband and clamp") {
  thermal::ControllerConfig cfg;
  cfg.setpoint_transmission = 0.05;
  cfg.proportional_gain_ma = 10.0;
  cfg.deadband = 0.005;
  cfg.max_step_ma = 0.5;
  thermal::ThermalState state;

  CHECK(thermal::lock_step(0.05, 0.05, state, cfg) == 0.0);
  CHECK(thermal::lock_step(0.052, 0.05, state, cfg) == 0.0);  // inside deadband
  CHECK(thermal::lock_step(0.03, 0.05, state, cfg) == doctest::Approx(0.2));
  CHECK(thermal::lock_step(0.35, 0.05, state, cfg) == doctest::Approx(-0.5));  // clamped
  CHECK_THROWS_AS(thermal::lock_step(1.2, 0.05, state, cfg), InvalidInput);
}

TEST_CASE("lock step is odd in the error outside the deadband") {
  thermal::ControllerConfig cfg;
  cfg.setpoint_transmission = 0.5;
  thermal::ThermalState state;
  for (double e = cfg.deadband + 0.001; e < 0.4; e += 0.02) {
    const double up = thermal::lock_step(cfg.setpoint_transmission + e, 0.0, state, cfg);
    const double down = thermal::lock_step(cfg.setpoint_transmission - e, 0.0, state, cfg);
    CHECK(up == doctest::Approx(-down).epsilon(1e-12));
    CHECK(down > 0.0);
  }
}

TEST_CASE("closed loop with zero drift stays inside the deadband") {
  cavity::RingSpec spec;
  thermal::ControllerConfig cfg;
  cfg.measurement_noise = 0.0;
  const auto trace = thermal::run_lock(
      spec, cfg, 1.0, [](double) { return 0.0; }, 10.0, 1, true);
  REQUIRE(!trace.empty());
  for (const auto& sample : trace) {
    CHECK(std::fabs(sample.transmission - cfg.setpoint_transmission) <= cfg.deadband + 1e-9);
    CHECK(!sample.saturated);
  }
}

TEST_CASE("closed loop tracks a sinusoidal drift, open loop does not") {
  cavity::RingSpec spec;
  thermal::ControllerConfig cfg;
  const auto drift = [](double t) { return 0.5e9 * std::sin(2.0 * M_PI * t / 60.0); };
  const auto closed = thermal::run_lock(spec, cfg, 1.0, drift, 30.0, 2, true);
  double worst = 0.0;
  for (const auto& sample : closed) {
    worst = std::max(worst, std::fabs(sample.transmission - cfg.setpoint_transmission));
  }
  CHECK(worst <= 0.03);

  const auto open = thermal::run_lock(spec, cfg, 1.0, drift, 30.0, 2, false);
  double highest = 0.0;
  for (const auto& sample : open) {
    highest = std::max(highest, sample.transmission);
    CHECK(sample.current_ma == doctest::Approx(open.front().current_ma));
  }
  CHECK(highest > 0.5);
}

TEST_CASE("constant slow drift is tracked within the deadband margin") {
  cavity::RingSpec spec;
  thermal::ControllerConfig cfg;
  cfg.measurement_noise = 0.0;
  const double slew = 10e6;  // Hz/s, below the documented tracking limit
  const auto trace = thermal::run_lock(
      spec, cfg, 1.0, [slew](double t) { return slew * t; }, 20.0, 3, true);
  // Error may exceed the deadband by at most one control period of drift.
  const double slope = 3.4e-9;  // dT/d(detuning) near the setpoint
  const double margin = cfg.deadband + 2.0 * slew * cfg.sample_period_s * slope;
  for (size_t i = trace.size() / 2; i < trace.size(); ++i) {
    CHECK(std::fabs(trace[i].transmission - cfg.setpoint_transmission) <= margin);
  }
}

TEST_CASE("run_lock validates its inputs") {
  cavity::RingSpec spec;
  thermal::ControllerConfig cfg;
  CHECK_THROWS_AS(
      thermal::run_lock(spec, cfg, 1.0, [](double) { return 0.0; }, 0.0, 1, true),
      InvalidInput);
  cavity::RingSpec below = spec;
  below.pump_resonance_offset_hz = -2.0e9;  // cold resonance below the laser
  CHECK_THROWS_AS(
      thermal::run_lock(below, cfg, 1.0, [](double) { return 0.0; }, 1.0, 1, true),
      InvalidInput);
  thermal::ControllerConfig bad = cfg;
  bad.setpoint_transmission = 0.0;
  CHECK_THROWS_AS(
      thermal::run_lock(spec, bad, 1.0, [](double) { return 0.0; }, 1.0, 1, true),
      InvalidInput);
}
