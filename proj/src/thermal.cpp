#include "qfc/thermal.hpp"

#include <algorithm>
#include <cmath>

#include "qfc/random.hpp"

namespace qfc::thermal {

void ControllerConfig::validate() const {
  if (!(setpoint_transmission > 0.0 && setpoint_transmission < 1.0)) {
    throw InvalidInput("controller.setpoint_transmission: must be in (0, 1)");
  }
  if (!(proportional_gain_ma > 0.0)) throw InvalidInput("controller.proportional_gain_ma: must be > 0");
  if (!(deadband >= 0.0)) throw InvalidInput("controller.deadband: must be >= 0");
  if (!(max_step_ma > 0.0)) throw InvalidInput("controller.max_step_ma: must be > 0");
  if (!(sample_period_s > 0.0)) throw InvalidInput("controller.sample_period_s: must be > 0");
  if (!(max_current_ma > 0.0)) throw InvalidInput("controller.max_current_ma: must be > 0");
  if (!(measurement_noise >= 0.0)) throw InvalidInput("controller.measurement_noise: must be >= 0");
}

double resonance_frequency_hz(const ThermalState& state, const cavity::RingSpec& spec) {
  return spec.pump_frequency_hz + spec.pump_resonance_offset_hz +
         cavity::thermal_shift(0.0, state.heater_current_ma, spec) + state.self_heat_shift_hz;
}

ThermalState thermal_step(const ThermalState& state, double pump_power_mw,
                          double laser_frequency_hz, const cavity::RingSpec& spec, double dt_s) {
  if (!(dt_s > 0.0)) {
    throw InvalidInput("thermal_step: dt must be > 0");
  }
  if (dt_s > spec.thermal_tau_s / 10.0 * (1.0 + 1e-9)) {
    throw StabilityError("thermal_step: dt exceeds thermal_tau/10");
  }
  if (!(pump_power_mw >= 0.0)) {
    throw InvalidInput("thermal_step: power must be >= 0");
  }
  const double detuning = laser_frequency_hz - resonance_frequency_hz(state, spec);
  const double t = cavity::transmission(detuning, spec.fwhm_for(0), spec.min_transmission);
  const double target = spec.self_heating_hz_per_mw * pump_power_mw * (1.0 - t);
  ThermalState next = state;
  next.self_heat_shift_hz += (target - state.self_heat_shift_hz) * dt_s / spec.thermal_tau_s;
  next.time_s += dt_s;
  return next;
}

std::vector<SweepPoint> sweep_trace(const cavity::RingSpec& spec, double pump_power_mw,
                                    const std::vector<double>& current_ramp_ma,
                                    SweepDirection direction, double dwell_s) {
  if (current_ramp_ma.size() < 2) {
    throw InvalidInput("sweep_trace: ramp needs at least 2 points");
  }
  if (!(dwell_s > 0.0)) {
    throw InvalidInput("sweep_trace: dwell must be > 0");
  }
  for (size_t i = 1; i < current_ramp_ma.size(); ++i) {
    const double d = current_ramp_ma[i] - current_ramp_ma[i - 1];
    if (direction == SweepDirection::Forward ? d < 0.0 : d > 0.0) {
      throw InvalidInput("sweep_trace: ramp is not monotone in the stated direction");
    }
  }

  const double dt = spec.thermal_tau_s / 20.0;
  ThermalState state;
  state.heater_current_ma = current_ramp_ma.front();

  // Let the cavity settle at the first ramp point before recording.
  const int warmup = static_cast<int>(std::ceil(10.0 * spec.thermal_tau_s / dt));
  for (int i = 0; i < warmup; ++i) {
    state = thermal_step(state, pump_power_mw, spec.pump_frequency_hz, spec, dt);
  }

  std::vector<SweepPoint> trace;
  trace.reserve(current_ramp_ma.size());
  const int substeps = std::max(1, static_cast<int>(std::ceil(dwell_s / dt)));
  for (double current : current_ramp_ma) {
    state.heater_current_ma = current;
    for (int i = 0; i < substeps; ++i) {
      state = thermal_step(state, pump_power_mw, spec.pump_frequency_hz, spec, dt);
    }
    const double detuning = spec.pump_frequency_hz - resonance_frequency_hz(state, spec);
    trace.push_back({current, cavity::transmission(detuning, spec.fwhm_for(0),
                                                   spec.min_transmission)});
  }
  return trace;
}

double lock_step(double measured_transmission, [[maybe_unused]] double previous_transmission,
                 [[maybe_unused]] const ThermalState& state, const ControllerConfig& cfg) {
  if (!(measured_transmission >= 0.0 && measured_transmission <= 1.0)) {
    throw InvalidInput("lock_step: transmission must be in [0, 1]");
  }
  const double error = measured_transmission - cfg.setpoint_transmission;
  if (std::fabs(error) <= cfg.deadband) {
    return 0.0;
  }
  const double magnitude = std::min(cfg.proportional_gain_ma * std::fabs(error), cfg.max_step_ma);
  return error < 0.0 ? magnitude : -magnitude;
}

std::vector<LockSample> run_lock(const cavity::RingSpec& spec, const ControllerConfig& cfg,
                                 double pump_power_mw,
                                 const std::function<double(double)>& drift_hz,
                                 double duration_s, std::uint64_t seed,
                                 bool controller_enabled) {
  spec.validate();
  cfg.validate();
  if (!(duration_s > 0.0)) {
    throw InvalidInput("run_lock: duration must be > 0");
  }
  if (!(pump_power_mw >= 0.0)) {
    throw InvalidInput("run_lock: power must be >= 0");
  }

  // Cold-side acquisition bias: place the resonance below the laser at the
  // detuning where the static lineshape sits at the setpoint, folding the
  // self-heating fixed point into the current so the loop starts on target.
  const double fwhm = spec.fwhm_for(0);
  const double half = 0.5 * fwhm;
  const double ratio = (1.0 - spec.min_transmission) / (1.0 - cfg.setpoint_transmission);
  if (!(ratio > 1.0)) {
    throw InvalidInput("run_lock: setpoint must exceed the transmission floor");
  }
  const double setpoint_detuning = half * std::sqrt(ratio - 1.0);
  const double steady_shift =
      spec.self_heating_hz_per_mw * pump_power_mw * (1.0 - cfg.setpoint_transmission);
  const double wanted_heater_shift = (spec.pump_frequency_hz - drift_hz(0.0)) -
                                     setpoint_detuning -
                                     (spec.pump_frequency_hz + spec.pump_resonance_offset_hz) -
                                     steady_shift;
  if (!(wanted_heater_shift / spec.k_current_hz_per_ma2 >= 0.0)) {
    throw InvalidInput(
        "run_lock: cold resonance must sit above the laser for cold-side acquisition");
  }
  const double bias_current = std::sqrt(wanted_heater_shift / spec.k_current_hz_per_ma2);
  if (bias_current > cfg.max_current_ma) {
    throw InvalidInput("run_lock: acquisition bias exceeds max_current");
  }

  ThermalState state;
  state.heater_current_ma = bias_current;
  state.self_heat_shift_hz = steady_shift;

  rng::Generator noise(seed);
  const double dt = spec.thermal_tau_s / 10.0;
  const int substeps = std::max(1, static_cast<int>(std::ceil(cfg.sample_period_s / dt)));
  const double sub_dt = cfg.sample_period_s / substeps;
  const int n_steps = static_cast<int>(std::ceil(duration_s / cfg.sample_period_s));

  std::vector<LockSample> trace;
  trace.reserve(static_cast<size_t>(n_steps));
  double previous = cfg.setpoint_transmission;

  for (int k = 0; k < n_steps; ++k) {
    const double t_start = k * cfg.sample_period_s;
    for (int i = 0; i < substeps; ++i) {
      // Resonance drift is equivalent to an opposite laser shift.
      const double laser_eff =
          spec.pump_frequency_hz - drift_hz(t_start + i * sub_dt);
      state = thermal_step(state, pump_power_mw, laser_eff, spec, sub_dt);
    }
    const double t_now = (k + 1) * cfg.sample_period_s;
    const double detuning = (spec.pump_frequency_hz - drift_hz(t_now)) -
                            resonance_frequency_hz(state, spec);
    const double trans =
        cavity::transmission(detuning, fwhm, spec.min_transmission);
    const double measured = std::min(
        1.0, std::max(0.0, trans + cfg.measurement_noise * noise.normal()));

    bool saturated = false;
    if (controller_enabled) {
      const double adjust = lock_step(measured, previous, state, cfg);
      double next_current = state.heater_current_ma + adjust;
      if (next_current < 0.0) {
        next_current = 0.0;
        saturated = true;
      } else if (next_current > cfg.max_current_ma) {
        next_current = cfg.max_current_ma;
        saturated = true;
      }
      state.heater_current_ma = next_current;
    }
    previous = measured;
    trace.push_back({t_now, trans, state.heater_current_ma, saturated});
  }
  return trace;
}

}  // namespace qfc::thermal
