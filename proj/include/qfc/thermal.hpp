#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qfc/cavity.hpp"

namespace qfc::thermal {

// Dynamic cavity state. self_heat_shift_hz is the resonance displacement
// caused by absorbed pump light; it relaxes to zero at zero power.
struct ThermalState {
  double self_heat_shift_hz = 0.0;
  double heater_current_ma = 0.0;
  double time_s = 0.0;
};

struct ControllerConfig {
  double setpoint_transmission = 0.05;
  double proportional_gain_ma = 0.05;  // mA per unit transmission error
  double deadband = 0.005;
  double max_step_ma = 0.5;
  double sample_period_s = 0.01;
  double max_current_ma = 20.0;
  double measurement_noise = 0.002;  // sd of the transmission readout
  void validate() const;
};

// Effective cold resonance position for a state (pump resonance plus heater
// tuning plus self-heating), before any external drift.
double resonance_frequency_hz(const ThermalState& state, const cavity::RingSpec& spec);

// One explicit integration step of
//   d(shift)/dt = (kappa P (1 - T(delta_eff)) - shift) / tau
// with delta_eff = laser - (cold resonance + heater shift + shift).
// dt must not exceed tau/10.
ThermalState thermal_step(const ThermalState& state, double pump_power_mw,
                          double laser_frequency_hz, const cavity::RingSpec& spec, double dt_s);

enum class SweepDirection { Forward, Backward };

struct SweepPoint {
  double current_ma = 0.0;
  double transmission = 0.0;
};

// Time-integrated heater sweep at fixed laser frequency; `dwell_s` is the
// time spent at each ramp point. The ramp must be monotone in the stated
// direction.
std::vector<SweepPoint> sweep_trace(const cavity::RingSpec& spec, double pump_power_mw,
                                    const std::vector<double>& current_ramp_ma,
                                    SweepDirection direction, double dwell_s = 0.020);

// Proportional step with deadband and clamp: transmission below the setpoint
// produces a positive current step (pushing the resonance away from the
// pump), above the setpoint a negative one.
double lock_step(double measured_transmission, double previous_transmission,
                 const ThermalState& state, const ControllerConfig& cfg);

struct LockSample {
  double time_s = 0.0;
  double transmission = 0.0;
  double current_ma = 0.0;
  bool saturated = false;
};

// Closed-loop simulation against a resonance drift (Hz as a function of
// time). The loop is biased onto the cold side of the resonance at the
// transmission setpoint before t = 0. With `controller_enabled` false the
// current is frozen at the acquisition bias.
std::vector<LockSample> run_lock(const cavity::RingSpec& spec, const ControllerConfig& cfg,
                                 double pump_power_mw,
                                 const std::function<double(double)>& drift_hz,
                                 double duration_s, std::uint64_t seed,
                                 bool controller_enabled = true);

}  // namespace qfc::thermal
