#pragma once

#include <map>
#include <vector>

#include "qfc/errors.hpp"

namespace qfc::cavity {

// Static description of the microring around the pump band.
// Units: frequencies Hz, currents mA, temperatures degrees C, times s.
struct RingSpec {
  double pump_frequency_hz = 193.5e12;
  double fsr_hz = 99.03e9;
  double fwhm_hz = 190.41e6;  // global default, see fwhm_overrides_hz
  double min_transmission = 0.02;
  double k_temp_hz_per_c = -3.01e9;
  double k_current_hz_per_ma2 = -0.91e9;
  double heater_resistance_ohm = 2050.0;
  // Cold position of the pump resonance relative to the pump laser. Positive
  // puts the cold resonance above the laser so heater current can pull it
  // down across the pump line.
  double pump_resonance_offset_hz = 2.0e9;
  // Single-pole self-heating model; calibration defaults, not measurements.
  double thermal_tau_s = 0.010;
  double self_heating_hz_per_mw = -0.15e9;
  // Per-resonance FWHM overrides keyed by resonance index (0 = pump line).
  std::map<int, double> fwhm_overrides_hz;

  double q_factor() const { return pump_frequency_hz / fwhm_hz; }
  double fwhm_for(int resonance_index) const;
  void validate() const;
};

struct ChannelPair {
  int index = 0;        // m >= 1
  double signal_hz = 0.0;  // high-frequency side
  double idler_hz = 0.0;   // low-frequency side
};

// Lorentzian dip with floor: T(d) = 1 - (1 - Tmin) (w/2)^2 / (d^2 + (w/2)^2).
double transmission(double detuning_hz, double fwhm_hz, double min_transmission);

// Frequency pairs m = 1..pair_count: signal = pump + m*spacing,
// idler = pump - m*spacing. pair_count of 0 yields an empty list.
std::vector<ChannelPair> comb_grid(double pump_frequency_hz, double grid_spacing_hz,
                                   int pair_count);

// Thermo-optic resonance shift: k_temp * dT + k_current * I^2.
double thermal_shift(double delta_temp_c, double heater_current_ma, const RingSpec& spec);

struct TransmissionSample {
  double frequency_hz = 0.0;
  double transmission = 0.0;
};

struct LorentzianFit {
  double f0_hz = 0.0;
  double fwhm_hz = 0.0;
  double min_transmission = 0.0;
  double q_factor = 0.0;
  int iterations = 0;
};

// Least-squares fit of the dip model to a sampled resonance. Initialization
// takes f0 from the minimum sample and the width from the half-depth
// crossings, then refines with damped Gauss-Newton.
LorentzianFit fit_lorentzian(const std::vector<TransmissionSample>& samples);

}  // namespace qfc::cavity
