#pragma once

#include "qfc/cavity.hpp"
#include "qfc/jones.hpp"

namespace qfc::pairs {

enum class Arm { Signal, Idler };

// Per-channel rate coefficients. Rates are s^-1 with pump powers in mW:
// singles follow eta * pgr * P^2 + raman * P + dark, coincidences
// eta_s * eta_i * pgr * P^2 plus the flat accidental background
// N_s * N_i * tau_w.
struct ChannelRateModel {
  int index = 0;
  double pgr_per_mw2 = 0.0;  // intrinsic pair generation rate R_PGR
  double eta_s = 1.0;
  double eta_i = 1.0;
  double raman_s_per_mw = 0.0;
  double raman_i_per_mw = 0.0;
  double dark_s_hz = 0.0;
  double dark_i_hz = 0.0;
  double coincidence_window_s = 1e-9;  // tau_w
  void validate() const;
};

struct EnvelopeSpec {
  enum class Shape { Gaussian };
  double fwhm_hz = 3.0e12;
  Shape shape = Shape::Gaussian;
};

// Relative pair-generation efficiency of a channel versus its signal-pump
// detuning; 1 at zero detuning, 0.5 at half the envelope FWHM.
double pgr_envelope(const cavity::ChannelPair& channel, double pump_hz,
                    const EnvelopeSpec& env);

double expected_singles(const ChannelRateModel& model, Arm arm, double power_mw);

struct CoincidenceRates {
  double true_rate_hz = 0.0;
  double accidental_rate_hz = 0.0;
};

CoincidenceRates expected_coincidences(const ChannelRateModel& model, double power_mw);

// (|HH> + e^{i theta}|VV>)/sqrt(2) as a density matrix.
jones::TwoQubitState ideal_state(double theta_rad);

// p * ideal_state(theta) + (1 - p) * I/4.
jones::TwoQubitState noisy_state(double theta_rad, double signal_fraction);

}  // namespace qfc::pairs
