#include "qfc/pair_source.hpp"

#include <cmath>
#include <string>

namespace qfc::pairs {

void ChannelRateModel::validate() const {
  const std::string tag = "channel[" + std::to_string(index) + "].";
  if (!(pgr_per_mw2 >= 0.0)) throw InvalidInput(tag + "pgr: must be >= 0");
  if (!(eta_s >= 0.0 && eta_s <= 1.0)) throw InvalidInput(tag + "eta_s: must be in [0, 1]");
  if (!(eta_i >= 0.0 && eta_i <= 1.0)) throw InvalidInput(tag + "eta_i: must be in [0, 1]");
  if (!(raman_s_per_mw >= 0.0)) throw InvalidInput(tag + "raman_s: must be >= 0");
  if (!(raman_i_per_mw >= 0.0)) throw InvalidInput(tag + "raman_i: must be >= 0");
  if (!(dark_s_hz >= 0.0)) throw InvalidInput(tag + "dark_s: must be >= 0");
  if (!(dark_i_hz >= 0.0)) throw InvalidInput(tag + "dark_i: must be >= 0");
  if (!(coincidence_window_s > 0.0)) throw InvalidInput(tag + "tau_w: must be > 0");
}

double pgr_envelope(const cavity::ChannelPair& channel, double pump_hz,
                    const EnvelopeSpec& env) {
  if (!(env.fwhm_hz > 0.0)) {
    throw InvalidInput("pgr_envelope: envelope fwhm must be > 0");
  }
  const double detuning = channel.signal_hz - pump_hz;
  const double x = detuning / env.fwhm_hz;
  return std::exp(-4.0 * std::log(2.0) * x * x);
}

double expected_singles(const ChannelRateModel& model, Arm arm, double power_mw) {
  if (!(power_mw >= 0.0)) {
    throw InvalidInput("expected_singles: power must be >= 0");
  }
  const double eta = arm == Arm::Signal ? model.eta_s : model.eta_i;
  const double raman = arm == Arm::Signal ? model.raman_s_per_mw : model.raman_i_per_mw;
  const double dark = arm == Arm::Signal ? model.dark_s_hz : model.dark_i_hz;
  return eta * model.pgr_per_mw2 * power_mw * power_mw + raman * power_mw + dark;
}

CoincidenceRates expected_coincidences(const ChannelRateModel& model, double power_mw) {
  if (!(power_mw >= 0.0)) {
    throw InvalidInput("expected_coincidences: power must be >= 0");
  }
  CoincidenceRates rates;
  rates.true_rate_hz = model.eta_s * model.eta_i * model.pgr_per_mw2 * power_mw * power_mw;
  const double ns = expected_singles(model, Arm::Signal, power_mw);
  const double ni = expected_singles(model, Arm::Idler, power_mw);
  rates.accidental_rate_hz = ns * ni * model.coincidence_window_s;
  return rates;
}

jones::TwoQubitState ideal_state(double theta_rad) {
  jones::Vec4c psi = jones::Vec4c::Zero();
  psi(0) = 1.0 / std::sqrt(2.0);
  psi(3) = std::exp(std::complex<double>(0.0, theta_rad)) / std::sqrt(2.0);
  return jones::TwoQubitState::from_ket(psi);
}

jones::TwoQubitState noisy_state(double theta_rad, double signal_fraction) {
  if (!(signal_fraction >= 0.0 && signal_fraction <= 1.0)) {
    throw InvalidInput("noisy_state: signal fraction must be in [0, 1]");
  }
  jones::TwoQubitState state = ideal_state(theta_rad);
  state.rho = signal_fraction * state.rho +
              (1.0 - signal_fraction) * 0.25 * jones::Mat4c::Identity();
  return state;
}

}  // namespace qfc::pairs
