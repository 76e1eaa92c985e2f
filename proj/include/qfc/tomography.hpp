#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>

#include "qfc/jones.hpp"

namespace qfc::tomo {

inline constexpr int kSettings = 9;
inline constexpr int kOutcomes = 4;

// The nine basis combinations in row-major {HV, DA, RL} x {HV, DA, RL} order.
std::array<jones::MeasurementSetting, kSettings> tomography_settings();

// Outcome order per setting: (+,+), (+,-), (-,+), (-,-) where +/- are the
// basis states (H/V, D/A, R/L).
std::pair<jones::PolState, jones::PolState> outcome_states(const jones::MeasurementSetting& s,
                                                           int outcome);
std::string setting_label(const jones::MeasurementSetting& s);   // e.g. "HVxDA"
std::string outcome_label(const jones::MeasurementSetting& s, int outcome);  // e.g. "HD"

// Counts are stored as reals so accidental-subtracted tables stay usable.
struct TomographyTable {
  std::array<std::array<double, kOutcomes>, kSettings> counts{};
  std::array<std::array<double, kOutcomes>, kSettings> accidental_estimate{};
  double integration_time_s = 1.0;
};

// Each cell is Poisson with mean (total_rate * p_born + accidental_rate/4)
// * time; accidental_estimate is filled with accidental_rate * time / 4.
TomographyTable simulate_tomography(const jones::TwoQubitState& rho, double total_rate_hz,
                                    double accidental_rate_hz, double time_s,
                                    std::uint64_t seed);

struct MleOptions {
  int max_iterations = 10000;
  double relative_tolerance = 1e-10;
};

struct MleResult {
  jones::TwoQubitState rho;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  bool monotone = true;
};

// Maximum-likelihood reconstruction: rho = T^dag T / tr(T^dag T) with T
// lower triangular (16 real parameters), Poisson likelihood over the 36
// cells with the per-setting rate scales profiled out analytically, gradient
// ascent with a backtracking line search, initialized from linear inversion
// projected onto the physical cone.
MleResult mle_reconstruct(const TomographyTable& table, const MleOptions& opts = {});

// <psi(theta)| rho |psi(theta)> for |psi(theta)> = (|HH> + e^{i theta}|VV>)/sqrt2.
double fidelity(const jones::TwoQubitState& rho, double target_phase_rad = 0.0);

// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2 between mixed states.
double state_fidelity(const jones::TwoQubitState& a, const jones::TwoQubitState& b);

// Wootters concurrence.
double concurrence(const jones::TwoQubitState& rho);

struct NetFidelityResult {
  double raw = 0.0;
  double net = 0.0;
};

// Raw fidelity from the table as measured, net fidelity after cell-wise
// accidental subtraction clamped at zero.
NetFidelityResult net_fidelity(const TomographyTable& table);

// JSON round-trips. States serialize as 16 complex entries, row-major, as
// real/imag pairs.
std::string table_to_json(const TomographyTable& table);
TomographyTable table_from_json(const std::string& text);
std::string state_to_json(const jones::TwoQubitState& state);
jones::TwoQubitState state_from_json(const std::string& text);

}  // namespace qfc::tomo
