#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qfc/cavity.hpp"
#include "qfc/counting.hpp"
#include "qfc/pair_source.hpp"
#include "qfc/report.hpp"
#include "qfc/spectral.hpp"
#include "qfc/thermal.hpp"
#include "qfc/tomography.hpp"

namespace qfc::scenario {

struct DriftSpec {
  enum class Kind { None, Sine, Table };
  Kind kind = Kind::None;
  double amplitude_hz = 0.0;
  double period_s = 60.0;
  std::vector<std::pair<double, double>> samples;  // (time s, shift Hz), sorted
  double at(double time_s) const;
  void validate() const;
};

struct SpectrumStage {
  int resonance_count = 50;
  int first_index = -25;
  int samples_per_resonance = 81;
  double span_fwhm = 12.0;     // sampled window width in linewidths
  double noise_sigma = 0.002;  // additive transmission noise
};

struct HysteresisStage {
  std::vector<double> powers_mw{0.015, 2.773};
  double current_start_ma = 0.0;
  double current_stop_ma = 3.0;
  int points = 241;
  double dwell_s = 0.020;
};

struct LockStage {
  double pump_power_mw = 1.0;
  double duration_s = 100.0;
  DriftSpec drift;
};

struct TomoStage {
  double power_mw = 1.0;
  double integration_time_s = 20.0;
  int featured_channel = 8;
  std::vector<double> sweep_powers_mw{0.25, 0.5, 1.0, 2.0, 4.0};
};

struct PowerFitStage {
  std::vector<double> powers_mw;  // filled by defaults: 10 points, 0.1..2.0
  double integration_time_s = 10.0;
  double off_res_b_low_per_mw = 1.32e3;   // Stokes side
  double off_res_b_high_per_mw = 1.14e3;  // anti-Stokes side
  double off_res_dark_hz = 100.0;
  double off_res_spacing_hz = 33.0e9;
};

struct JsiStage {
  double power_mw = 1.0;
  double integration_time_s = 20.0;
};

struct MetricsStage {
  std::vector<double> powers_mw;  // quadratic-fit sweep, defaults as above
  double integration_time_s = 10.0;
  int car_channel = 4;
  std::vector<double> car_powers_mw{0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
  double car_integration_time_s = 100.0;
  double transmission_s = 0.5;
  double transmission_i = 0.5;
  double detection = 0.9;
  double bandwidth_mhz = 184.58;  // per-channel correlation bandwidth input
  double histogram_bin_s = 1e-10;
  int histogram_bins = 81;
  double histogram_peak_counts = 2.0e4;
  double histogram_baseline_counts = 200.0;
};

struct Scenario {
  int schema_version = 1;
  cavity::RingSpec ring;
  pairs::EnvelopeSpec envelope;
  double grid_spacing_hz = 99.0e9;
  std::vector<pairs::ChannelRateModel> channels;
  thermal::ControllerConfig controller;
  SpectrumStage spectrum;
  HysteresisStage hysteresis;
  LockStage lock;
  TomoStage tomo;
  PowerFitStage power_fit;
  JsiStage jsi;
  MetricsStage metrics;
  std::uint64_t root_seed = 20260809;
  std::string output_dir = "out";

  void validate() const;            // throws InvalidInput with field paths
  std::string canonical_json() const;
  std::string hash() const;         // fnv1a64 of canonical_json, hex
};

// Calibrated 22-channel defaults matching the characterized device.
Scenario default_scenario();

Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

// ---------------------------------------------------------------- results

struct SpectrumResult {
  std::vector<cavity::LorentzianFit> fits;
  double mean_fwhm_hz = 0.0;
  double mean_q = 0.0;
  double fsr_estimate_hz = 0.0;
};

struct HysteresisTrace {
  double power_mw = 0.0;
  std::vector<double> current_ma;
  std::vector<double> forward;   // transmission, ascending current
  std::vector<double> backward;  // transmission, aligned to current_ma
  std::vector<double> static_transmission;
};

struct HysteresisResult {
  std::vector<HysteresisTrace> traces;
};

struct LockResult {
  std::vector<thermal::LockSample> closed_loop;
  std::vector<thermal::LockSample> open_loop;
};

struct ChannelTomography {
  int channel = 0;
  double signal_hz = 0.0;
  double idler_hz = 0.0;
  double raw_fidelity = 0.0;
  double net_fidelity = 0.0;
  double model_fidelity = 0.0;      // from the accidental-fraction state model
  double signal_fraction = 0.0;     // true / (true + accidental)
};

struct TomoResult {
  std::vector<ChannelTomography> channels;
  // (power, model fidelity, signal fraction) for the featured channel
  std::vector<std::array<double, 3>> fidelity_vs_power;
  int featured_channel = 0;
  tomo::TomographyTable featured_table;
  jones::TwoQubitState featured_state;
};

struct PowerFitLine {
  spectral::ChannelFit fit;
  bool on_resonance_model = false;
  bool on_resonance_classified = false;
};

struct PowerFitResult {
  std::vector<PowerFitLine> lines;
  double mean_b_on = 0.0;
  double mean_b_off = 0.0;
  double mean_b_off_low = 0.0;
  double mean_b_off_high = 0.0;
};

struct JsiResult {
  spectral::JsiGrid grid;
  double cross_accidental_rate_hz = 0.0;
  double dominance = 0.0;  // min diagonal / max off-diagonal counts
  std::vector<double> diagonal_rates_hz;
};

struct CarPoint {
  counting::CountRecord record;
  double car_sampled = 0.0;
  double car_model = 0.0;
  bool lower_bound = false;  // accidentals were zero; value is coincidences/1
};

struct MetricsChannel {
  int channel = 0;
  double rs = 0.0;
  double ri = 0.0;
  double rc = 0.0;
  double pgr = 0.0;
  double eta_s = 0.0;
  double eta_i = 0.0;
  double extraction_s = 0.0;
  double extraction_i = 0.0;
  bool budget_consistent = true;
  double bandwidth_mhz = 0.0;
  double brightness = 0.0;
};

struct MetricsResult {
  std::vector<MetricsChannel> channels;
  std::vector<CarPoint> car;
  // Sampled correlation histograms, one per channel, aligned with `channels`.
  std::vector<counting::DelayHistogram> histograms;
  double mean_bandwidth_mhz = 0.0;
  double mean_extraction = 0.0;
};

SpectrumResult run_spectrum(const Scenario& s);
HysteresisResult run_hysteresis(const Scenario& s);
LockResult run_lock_stage(const Scenario& s);
TomoResult run_tomo(const Scenario& s);
PowerFitResult run_power_fit(const Scenario& s);
JsiResult run_jsi(const Scenario& s);
MetricsResult run_metrics(const Scenario& s);

// Runs the requested stage ("spectrum", "hysteresis", "lock", "tomo",
// "power-fit", "jsi", "metrics" or "all") and writes the report files into
// the scenario's output directory. Returns the files written.
std::vector<std::filesystem::path> run_scenario(const Scenario& s, const std::string& stage);

}  // namespace qfc::scenario
