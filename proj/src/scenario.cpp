#include "qfc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qfc/random.hpp"

namespace qfc::scenario {

namespace {

using nlohmann::json;

// Fixed stage stream ids; files come out identical whether a stage runs
// alone or as part of `all`.
constexpr std::uint64_t kSeedSpectrum = 1;
constexpr std::uint64_t kSeedLock = 3;
constexpr std::uint64_t kSeedTomo = 4;
constexpr std::uint64_t kSeedPowerFit = 5;
constexpr std::uint64_t kSeedJsi = 6;
constexpr std::uint64_t kSeedMetrics = 7;

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  v.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  }
  return v;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

double DriftSpec::at(double time_s) const {
  switch (kind) {
    case Kind::None:
      return 0.0;
    case Kind::Sine:
      return amplitude_hz * std::sin(2.0 * M_PI * time_s / period_s);
    case Kind::Table: {
      if (samples.empty()) {
        return 0.0;
      }
      if (time_s <= samples.front().first) {
        return samples.front().second;
      }
      if (time_s >= samples.back().first) {
        return samples.back().second;
      }
      for (size_t i = 1; i < samples.size(); ++i) {
        if (time_s <= samples[i].first) {
          const auto& [t0, v0] = samples[i - 1];
          const auto& [t1, v1] = samples[i];
          const double w = t1 == t0 ? 0.0 : (time_s - t0) / (t1 - t0);
          return v0 + w * (v1 - v0);
        }
      }
      return samples.back().second;
    }
  }
  return 0.0;
}

void DriftSpec::validate() const {
  if (kind == Kind::Sine && !(period_s > 0.0)) {
    throw InvalidInput("lock.drift.period_s: must be > 0");
  }
  if (kind == Kind::Table) {
    for (size_t i = 1; i < samples.size(); ++i) {
      if (samples[i].first < samples[i - 1].first) {
        throw InvalidInput("lock.drift.samples: times must be nondecreasing");
      }
    }
  }
}

void Scenario::validate() const {
  if (schema_version != 1) throw InvalidInput("schema_version: expected 1");
  ring.validate();
  controller.validate();
  if (!(envelope.fwhm_hz > 0.0)) throw InvalidInput("envelope.fwhm_hz: must be > 0");
  if (!(grid_spacing_hz > 0.0)) throw InvalidInput("grid_spacing_hz: must be > 0");
  if (channels.empty()) throw InvalidInput("channels: must not be empty");
  for (size_t i = 0; i < channels.size(); ++i) {
    if (channels[i].index != static_cast<int>(i) + 1) {
      throw InvalidInput("channels[" + std::to_string(i) + "].m: must be " +
                         std::to_string(i + 1) + " (1-based, contiguous)");
    }
    channels[i].validate();
  }
  if (output_dir.empty()) throw InvalidInput("output_dir: must not be empty");

  if (spectrum.resonance_count < 2) throw InvalidInput("spectrum.resonance_count: must be >= 2");
  if (spectrum.samples_per_resonance < 9) {
    throw InvalidInput("spectrum.samples_per_resonance: must be >= 9");
  }
  if (!(spectrum.span_fwhm > 1.0)) throw InvalidInput("spectrum.span_fwhm: must be > 1");
  if (!(spectrum.noise_sigma >= 0.0)) throw InvalidInput("spectrum.noise_sigma: must be >= 0");

  if (hysteresis.powers_mw.empty()) throw InvalidInput("hysteresis.powers_mw: must not be empty");
  for (double p : hysteresis.powers_mw) {
    if (!(p >= 0.0)) throw InvalidInput("hysteresis.powers_mw: must be >= 0");
  }
  if (hysteresis.points < 2) throw InvalidInput("hysteresis.points: must be >= 2");
  if (!(hysteresis.dwell_s > 0.0)) throw InvalidInput("hysteresis.dwell_s: must be > 0");
  if (!(hysteresis.current_stop_ma > hysteresis.current_start_ma)) {
    throw InvalidInput("hysteresis.current_stop_ma: must exceed current_start_ma");
  }

  if (!(lock.pump_power_mw >= 0.0)) throw InvalidInput("lock.pump_power_mw: must be >= 0");
  if (!(lock.duration_s > 0.0)) throw InvalidInput("lock.duration_s: must be > 0");
  lock.drift.validate();

  if (!(tomo.power_mw > 0.0)) throw InvalidInput("tomo.power_mw: must be > 0");
  if (!(tomo.integration_time_s > 0.0)) throw InvalidInput("tomo.integration_time_s: must be > 0");
  if (tomo.featured_channel < 1 ||
      tomo.featured_channel > static_cast<int>(channels.size())) {
    throw InvalidInput("tomo.featured_channel: out of channel range");
  }
  if (tomo.sweep_powers_mw.empty()) throw InvalidInput("tomo.sweep_powers_mw: must not be empty");
  for (double p : tomo.sweep_powers_mw) {
    if (!(p > 0.0)) throw InvalidInput("tomo.sweep_powers_mw: must be > 0");
  }

  if (power_fit.powers_mw.size() < 4) {
    throw InvalidInput("power_fit.powers_mw: need at least 4 powers");
  }
  if (!(power_fit.integration_time_s > 0.0)) {
    throw InvalidInput("power_fit.integration_time_s: must be > 0");
  }
  if (!(power_fit.off_res_spacing_hz > 0.0) ||
      !(power_fit.off_res_spacing_hz < grid_spacing_hz)) {
    throw InvalidInput("power_fit.off_res_spacing_hz: must be in (0, grid_spacing)");
  }

  if (!(jsi.power_mw > 0.0)) throw InvalidInput("jsi.power_mw: must be > 0");
  if (!(jsi.integration_time_s > 0.0)) throw InvalidInput("jsi.integration_time_s: must be > 0");

  if (metrics.powers_mw.size() < 4) throw InvalidInput("metrics.powers_mw: need at least 4 powers");
  if (!(metrics.integration_time_s > 0.0)) {
    throw InvalidInput("metrics.integration_time_s: must be > 0");
  }
  if (metrics.car_channel < 1 || metrics.car_channel > static_cast<int>(channels.size())) {
    throw InvalidInput("metrics.car_channel: out of channel range");
  }
  if (metrics.car_powers_mw.empty()) throw InvalidInput("metrics.car_powers_mw: must not be empty");
  if (!(metrics.car_integration_time_s > 0.0)) {
    throw InvalidInput("metrics.car_integration_time_s: must be > 0");
  }
  if (!(metrics.bandwidth_mhz > 0.0)) throw InvalidInput("metrics.bandwidth_mhz: must be > 0");
  for (double v : {metrics.transmission_s, metrics.transmission_i, metrics.detection}) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw InvalidInput("metrics: transmissions and detection must be in (0, 1]");
    }
  }
}

// ------------------------------------------------------------- serialization

namespace {

json ring_to_json(const cavity::RingSpec& r) {
  json j;
  j["pump_frequency_hz"] = r.pump_frequency_hz;
  j["fsr_hz"] = r.fsr_hz;
  j["fwhm_hz"] = r.fwhm_hz;
  j["min_transmission"] = r.min_transmission;
  j["k_temp_hz_per_c"] = r.k_temp_hz_per_c;
  j["k_current_hz_per_ma2"] = r.k_current_hz_per_ma2;
  j["heater_resistance_ohm"] = r.heater_resistance_ohm;
  j["pump_resonance_offset_hz"] = r.pump_resonance_offset_hz;
  j["thermal_tau_s"] = r.thermal_tau_s;
  j["self_heating_hz_per_mw"] = r.self_heating_hz_per_mw;
  json overrides = json::object();
  for (const auto& [idx, value] : r.fwhm_overrides_hz) {
    overrides[std::to_string(idx)] = value;
  }
  j["fwhm_overrides_hz"] = overrides;
  return j;
}

cavity::RingSpec ring_from_json(const json& j) {
  cavity::RingSpec r;
  r.pump_frequency_hz = j.at("pump_frequency_hz").get<double>();
  r.fsr_hz = j.at("fsr_hz").get<double>();
  r.fwhm_hz = j.at("fwhm_hz").get<double>();
  r.min_transmission = j.at("min_transmission").get<double>();
  r.k_temp_hz_per_c = j.at("k_temp_hz_per_c").get<double>();
  r.k_current_hz_per_ma2 = j.at("k_current_hz_per_ma2").get<double>();
  r.heater_resistance_ohm = j.at("heater_resistance_ohm").get<double>();
  r.pump_resonance_offset_hz = j.at("pump_resonance_offset_hz").get<double>();
  r.thermal_tau_s = j.at("thermal_tau_s").get<double>();
  r.self_heating_hz_per_mw = j.at("self_heating_hz_per_mw").get<double>();
  for (const auto& [key, value] : j.at("fwhm_overrides_hz").items()) {
    r.fwhm_overrides_hz[std::stoi(key)] = value.get<double>();
  }
  return r;
}

json drift_to_json(const DriftSpec& d) {
  json j;
  switch (d.kind) {
    case DriftSpec::Kind::None: j["kind"] = "none"; break;
    case DriftSpec::Kind::Sine: j["kind"] = "sine"; break;
    case DriftSpec::Kind::Table: j["kind"] = "table"; break;
  }
  j["amplitude_hz"] = d.amplitude_hz;
  j["period_s"] = d.period_s;
  json samples = json::array();
  for (const auto& [t, v] : d.samples) {
    samples.push_back({t, v});
  }
  j["samples"] = samples;
  return j;
}

DriftSpec drift_from_json(const json& j) {
  DriftSpec d;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") {
    d.kind = DriftSpec::Kind::None;
  } else if (kind == "sine") {
    d.kind = DriftSpec::Kind::Sine;
  } else if (kind == "table") {
    d.kind = DriftSpec::Kind::Table;
  } else {
    throw InvalidInput("lock.drift.kind: must be none, sine or table");
  }
  d.amplitude_hz = j.at("amplitude_hz").get<double>();
  d.period_s = j.at("period_s").get<double>();
  for (const auto& row : j.at("samples")) {
    d.samples.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
  }
  return d;
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["root_seed"] = s.root_seed;
  j["output_dir"] = s.output_dir;
  j["grid_spacing_hz"] = s.grid_spacing_hz;
  j["ring"] = ring_to_json(s.ring);
  j["envelope"] = {{"fwhm_hz", s.envelope.fwhm_hz}, {"shape", "gaussian"}};
  j["controller"] = {{"setpoint_transmission", s.controller.setpoint_transmission},
                     {"proportional_gain_ma", s.controller.proportional_gain_ma},
                     {"deadband", s.controller.deadband},
                     {"max_step_ma", s.controller.max_step_ma},
                     {"sample_period_s", s.controller.sample_period_s},
                     {"max_current_ma", s.controller.max_current_ma},
                     {"measurement_noise", s.controller.measurement_noise}};
  json channels = json::array();
  for (const auto& c : s.channels) {
    channels.push_back({{"m", c.index},
                        {"pgr", c.pgr_per_mw2},
                        {"eta_s", c.eta_s},
                        {"eta_i", c.eta_i},
                        {"raman_s", c.raman_s_per_mw},
                        {"raman_i", c.raman_i_per_mw},
                        {"dark_s", c.dark_s_hz},
                        {"dark_i", c.dark_i_hz},
                        {"tau_w", c.coincidence_window_s}});
  }
  j["channels"] = channels;
  j["stages"]["spectrum"] = {{"resonance_count", s.spectrum.resonance_count},
                             {"first_index", s.spectrum.first_index},
                             {"samples_per_resonance", s.spectrum.samples_per_resonance},
                             {"span_fwhm", s.spectrum.span_fwhm},
                             {"noise_sigma", s.spectrum.noise_sigma}};
  j["stages"]["hysteresis"] = {{"powers_mw", s.hysteresis.powers_mw},
                               {"current_start_ma", s.hysteresis.current_start_ma},
                               {"current_stop_ma", s.hysteresis.current_stop_ma},
                               {"points", s.hysteresis.points},
                               {"dwell_s", s.hysteresis.dwell_s}};
  j["stages"]["lock"] = {{"pump_power_mw", s.lock.pump_power_mw},
                         {"duration_s", s.lock.duration_s},
                         {"drift", drift_to_json(s.lock.drift)}};
  j["stages"]["tomo"] = {{"power_mw", s.tomo.power_mw},
                         {"integration_time_s", s.tomo.integration_time_s},
                         {"featured_channel", s.tomo.featured_channel},
                         {"sweep_powers_mw", s.tomo.sweep_powers_mw}};
  j["stages"]["power_fit"] = {{"powers_mw", s.power_fit.powers_mw},
                              {"integration_time_s", s.power_fit.integration_time_s},
                              {"off_res_b_low_per_mw", s.power_fit.off_res_b_low_per_mw},
                              {"off_res_b_high_per_mw", s.power_fit.off_res_b_high_per_mw},
                              {"off_res_dark_hz", s.power_fit.off_res_dark_hz},
                              {"off_res_spacing_hz", s.power_fit.off_res_spacing_hz}};
  j["stages"]["jsi"] = {{"power_mw", s.jsi.power_mw},
                        {"integration_time_s", s.jsi.integration_time_s}};
  j["stages"]["metrics"] = {{"powers_mw", s.metrics.powers_mw},
                            {"integration_time_s", s.metrics.integration_time_s},
                            {"car_channel", s.metrics.car_channel},
                            {"car_powers_mw", s.metrics.car_powers_mw},
                            {"car_integration_time_s", s.metrics.car_integration_time_s},
                            {"transmission_s", s.metrics.transmission_s},
                            {"transmission_i", s.metrics.transmission_i},
                            {"detection", s.metrics.detection},
                            {"bandwidth_mhz", s.metrics.bandwidth_mhz},
                            {"histogram_bin_s", s.metrics.histogram_bin_s},
                            {"histogram_bins", s.metrics.histogram_bins},
                            {"histogram_peak_counts", s.metrics.histogram_peak_counts},
                            {"histogram_baseline_counts", s.metrics.histogram_baseline_counts}};
  return j.dump(1);
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("scenario: JSON parse error: ") + e.what());
  }
  Scenario s;
  try {
    s.schema_version = j.at("schema_version").get<int>();
    s.root_seed = j.at("root_seed").get<std::uint64_t>();
    s.output_dir = j.at("output_dir").get<std::string>();
    s.grid_spacing_hz = j.at("grid_spacing_hz").get<double>();
    s.ring = ring_from_json(j.at("ring"));
    s.envelope.fwhm_hz = j.at("envelope").at("fwhm_hz").get<double>();
    const auto& ctl = j.at("controller");
    s.controller.setpoint_transmission = ctl.at("setpoint_transmission").get<double>();
    s.controller.proportional_gain_ma = ctl.at("proportional_gain_ma").get<double>();
    s.controller.deadband = ctl.at("deadband").get<double>();
    s.controller.max_step_ma = ctl.at("max_step_ma").get<double>();
    s.controller.sample_period_s = ctl.at("sample_period_s").get<double>();
    s.controller.max_current_ma = ctl.at("max_current_ma").get<double>();
    s.controller.measurement_noise = ctl.at("measurement_noise").get<double>();
    s.channels.clear();
    for (const auto& c : j.at("channels")) {
      pairs::ChannelRateModel m;
      m.index = c.at("m").get<int>();
      m.pgr_per_mw2 = c.at("pgr").get<double>();
      m.eta_s = c.at("eta_s").get<double>();
      m.eta_i = c.at("eta_i").get<double>();
      m.raman_s_per_mw = c.at("raman_s").get<double>();
      m.raman_i_per_mw = c.at("raman_i").get<double>();
      m.dark_s_hz = c.at("dark_s").get<double>();
      m.dark_i_hz = c.at("dark_i").get<double>();
      m.coincidence_window_s = c.at("tau_w").get<double>();
      s.channels.push_back(m);
    }
    const auto& stages = j.at("stages");
    const auto& sp = stages.at("spectrum");
    s.spectrum.resonance_count = sp.at("resonance_count").get<int>();
    s.spectrum.first_index = sp.at("first_index").get<int>();
    s.spectrum.samples_per_resonance = sp.at("samples_per_resonance").get<int>();
    s.spectrum.span_fwhm = sp.at("span_fwhm").get<double>();
    s.spectrum.noise_sigma = sp.at("noise_sigma").get<double>();
    const auto& hy = stages.at("hysteresis");
    s.hysteresis.powers_mw = hy.at("powers_mw").get<std::vector<double>>();
    s.hysteresis.current_start_ma = hy.at("current_start_ma").get<double>();
    s.hysteresis.current_stop_ma = hy.at("current_stop_ma").get<double>();
    s.hysteresis.points = hy.at("points").get<int>();
    s.hysteresis.dwell_s = hy.at("dwell_s").get<double>();
    const auto& lk = stages.at("lock");
    s.lock.pump_power_mw = lk.at("pump_power_mw").get<double>();
    s.lock.duration_s = lk.at("duration_s").get<double>();
    s.lock.drift = drift_from_json(lk.at("drift"));
    const auto& tm = stages.at("tomo");
    s.tomo.power_mw = tm.at("power_mw").get<double>();
    s.tomo.integration_time_s = tm.at("integration_time_s").get<double>();
    s.tomo.featured_channel = tm.at("featured_channel").get<int>();
    s.tomo.sweep_powers_mw = tm.at("sweep_powers_mw").get<std::vector<double>>();
    const auto& pf = stages.at("power_fit");
    s.power_fit.powers_mw = pf.at("powers_mw").get<std::vector<double>>();
    s.power_fit.integration_time_s = pf.at("integration_time_s").get<double>();
    s.power_fit.off_res_b_low_per_mw = pf.at("off_res_b_low_per_mw").get<double>();
    s.power_fit.off_res_b_high_per_mw = pf.at("off_res_b_high_per_mw").get<double>();
    s.power_fit.off_res_dark_hz = pf.at("off_res_dark_hz").get<double>();
    s.power_fit.off_res_spacing_hz = pf.at("off_res_spacing_hz").get<double>();
    const auto& js = stages.at("jsi");
    s.jsi.power_mw = js.at("power_mw").get<double>();
    s.jsi.integration_time_s = js.at("integration_time_s").get<double>();
    const auto& mt = stages.at("metrics");
    s.metrics.powers_mw = mt.at("powers_mw").get<std::vector<double>>();
    s.metrics.integration_time_s = mt.at("integration_time_s").get<double>();
    s.metrics.car_channel = mt.at("car_channel").get<int>();
    s.metrics.car_powers_mw = mt.at("car_powers_mw").get<std::vector<double>>();
    s.metrics.car_integration_time_s = mt.at("car_integration_time_s").get<double>();
    s.metrics.transmission_s = mt.at("transmission_s").get<double>();
    s.metrics.transmission_i = mt.at("transmission_i").get<double>();
    s.metrics.detection = mt.at("detection").get<double>();
    s.metrics.bandwidth_mhz = mt.at("bandwidth_mhz").get<double>();
    s.metrics.histogram_bin_s = mt.at("histogram_bin_s").get<double>();
    s.metrics.histogram_bins = mt.at("histogram_bins").get<int>();
    s.metrics.histogram_peak_counts = mt.at("histogram_peak_counts").get<double>();
    s.metrics.histogram_baseline_counts = mt.at("histogram_baseline_counts").get<double>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("scenario: missing or mistyped field: ") + e.what());
  }
  return s;
}

std::string Scenario::canonical_json() const {
  // Compact dump with nlohmann's sorted object keys. The output directory
  // does not affect the produced numbers and stays out of the hash.
  json j = json::parse(scenario_to_json(*this));
  j.erase("output_dir");
  return j.dump();
}

std::string Scenario::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(io::fnv1a64(canonical_json())));
  return std::string(buf);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInput("scenario: cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  Scenario s = scenario_from_json(ss.str());
  s.validate();
  return s;
}

Scenario default_scenario() {
  Scenario s;
  s.power_fit.powers_mw = linspace(0.1, 2.0, 10);
  s.metrics.powers_mw = linspace(0.1, 2.0, 10);

  // Per-resonance linewidth scatter for the transmission-spectrum stage.
  // The pump line (index 0) keeps the nominal width.
  rng::Generator scatter(rng::derive_seed(0x5C3ABE11u, 0));
  for (int n = s.spectrum.first_index;
       n < s.spectrum.first_index + s.spectrum.resonance_count; ++n) {
    const double jitter = 1.0 + 0.05 * scatter.normal();
    if (n != 0) {
      s.ring.fwhm_overrides_hz[n] = s.ring.fwhm_hz * std::max(0.5, jitter);
    }
  }

  s.lock.drift.kind = DriftSpec::Kind::Sine;
  s.lock.drift.amplitude_hz = 0.5e9;
  s.lock.drift.period_s = 60.0;

  // Channel table: collection efficiency from the loss budget (extraction
  // 0.408 x transmission 0.5 x detection 0.9), intrinsic rate anchored so
  // channel 4's detected quadratic term is 3.90e3 s^-1 mW^-2, Raman terms
  // split around the on-resonance average 1.01e4 with the Stokes side
  // 1.32/1.14 above the anti-Stokes side.
  const double eta = 0.1836;
  const double stokes_ratio = 1.32 / 1.14;
  const double raman_high = 2.0 * 1.01e4 / (1.0 + stokes_ratio);
  const int n_channels = 22;
  const auto grid = cavity::comb_grid(s.ring.pump_frequency_hz, s.grid_spacing_hz, n_channels);
  const double env4 = pairs::pgr_envelope(grid[3], s.ring.pump_frequency_hz, s.envelope);
  const double base_pgr = 3.90e3 / (eta * env4);
  for (const auto& pair : grid) {
    pairs::ChannelRateModel m;
    m.index = pair.index;
    m.pgr_per_mw2 = base_pgr * pairs::pgr_envelope(pair, s.ring.pump_frequency_hz, s.envelope);
    m.eta_s = eta;
    m.eta_i = eta;
    m.raman_s_per_mw = raman_high;                 // signal = anti-Stokes side
    m.raman_i_per_mw = raman_high * stokes_ratio;  // idler = Stokes side
    m.dark_s_hz = 100.0;
    m.dark_i_hz = 100.0;
    m.coincidence_window_s = 5e-8;
    s.channels.push_back(m);
  }
  return s;
}

// ------------------------------------------------------------------- stages

SpectrumResult run_spectrum(const Scenario& s) {
  const std::uint64_t stage_seed = rng::derive_seed(s.root_seed, kSeedSpectrum);
  SpectrumResult result;
  std::vector<double> centers;
  for (int k = 0; k < s.spectrum.resonance_count; ++k) {
    const int index = s.spectrum.first_index + k;
    const double f_center = s.ring.pump_frequency_hz + s.ring.pump_resonance_offset_hz +
                            index * s.ring.fsr_hz;
    const double width = s.ring.fwhm_for(index);
    rng::Generator gen(rng::derive_seed(stage_seed, static_cast<std::uint64_t>(k)));
    std::vector<cavity::TransmissionSample> samples;
    samples.reserve(static_cast<size_t>(s.spectrum.samples_per_resonance));
    for (int i = 0; i < s.spectrum.samples_per_resonance; ++i) {
      const double frac = static_cast<double>(i) / (s.spectrum.samples_per_resonance - 1) - 0.5;
      const double f = f_center + frac * s.spectrum.span_fwhm * width;
      double t = cavity::transmission(f - f_center, width, s.ring.min_transmission);
      t += s.spectrum.noise_sigma * gen.normal();
      samples.push_back({f, std::min(1.0, std::max(0.0, t))});
    }
    result.fits.push_back(cavity::fit_lorentzian(samples));
    centers.push_back(result.fits.back().f0_hz);
  }

  std::vector<double> widths, qs, spacings;
  for (const auto& f : result.fits) {
    widths.push_back(f.fwhm_hz);
    qs.push_back(f.q_factor);
  }
  std::sort(centers.begin(), centers.end());
  for (size_t i = 1; i < centers.size(); ++i) {
    spacings.push_back(centers[i] - centers[i - 1]);
  }
  result.mean_fwhm_hz = mean(widths);
  result.mean_q = mean(qs);
  result.fsr_estimate_hz = mean(spacings);
  return result;
}

HysteresisResult run_hysteresis(const Scenario& s) {
  HysteresisResult result;
  for (double power : s.hysteresis.powers_mw) {
    HysteresisTrace trace;
    trace.power_mw = power;
    trace.current_ma =
        linspace(s.hysteresis.current_start_ma, s.hysteresis.current_stop_ma, s.hysteresis.points);
    const auto fwd = thermal::sweep_trace(s.ring, power, trace.current_ma,
                                          thermal::SweepDirection::Forward, s.hysteresis.dwell_s);
    std::vector<double> reversed(trace.current_ma.rbegin(), trace.current_ma.rend());
    const auto bwd = thermal::sweep_trace(s.ring, power, reversed,
                                          thermal::SweepDirection::Backward, s.hysteresis.dwell_s);
    trace.forward.reserve(fwd.size());
    for (const auto& p : fwd) {
      trace.forward.push_back(p.transmission);
    }
    trace.backward.assign(bwd.size(), 0.0);
    for (size_t i = 0; i < bwd.size(); ++i) {
      trace.backward[bwd.size() - 1 - i] = bwd[i].transmission;
    }
    for (double current : trace.current_ma) {
      thermal::ThermalState cold;
      cold.heater_current_ma = current;
      const double detuning =
          s.ring.pump_frequency_hz - thermal::resonance_frequency_hz(cold, s.ring);
      trace.static_transmission.push_back(
          cavity::transmission(detuning, s.ring.fwhm_for(0), s.ring.min_transmission));
    }
    result.traces.push_back(std::move(trace));
  }
  return result;
}

LockResult run_lock_stage(const Scenario& s) {
  const std::uint64_t stage_seed = rng::derive_seed(s.root_seed, kSeedLock);
  const auto drift = [&](double t) { return s.lock.drift.at(t); };
  LockResult result;
  result.closed_loop = thermal::run_lock(s.ring, s.controller, s.lock.pump_power_mw, drift,
                                         s.lock.duration_s, rng::derive_seed(stage_seed, 0), true);
  result.open_loop = thermal::run_lock(s.ring, s.controller, s.lock.pump_power_mw, drift,
                                       s.lock.duration_s, rng::derive_seed(stage_seed, 1), false);
  return result;
}

TomoResult run_tomo(const Scenario& s) {
  const std::uint64_t stage_seed = rng::derive_seed(s.root_seed, kSeedTomo);
  const auto grid = cavity::comb_grid(s.ring.pump_frequency_hz, s.grid_spacing_hz,
                                      static_cast<int>(s.channels.size()));
  TomoResult result;
  result.featured_channel = s.tomo.featured_channel;

  for (size_t i = 0; i < s.channels.size(); ++i) {
    const auto rates = pairs::expected_coincidences(s.channels[i], s.tomo.power_mw);
    const double total = rates.true_rate_hz + rates.accidental_rate_hz;
    const double fraction = total > 0.0 ? rates.true_rate_hz / total : 1.0;
    const auto table =
        tomo::simulate_tomography(pairs::ideal_state(0.0), rates.true_rate_hz,
                                  rates.accidental_rate_hz, s.tomo.integration_time_s,
                                  rng::derive_seed(stage_seed, i));
    const auto nf = tomo::net_fidelity(table);
    ChannelTomography entry;
    entry.channel = s.channels[i].index;
    entry.signal_hz = grid[i].signal_hz;
    entry.idler_hz = grid[i].idler_hz;
    entry.raw_fidelity = nf.raw;
    entry.net_fidelity = nf.net;
    entry.signal_fraction = fraction;
    entry.model_fidelity = fraction + 0.25 * (1.0 - fraction);
    result.channels.push_back(entry);
    if (s.channels[i].index == s.tomo.featured_channel) {
      result.featured_table = table;
      result.featured_state = tomo::mle_reconstruct(table).rho;
    }
  }

  const auto& featured_model = s.channels[static_cast<size_t>(s.tomo.featured_channel - 1)];
  for (double power : s.tomo.sweep_powers_mw) {
    const auto rates = pairs::expected_coincidences(featured_model, power);
    const double total = rates.true_rate_hz + rates.accidental_rate_hz;
    const double fraction = total > 0.0 ? rates.true_rate_hz / total : 1.0;
    result.fidelity_vs_power.push_back({power, fraction + 0.25 * (1.0 - fraction), fraction});
  }
  return result;
}

PowerFitResult run_power_fit(const Scenario& s) {
  const std::uint64_t stage_seed = rng::derive_seed(s.root_seed, kSeedPowerFit);

  struct Line {
    double frequency_hz;
    double a, b, c;
    bool on_resonance;
  };
  std::vector<Line> lines;
  const double pump = s.ring.pump_frequency_hz;
  for (const auto& channel : s.channels) {
    const double offset = channel.index * s.grid_spacing_hz;
    lines.push_back({pump + offset, channel.eta_s * channel.pgr_per_mw2,
                     channel.raman_s_per_mw, channel.dark_s_hz, true});
    lines.push_back({pump - offset, channel.eta_i * channel.pgr_per_mw2,
                     channel.raman_i_per_mw, channel.dark_i_hz, true});
    // Two off-resonance lines inward of each comb line.
    for (int k = 1; k <= 2; ++k) {
      const double d = offset - k * s.power_fit.off_res_spacing_hz;
      if (d <= 0.0) {
        continue;
      }
      lines.push_back({pump + d, 0.0, s.power_fit.off_res_b_high_per_mw,
                       s.power_fit.off_res_dark_hz, false});
      lines.push_back({pump - d, 0.0, s.power_fit.off_res_b_low_per_mw,
                       s.power_fit.off_res_dark_hz, false});
    }
  }

  PowerFitResult result;
  std::vector<spectral::ChannelFit> fits;
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::uint64_t line_seed = rng::derive_seed(stage_seed, i);
    spectral::PowerSeries series;
    series.channel_frequency_hz = lines[i].frequency_hz;
    for (size_t j = 0; j < s.power_fit.powers_mw.size(); ++j) {
      const double p = s.power_fit.powers_mw[j];
      const double rate = lines[i].a * p * p + lines[i].b * p + lines[i].c;
      const long long counts = counting::sample_counts(rate, s.power_fit.integration_time_s,
                                                       rng::derive_seed(line_seed, j));
      series.points.push_back(
          {p, static_cast<double>(counts) / s.power_fit.integration_time_s});
    }
    const auto fit = spectral::fit_power_quadratic(series);
    spectral::ChannelFit cf;
    cf.channel = static_cast<int>(i);
    cf.frequency_hz = lines[i].frequency_hz;
    cf.a = fit.a;
    cf.b = fit.b;
    cf.c = fit.c;
    cf.sigma_a = fit.sigma_a;
    fits.push_back(cf);
  }

  const auto partition = spectral::classify_resonant(fits);
  std::vector<bool> classified_on(lines.size(), false);
  for (int idx : partition.on_resonance) {
    classified_on[static_cast<size_t>(idx)] = true;
  }

  std::vector<double> b_on, b_off, b_off_low, b_off_high;
  for (size_t i = 0; i < lines.size(); ++i) {
    PowerFitLine out;
    out.fit = fits[i];
    out.on_resonance_model = lines[i].on_resonance;
    out.on_resonance_classified = classified_on[i];
    result.lines.push_back(out);
    if (classified_on[i]) {
      b_on.push_back(fits[i].b);
    } else {
      b_off.push_back(fits[i].b);
      (fits[i].frequency_hz < pump ? b_off_low : b_off_high).push_back(fits[i].b);
    }
  }
  result.mean_b_on = mean(b_on);
  result.mean_b_off = mean(b_off);
  result.mean_b_off_low = mean(b_off_low);
  result.mean_b_off_high = mean(b_off_high);
  return result;
}

JsiResult run_jsi(const Scenario& s) {
  const std::uint64_t stage_seed = rng::derive_seed(s.root_seed, kSeedJsi);
  const size_t n = s.channels.size();

  double window = 0.0;
  for (const auto& c : s.channels) {
    window += c.coincidence_window_s;
  }
  window /= static_cast<double>(n);

  double cross = 0.0;
  int pairs_counted = 0;
  for (size_t i = 0; i < n; ++i) {
    const double ns = pairs::expected_singles(s.channels[i], pairs::Arm::Signal, s.jsi.power_mw);
    for (size_t j = 0; j < n; ++j) {
      if (i == j) {
        continue;
      }
      const double ni = pairs::expected_singles(s.channels[j], pairs::Arm::Idler, s.jsi.power_mw);
      cross += ns * ni * window;
      ++pairs_counted;
    }
  }
  cross = pairs_counted > 0 ? cross / pairs_counted : 0.0;

  JsiResult result;
  result.cross_accidental_rate_hz = cross;
  result.grid = spectral::jsi(s.channels, s.jsi.power_mw, cross, s.jsi.integration_time_s,
                              stage_seed);
  double min_diag = std::numeric_limits<double>::infinity();
  double max_off = 0.0;
  for (Eigen::Index i = 0; i < result.grid.rows(); ++i) {
    for (Eigen::Index j = 0; j < result.grid.cols(); ++j) {
      if (i == j) {
        min_diag = std::min(min_diag, result.grid(i, j));
      } else {
        max_off = std::max(max_off, result.grid(i, j));
      }
    }
  }
  result.dominance = max_off > 0.0 ? min_diag / max_off
                                   : std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    result.diagonal_rates_hz.push_back(
        pairs::expected_coincidences(s.channels[i], s.jsi.power_mw).true_rate_hz);
  }
  return result;
}

MetricsResult run_metrics(const Scenario& s) {
  const std::uint64_t stage_seed = rng::derive_seed(s.root_seed, kSeedMetrics);
  MetricsResult result;

  for (size_t i = 0; i < s.channels.size(); ++i) {
    const auto& model = s.channels[i];
    const std::uint64_t channel_seed = rng::derive_seed(stage_seed, i);
    spectral::PowerSeries series_s, series_i, series_c;
    for (size_t j = 0; j < s.metrics.powers_mw.size(); ++j) {
      const double p = s.metrics.powers_mw[j];
      const double t = s.metrics.integration_time_s;
      const double ns = pairs::expected_singles(model, pairs::Arm::Signal, p);
      const double ni = pairs::expected_singles(model, pairs::Arm::Idler, p);
      const auto co = pairs::expected_coincidences(model, p);
      const long long cs =
          counting::sample_counts(ns, t, rng::derive_seed(channel_seed, 3 * j));
      const long long ci =
          counting::sample_counts(ni, t, rng::derive_seed(channel_seed, 3 * j + 1));
      const long long cc = counting::sample_counts(co.true_rate_hz + co.accidental_rate_hz, t,
                                                   rng::derive_seed(channel_seed, 3 * j + 2));
      series_s.points.push_back({p, static_cast<double>(cs) / t});
      series_i.points.push_back({p, static_cast<double>(ci) / t});
      // Net coincidence rate: model accidentals subtracted, clamped at zero.
      const double net_rate =
          std::max(0.0, static_cast<double>(cc) / t - co.accidental_rate_hz);
      series_c.points.push_back({p, net_rate});
    }
    MetricsChannel channel;
    channel.channel = model.index;
    channel.rs = spectral::fit_power_quadratic(series_s).a;
    channel.ri = spectral::fit_power_quadratic(series_i).a;
    channel.rc = spectral::fit_power_quadratic(series_c).a;
    channel.pgr = spectral::pgr(channel.rs, channel.ri, channel.rc);
    const auto budget =
        spectral::efficiencies(channel.rs, channel.ri, channel.rc, s.metrics.transmission_s,
                               s.metrics.transmission_i, s.metrics.detection);
    channel.eta_s = budget.eta_s;
    channel.eta_i = budget.eta_i;
    channel.extraction_s = budget.extraction_s;
    channel.extraction_i = budget.extraction_i;
    channel.budget_consistent = budget.consistent;

    const auto expected = counting::histogram_generate(
        s.metrics.bandwidth_mhz * 1e6, s.metrics.histogram_peak_counts,
        s.metrics.histogram_baseline_counts, s.metrics.histogram_bin_s, s.metrics.histogram_bins);
    const auto sampled =
        counting::histogram_sample(expected, rng::derive_seed(channel_seed, 999));
    channel.bandwidth_mhz = counting::histogram_bandwidth(sampled) / 1e6;
    channel.brightness = spectral::spectral_brightness(channel.pgr, channel.bandwidth_mhz);
    result.histograms.push_back(sampled);
    result.channels.push_back(channel);
  }

  const auto& car_model = s.channels[static_cast<size_t>(s.metrics.car_channel - 1)];
  const std::uint64_t car_seed = rng::derive_seed(stage_seed, 100000);
  for (size_t j = 0; j < s.metrics.car_powers_mw.size(); ++j) {
    const double p = s.metrics.car_powers_mw[j];
    const double t = s.metrics.car_integration_time_s;
    const double ns = pairs::expected_singles(car_model, pairs::Arm::Signal, p);
    const double ni = pairs::expected_singles(car_model, pairs::Arm::Idler, p);
    const auto co = pairs::expected_coincidences(car_model, p);
    CarPoint point;
    point.record.power_mw = p;
    point.record.integration_time_s = t;
    point.record.seed = rng::derive_seed(car_seed, j);
    point.record.singles_s =
        counting::sample_counts(ns, t, rng::derive_seed(point.record.seed, 0));
    point.record.singles_i =
        counting::sample_counts(ni, t, rng::derive_seed(point.record.seed, 1));
    point.record.coincidences = counting::sample_counts(
        co.true_rate_hz + co.accidental_rate_hz, t, rng::derive_seed(point.record.seed, 2));
    point.record.accidentals = co.accidental_rate_hz * t;
    if (point.record.accidentals > 0.0) {
      point.car_sampled =
          counting::car(static_cast<double>(point.record.coincidences), point.record.accidentals);
      point.car_model = co.true_rate_hz / co.accidental_rate_hz;
    } else {
      point.car_sampled = static_cast<double>(point.record.coincidences);
      point.car_model = 0.0;
      point.lower_bound = true;
    }
    result.car.push_back(point);
  }

  std::vector<double> bandwidths, extractions;
  for (const auto& c : result.channels) {
    bandwidths.push_back(c.bandwidth_mhz);
    extractions.push_back(0.5 * (c.extraction_s + c.extraction_i));
  }
  result.mean_bandwidth_mhz = mean(bandwidths);
  result.mean_extraction = mean(extractions);
  return result;
}

// ----------------------------------------------------------------- emission

namespace {

struct Emitter {
  std::filesystem::path dir;
  io::Provenance prov;
  std::vector<std::filesystem::path> written;

  void table(const io::Table& t) {
    const auto csv = dir / (t.name + ".csv");
    const auto jsn = dir / (t.name + ".json");
    io::write_csv(t, csv, prov);
    io::write_json(t, jsn, prov);
    written.push_back(csv);
    written.push_back(jsn);
  }

  void raw_json(const std::string& name, json j) {
    j["scenario_hash"] = prov.scenario_hash;
    j["root_seed"] = prov.root_seed;
    const auto path = dir / (name + ".json");
    io::write_text(path, j.dump(1) + "\n");
    written.push_back(path);
  }
};

void emit_spectrum(Emitter& e, const SpectrumResult& r) {
  io::Table t;
  t.name = "resonances";
  t.columns = {"f0_hz", "fwhm_hz", "tmin", "q"};
  for (const auto& f : r.fits) {
    t.rows.push_back({f.f0_hz, f.fwhm_hz, f.min_transmission, f.q_factor});
  }
  e.table(t);
  e.raw_json("spectrum_summary", json{{"mean_fwhm_hz", r.mean_fwhm_hz},
                                      {"mean_q", r.mean_q},
                                      {"fsr_estimate_hz", r.fsr_estimate_hz}});
}

void emit_hysteresis(Emitter& e, const HysteresisResult& r) {
  io::Table t;
  t.name = "figS3_hysteresis";
  t.columns = {"power_mw", "current_ma", "transmission_forward", "transmission_backward",
               "transmission_static"};
  for (const auto& trace : r.traces) {
    for (size_t i = 0; i < trace.current_ma.size(); ++i) {
      t.rows.push_back({trace.power_mw, trace.current_ma[i], trace.forward[i],
                        trace.backward[i], trace.static_transmission[i]});
    }
  }
  e.table(t);
}

void emit_lock(Emitter& e, const LockResult& r) {
  io::Table t;
  t.name = "figS4_lock";
  t.columns = {"time_s", "transmission", "current_ma", "saturated", "open_loop_transmission"};
  for (size_t i = 0; i < r.closed_loop.size(); ++i) {
    const auto& c = r.closed_loop[i];
    const double open = i < r.open_loop.size() ? r.open_loop[i].transmission : 0.0;
    t.rows.push_back({c.time_s, c.transmission, c.current_ma, c.saturated ? 1.0 : 0.0, open});
  }
  e.table(t);
}

void emit_tomo(Emitter& e, const TomoResult& r) {
  io::Table t;
  t.name = "fig2d_fidelities";
  t.columns = {"channel", "signal_hz", "idler_hz", "raw_fidelity", "net_fidelity",
               "model_fidelity", "signal_fraction"};
  for (const auto& c : r.channels) {
    t.rows.push_back({static_cast<double>(c.channel), c.signal_hz, c.idler_hz, c.raw_fidelity,
                      c.net_fidelity, c.model_fidelity, c.signal_fraction});
  }
  e.table(t);

  io::Table sweep;
  sweep.name = "fig2e_fidelity_vs_power";
  sweep.columns = {"power_mw", "model_fidelity", "signal_fraction"};
  for (const auto& row : r.fidelity_vs_power) {
    sweep.rows.push_back({row[0], row[1], row[2]});
  }
  e.table(sweep);

  json state = json::parse(tomo::state_to_json(r.featured_state));
  state["channel"] = r.featured_channel;
  double raw = 0.0, net = 0.0;
  for (const auto& c : r.channels) {
    if (c.channel == r.featured_channel) {
      raw = c.raw_fidelity;
      net = c.net_fidelity;
    }
  }
  state["raw_fidelity"] = raw;
  state["net_fidelity"] = net;
  e.raw_json("fig2c_state", state);

  json table = json::parse(tomo::table_to_json(r.featured_table));
  table["channel"] = r.featured_channel;
  e.raw_json("tomo_table_featured", table);
}

void emit_power_fit(Emitter& e, const PowerFitResult& r) {
  io::Table t;
  t.name = "fig3_power_terms";
  t.columns = {"line", "frequency_hz", "a", "b", "c", "sigma_a", "on_resonance_model",
               "on_resonance_classified"};
  for (const auto& line : r.lines) {
    t.rows.push_back({static_cast<double>(line.fit.channel), line.fit.frequency_hz, line.fit.a,
                      line.fit.b, line.fit.c, line.fit.sigma_a,
                      line.on_resonance_model ? 1.0 : 0.0,
                      line.on_resonance_classified ? 1.0 : 0.0});
  }
  e.table(t);
  e.raw_json("fig3_summary", json{{"mean_b_on", r.mean_b_on},
                                  {"mean_b_off", r.mean_b_off},
                                  {"mean_b_off_low", r.mean_b_off_low},
                                  {"mean_b_off_high", r.mean_b_off_high}});
}

void emit_jsi(Emitter& e, const JsiResult& r) {
  io::Table t;
  t.name = "fig4a_jsi";
  const int n = static_cast<int>(r.grid.rows());
  for (int j = 1; j <= n; ++j) {
    t.columns.push_back("idler_" + std::to_string(j));
  }
  for (int i = 0; i < n; ++i) {
    std::vector<double> row;
    row.reserve(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      row.push_back(r.grid(i, j));
    }
    t.rows.push_back(std::move(row));
  }
  const auto csv = e.dir / "fig4a_jsi.csv";
  io::write_csv(t, csv, e.prov);
  e.written.push_back(csv);

  json diag = json::array();
  for (double v : r.diagonal_rates_hz) {
    diag.push_back(v);
  }
  e.raw_json("fig4a_jsi",
             json{{"diagonal_rates_hz", diag},
                  {"cross_accidental_rate_hz", r.cross_accidental_rate_hz},
                  {"dominance",
                   std::isfinite(r.dominance) ? json(r.dominance) : json("inf")}});
}

void emit_metrics(Emitter& e, const MetricsResult& r) {
  io::Table car;
  car.name = "fig4b_car";
  car.columns = {"power_mw", "singles_s", "singles_i", "coincidences", "accidentals_model",
                 "car_sampled", "car_model", "car_lower_bound"};
  for (const auto& p : r.car) {
    car.rows.push_back({p.record.power_mw, static_cast<double>(p.record.singles_s),
                        static_cast<double>(p.record.singles_i),
                        static_cast<double>(p.record.coincidences), p.record.accidentals,
                        p.car_sampled, p.car_model, p.lower_bound ? 1.0 : 0.0});
  }
  e.table(car);

  io::Table brightness;
  brightness.name = "fig5_brightness";
  brightness.columns = {"channel", "rc", "bandwidth_mhz", "pgr", "brightness"};
  for (const auto& c : r.channels) {
    brightness.rows.push_back(
        {static_cast<double>(c.channel), c.rc, c.bandwidth_mhz, c.pgr, c.brightness});
  }
  e.table(brightness);

  io::Table eff;
  eff.name = "fig6_efficiencies";
  eff.columns = {"channel", "eta_s", "eta_i", "extraction_s", "extraction_i",
                 "budget_consistent"};
  for (const auto& c : r.channels) {
    eff.rows.push_back({static_cast<double>(c.channel), c.eta_s, c.eta_i, c.extraction_s,
                        c.extraction_i, c.budget_consistent ? 1.0 : 0.0});
  }
  e.table(eff);

  io::Table histograms;
  histograms.name = "correlation_histograms";
  histograms.columns = {"channel", "delay_s", "counts"};
  for (size_t i = 0; i < r.histograms.size(); ++i) {
    const auto& h = r.histograms[i];
    for (size_t k = 0; k < h.delay_s.size(); ++k) {
      histograms.rows.push_back(
          {static_cast<double>(r.channels[i].channel), h.delay_s[k], h.counts[k]});
    }
  }
  e.table(histograms);

  e.raw_json("metrics_summary", json{{"mean_bandwidth_mhz", r.mean_bandwidth_mhz},
                                     {"mean_extraction", r.mean_extraction}});
}

}  // namespace

std::vector<std::filesystem::path> run_scenario(const Scenario& s, const std::string& stage) {
  s.validate();
  Emitter emitter;
  emitter.dir = s.output_dir;
  emitter.prov.scenario_hash = s.hash();
  emitter.prov.root_seed = s.root_seed;
  std::filesystem::create_directories(emitter.dir);

  const bool all = stage == "all";
  bool matched = false;
  if (all || stage == "spectrum") {
    emit_spectrum(emitter, run_spectrum(s));
    matched = true;
  }
  if (all || stage == "hysteresis") {
    emit_hysteresis(emitter, run_hysteresis(s));
    matched = true;
  }
  if (all || stage == "lock") {
    emit_lock(emitter, run_lock_stage(s));
    matched = true;
  }
  if (all || stage == "tomo") {
    emit_tomo(emitter, run_tomo(s));
    matched = true;
  }
  if (all || stage == "power-fit") {
    emit_power_fit(emitter, run_power_fit(s));
    matched = true;
  }
  if (all || stage == "jsi") {
    emit_jsi(emitter, run_jsi(s));
    matched = true;
  }
  if (all || stage == "metrics") {
    emit_metrics(emitter, run_metrics(s));
    matched = true;
  }
  if (!matched) {
    throw InvalidInput("run_scenario: unknown stage '" + stage + "'");
  }
  return emitter.written;
}

}  // namespace qfc::scenario
