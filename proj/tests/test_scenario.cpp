#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qfc/scenario.hpp"

using namespace qfc;
namespace fs = std::filesystem;

namespace {

// Shrunk copy of the defaults so the scenario tests stay fast.
scenario::Scenario small_scenario(const std::string& out) {
  scenario::Scenario s = scenario::default_scenario();
  s.channels.resize(4);
  s.tomo.featured_channel = 2;
  s.tomo.integration_time_s = 2.0;
  s.tomo.sweep_powers_mw = {0.5, 1.0, 2.0};
  s.metrics.car_channel = 2;
  s.metrics.car_powers_mw = {0.1, 0.5, 1.0};
  s.metrics.car_integration_time_s = 5.0;
  s.metrics.integration_time_s = 2.0;
  s.spectrum.resonance_count = 6;
  s.spectrum.first_index = -3;
  s.hysteresis.points = 81;
  s.lock.duration_s = 3.0;
  s.jsi.integration_time_s = 5.0;
  s.power_fit.integration_time_s = 2.0;
  s.output_dir = out;
  return s;
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("qfc_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("default scenario validates and serializes round-trip") {
  const auto s = scenario::default_scenario();
  s.validate();
  CHECK(s.channels.size() == 22);
  const auto text = scenario::scenario_to_json(s);
  const auto back = scenario::scenario_from_json(text);
  back.validate();
  CHECK(back.canonical_json() == s.canonical_json());
  CHECK(back.hash() == s.hash());
}

TEST_CASE("the bundled default config matches the built-in defaults") {
  const fs::path path = fs::path(QFC_SOURCE_DIR) / "scenarios" / "defaults.json";
  const auto bundled = scenario::load_scenario(path);
  CHECK(bundled.canonical_json() == scenario::default_scenario().canonical_json());
}

TEST_CASE("validation names the offending field") {
  auto s = scenario::default_scenario();
  s.channels.clear();
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("channels"), InvalidInput);

  s = scenario::default_scenario();
  s.channels[3].eta_s = 1.7;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("eta_s"), InvalidInput);

  s = scenario::default_scenario();
  s.controller.setpoint_transmission = 1.5;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("setpoint"), InvalidInput);

  s = scenario::default_scenario();
  s.tomo.featured_channel = 99;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("featured_channel"), InvalidInput);
}

TEST_CASE("drift specifications evaluate correctly") {
  scenario::DriftSpec none;
  CHECK(none.at(12.0) == 0.0);

  scenario::DriftSpec sine;
  sine.kind = scenario::DriftSpec::Kind::Sine;
  sine.amplitude_hz = 1e9;
  sine.period_s = 60.0;
  CHECK(sine.at(15.0) == doctest::Approx(1e9));
  CHECK(std::fabs(sine.at(30.0)) < 1e-3);  // sin(pi) at double precision

  scenario::DriftSpec table;
  table.kind = scenario::DriftSpec::Kind::Table;
  table.samples = {{0.0, 0.0}, {10.0, 1e9}};
  CHECK(table.at(5.0) == doctest::Approx(0.5e9));
  CHECK(table.at(-1.0) == 0.0);
  CHECK(table.at(99.0) == doctest::Approx(1e9));
}

TEST_CASE("scenario run emits the report files deterministically") {
  const auto dir_a = temp_dir("a");
  const auto dir_b = temp_dir("b");

  auto sa = small_scenario(dir_a.string());
  const auto files_a = scenario::run_scenario(sa, "all");
  CHECK(files_a.size() >= 16);

  auto sb = small_scenario(dir_b.string());
  const auto files_b = scenario::run_scenario(sb, "all");
  REQUIRE(files_a.size() == files_b.size());
  for (size_t i = 0; i < files_a.size(); ++i) {
    CHECK(io::file_checksum(files_a[i]) == io::file_checksum(files_b[i]));
  }

  // A different seed changes the stochastic outputs.
  auto sc = small_scenario(dir_b.string());
  sc.root_seed += 1;
  scenario::run_scenario(sc, "tomo");
  CHECK(io::file_checksum(dir_a / "fig2d_fidelities.csv") !=
        io::file_checksum(dir_b / "fig2d_fidelities.csv"));

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("csv and json emissions agree after parsing") {
  const auto dir = temp_dir("agree");
  auto s = small_scenario(dir.string());
  scenario::run_scenario(s, "tomo");

  const auto csv = io::read_csv(dir / "fig2d_fidelities.csv");
  const auto jsn = io::read_json(dir / "fig2d_fidelities.json");
  REQUIRE(csv.columns == jsn.columns);
  REQUIRE(csv.rows.size() == jsn.rows.size());
  CHECK(csv.rows.size() == s.channels.size());  // one row per channel pair
  for (size_t r = 0; r < csv.rows.size(); ++r) {
    REQUIRE(csv.rows[r].size() == jsn.rows[r].size());
    for (size_t c = 0; c < csv.rows[r].size(); ++c) {
      CHECK(csv.rows[r][c] == jsn.rows[r][c]);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("output headers carry the scenario hash and the root seed") {
  const auto dir = temp_dir("header");
  auto s = small_scenario(dir.string());
  scenario::run_scenario(s, "spectrum");
  std::ifstream in(dir / "resonances.csv");
  std::string line1, line2;
  std::getline(in, line1);
  std::getline(in, line2);
  CHECK(line1.find("qfc table") != std::string::npos);
  CHECK(line2.find("scenario_hash=" + s.hash()) != std::string::npos);
  CHECK(line2.find("root_seed=" + std::to_string(s.root_seed)) != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("unknown stages and invalid configs are rejected") {
  auto s = small_scenario(temp_dir("bad").string());
  CHECK_THROWS_AS(scenario::run_scenario(s, "nonsense"), InvalidInput);
  CHECK_THROWS_AS(scenario::scenario_from_json("{ not json"), InvalidInput);
  CHECK_THROWS_AS(scenario::scenario_from_json("{}"), InvalidInput);
}

TEST_CASE("stage results have the advertised shapes") {
  auto s = small_scenario(temp_dir("shapes").string());

  const auto spectrum = scenario::run_spectrum(s);
  CHECK(spectrum.fits.size() == 6);
  CHECK(spectrum.fsr_estimate_hz == doctest::Approx(s.ring.fsr_hz).epsilon(1e-3));

  const auto tomo_result = scenario::run_tomo(s);
  CHECK(tomo_result.channels.size() == s.channels.size());
  CHECK(tomo_result.fidelity_vs_power.size() == s.tomo.sweep_powers_mw.size());

  const auto jsi_result = scenario::run_jsi(s);
  CHECK(jsi_result.grid.rows() == static_cast<int>(s.channels.size()));
  CHECK(jsi_result.dominance > 1.0);

  const auto metrics = scenario::run_metrics(s);
  CHECK(metrics.channels.size() == s.channels.size());
  CHECK(metrics.car.size() == s.metrics.car_powers_mw.size());
  // Extracted correlation bandwidth sits near the configured 184.58 MHz,
  // about 0.97 of the 190.41 MHz linewidth.
  CHECK(metrics.mean_bandwidth_mhz == doctest::Approx(184.58).epsilon(0.01));
  CHECK(metrics.mean_bandwidth_mhz * 1e6 / s.ring.fwhm_hz ==
        doctest::Approx(0.969).epsilon(0.01));

  const auto hysteresis = scenario::run_hysteresis(s);
  CHECK(hysteresis.traces.size() == s.hysteresis.powers_mw.size());
  CHECK(hysteresis.traces[0].current_ma.size() == static_cast<size_t>(s.hysteresis.points));

  fs::remove_all(s.output_dir);
}
