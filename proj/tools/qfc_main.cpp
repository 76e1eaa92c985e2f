#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qfc/report.hpp"
#include "qfc/scenario.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

qfc::scenario::Scenario resolve_scenario(const GlobalOptions& opts) {
  qfc::scenario::Scenario s = opts.config_path.empty()
                                  ? qfc::scenario::default_scenario()
                                  : qfc::scenario::load_scenario(opts.config_path);
  if (opts.seed_set) {
    s.root_seed = opts.seed;
  }
  if (!opts.output_dir.empty()) {
    s.output_dir = opts.output_dir;
  } else if (const char* env = std::getenv("QFC_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    s.output_dir = env;
  }
  s.validate();
  return s;
}

int run_stage(const GlobalOptions& opts, const std::string& stage) {
  qfc::scenario::Scenario s;
  try {
    s = resolve_scenario(opts);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto files = qfc::scenario::run_scenario(s, stage);
    for (const auto& f : files) {
      std::cout << f.string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "stage '" << stage << "' failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microring polarization-entangled frequency comb simulator"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "Scenario config JSON (defaults built in)");
  app.add_option("--out", opts.output_dir,
                 "Output directory (overrides config and QFC_OUTPUT_DIR)");
  auto* seed_opt = app.add_option("--seed", opts.seed, "Root seed override");

  const std::vector<std::string> stages{"spectrum", "hysteresis", "lock",    "tomo",
                                        "power-fit", "jsi",        "metrics", "all"};
  const std::vector<std::string> descriptions{
      "Fit the synthetic transmission spectrum and emit the resonance table",
      "Forward/backward heater sweeps at the configured pump powers",
      "Closed- and open-loop resonance lock traces under drift",
      "Per-channel tomography, fidelities and the featured-channel state",
      "Singles-vs-power fits and on/off-resonance classification",
      "Joint spectral intensity over all channel combinations",
      "Coincidence metrics: CAR sweep, bandwidth, brightness, efficiencies",
      "Run every stage"};
  std::string chosen;
  for (size_t i = 0; i < stages.size(); ++i) {
    auto* sub = app.add_subcommand(stages[i], descriptions[i]);
    sub->callback([&chosen, name = stages[i]] { chosen = name; });
  }

  auto* write_config = app.add_subcommand(
      "write-config", "Print the default scenario config as JSON");
  write_config->callback([&chosen] { chosen = "write-config"; });

  CLI11_PARSE(app, argc, argv);
  opts.seed_set = seed_opt->count() > 0;

  if (chosen == "write-config") {
    std::cout << qfc::scenario::scenario_to_json(qfc::scenario::default_scenario()) << "\n";
    return 0;
  }
  return run_stage(opts, chosen);
}
