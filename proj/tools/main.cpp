// ionphoton run --config <json> --out <dir> [--seed N] [--no-noise] [--windows a,b,c]

#include <chrono>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ionphoton/config.hpp"
#include "ionphoton/errors.hpp"
#include "ionphoton/experiment.hpp"
#include "ionphoton/units.hpp"

namespace {

enum Exit { kOk = 0, kWarning = 1, kConfig = 2, kNumerical = 3 };

// "a" is a cumulative endpoint [0, a]; "a:b" an explicit window. Microseconds.
void apply_windows(ionphoton::RunConfig& c, const std::string& spec) {
  using ionphoton::units::us;
  c.windows.clear();
  c.sweep_ends.clear();
  std::stringstream in(spec);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        c.sweep_ends.push_back(us(std::stod(tok)));
      } else {
        c.windows.emplace_back(us(std::stod(tok.substr(0, colon))), us(std::stod(tok.substr(colon + 1))));
      }
    } catch (const std::exception& e) {
      throw ionphoton::ConfigError("--windows: bad entry '" + tok + "'");
    }
  }
  std::sort(c.sweep_ends.begin(), c.sweep_ends.end());
  c.validate();
}

void print_summary(const ionphoton::RunReport& r) {
  auto line = [](const ionphoton::WindowResult& w) {
    std::cout << "  [" << ionphoton::units::to_us(w.window.t_start) << ", " << ionphoton::units::to_us(w.window.t_end)
              << "] us";
    if (w.model_process_fidelity) std::cout << "  F_p(model) " << *w.model_process_fidelity;
    if (w.process_fidelity) std::cout << "  F_p " << w.process_fidelity->value << " +- " << w.process_fidelity->sd;
    std::cout << "  eff " << w.efficiency.detected << " (internal " << w.efficiency.internal << ")\n";
  };
  if (!r.windows.empty()) std::cout << "windows\n";
  for (const auto& w : r.windows) line(w);
  if (!r.sweep.empty()) std::cout << "cumulative sweep\n";
  for (const auto& w : r.sweep) line(w);
  for (const auto& m : r.warnings) std::cerr << "warning: " << m << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ion-to-photon state transfer simulation"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  std::string config_path, out_dir, windows;
  std::uint64_t seed = 0;
  bool no_noise = false;
  unsigned threads = 0;
  run->add_option("--config", config_path, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Random seed (overrides the config)");
  run->add_flag("--no-noise", no_noise, "Disable dark counts, initialization error and dephasing");
  run->add_option("--windows", windows, "Comma list: END for [0,END] sweeps, START:END for windows (us)");
  run->add_option("--threads", threads, "Worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    auto config = ionphoton::load_config(config_path);
    if (*seed_opt) config.seed = seed;
    if (no_noise) config.noise = ionphoton::NoiseToggles::none();
    if (!windows.empty()) apply_windows(config, windows);
    if (threads) config.threads = threads;
    config.out_dir = out_dir;

    const auto t0 = std::chrono::steady_clock::now();
    const auto report = ionphoton::run_experiment(config);
    ionphoton::write_outputs(report, config, out_dir);
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print_summary(report);
    std::cerr << "done in " << sec << " s, outputs in " << out_dir << '\n';
    return report.warnings.empty() ? kOk : kWarning;
  } catch (const ionphoton::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}
