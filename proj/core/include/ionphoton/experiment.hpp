#pragma once

// Experiment pipeline: preparation -> dynamics -> emission -> tomography -> statistics.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ionphoton/config.hpp"
#include "ionphoton/emission.hpp"
#include "ionphoton/tomography.hpp"

namespace ionphoton {

// Atomic qubit cos(a)|S> + e^{i phi} sin(a)|S'> with both modes in vacuum; the
// S/S' coherence is scaled by init_fidelity.
DensityMatrix prepare_input(double alpha, double phi, double init_fidelity, const LevelScheme& scheme, int n_max);
DensityMatrix prepare_input(double alpha, double phi, double init_fidelity);

struct StateDynamics {
  InputState input;
  CavityOutput output;
  IntegratorStats stats;
};

struct Dynamics {
  SystemParams params;  // with resolved drive frequencies
  std::vector<StateDynamics> states;
};

// Integrates every input state up to the latest window end, in parallel.
Dynamics simulate_dynamics(const RunConfig& config);

struct StateResult {
  std::string name;
  PolarizationMatrix emitted;          // before noise, includes path efficiency
  Eigen::Matrix2cd model_state;        // after the noise model, unit trace
  double model_fidelity = 0.0;         // <psi|rho|psi> against the ideal mapped state
  std::optional<CountRecord> counts;
  std::optional<Eigen::Matrix2cd> reconstructed;
  std::optional<double> fidelity;      // of the reconstruction
};

struct Estimate {
  double value = 0.0;
  double sd = 0.0;
};

struct WindowResult {
  DetectionWindow window;
  bool cumulative = false;
  bool empty = false;                  // nothing to normalize (no signal, no dark counts)
  Efficiency efficiency;               // averaged over input states
  std::vector<StateResult> states;

  // Infinite-statistics reconstruction of the modelled states.
  std::optional<Eigen::Matrix4cd> model_chi;
  std::optional<double> model_process_fidelity;
  double model_mean_state_fidelity = 0.0;

  // From simulated counts (absent with zero shots).
  std::optional<Eigen::Matrix4cd> chi;
  std::optional<Estimate> process_fidelity;
  std::optional<Estimate> mean_state_fidelity;
  std::optional<double> mean_state_fidelity_from_process;
};

struct SweepRow {
  double window_end = 0.0;  // s
  double fidelity = 0.0;
  double fidelity_sd = 0.0;
  double eff_detected = 0.0;
  double eff_internal = 0.0;
};

struct RunReport {
  SystemParams params;
  std::vector<std::string> state_names;
  std::vector<IntegratorStats> integrator_stats;
  std::vector<WindowResult> windows;  // explicit windows
  std::vector<WindowResult> sweep;    // cumulative [0, end]
  std::vector<std::vector<PhotonShape>> shapes;  // [state][basis], binned
  std::vector<std::string> warnings;

  std::vector<SweepRow> sweep_rows() const;
};

// Analysis of one window on precomputed dynamics. `stream` separates random streams.
WindowResult analyze_window(const RunConfig& config, const Dynamics& dynamics, const DetectionWindow& window,
                            bool cumulative, std::uint64_t stream);

RunReport run_experiment(const RunConfig& config);
RunReport run_experiment(const RunConfig& config, const Dynamics& dynamics);
std::vector<SweepRow> cumulative_sweep(const RunConfig& config);

// report.json, shapes_<state>_<basis>.csv, sweep.csv, matrices/*.json, counts/*.csv
void write_outputs(const RunReport& report, const RunConfig& config, const std::filesystem::path& dir);
nlohmann::json report_to_json(const RunReport& report, const RunConfig& config);

// File-name-safe form of a state name (S' -> Sp).
std::string file_label(const std::string& name);

}  // namespace ionphoton
