#pragma once

// Declarative run configuration (JSON).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ionphoton/emission.hpp"
#include "ionphoton/lindblad.hpp"
#include "ionphoton/operators.hpp"
#include "ionphoton/system_model.hpp"

namespace ionphoton {

struct InputState {
  std::string name;  // also used in output file names
  double alpha = 0.0;
  double phi = 0.0;

  PureState qubit() const { return PureState::qubit(alpha, phi); }
};

// S, S', S-S', S+iS'
std::vector<InputState> paper_input_states();
InputState named_input_state(const std::string& name);

struct RunConfig {
  SystemParams params = SystemParams::defaults();
  LevelScheme scheme = LevelScheme::default_scheme();
  RamanTuning tuning = RamanTuning::LightShifted;
  bool include_off_resonant = true;

  std::vector<InputState> input_states = paper_input_states();
  std::vector<DetectionWindow> windows;      // explicit windows
  std::vector<double> sweep_ends;            // cumulative windows [0, end], s

  std::int64_t shots = 32400;                // total over all inputs and settings
  std::uint64_t seed = 1;
  int bootstrap_resamples = 200;
  NoiseToggles noise;

  double t_end = 55e-6;                      // s
  std::size_t grid_points = 2201;
  double shape_bin = 1e-6;                   // s
  IntegratorOptions integrator;
  unsigned threads = 0;                      // 0: hardware concurrency

  std::filesystem::path out_dir;

  // Throws ConfigError when inconsistent.
  void validate() const;
  // Latest time any window needs.
  double horizon() const;
};

inline const std::vector<double>& default_sweep_ends_us() {
  static const std::vector<double> ends{0.5, 1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 44, 55};
  return ends;
}

// Missing keys keep defaults. Relative scheme paths resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace ionphoton
