#include "ionphoton/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "ionphoton/errors.hpp"
#include "ionphoton/units.hpp"

namespace ionphoton {

std::vector<InputState> paper_input_states() {
  using std::numbers::pi;
  return {{"S", 0.0, 0.0}, {"S'", pi / 2, 0.0}, {"S-S'", pi / 4, pi}, {"S+iS'", pi / 4, pi / 2}};
}

InputState named_input_state(const std::string& name) {
  for (const auto& s : paper_input_states()) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown input state '" + name + "' (expected S, S', S-S' or S+iS')");
}

double RunConfig::horizon() const {
  double h = 0.0;
  for (const auto& w : windows) h = std::max(h, w.t_end);
  for (double e : sweep_ends) h = std::max(h, e);
  return h;
}

void RunConfig::validate() const {
  if (input_states.empty()) throw ConfigError("config: at least one input state required");
  if (windows.empty() && sweep_ends.empty()) throw ConfigError("config: at least one window or sweep endpoint required");
  if (!(t_end > 0.0) || grid_points < 2) throw ConfigError("config: time grid needs t_end > 0 and >= 2 points");
  const double slack = 1e-12;
  for (const auto& w : windows) {
    if (w.t_end > t_end * (1 + slack)) throw ConfigError("config: window ends after the simulated time range");
  }
  for (std::size_t i = 0; i < sweep_ends.size(); ++i) {
    if (!(sweep_ends[i] > 0.0)) throw ConfigError("config: sweep endpoints must be positive");
    if (i > 0 && !(sweep_ends[i] > sweep_ends[i - 1])) throw ConfigError("config: sweep endpoints must increase");
    if (sweep_ends[i] > t_end * (1 + slack)) throw ConfigError("config: sweep endpoint after the simulated time range");
  }
  if (shots < 0) throw ConfigError("config: shots must be non-negative");
  if (shots > 0 && bootstrap_resamples < 100) throw ConfigError("config: bootstrap_resamples must be at least 100");
  if (!(shape_bin > 0.0)) throw ConfigError("config: shape_bin_us must be positive");
  if (!(integrator.rel_tol > 0.0) || !(integrator.abs_tol > 0.0)) throw ConfigError("config: tolerances must be positive");
  for (std::size_t i = 0; i < input_states.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (input_states[i].name == input_states[k].name) throw ConfigError("config: duplicate input state name");
    }
  }
}

namespace {

std::vector<double> us_list(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(units::us(v.get<double>()));
  return out;
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.sweep_ends = us_list(default_sweep_ends_us());
  c.windows = {DetectionWindow(units::us(2.0), units::us(4.0))};
  try {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    if (j.contains("scheme")) {
      const auto& s = j.at("scheme");
      if (s.is_string()) {
        std::filesystem::path p = s.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("config: cannot open level scheme " + p.string());
        nlohmann::json sj;
        try {
          in >> sj;
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError("config: level scheme " + p.string() + ": " + e.what());
        }
        c.scheme = scheme_from_json(sj);
      } else {
        c.scheme = scheme_from_json(s);
      }
    }
    if (j.contains("params")) c.params = params_from_json(j.at("params"));
    if (j.contains("tuning")) {
      const auto t = j.at("tuning").get<std::string>();
      if (t == "light_shifted") {
        c.tuning = RamanTuning::LightShifted;
      } else if (t == "bare") {
        c.tuning = RamanTuning::Bare;
      } else {
        throw ConfigError("config: tuning must be 'light_shifted' or 'bare'");
      }
    }
    c.include_off_resonant = j.value("include_off_resonant", c.include_off_resonant);
    if (j.contains("input_states")) {
      c.input_states.clear();
      for (const auto& s : j.at("input_states")) {
        if (s.is_string()) {
          c.input_states.push_back(named_input_state(s.get<std::string>()));
        } else {
          InputState in{s.at("name").get<std::string>(), s.at("alpha").get<double>(), s.value("phi", 0.0)};
          c.input_states.push_back(in);
        }
      }
    }
    if (j.contains("windows_us")) {
      c.windows.clear();
      for (const auto& w : j.at("windows_us")) {
        if (!w.is_array() || w.size() != 2) throw ConfigError("config: windows_us entries must be [start, end]");
        try {
          c.windows.emplace_back(units::us(w[0].get<double>()), units::us(w[1].get<double>()));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("config: ") + e.what());
        }
      }
    }
    if (j.contains("sweep_ends_us")) c.sweep_ends = us_list(j.at("sweep_ends_us"));
    c.shots = j.value("shots", c.shots);
    c.seed = j.value("seed", c.seed);
    c.bootstrap_resamples = j.value("bootstrap_resamples", c.bootstrap_resamples);
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      c.noise.dark_counts = n.value("dark_counts", c.noise.dark_counts);
      c.noise.init_error = n.value("init_error", c.noise.init_error);
      c.noise.dephasing = n.value("dephasing", c.noise.dephasing);
    }
    if (j.contains("time_grid")) {
      const auto& g = j.at("time_grid");
      if (g.contains("t_end_us")) c.t_end = units::us(g.at("t_end_us").get<double>());
      c.grid_points = g.value("points", c.grid_points);
    }
    if (j.contains("shape_bin_us")) c.shape_bin = units::us(j.at("shape_bin_us").get<double>());
    if (j.contains("integrator")) {
      const auto& i = j.at("integrator");
      c.integrator.rel_tol = i.value("rel_tol", c.integrator.rel_tol);
      c.integrator.abs_tol = i.value("abs_tol", c.integrator.abs_tol);
    }
    c.threads = j.value("threads", c.threads);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["params"] = params_to_json(c.params);
  j["scheme"] = scheme_to_json(c.scheme);
  j["tuning"] = c.tuning == RamanTuning::LightShifted ? "light_shifted" : "bare";
  j["include_off_resonant"] = c.include_off_resonant;
  for (const auto& s : c.input_states) j["input_states"].push_back({{"name", s.name}, {"alpha", s.alpha}, {"phi", s.phi}});
  j["windows_us"] = nlohmann::json::array();
  for (const auto& w : c.windows) j["windows_us"].push_back({units::to_us(w.t_start), units::to_us(w.t_end)});
  j["sweep_ends_us"] = nlohmann::json::array();
  for (double e : c.sweep_ends) j["sweep_ends_us"].push_back(units::to_us(e));
  j["shots"] = c.shots;
  j["seed"] = c.seed;
  j["bootstrap_resamples"] = c.bootstrap_resamples;
  j["noise"] = {{"dark_counts", c.noise.dark_counts}, {"init_error", c.noise.init_error}, {"dephasing", c.noise.dephasing}};
  j["time_grid"] = {{"t_end_us", units::to_us(c.t_end)}, {"points", c.grid_points}};
  j["shape_bin_us"] = units::to_us(c.shape_bin);
  j["integrator"] = {{"rel_tol", c.integrator.rel_tol}, {"abs_tol", c.integrator.abs_tol}};
  return j;
}

}  // namespace ionphoton
