#include "ionphoton/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ionphoton/errors.hpp"
#include "ionphoton/random.hpp"
#include "ionphoton/units.hpp"

namespace ionphoton {

namespace {

// Re-throw with the pipeline stage prepended, keeping the exception type.
template <typename F>
auto staged(const std::string& stage, F&& f) -> decltype(f()) {
  const std::string p = stage + ": ";
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(p + e.what());
  } catch (const StiffnessError& e) {
    throw StiffnessError(p + e.what(), e.time());
  } catch (const PhysicalityError& e) {
    throw PhysicalityError(p + e.what());
  } catch (const NoDataError& e) {
    throw NoDataError(p + e.what());
  } catch (const ResonanceError& e) {
    throw ResonanceError(p + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(p + e.what());
  }
}

// Run job(i) for i < n on a small pool; each job writes only its own slot.
template <typename Job>
void parallel_for(std::size_t n, unsigned threads, Job job) {
  unsigned t = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  t = static_cast<unsigned>(std::min<std::size_t>(t, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  if (t <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

double state_overlap(const PureState& psi, const Eigen::Matrix2cd& rho) {
  const Eigen::Vector2cd v = psi.amplitudes();
  return std::clamp((v.adjoint() * rho * v)(0, 0).real(), 0.0, 1.0);
}

std::string window_label(const DetectionWindow& w, bool cumulative) {
  std::ostringstream os;
  os << (cumulative ? "sweep_" : "window_") << units::to_us(w.t_start) << '-' << units::to_us(w.t_end) << "us";
  return os.str();
}

}  // namespace

std::string file_label(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (c == '\'') {
      out += 'p';
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '_') {
      out += c;
    } else {
      out += '_';
    }
  }
  return out;
}

DensityMatrix prepare_input(double alpha, double phi, double init_fidelity, const LevelScheme& scheme, int n_max) {
  if (!(init_fidelity >= 0.0 && init_fidelity <= 1.0)) throw std::invalid_argument("prepare_input: init_fidelity must lie in [0, 1]");
  const CompositeSpace space(scheme.size(), n_max);
  const auto s1 = space.index(scheme.qubit_level(1), 0, 0);
  const auto s2 = space.index(scheme.qubit_level(2), 0, 0);
  const ComplexVector q = PureState::qubit(alpha, phi).amplitudes();
  const auto n = static_cast<Eigen::Index>(space.dim());
  ComplexMatrix rho = ComplexMatrix::Zero(n, n);
  rho(s1, s1) = q(0) * std::conj(q(0));
  rho(s2, s2) = q(1) * std::conj(q(1));
  rho(s1, s2) = init_fidelity * q(0) * std::conj(q(1));
  rho(s2, s1) = std::conj(rho(s1, s2));
  return DensityMatrix(rho);
}

DensityMatrix prepare_input(double alpha, double phi, double init_fidelity) {
  return prepare_input(alpha, phi, init_fidelity, LevelScheme::default_scheme(), 1);
}

Dynamics simulate_dynamics(const RunConfig& config) {
  config.validate();
  Dynamics dyn;
  dyn.params = staged("system model", [&] {
    return tune_drives(config.params, config.scheme, config.tuning, config.include_off_resonant);
  });
  const CompositeSpace space(config.scheme.size(), dyn.params.n_max);

  const double dt = config.t_end / static_cast<double>(config.grid_points - 1);
  const auto last = std::min<std::size_t>(config.grid_points - 1,
                                          static_cast<std::size_t>(std::ceil(config.horizon() / dt - 1e-9)));
  std::vector<double> grid(std::max<std::size_t>(last, 1) + 1);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = config.t_end * static_cast<double>(i) / static_cast<double>(config.grid_points - 1);

  const auto h = build_full_hamiltonian(dyn.params, config.scheme, config.include_off_resonant);
  const auto collapse = build_collapse_operators(dyn.params, config.scheme);
  const auto obs = cavity_observables(space);

  dyn.states.resize(config.input_states.size());
  parallel_for(config.input_states.size(), config.threads, [&](std::size_t k) {
    const auto& in = config.input_states[k];
    MasterEquationProblem problem;
    problem.hamiltonian = h;
    problem.collapse_ops = collapse;
    // Initialization error is applied once, to the detected photon state.
    problem.rho0 = prepare_input(in.alpha, in.phi, 1.0, config.scheme, dyn.params.n_max).matrix();
    problem.t_grid = grid;
    problem.observables = obs;
    problem.store_states = false;
    const auto result = staged("dynamics (" + in.name + ")", [&] { return integrate(problem, config.integrator); });
    dyn.states[k] = {in, cavity_output(result, dyn.params, space), result.stats};
  });
  return dyn;
}

WindowResult analyze_window(const RunConfig& config, const Dynamics& dynamics, const DetectionWindow& window,
                            bool cumulative, std::uint64_t stream) {
  return staged("analysis " + window_label(window, cumulative), [&] {
    WindowResult w;
    w.window = window;
    w.cumulative = cumulative;
    const auto& params = dynamics.params;
    const auto settings = all_settings();
    const std::size_t n_in = dynamics.states.size();

    std::vector<PureState> inputs;
    for (const auto& s : dynamics.states) {
      StateResult r;
      r.name = s.input.name;
      r.emitted = emission_matrix(s.output, window, params.path_efficiency);
      const auto eff = process_efficiency(s.output, window, params);
      w.efficiency.detected += eff.detected / static_cast<double>(n_in);
      w.efficiency.internal += eff.internal / static_cast<double>(n_in);
      const auto noisy = apply_noise(r.emitted, params, window, config.noise);
      if (noisy.matrix.trace().real() <= 0.0) w.empty = true;
      r.model_state = noisy.matrix;
      inputs.push_back(s.input.qubit());
      if (!w.empty) r.model_fidelity = state_overlap(inputs.back(), r.model_state);
      w.states.push_back(std::move(r));
    }
    if (w.empty) return w;

    for (const auto& r : w.states) {
      const ComplexMatrix m = r.model_state;
      static_cast<void>(DensityMatrix(m));  // physicality gate
      w.model_mean_state_fidelity += r.model_fidelity / static_cast<double>(n_in);
    }

    const bool process = tomographically_complete(inputs);
    if (process) {
      std::vector<std::vector<Outcome>> expected;
      for (const auto& r : w.states) expected.push_back(expected_outcomes(r.model_state, settings));
      const auto fit = mle_process_detailed(inputs, expected);
      const auto chi = ProcessMatrix::from_choi(fit.choi);
      w.model_chi = chi.chi();
      w.model_process_fidelity = process_fidelity(chi);
    }

    if (config.shots <= 0) return w;

    const std::int64_t per_input = config.shots / static_cast<std::int64_t>(n_in);
    std::vector<CountRecord> records;
    for (std::size_t k = 0; k < n_in; ++k) {
      auto& r = w.states[k];
      r.counts = simulate_counts(r.model_state, settings, per_input,
                                 derive_seed(config.seed, stream * 1000 + k), window);
      records.push_back(*r.counts);
    }

    // Point estimates; bootstrap replicas warm-start from them.
    std::vector<Eigen::Matrix2cd> rho_hat(n_in);
    double mean_fid = 0.0;
    for (std::size_t k = 0; k < n_in; ++k) {
      const auto fit = mle_state_detailed(outcomes(records[k]));
      rho_hat[k] = fit.rho;
      const ComplexMatrix m = fit.rho;
      static_cast<void>(DensityMatrix(m));
      w.states[k].reconstructed = fit.rho;
      w.states[k].fidelity = state_overlap(inputs[k], fit.rho);
      mean_fid += *w.states[k].fidelity / static_cast<double>(n_in);
    }
    std::optional<Eigen::Matrix4cd> choi_hat;
    if (process) {
      std::vector<std::vector<Outcome>> data;
      for (const auto& r : records) data.push_back(outcomes(r));
      choi_hat = mle_process_detailed(inputs, data).choi;
      const auto chi = ProcessMatrix::from_choi(*choi_hat);
      w.chi = chi.chi();
    }

    const VectorEstimator estimator = [&](std::span<const CountRecord> d) {
      std::vector<double> out;
      double f = 0.0;
      for (std::size_t k = 0; k < n_in; ++k) {
        const auto o = outcomes(d[k]);
        f += state_overlap(inputs[k], mle_state_detailed(o, {}, rho_hat[k]).rho) / static_cast<double>(n_in);
      }
      out.push_back(f);
      if (process) {
        std::vector<std::vector<Outcome>> data;
        for (const auto& r : d) data.push_back(outcomes(r));
        out.push_back(process_fidelity(ProcessMatrix::from_choi(mle_process_detailed(inputs, data, {}, choi_hat).choi)));
      }
      return out;
    };
    const auto boot = bootstrap_vector(records, estimator, config.bootstrap_resamples,
                                       derive_seed(config.seed, 1'000'000 + stream), config.threads);
    w.mean_state_fidelity = Estimate{mean_fid, boot.sd[0]};
    if (process) {
      const double fp = process_fidelity(ProcessMatrix(*w.chi));
      w.process_fidelity = Estimate{fp, boot.sd[1]};
      w.mean_state_fidelity_from_process = mean_state_fidelity_from_process(std::clamp(fp, 0.0, 1.0));
    }
    return w;
  });
}

RunReport run_experiment(const RunConfig& config) { return run_experiment(config, simulate_dynamics(config)); }

RunReport run_experiment(const RunConfig& config, const Dynamics& dynamics) {
  RunReport rep;
  rep.params = dynamics.params;
  for (const auto& s : dynamics.states) {
    rep.state_names.push_back(s.input.name);
    rep.integrator_stats.push_back(s.stats);
    std::vector<PhotonShape> per_basis;
    for (auto b : kAllBases) per_basis.push_back(bin_shape(photon_shape(s.output, b, dynamics.params.path_efficiency), config.shape_bin));
    rep.shapes.push_back(std::move(per_basis));
  }
  std::uint64_t stream = 0;
  for (const auto& w : config.windows) rep.windows.push_back(analyze_window(config, dynamics, w, false, stream++));
  for (double end : config.sweep_ends) {
    rep.sweep.push_back(analyze_window(config, dynamics, DetectionWindow(0.0, end), true, stream++));
  }
  if (config.shots == 0) rep.warnings.push_back("zero shots: no reconstructions from counts");
  if (config.shots > 0 && !tomographically_complete([&] {
        std::vector<PureState> v;
        for (const auto& s : config.input_states) v.push_back(s.qubit());
        return v;
      }())) {
    rep.warnings.push_back("input states are not tomographically complete: no process reconstruction");
  }
  for (const auto& list : {&rep.windows, &rep.sweep}) {
    for (const auto& w : *list) {
      if (w.empty) rep.warnings.push_back("window " + window_label(w.window, w.cumulative) + " collected nothing");
    }
  }
  return rep;
}

std::vector<SweepRow> RunReport::sweep_rows() const {
  std::vector<SweepRow> rows;
  for (const auto& w : sweep) {
    SweepRow r;
    r.window_end = w.window.t_end;
    r.fidelity = w.model_process_fidelity.value_or(std::nan(""));
    r.fidelity_sd = w.process_fidelity ? w.process_fidelity->sd : std::nan("");
    r.eff_detected = w.efficiency.detected;
    r.eff_internal = w.efficiency.internal;
    rows.push_back(r);
  }
  return rows;
}

std::vector<SweepRow> cumulative_sweep(const RunConfig& config) {
  RunConfig c = config;
  c.windows.clear();
  if (c.sweep_ends.empty()) throw ConfigError("cumulative_sweep: no sweep endpoints");
  return run_experiment(c).sweep_rows();
}

// ---------------------------------------------------------------------------
// Output

namespace {

nlohmann::json stats_json(const IntegratorStats& s) {
  return {{"accepted_steps", s.accepted_steps},
          {"rejected_steps", s.rejected_steps},
          {"rhs_evaluations", s.rhs_evaluations},
          {"max_trace_drift", s.max_trace_drift},
          {"min_eigenvalue", s.min_eigenvalue}};
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }
nlohmann::json opt(const std::optional<Estimate>& v) {
  return v ? nlohmann::json{{"value", v->value}, {"sd", v->sd}} : nlohmann::json();
}

ComplexMatrix checked(const ComplexMatrix& m, const std::string& what) {
  const auto rep = check_physical(m);
  if (!rep.ok(kHermiticityTol, kTraceTol, kEigenvalueFloor)) {
    throw PhysicalityError("output: " + what + " fails the physicality checks");
  }
  return m;
}

nlohmann::json window_json(const WindowResult& w) {
  nlohmann::json j;
  j["t_start_us"] = units::to_us(w.window.t_start);
  j["t_end_us"] = units::to_us(w.window.t_end);
  j["cumulative"] = w.cumulative;
  j["empty"] = w.empty;
  j["eff_detected"] = w.efficiency.detected;
  j["eff_internal"] = w.efficiency.internal;
  j["model_process_fidelity"] = opt(w.model_process_fidelity);
  j["model_mean_state_fidelity"] = w.model_mean_state_fidelity;
  j["process_fidelity"] = opt(w.process_fidelity);
  j["mean_state_fidelity"] = opt(w.mean_state_fidelity);
  j["mean_state_fidelity_from_process"] = opt(w.mean_state_fidelity_from_process);
  j["states"] = nlohmann::json::array();
  for (const auto& s : w.states) {
    nlohmann::json sj;
    sj["name"] = s.name;
    sj["emitted"] = polarization_to_json(s.emitted);
    sj["model_fidelity"] = s.model_fidelity;
    if (!w.empty) sj["model_state"] = matrix_to_json(checked(s.model_state, "model state"));
    sj["fidelity"] = opt(s.fidelity);
    if (s.reconstructed) sj["reconstructed"] = matrix_to_json(checked(*s.reconstructed, "reconstructed state"));
    if (s.counts) {
      sj["counts"] = nlohmann::json::array();
      for (const auto& e : s.counts->entries) {
        sj["counts"].push_back({{"basis", to_string(e.setting.basis)}, {"swapped", e.setting.swapped},
                                {"det1", e.det1}, {"det2", e.det2}});
      }
    }
    j["states"].push_back(sj);
  }
  if (w.model_chi) j["model_chi"] = matrix_to_json(checked(*w.model_chi, "model chi"));
  if (w.chi) j["chi"] = matrix_to_json(checked(*w.chi, "reconstructed chi"));
  return j;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

nlohmann::json report_to_json(const RunReport& report, const RunConfig& config) {
  nlohmann::json j;
  j["config"] = config_to_json(config);
  j["resolved_params"] = params_to_json(report.params);
  j["warnings"] = report.warnings;
  j["dynamics"] = nlohmann::json::array();
  for (std::size_t k = 0; k < report.state_names.size(); ++k) {
    nlohmann::json d{{"state", report.state_names[k]}, {"integrator", stats_json(report.integrator_stats[k])}};
    for (const auto& s : report.shapes[k]) {
      std::vector<double> t;
      for (double x : s.times) t.push_back(units::to_us(x));
      d["shapes"][to_string(s.basis)] = {{"time_us", t}, {"rate1", s.rate_det1}, {"rate2", s.rate_det2}};
    }
    j["dynamics"].push_back(d);
  }
  j["windows"] = nlohmann::json::array();
  for (const auto& w : report.windows) j["windows"].push_back(window_json(w));
  j["sweep"] = nlohmann::json::array();
  for (const auto& w : report.sweep) j["sweep"].push_back(window_json(w));
  return j;
}

void write_outputs(const RunReport& report, const RunConfig& config, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "matrices");
  fs::create_directories(dir / "counts");

  write_file(dir / "report.json", report_to_json(report, config).dump(2) + "\n");

  for (std::size_t k = 0; k < report.state_names.size(); ++k) {
    for (const auto& s : report.shapes[k]) {
      write_file(dir / ("shapes_" + file_label(report.state_names[k]) + "_" + to_string(s.basis) + ".csv"),
                 shape_to_csv(s));
    }
  }

  std::ostringstream sweep;
  sweep << "window_end_us,fidelity,fidelity_sd,eff_detected,eff_internal\n";
  for (const auto& r : report.sweep_rows()) {
    sweep << fmt(units::to_us(r.window_end)) << ',' << fmt(r.fidelity) << ',' << fmt(r.fidelity_sd) << ','
          << fmt(r.eff_detected) << ',' << fmt(r.eff_internal) << '\n';
  }
  write_file(dir / "sweep.csv", sweep.str());

  for (const auto& list : {&report.windows, &report.sweep}) {
    for (const auto& w : *list) {
      if (w.empty) continue;
      const std::string label = window_label(w.window, w.cumulative);
      if (w.model_chi) write_file(dir / "matrices" / (label + "_chi_model.json"), matrix_to_json(*w.model_chi).dump(2) + "\n");
      if (w.chi) write_file(dir / "matrices" / (label + "_chi.json"), matrix_to_json(*w.chi).dump(2) + "\n");
      for (const auto& s : w.states) {
        const std::string base = label + "_" + file_label(s.name);
        write_file(dir / "matrices" / (base + "_model.json"), matrix_to_json(s.model_state).dump(2) + "\n");
        if (s.reconstructed) write_file(dir / "matrices" / (base + "_mle.json"), matrix_to_json(*s.reconstructed).dump(2) + "\n");
        if (s.counts) write_file(dir / "counts" / (base + ".csv"), counts_to_csv(*s.counts));
      }
    }
  }
}

}  // namespace ionphoton
