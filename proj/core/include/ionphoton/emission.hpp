#pragma once

// Cavity output: photon shapes per detection basis, windowed polarization states,
// efficiencies and the detection-noise model.

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ionphoton/lindblad.hpp"
#include "ionphoton/operators.hpp"
#include "ionphoton/system_model.hpp"

namespace ionphoton {

enum class Basis { HV, DA, RL };

std::string to_string(Basis b);
Basis basis_from_string(const std::string& s);
inline constexpr Basis kAllBases[] = {Basis::HV, Basis::DA, Basis::RL};

// Polarization vectors of the two detectors (H/V, D/A, R/L) with D = (H+V)/sqrt2, R = (H+iV)/sqrt2.
Eigen::Vector2cd detector_mode(Basis b, int detector);

struct DetectionWindow {
  double t_start = 0.0;  // s
  double t_end = 0.0;

  DetectionWindow() = default;
  // Zero-length windows are allowed; they collect nothing.
  DetectionWindow(double start, double end);
  double length() const { return t_end - t_start; }
};

// Names of the observables integrate() must record for cavity_output().
inline constexpr const char* kObsHH = "aH+aH";
inline constexpr const char* kObsVV = "aV+aV";
inline constexpr const char* kObsVH = "aV+aH";  // <a_V^dag a_H>

// {a_H^dag a_H, a_V^dag a_V, a_V^dag a_H} on the composite space.
std::vector<std::pair<std::string, ComplexMatrix>> cavity_observables(const CompositeSpace& space);

// Photon flux matrix F_ij(t) = 2 kappa <a_j^dag a_i>(t), i,j in {H, V}, before path losses.
struct CavityOutput {
  std::vector<double> times;
  std::vector<Eigen::Matrix2cd> flux;
};

// Reads the recorded cavity observables, or computes them from stored states.
CavityOutput cavity_output(const EvolutionResult& result, const SystemParams& params, const CompositeSpace& space);

struct PhotonShape {
  Basis basis = Basis::HV;
  std::vector<double> times;  // s
  std::vector<double> rate_det1;  // detected photons per second per attempt
  std::vector<double> rate_det2;
};

PhotonShape photon_shape(const CavityOutput& out, Basis basis, double path_efficiency);
PhotonShape photon_shape(const EvolutionResult& result, Basis basis, const SystemParams& params,
                         const CompositeSpace& space);
// Average rates over consecutive bins of the given width; times are bin centres.
PhotonShape bin_shape(const PhotonShape& shape, double bin_width);
// time_us,rate1,rate2,basis
std::string shape_to_csv(const PhotonShape& shape);

struct PolarizationMatrix {
  Eigen::Matrix2cd matrix = Eigen::Matrix2cd::Zero();  // rho_ij ~ <a_j^dag a_i>, H = 0, V = 1
  double weight = 0.0;     // trace of the unnormalized matrix
  double mean_time = 0.0;  // flux-weighted mean emission time in the window, s

  Eigen::Matrix2cd normalized() const;
};

// Trapezoid integral of the flux over the window, times path_efficiency; the window
// ends are linearly interpolated between grid points.
PolarizationMatrix emission_matrix(const CavityOutput& out, const DetectionWindow& window, double path_efficiency);
PolarizationMatrix emission_matrix(const EvolutionResult& result, const DetectionWindow& window,
                                   const SystemParams& params, const CompositeSpace& space);

struct NoiseToggles {
  bool dark_counts = true;
  bool init_error = true;
  bool dephasing = true;

  static NoiseToggles none() { return {false, false, false}; }
};

// Dark-count admixture, initialization error and dephasing of the photonic coherence.
// The result has a unit-trace matrix; weight and mean time are kept.
PolarizationMatrix apply_noise(const PolarizationMatrix& pol, const SystemParams& params, const DetectionWindow& window,
                               const NoiseToggles& toggles = {}, int n_detectors = 2);

struct Efficiency {
  double detected = 0.0;  // includes path_efficiency
  double internal = 0.0;  // emitted through the cavity output in the window
};

Efficiency process_efficiency(const CavityOutput& out, const DetectionWindow& window, const SystemParams& params);

nlohmann::json polarization_to_json(const PolarizationMatrix& pol);

}  // namespace ionphoton
