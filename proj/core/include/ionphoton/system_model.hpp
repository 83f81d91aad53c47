#pragma once

// Atomic level scheme, experimental parameters and the rotating-frame model of
// the bichromatic Raman ion-cavity system (atom x H-mode x V-mode).

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ionphoton/operators.hpp"

namespace ionphoton {

enum class Polarization { H, V };

struct Level {
  std::string label;
  double omega = 0.0;               // field-free angular frequency, rad/s
  double zeeman_coefficient = 0.0;  // g_J * m_J; shift is coefficient * mu_B * B / hbar
};

struct CavityCoupling {
  std::string lower;
  std::string upper;
  Polarization mode = Polarization::H;
  double weight = 1.0;  // geometric factor G
};

// The listed drive is resonant with this transition; the other drive component
// couples it off-resonantly.
struct DriveCoupling {
  std::string lower;
  std::string upper;
  int drive = 1;  // 1 or 2
};

struct DecayChannel {
  std::string upper;
  std::string lower;
  double branching = 0.0;  // fraction of the 2*gamma population decay rate
};

class LevelScheme {
 public:
  LevelScheme(std::vector<Level> levels, std::vector<CavityCoupling> cavity,
              std::vector<DriveCoupling> drives, std::vector<DecayChannel> decays);

  // Five levels S, S', P, P', D of 40Ca+ with the reduced Raman couplings.
  static LevelScheme default_scheme();

  const std::vector<Level>& levels() const { return levels_; }
  const std::vector<CavityCoupling>& cavity_couplings() const { return cavity_; }
  const std::vector<DriveCoupling>& drive_couplings() const { return drives_; }
  const std::vector<DecayChannel>& decay_channels() const { return decays_; }

  std::size_t size() const { return levels_.size(); }
  std::size_t index(const std::string& label) const;
  bool contains(const std::string& label) const;

  // Level driven by drive 1 / drive 2 (the qubit states S, S').
  std::size_t qubit_level(int drive) const;
  // Upper level of the drive-1 transition; the energy reference.
  std::size_t reference_level() const;
  // Common lower level of the cavity couplings (the final state D).
  std::size_t target_level() const;
  // Geometric factor of the cavity coupling fed by the given qubit's upper level.
  double cavity_weight(int drive) const;

  // Level energy including the Zeeman shift, rad/s.
  double energy(std::size_t level, double b_gauss) const;

  // Total branching out of `upper`.
  double total_branching(const std::string& upper) const;

 private:
  std::vector<Level> levels_;
  std::vector<CavityCoupling> cavity_;
  std::vector<DriveCoupling> drives_;
  std::vector<DecayChannel> decays_;
};

struct SystemParams {
  double g = 0.0;          // vacuum Rabi coupling, rad/s
  double kappa = 0.0;      // cavity field decay, rad/s
  double gamma = 0.0;      // atomic polarization decay, rad/s
  double Omega1 = 0.0;     // drive Rabi frequencies, rad/s
  double Omega2 = 0.0;
  double Delta1 = 0.0;     // drive detunings from S->P and S'->P', rad/s
  double Delta2 = 0.0;
  double omega_l1 = 0.0;   // drive frequencies, rad/s
  double omega_l2 = 0.0;
  double omega_C = 0.0;    // cavity frequency, rad/s
  double B_gauss = 0.0;
  double zeeman_splitting = 0.0;  // Delta E_{S,S'} / hbar, rad/s
  double motion_factor = 1.0;
  int n_max = 1;           // photon truncation per mode
  double path_efficiency = 1.0;
  double dark_rate = 0.0;  // counts/s per detector
  double init_fidelity = 1.0;
  double coherence_time_tau = 0.0;  // s; <= 0 means no dephasing
  double laser_linewidth = 0.0;     // rad/s
  // Offset of the drive difference frequency omega_l1 - omega_l2 from the Raman-matched value, rad/s.
  double raman_mismatch = 0.0;

  // Experimental values of the ion-cavity system; drive frequencies are not yet resolved.
  static SystemParams defaults();
};

enum class RamanTuning {
  Bare,         // omega_S + omega_l1 = omega_D + omega_C = omega_S' + omega_l2
  LightShifted  // same condition on the AC-Stark-shifted energies
};

// Resolve omega_l1 from Delta1, then omega_l2 and omega_C from the Raman
// conditions; finally offset omega_l2 so that omega_l1 - omega_l2 grows by raman_mismatch.
// With include_off_resonant the light shifts also cover the cross-drive terms (Floquet picture).
SystemParams tune_drives(SystemParams params, const LevelScheme& scheme,
                         RamanTuning tuning = RamanTuning::LightShifted, bool include_off_resonant = false);

// Composite Hilbert space atom x H-mode x V-mode, each mode truncated at n_max photons.
class CompositeSpace {
 public:
  CompositeSpace(std::size_t atom_levels, int n_max);

  std::size_t atom_dim() const { return atom_dim_; }
  std::size_t mode_dim() const { return mode_dim_; }
  std::size_t dim() const { return atom_dim_ * mode_dim_ * mode_dim_; }
  std::vector<std::size_t> dims() const { return {atom_dim_, mode_dim_, mode_dim_}; }
  Eigen::Index index(std::size_t level, std::size_t n_h, std::size_t n_v) const;

  ComplexMatrix annihilation(Polarization mode) const;
  // |to><from| on the atom, identity on both modes.
  ComplexMatrix atomic(std::size_t to, std::size_t from) const;
  ComplexMatrix identity() const;

 private:
  std::size_t atom_dim_;
  std::size_t mode_dim_;
};

struct OscillatingTerm {
  ComplexMatrix op;
  double frequency = 0.0;  // coefficient e^{i * frequency * t}
};

struct TimeDependentHamiltonian {
  ComplexMatrix static_part;
  std::vector<OscillatingTerm> oscillating_parts;

  ComplexMatrix at(double t) const;
};

// g_eff = G * Omega * g / (2 Delta)
double effective_coupling(double Omega, double g, double Delta, double G);

// g_J mu_B B / hbar for the S1/2 ground state.
double zeeman_splitting_from_field(double b_gauss);

ComplexMatrix build_rotating_hamiltonian(const SystemParams& params, const LevelScheme& scheme);
TimeDependentHamiltonian build_full_hamiltonian(const SystemParams& params, const LevelScheme& scheme,
                                                bool include_off_resonant);
std::vector<ComplexMatrix> build_collapse_operators(const SystemParams& params, const LevelScheme& scheme);

// Rotating-frame diagonal energy of each atomic level, rad/s.
std::vector<double> frame_energies(const SystemParams& params, const LevelScheme& scheme);

// Adiabatically eliminated model on {|S,0>, |S',0>, |D,1>}, sharing one photon state.
ComplexMatrix build_effective_three_level(const SystemParams& params,
                                          const LevelScheme& scheme = LevelScheme::default_scheme());

nlohmann::json scheme_to_json(const LevelScheme& scheme);
LevelScheme scheme_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const SystemParams& params);
// Missing keys keep the values of `base`.
SystemParams params_from_json(const nlohmann::json& j, SystemParams base = SystemParams::defaults());

}  // namespace ionphoton
