#include "ionphoton/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ionphoton/errors.hpp"
#include "ionphoton/units.hpp"

namespace ionphoton {

namespace {

constexpr double kGroundStateGFactor = 2.002;

std::string to_string(Polarization p) { return p == Polarization::H ? "H" : "V"; }

Polarization polarization_from_string(const std::string& s) {
  if (s == "H") return Polarization::H;
  if (s == "V") return Polarization::V;
  throw ConfigError("unknown cavity polarization mode '" + s + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// LevelScheme

LevelScheme::LevelScheme(std::vector<Level> levels, std::vector<CavityCoupling> cavity,
                         std::vector<DriveCoupling> drives, std::vector<DecayChannel> decays)
    : levels_(std::move(levels)), cavity_(std::move(cavity)), drives_(std::move(drives)), decays_(std::move(decays)) {
  if (levels_.empty()) throw ConfigError("level scheme has no levels");
  std::set<std::string> labels;
  for (const auto& l : levels_) {
    if (!labels.insert(l.label).second) throw ConfigError("duplicate level label '" + l.label + "'");
  }
  auto require = [&](const std::string& label, const char* what) {
    if (!labels.count(label)) throw ConfigError(std::string(what) + " references unknown level '" + label + "'");
  };
  for (const auto& c : cavity_) {
    require(c.lower, "cavity coupling");
    require(c.upper, "cavity coupling");
    if (c.weight < 0.0) throw ConfigError("cavity coupling weight must be non-negative");
  }
  for (const auto& d : drives_) {
    require(d.lower, "drive coupling");
    require(d.upper, "drive coupling");
    if (d.drive != 1 && d.drive != 2) throw ConfigError("drive index must be 1 or 2");
  }
  for (const auto& d : decays_) {
    require(d.upper, "decay channel");
    require(d.lower, "decay channel");
    if (d.branching < 0.0) throw ConfigError("decay branching must be non-negative");
  }
  for (int k : {1, 2}) {
    const auto n = std::count_if(drives_.begin(), drives_.end(), [k](const DriveCoupling& d) { return d.drive == k; });
    if (n != 1) throw ConfigError("each drive must be resonant with exactly one transition");
  }
  if (cavity_.empty()) throw ConfigError("level scheme has no cavity coupling");
  for (const auto& c : cavity_) {
    if (c.lower != cavity_.front().lower) throw ConfigError("all cavity couplings must share one lower level");
    const bool driven_upper = std::any_of(drives_.begin(), drives_.end(),
                                          [&](const DriveCoupling& d) { return d.upper == c.upper; });
    if (!driven_upper) throw ConfigError("cavity coupling upper level '" + c.upper + "' is not driven");
  }
  for (const auto& d : drives_) {
    if (d.lower == cavity_.front().lower) throw ConfigError("a driven level cannot be the cavity target level");
  }
}

LevelScheme LevelScheme::default_scheme() {
  // Field-free frequencies relative to P3/2; Zeeman coefficients g_J m_J.
  std::vector<Level> levels = {
      {"S", units::mhz(-761905000.0), -0.5 * kGroundStateGFactor},
      {"S'", units::mhz(-761905000.0), 0.5 * kGroundStateGFactor},
      {"P", 0.0, -2.0 / 3.0},
      {"P'", 0.0, 2.0 / 3.0},
      {"D", units::mhz(-350862000.0), 0.6},
  };
  // Only G2/G1 = 2 is known; G1 reproduces the measured 2-4 us detection probability.
  std::vector<CavityCoupling> cavity = {
      {"D", "P", Polarization::H, 0.32},
      {"D", "P'", Polarization::V, 0.64},
  };
  std::vector<DriveCoupling> drives = {{"S", "P", 1}, {"S'", "P'", 2}};
  std::vector<DecayChannel> decays = {
      {"P", "S", 0.4}, {"P", "S'", 0.1}, {"P", "D", 0.5},
      {"P'", "S'", 0.4}, {"P'", "S", 0.1}, {"P'", "D", 0.5},
  };
  return LevelScheme(std::move(levels), std::move(cavity), std::move(drives), std::move(decays));
}

std::size_t LevelScheme::index(const std::string& label) const {
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i].label == label) return i;
  }
  throw ConfigError("unknown level '" + label + "'");
}

bool LevelScheme::contains(const std::string& label) const {
  return std::any_of(levels_.begin(), levels_.end(), [&](const Level& l) { return l.label == label; });
}

std::size_t LevelScheme::qubit_level(int drive) const {
  for (const auto& d : drives_) {
    if (d.drive == drive) return index(d.lower);
  }
  throw ConfigError("no transition for drive");
}

std::size_t LevelScheme::reference_level() const {
  for (const auto& d : drives_) {
    if (d.drive == 1) return index(d.upper);
  }
  throw ConfigError("no transition for drive 1");
}

std::size_t LevelScheme::target_level() const { return index(cavity_.front().lower); }

double LevelScheme::cavity_weight(int drive) const {
  for (const auto& d : drives_) {
    if (d.drive != drive) continue;
    for (const auto& c : cavity_) {
      if (c.upper == d.upper) return c.weight;
    }
  }
  return 0.0;
}

double LevelScheme::energy(std::size_t level, double b_gauss) const {
  const auto& l = levels_.at(level);
  return l.omega + l.zeeman_coefficient * units::kTwoPi * units::kBohrMagnetonHzPerGauss * b_gauss;
}

double LevelScheme::total_branching(const std::string& upper) const {
  double total = 0.0;
  for (const auto& d : decays_) {
    if (d.upper == upper) total += d.branching;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Parameters

SystemParams SystemParams::defaults() {
  SystemParams p;
  p.g = units::mhz(1.4);
  p.kappa = units::mhz(0.05);
  p.gamma = units::mhz(11.5);
  p.Omega1 = units::mhz(17.5);
  p.Omega2 = units::mhz(8.75);
  p.Delta1 = units::mhz(400.0);
  p.Delta2 = units::mhz(400.0);
  p.B_gauss = 4.5;
  p.zeeman_splitting = zeeman_splitting_from_field(p.B_gauss);
  p.motion_factor = 0.63;
  p.n_max = 1;
  p.path_efficiency = 0.068;
  p.dark_rate = 5.6;
  p.init_fidelity = 0.99;
  p.coherence_time_tau = 110e-6;
  p.laser_linewidth = units::mhz(0.001);
  return p;
}

double zeeman_splitting_from_field(double b_gauss) {
  if (b_gauss < 0.0) throw std::invalid_argument("zeeman_splitting_from_field: B must be non-negative");
  return kGroundStateGFactor * units::kTwoPi * units::kBohrMagnetonHzPerGauss * b_gauss;
}

double effective_coupling(double Omega, double g, double Delta, double G) {
  if (Delta == 0.0) throw ResonanceError("effective_coupling: zero detuning, adiabatic elimination is invalid");
  return G * Omega * g / (2.0 * Delta);
}

// ---------------------------------------------------------------------------
// Composite space

CompositeSpace::CompositeSpace(std::size_t atom_levels, int n_max)
    : atom_dim_(atom_levels), mode_dim_(static_cast<std::size_t>(n_max) + 1) {
  if (n_max < 1) throw std::invalid_argument("photon truncation n_max must be at least 1");
  if (atom_levels == 0) throw DimensionError("composite space needs at least one atomic level");
}

Eigen::Index CompositeSpace::index(std::size_t level, std::size_t n_h, std::size_t n_v) const {
  return static_cast<Eigen::Index>((level * mode_dim_ + n_h) * mode_dim_ + n_v);
}

ComplexMatrix CompositeSpace::annihilation(Polarization mode) const {
  const auto n = static_cast<Eigen::Index>(dim());
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (std::size_t l = 0; l < atom_dim_; ++l) {
    for (std::size_t h = 0; h < mode_dim_; ++h) {
      for (std::size_t v = 0; v < mode_dim_; ++v) {
        if (mode == Polarization::H && h > 0) a(index(l, h - 1, v), index(l, h, v)) = std::sqrt(double(h));
        if (mode == Polarization::V && v > 0) a(index(l, h, v - 1), index(l, h, v)) = std::sqrt(double(v));
      }
    }
  }
  return a;
}

ComplexMatrix CompositeSpace::atomic(std::size_t to, std::size_t from) const {
  const auto n = static_cast<Eigen::Index>(dim());
  ComplexMatrix op = ComplexMatrix::Zero(n, n);
  for (std::size_t h = 0; h < mode_dim_; ++h) {
    for (std::size_t v = 0; v < mode_dim_; ++v) op(index(to, h, v), index(from, h, v)) = 1.0;
  }
  return op;
}

ComplexMatrix CompositeSpace::identity() const {
  const auto n = static_cast<Eigen::Index>(dim());
  return ComplexMatrix::Identity(n, n);
}

ComplexMatrix TimeDependentHamiltonian::at(double t) const {
  ComplexMatrix h = static_part;
  for (const auto& term : oscillating_parts) h += std::polar(1.0, term.frequency * t) * term.op;
  return h;
}

// ---------------------------------------------------------------------------
// Builders

namespace {

double drive_frequency(const SystemParams& p, int drive) { return drive == 1 ? p.omega_l1 : p.omega_l2; }
double drive_rabi(const SystemParams& p, int drive) { return drive == 1 ? p.Omega1 : p.Omega2; }

// Frame energy theta_l of each level: the frame removes the drive and cavity
// frequencies so that all resonant couplings are static.
std::vector<double> frame_offsets(const SystemParams& p, const LevelScheme& s) {
  const std::size_t ref = s.reference_level();
  const double omega_ref = s.energy(ref, p.B_gauss);
  std::vector<double> theta(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) theta[i] = s.energy(i, p.B_gauss);
  for (const auto& d : s.drive_couplings()) theta[s.index(d.upper)] = omega_ref;
  for (const auto& d : s.drive_couplings()) theta[s.index(d.lower)] = omega_ref - drive_frequency(p, d.drive);
  theta[s.target_level()] = omega_ref - p.omega_C;
  return theta;
}

}  // namespace

std::vector<double> frame_energies(const SystemParams& params, const LevelScheme& scheme) {
  const auto theta = frame_offsets(params, scheme);
  std::vector<double> e(scheme.size());
  for (std::size_t i = 0; i < scheme.size(); ++i) e[i] = scheme.energy(i, params.B_gauss) - theta[i];
  return e;
}

ComplexMatrix build_rotating_hamiltonian(const SystemParams& params, const LevelScheme& scheme) {
  const CompositeSpace space(scheme.size(), params.n_max);
  const auto energies = frame_energies(params, scheme);

  ComplexMatrix h = ComplexMatrix::Zero(static_cast<Eigen::Index>(space.dim()), static_cast<Eigen::Index>(space.dim()));
  for (std::size_t i = 0; i < scheme.size(); ++i) h += energies[i] * space.atomic(i, i);

  for (const auto& d : scheme.drive_couplings()) {
    const ComplexMatrix raise = space.atomic(scheme.index(d.upper), scheme.index(d.lower));
    h += 0.5 * drive_rabi(params, d.drive) * (raise + raise.adjoint());
  }

  const double g = params.g * params.motion_factor;
  for (const auto& c : scheme.cavity_couplings()) {
    const ComplexMatrix a = space.annihilation(c.mode);
    const ComplexMatrix emit = a.adjoint() * space.atomic(scheme.index(c.lower), scheme.index(c.upper));
    h += g * c.weight * (emit + emit.adjoint());
  }
  return h;
}

TimeDependentHamiltonian build_full_hamiltonian(const SystemParams& params, const LevelScheme& scheme,
                                                bool include_off_resonant) {
  TimeDependentHamiltonian h{build_rotating_hamiltonian(params, scheme), {}};
  if (!include_off_resonant) return h;

  const CompositeSpace space(scheme.size(), params.n_max);
  const double delta = params.omega_l1 - params.omega_l2;
  const auto n = static_cast<Eigen::Index>(space.dim());
  ComplexMatrix plus = ComplexMatrix::Zero(n, n);  // coefficient e^{+i delta t}
  for (const auto& d : scheme.drive_couplings()) {
    const int other = d.drive == 1 ? 2 : 1;
    const ComplexMatrix raise = space.atomic(scheme.index(d.upper), scheme.index(d.lower));
    // Frame factor of the cross drive on this transition: e^{i(omega_ld - omega_lother) t}.
    const double half_rabi = 0.5 * drive_rabi(params, other);
    if (d.drive == 1) {
      plus += half_rabi * raise;
    } else {
      plus += half_rabi * raise.adjoint();
    }
  }
  h.oscillating_parts.push_back({plus, delta});
  h.oscillating_parts.push_back({plus.adjoint(), -delta});
  return h;
}

std::vector<ComplexMatrix> build_collapse_operators(const SystemParams& params, const LevelScheme& scheme) {
  const CompositeSpace space(scheme.size(), params.n_max);
  std::vector<ComplexMatrix> ops;
  for (const auto& d : scheme.decay_channels()) {
    const double rate = 2.0 * params.gamma * d.branching;
    if (rate <= 0.0) continue;
    ops.push_back(std::sqrt(rate) * space.atomic(scheme.index(d.lower), scheme.index(d.upper)));
  }
  if (params.kappa > 0.0) {
    for (auto mode : {Polarization::H, Polarization::V}) {
      ops.push_back(std::sqrt(2.0 * params.kappa) * space.annihilation(mode));
    }
  }
  if (params.laser_linewidth > 0.0) {
    // Dephases the driven ground levels against everything else; S/S' coherence is common-mode.
    ComplexMatrix ground = ComplexMatrix::Zero(static_cast<Eigen::Index>(space.dim()), static_cast<Eigen::Index>(space.dim()));
    for (const auto& d : scheme.drive_couplings()) {
      const auto l = scheme.index(d.lower);
      ground += space.atomic(l, l);
    }
    ops.push_back(std::sqrt(params.laser_linewidth) * ground);
  }
  return ops;
}

ComplexMatrix build_effective_three_level(const SystemParams& params, const LevelScheme& scheme) {
  const auto e = frame_energies(params, scheme);
  const std::size_t s1 = scheme.qubit_level(1);
  const std::size_t s2 = scheme.qubit_level(2);
  const std::size_t dl = scheme.target_level();
  const double g = params.g * params.motion_factor;

  std::size_t p1 = 0, p2 = 0;
  for (const auto& d : scheme.drive_couplings()) (d.drive == 1 ? p1 : p2) = scheme.index(d.upper);
  const double delta1 = e[p1] - e[s1];
  const double delta2 = e[p2] - e[s2];

  const double g1 = effective_coupling(params.Omega1, g, delta1, scheme.cavity_weight(1));
  const double g2 = effective_coupling(params.Omega2, g, delta2, scheme.cavity_weight(2));

  double shift_d = 0.0;
  for (const auto& c : scheme.cavity_couplings()) {
    const double detuning = e[scheme.index(c.upper)] - e[dl];
    if (detuning == 0.0) throw ResonanceError("build_effective_three_level: cavity resonant with upper level");
    shift_d -= (c.weight * g) * (c.weight * g) / detuning;
  }

  ComplexMatrix h = ComplexMatrix::Zero(3, 3);
  h(0, 0) = e[s1] - params.Omega1 * params.Omega1 / (4.0 * delta1);
  h(1, 1) = e[s2] - params.Omega2 * params.Omega2 / (4.0 * delta2);
  h(2, 2) = e[dl] + shift_d;
  h(2, 0) = h(0, 2) = g1;
  h(2, 1) = h(1, 2) = g2;
  return h;
}

// ---------------------------------------------------------------------------
// Raman tuning

namespace {

// Dressed energy of basis state k: Schur complement onto k of the block of states
// connected to k without passing through `excluded`, solved self-consistently in E.
double dressed_energy(const ComplexMatrix& h, Eigen::Index k, const std::set<Eigen::Index>& excluded) {
  std::vector<Eigen::Index> block;
  std::vector<char> seen(static_cast<std::size_t>(h.rows()), 0);
  std::deque<Eigen::Index> queue{k};
  seen[static_cast<std::size_t>(k)] = 1;
  while (!queue.empty()) {
    const auto i = queue.front();
    queue.pop_front();
    for (Eigen::Index j = 0; j < h.rows(); ++j) {
      if (seen[static_cast<std::size_t>(j)] || excluded.count(j) || std::abs(h(i, j)) == 0.0) continue;
      seen[static_cast<std::size_t>(j)] = 1;
      block.push_back(j);
      queue.push_back(j);
    }
  }
  const double e0 = h(k, k).real();
  if (block.empty()) return e0;
  const auto m = static_cast<Eigen::Index>(block.size());
  ComplexMatrix hbb(m, m);
  Eigen::RowVectorXcd v(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    v(a) = h(k, block[a]);
    for (Eigen::Index b = 0; b < m; ++b) hbb(a, b) = h(block[a], block[b]);
  }
  double e = e0;
  for (int it = 0; it < 100; ++it) {
    const ComplexMatrix shifted = e * ComplexMatrix::Identity(m, m) - hbb;
    const double next = e0 + (v * shifted.partialPivLu().solve(v.adjoint()))(0, 0).real();
    if (std::abs(next - e) < 1e-9) return next;
    e = next;
  }
  return e;
}

// Floquet matrix of H(t) = H0 + sum_k H_k e^{i w_k t} with all w_k = +-delta, harmonics -n..n.
ComplexMatrix floquet_matrix(const TimeDependentHamiltonian& h, double delta, int n) {
  const auto d = h.static_part.rows();
  const auto blocks = 2 * n + 1;
  ComplexMatrix f = ComplexMatrix::Zero(d * blocks, d * blocks);
  for (int m = -n; m <= n; ++m) {
    const auto r = (m + n) * d;
    f.block(r, r, d, d) = h.static_part + m * delta * ComplexMatrix::Identity(d, d);
    for (const auto& term : h.oscillating_parts) {
      const int shift = term.frequency > 0 ? 1 : -1;
      const int col = m - shift;
      if (col < -n || col > n) continue;
      f.block(r, (col + n) * d, d, d) += term.op;
    }
  }
  return f;
}

constexpr int kFloquetHarmonics = 3;

}  // namespace

SystemParams tune_drives(SystemParams p, const LevelScheme& s, RamanTuning tuning, bool include_off_resonant) {
  const std::size_t s1 = s.qubit_level(1);
  const std::size_t s2 = s.qubit_level(2);
  const std::size_t ref = s.reference_level();
  const std::size_t dl = s.target_level();
  const double b = p.B_gauss;

  p.zeeman_splitting = zeeman_splitting_from_field(b);
  p.omega_l1 = s.energy(ref, b) - s.energy(s1, b) - p.Delta1;
  // Differences first: the absolute optical frequencies are ~1e15 rad/s.
  const double raman = s.energy(s1, b) - s.energy(ref, b) + p.omega_l1;  // frame energy of |S,0>
  p.omega_l2 = (s.energy(ref, b) - s.energy(s2, b)) + raman;
  p.omega_C = (s.energy(ref, b) - s.energy(dl, b)) + raman;

  if (tuning == RamanTuning::LightShifted) {
    const CompositeSpace space(s.size(), p.n_max);
    // With the cross-drive terms the harmonic-0 block of the Floquet matrix sits at this offset.
    const Eigen::Index offset =
        include_off_resonant ? kFloquetHarmonics * static_cast<Eigen::Index>(space.dim()) : 0;
    const Eigen::Index i1 = offset + space.index(s1, 0, 0);
    const Eigen::Index i2 = offset + space.index(s2, 0, 0);
    std::set<Eigen::Index> targets;
    for (const auto& c : s.cavity_couplings()) {
      targets.insert(offset + (c.mode == Polarization::H ? space.index(dl, 1, 0) : space.index(dl, 0, 1)));
    }
    std::set<Eigen::Index> protected_states = targets;
    protected_states.insert(i1);
    protected_states.insert(i2);

    for (int it = 0; it < 50; ++it) {
      const ComplexMatrix h =
          include_off_resonant
              ? floquet_matrix(build_full_hamiltonian(p, s, true), p.omega_l1 - p.omega_l2, kFloquetHarmonics)
              : build_rotating_hamiltonian(p, s);
      const double e1 = dressed_energy(h, i1, protected_states);
      const double e2 = dressed_energy(h, i2, protected_states);
      double ed = 0.0;
      for (auto t : targets) ed += dressed_energy(h, t, protected_states);
      ed /= static_cast<double>(targets.size());
      const double shift2 = e1 - e2;
      const double shift_c = e1 - ed;
      p.omega_l2 += shift2;
      p.omega_C += shift_c;
      if (std::abs(shift2) < 1e-6 && std::abs(shift_c) < 1e-6) break;
    }
  }

  p.omega_l2 -= p.raman_mismatch;
  std::size_t p2 = ref;
  for (const auto& d : s.drive_couplings()) {
    if (d.drive == 2) p2 = s.index(d.upper);
  }
  p.Delta2 = s.energy(p2, b) - s.energy(s2, b) - p.omega_l2;
  return p;
}

// ---------------------------------------------------------------------------
// JSON (frequencies in MHz, non-angular)

nlohmann::json scheme_to_json(const LevelScheme& scheme) {
  nlohmann::json j;
  for (const auto& l : scheme.levels()) {
    j["levels"].push_back({{"label", l.label}, {"frequency_MHz", units::to_mhz(l.omega)},
                           {"zeeman_coefficient", l.zeeman_coefficient}});
  }
  for (const auto& c : scheme.cavity_couplings()) {
    j["cavity_couplings"].push_back(
        {{"lower", c.lower}, {"upper", c.upper}, {"mode", to_string(c.mode)}, {"weight", c.weight}});
  }
  for (const auto& d : scheme.drive_couplings()) {
    j["drive_couplings"].push_back({{"lower", d.lower}, {"upper", d.upper}, {"drive", d.drive}});
  }
  j["decay_channels"] = nlohmann::json::array();
  for (const auto& d : scheme.decay_channels()) {
    j["decay_channels"].push_back({{"upper", d.upper}, {"lower", d.lower}, {"branching", d.branching}});
  }
  return j;
}

LevelScheme scheme_from_json(const nlohmann::json& j) {
  try {
    std::vector<Level> levels;
    for (const auto& l : j.at("levels")) {
      levels.push_back({l.at("label").get<std::string>(), units::mhz(l.at("frequency_MHz").get<double>()),
                        l.value("zeeman_coefficient", 0.0)});
    }
    std::vector<CavityCoupling> cavity;
    for (const auto& c : j.at("cavity_couplings")) {
      cavity.push_back({c.at("lower").get<std::string>(), c.at("upper").get<std::string>(),
                        polarization_from_string(c.at("mode").get<std::string>()), c.value("weight", 1.0)});
    }
    std::vector<DriveCoupling> drives;
    for (const auto& d : j.at("drive_couplings")) {
      drives.push_back({d.at("lower").get<std::string>(), d.at("upper").get<std::string>(), d.at("drive").get<int>()});
    }
    std::vector<DecayChannel> decays;
    if (j.contains("decay_channels")) {
      for (const auto& d : j.at("decay_channels")) {
        decays.push_back({d.at("upper").get<std::string>(), d.at("lower").get<std::string>(), d.at("branching").get<double>()});
      }
    }
    return LevelScheme(std::move(levels), std::move(cavity), std::move(drives), std::move(decays));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("level scheme: ") + e.what());
  }
}

nlohmann::json params_to_json(const SystemParams& p) {
  return {
      {"g", units::to_mhz(p.g)},
      {"kappa", units::to_mhz(p.kappa)},
      {"gamma", units::to_mhz(p.gamma)},
      {"Omega1", units::to_mhz(p.Omega1)},
      {"Omega2", units::to_mhz(p.Omega2)},
      {"Delta1", units::to_mhz(p.Delta1)},
      {"Delta2", units::to_mhz(p.Delta2)},
      {"omega_l1", units::to_mhz(p.omega_l1)},
      {"omega_l2", units::to_mhz(p.omega_l2)},
      {"omega_C", units::to_mhz(p.omega_C)},
      {"B_gauss", p.B_gauss},
      {"zeeman_splitting", units::to_mhz(p.zeeman_splitting)},
      {"motion_factor", p.motion_factor},
      {"n_max", p.n_max},
      {"path_efficiency", p.path_efficiency},
      {"dark_rate", p.dark_rate},
      {"init_fidelity", p.init_fidelity},
      {"coherence_time_us", units::to_us(p.coherence_time_tau)},
      {"laser_linewidth", units::to_mhz(p.laser_linewidth)},
      {"raman_mismatch", units::to_mhz(p.raman_mismatch)},
  };
}

SystemParams params_from_json(const nlohmann::json& j, SystemParams p) {
  try {
    auto freq = [&](const char* key, double& field) {
      if (j.contains(key)) field = units::mhz(j.at(key).get<double>());
    };
    freq("g", p.g);
    freq("kappa", p.kappa);
    freq("gamma", p.gamma);
    freq("Omega1", p.Omega1);
    freq("Omega2", p.Omega2);
    freq("Delta1", p.Delta1);
    freq("Delta2", p.Delta2);
    freq("omega_l1", p.omega_l1);
    freq("omega_l2", p.omega_l2);
    freq("omega_C", p.omega_C);
    freq("laser_linewidth", p.laser_linewidth);
    freq("raman_mismatch", p.raman_mismatch);
    if (j.contains("B_gauss")) p.B_gauss = j.at("B_gauss").get<double>();
    p.zeeman_splitting = zeeman_splitting_from_field(p.B_gauss);
    p.motion_factor = j.value("motion_factor", p.motion_factor);
    p.n_max = j.value("n_max", p.n_max);
    p.path_efficiency = j.value("path_efficiency", p.path_efficiency);
    p.dark_rate = j.value("dark_rate", p.dark_rate);
    p.init_fidelity = j.value("init_fidelity", p.init_fidelity);
    if (j.contains("coherence_time_us")) p.coherence_time_tau = units::us(j.at("coherence_time_us").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("system parameters: ") + e.what());
  }
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (p.g < 0 || p.kappa < 0 || p.gamma < 0 || p.laser_linewidth < 0 || p.dark_rate < 0) {
    throw ConfigError("system parameters: rates must be non-negative");
  }
  if (!(p.motion_factor > 0.0 && p.motion_factor <= 1.0)) throw ConfigError("motion_factor must lie in (0, 1]");
  if (!in_unit(p.path_efficiency)) throw ConfigError("path_efficiency must lie in [0, 1]");
  if (!in_unit(p.init_fidelity)) throw ConfigError("init_fidelity must lie in [0, 1]");
  if (p.n_max < 1) throw ConfigError("n_max must be at least 1");
  return p;
}

}  // namespace ionphoton
