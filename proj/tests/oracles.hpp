#pragma once

// Reference computations shared by the unit and acceptance suites.

#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "ionphoton/lindblad.hpp"
#include "ionphoton/system_model.hpp"
#include "ionphoton/units.hpp"

namespace oracles {

using namespace ionphoton;

// Largest |numeric - exp(-rate t)| over [0, decay_times / rate].
struct DecayCheck {
  double max_error = 0.0;
  double t_end = 0.0;
};

// Single cavity mode (n_max = 1), H = 0, L = sqrt(2 kappa) a, start in |1>.
inline DecayCheck cavity_decay(double kappa, double decay_times, std::size_t points = 501) {
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 1) = 1.0;
  MasterEquationProblem p;
  p.hamiltonian.static_part = ComplexMatrix::Zero(2, 2);
  p.collapse_ops = {std::sqrt(2.0 * kappa) * a};
  p.rho0 = ComplexMatrix::Zero(2, 2);
  p.rho0(1, 1) = 1.0;
  const double t_end = decay_times / (2.0 * kappa);
  p.t_grid = uniform_grid(t_end, points);
  p.observables = {{"n", a.adjoint() * a}};
  const auto r = integrate(p);
  DecayCheck c{0.0, t_end};
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    c.max_error = std::max(c.max_error, std::abs(r.expectations.at("n")[i].real() - std::exp(-2.0 * kappa * r.times[i])));
  }
  return c;
}

// Two-level atom, L = sqrt(2 gamma)|g><e|, start excited.
inline DecayCheck atomic_decay(double gamma, double decay_times, std::size_t points = 501) {
  ComplexMatrix lower = ComplexMatrix::Zero(2, 2);
  lower(0, 1) = 1.0;
  MasterEquationProblem p;
  p.hamiltonian.static_part = ComplexMatrix::Zero(2, 2);
  p.collapse_ops = {std::sqrt(2.0 * gamma) * lower};
  p.rho0 = ComplexMatrix::Zero(2, 2);
  p.rho0(1, 1) = 1.0;
  const double t_end = decay_times / (2.0 * gamma);
  p.t_grid = uniform_grid(t_end, points);
  p.store_states = true;
  const auto r = integrate(p);
  DecayCheck c{0.0, t_end};
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    c.max_error = std::max(c.max_error, std::abs(r.states[i](1, 1).real() - std::exp(-2.0 * gamma * r.times[i])));
  }
  return c;
}

// Both cavity couplings on mode H so that S and S' feed one shared |D,1>.
inline LevelScheme single_mode_scheme() {
  const auto d = LevelScheme::default_scheme();
  auto cavity = d.cavity_couplings();
  for (auto& c : cavity) c.mode = Polarization::H;
  return LevelScheme(d.levels(), cavity, d.drive_couplings(), {});
}

struct EliminationCheck {
  double max_deviation = 0.0;   // populations of S, S', D
  double max_target_population = 0.0;
  double t_end = 0.0;
};

// Unitary 5-level dynamics against the 3-level effective model from |S,0>,
// Delta1 = ratio * max(Omega, g), drives tuned to three-level resonance.
inline EliminationCheck adiabatic_elimination(double ratio, std::size_t points = 401) {
  const auto scheme = single_mode_scheme();
  SystemParams p = SystemParams::defaults();
  p.kappa = p.gamma = p.laser_linewidth = 0.0;
  p.Delta1 = ratio * std::max({p.Omega1, p.Omega2, p.g});
  p = tune_drives(p, scheme, RamanTuning::Bare);
  for (int it = 0; it < 3; ++it) {
    const ComplexMatrix h3 = build_effective_three_level(p, scheme);
    p.omega_l2 += (h3(0, 0) - h3(1, 1)).real();
    p.omega_C += (h3(0, 0) - h3(2, 2)).real();
  }
  const ComplexMatrix h3 = build_effective_three_level(p, scheme);
  const double g_eff = std::abs(h3(0, 2));

  const CompositeSpace space(scheme.size(), p.n_max);
  const auto is = space.index(scheme.qubit_level(1), 0, 0);
  const auto is2 = space.index(scheme.qubit_level(2), 0, 0);
  const auto id = space.index(scheme.target_level(), 1, 0);
  MasterEquationProblem prob;
  prob.hamiltonian.static_part = build_rotating_hamiltonian(p, scheme);
  prob.rho0 = ComplexMatrix::Zero(static_cast<Eigen::Index>(space.dim()), static_cast<Eigen::Index>(space.dim()));
  prob.rho0(is, is) = 1.0;
  const double t_end = 2.0 * 3.141592653589793 / g_eff;
  prob.t_grid = uniform_grid(t_end, points);
  prob.store_states = false;
  auto proj = [&](Eigen::Index i) {
    ComplexMatrix m = ComplexMatrix::Zero(prob.rho0.rows(), prob.rho0.cols());
    m(i, i) = 1.0;
    return m;
  };
  prob.observables = {{"S", proj(is)}, {"Sp", proj(is2)}, {"D", proj(id)}};
  const auto r = integrate(prob);

  EliminationCheck c;
  c.t_end = t_end;
  Eigen::Vector3cd psi0(1.0, 0.0, 0.0);
  const Eigen::Matrix3cd h = h3;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const Eigen::Matrix3cd u = (Eigen::Matrix3cd(-kI * r.times[i] * h)).exp();
    const Eigen::Vector3cd psi = u * psi0;
    const double ds = std::abs(std::norm(psi(0)) - r.expectations.at("S")[i].real());
    const double ds2 = std::abs(std::norm(psi(1)) - r.expectations.at("Sp")[i].real());
    const double dd = std::abs(std::norm(psi(2)) - r.expectations.at("D")[i].real());
    c.max_deviation = std::max({c.max_deviation, ds, ds2, dd});
    c.max_target_population = std::max(c.max_target_population, r.expectations.at("D")[i].real());
  }
  return c;
}

}  // namespace oracles
