#include <doctest.h>

#include <cmath>
#include <random>
#include <nlohmann/json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "ionphoton/errors.hpp"
#include "ionphoton/lindblad.hpp"
#include "ionphoton/units.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ionphoton;
using namespace testing_support;

namespace {

// Dense generator built directly from Kronecker products: vec_r(A X B) = (A kron B^T) vec_r(X).
ComplexMatrix dense_generator(const ComplexMatrix& h, const std::vector<ComplexMatrix>& ls) {
  const auto d = h.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  auto kron = [](const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
  };
  ComplexMatrix g = -kI * (kron(h, id) - kron(id, h.transpose()));
  for (const auto& l : ls) {
    const ComplexMatrix ldl = l.adjoint() * l;
    g += kron(l, l.conjugate()) - 0.5 * kron(ldl, id) - 0.5 * kron(id, ldl.transpose());
  }
  return g;
}

ComplexVector vec_r(const ComplexMatrix& m) {
  ComplexVector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

ComplexMatrix unvec_r(const ComplexVector& v, Eigen::Index d) {
  ComplexMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = v(i * d + j);
  return m;
}

}  // namespace

TEST_CASE("Lindblad generator examples") {
  const ComplexMatrix rho = ComplexMatrix::Identity(3, 3) / 3.0;
  CHECK(max_abs(lindblad_rhs(rho, ComplexMatrix::Zero(3, 3), {})) == 0.0);

  const double gamma = 2.0;
  ComplexMatrix l = ComplexMatrix::Zero(2, 2);
  l(0, 1) = std::sqrt(2.0 * gamma);
  ComplexMatrix r = ComplexMatrix::Zero(2, 2);
  r(1, 1) = 0.7;
  r(0, 0) = 0.3;
  const std::vector<ComplexMatrix> ls{l};
  const ComplexMatrix d = lindblad_rhs(r, ComplexMatrix::Zero(2, 2), ls);
  CHECK(d(1, 1).real() == doctest::Approx(-2.0 * gamma * 0.7));

  CHECK_THROWS_AS(lindblad_rhs(rho, ComplexMatrix::Zero(2, 2), {}), DimensionError);
}

TEST_CASE("the generator is trace preserving and matches the sparse Liouvillian") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = 2 + trial % 3;
    const ComplexMatrix rho = random_density(rng, d);
    const ComplexMatrix h = random_hermitian(rng, d);
    const std::vector<ComplexMatrix> ls{random_matrix(rng, d, d), random_matrix(rng, d, d)};
    const ComplexMatrix out = lindblad_rhs(rho, h, ls);
    CHECK(std::abs(out.trace()) < 1e-12);
    CHECK(hermiticity_error(out) < 1e-12);

    TimeDependentHamiltonian th{h, {}};
    const ComplexMatrix osc = random_matrix(rng, d, d);
    const double w = u(rng);
    th.oscillating_parts = {{osc, w}, {osc.adjoint(), -w}};
    const Liouvillian gen(th, ls);
    const double t = u(rng);
    ComplexVector dy(d * d);
    gen.apply(t, vec_r(rho), dy);
    const ComplexMatrix expect = lindblad_rhs(rho, th.at(t), ls);
    CHECK(max_abs(unvec_r(dy, d) - expect) < 1e-11);
  }
}

TEST_CASE("integration agrees with the exact propagator of a random generator") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 3;
    MasterEquationProblem p;
    p.hamiltonian.static_part = random_hermitian(rng, d);
    p.collapse_ops = {0.5 * random_matrix(rng, d, d), 0.3 * random_matrix(rng, d, d)};
    p.rho0 = random_density(rng, d);
    p.t_grid = uniform_grid(2.0, 21);
    p.store_states = true;
    const auto r = integrate(p);
    const ComplexMatrix g = dense_generator(p.hamiltonian.static_part, p.collapse_ops);
    for (std::size_t i = 0; i < r.times.size(); i += 5) {
      const ComplexVector exact = (g * r.times[i]).exp() * vec_r(p.rho0);
      CHECK(max_abs(r.states[i] - unvec_r(exact, d)) < 1e-7);
    }
  }
}

TEST_CASE("unitary evolution conserves purity over 50 us") {
  const auto s = LevelScheme::default_scheme();
  const auto p = tune_drives(SystemParams::defaults(), s);
  const CompositeSpace space(s.size(), p.n_max);
  MasterEquationProblem prob;
  prob.hamiltonian = build_full_hamiltonian(p, s, false);
  const auto n = static_cast<Eigen::Index>(space.dim());
  prob.rho0 = ComplexMatrix::Zero(n, n);
  const auto i = space.index(s.qubit_level(1), 0, 0);
  prob.rho0(i, i) = 1.0;
  prob.t_grid = uniform_grid(50e-6, 51);
  prob.store_states = true;
  // Drift grows linearly with rel_tol (about 3e-6 at the default 1e-8).
  const auto r = integrate(prob, 1e-11, 1e-13);
  for (const auto& rho : r.states) CHECK(std::abs((rho * rho).trace().real() - 1.0) < 1e-8);
  CHECK(r.stats.max_trace_drift < 1e-10);
  const auto coarse = integrate(prob);
  for (const auto& rho : coarse.states) CHECK(std::abs((rho * rho).trace().real() - 1.0) < 1e-5);
}

TEST_CASE("cavity decay follows exp(-2 kappa t)") {
  const double kappa = units::mhz(0.05);
  const auto c = oracles::cavity_decay(kappa, 5.0);
  CHECK(c.max_error < 1e-6);

  // <n> = 1/e at t = 1/(2 kappa) ~ 1.59 us.
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 1) = 1.0;
  MasterEquationProblem p;
  p.hamiltonian.static_part = ComplexMatrix::Zero(2, 2);
  p.collapse_ops = {std::sqrt(2.0 * kappa) * a};
  p.rho0 = ComplexMatrix::Zero(2, 2);
  p.rho0(1, 1) = 1.0;
  p.t_grid = {0.0, 1.0 / (2.0 * kappa)};
  p.store_states = true;
  const auto r = integrate(p);
  CHECK(units::to_us(r.times[1]) == doctest::Approx(1.59).epsilon(0.002));
  CHECK(std::abs(expectation_series(r, a.adjoint() * a)[1].real() - std::exp(-1.0)) < 1e-6);
}

TEST_CASE("two-level decay halves every ln2/(2 gamma)") {
  const double gamma = units::mhz(11.5);
  CHECK(std::log(2.0) / (2.0 * gamma) == doctest::Approx(4.8e-9).epsilon(0.01));
  const auto c = oracles::atomic_decay(gamma, 5.0);
  CHECK(c.max_error < 1e-6);
}

TEST_CASE("expectation series") {
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 1) = 1.0;
  const double kappa = 1.0;
  MasterEquationProblem p;
  p.hamiltonian.static_part = ComplexMatrix::Zero(2, 2);
  p.collapse_ops = {std::sqrt(2.0 * kappa) * a};
  p.rho0 = ComplexMatrix::Zero(2, 2);
  p.rho0(1, 1) = 1.0;
  p.t_grid = uniform_grid(3.0, 31);
  p.store_states = true;
  const auto r = integrate(p);
  for (auto v : expectation_series(r, ComplexMatrix::Identity(2, 2))) CHECK(std::abs(v - Complex(1.0)) < 1e-9);
  CHECK(expectation_series(r, p.rho0)[0].real() == 1.0);
  const auto n = expectation_series(r, a.adjoint() * a);
  for (std::size_t i = 0; i < n.size(); ++i) CHECK(std::abs(n[i].real() - std::exp(-2.0 * kappa * r.times[i])) < 1e-8);
  CHECK_THROWS_AS(expectation_series(r, ComplexMatrix::Identity(3, 3)), DimensionError);

  p.store_states = false;
  CHECK_THROWS(expectation_series(integrate(p), a));
}

TEST_CASE("integrate validates its inputs") {
  MasterEquationProblem p;
  p.hamiltonian.static_part = ComplexMatrix::Zero(2, 2);
  p.rho0 = ComplexMatrix::Identity(2, 2) / 2.0;
  p.t_grid = {0.1, 0.2};
  CHECK_THROWS_AS(integrate(p), std::invalid_argument);
  p.t_grid = {0.0, 0.2, 0.2};
  CHECK_THROWS_AS(integrate(p), std::invalid_argument);
  p.t_grid = {0.0, 1.0};
  CHECK_THROWS_AS(integrate(p, -1.0, 1e-10), std::invalid_argument);
  p.hamiltonian.static_part = ComplexMatrix::Zero(3, 3);
  CHECK_THROWS_AS(integrate(p), DimensionError);
}

TEST_CASE("step-size underflow raises a stiffness error with its time") {
  MasterEquationProblem p;
  p.hamiltonian.static_part = ComplexMatrix::Zero(2, 2);
  p.hamiltonian.static_part(0, 1) = p.hamiltonian.static_part(1, 0) = 1e40;
  p.rho0 = ComplexMatrix::Zero(2, 2);
  p.rho0(0, 0) = 1.0;
  p.t_grid = {0.0, 1e-6};
  try {
    integrate(p);
    FAIL("expected StiffnessError");
  } catch (const StiffnessError& e) {
    CHECK(e.time() >= 0.0);
    CHECK(e.time() < 1e-6);
  }
}

TEST_CASE("fast oscillating terms converge to the static result") {
  // Resonantly driven two-level system plus a perturbation of amplitude eps at frequency delta.
  const double omega = 1.0, eps = 0.5;
  ComplexMatrix sx = ComplexMatrix::Zero(2, 2);
  sx(0, 1) = sx(1, 0) = 0.5 * omega;
  ComplexMatrix up = ComplexMatrix::Zero(2, 2);
  up(1, 0) = eps;
  auto run = [&](std::optional<double> delta) {
    MasterEquationProblem p;
    p.hamiltonian.static_part = sx;
    if (delta) p.hamiltonian.oscillating_parts = {{up, *delta}, {up.adjoint(), -*delta}};
    p.rho0 = ComplexMatrix::Zero(2, 2);
    p.rho0(0, 0) = 1.0;
    p.t_grid = uniform_grid(10.0, 101);
    p.store_states = true;
    return integrate(p);
  };
  const auto ref = run(std::nullopt);
  double previous = 1e9;
  for (double k : {10.0, 100.0, 1000.0}) {
    const auto r = run(k * eps);
    double dev = 0.0;
    for (std::size_t i = 0; i < r.times.size(); ++i) dev = std::max(dev, max_abs(r.states[i] - ref.states[i]));
    CHECK(dev < previous);
    previous = dev;
  }
  CHECK(previous < 1e-2);
}

TEST_CASE("default experiment: trace drift and positivity over 55 us, tolerance convergence") {
  const auto s = LevelScheme::default_scheme();
  const auto p = tune_drives(SystemParams::defaults(), s, RamanTuning::LightShifted, true);
  const CompositeSpace space(s.size(), p.n_max);
  MasterEquationProblem prob;
  prob.hamiltonian = build_full_hamiltonian(p, s, true);
  prob.collapse_ops = build_collapse_operators(p, s);
  const auto n = static_cast<Eigen::Index>(space.dim());
  ComplexVector psi = ComplexVector::Zero(n);
  psi(space.index(0, 0, 0)) = 1.0 / std::sqrt(2.0);
  psi(space.index(1, 0, 0)) = -1.0 / std::sqrt(2.0);
  prob.rho0 = psi * psi.adjoint();
  const ComplexMatrix ah = space.annihilation(Polarization::H);
  const ComplexMatrix av = space.annihilation(Polarization::V);
  prob.observables = {{"nH", ah.adjoint() * ah}, {"nV", av.adjoint() * av}, {"HV", av.adjoint() * ah}};
  prob.store_states = false;
  prob.t_grid = uniform_grid(55e-6, 221);
  const auto r = integrate(prob);
  CHECK(r.stats.max_trace_drift <= 1e-7);
  CHECK(r.stats.min_eigenvalue >= -1e-7);

  prob.t_grid = uniform_grid(10e-6, 41);
  const auto a = integrate(prob, 1e-8, 1e-10);
  const auto b = integrate(prob, 5e-9, 5e-11);
  for (const auto& [name, series] : a.expectations) {
    for (std::size_t i = 0; i < series.size(); ++i) CHECK(std::abs(series[i] - b.expectations.at(name)[i]) < 1e-7);
  }
}

TEST_CASE("evolution export") {
  MasterEquationProblem p;
  p.hamiltonian.static_part = pauli(1);
  p.rho0 = ComplexMatrix::Zero(2, 2);
  p.rho0(0, 0) = 1.0;
  p.t_grid = uniform_grid(1e-6, 3);
  p.observables = {{"z", pauli(3)}};
  p.store_states = true;
  const auto r = integrate(p);
  const auto j = evolution_to_json(r);
  CHECK(j.at("times").size() == 3);
  CHECK(j.at("states").size() == 3);
  CHECK(j.at("states")[0].at("dim_rows") == 2);
  CHECK(j.at("observables").at("z").at("re").size() == 3);
  const auto csv = observables_to_csv(r);
  CHECK(csv.rfind("time_us,z_re,z_im\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
