#pragma once

// Lindblad master-equation integration with an embedded Runge-Kutta 4(5) pair.

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <nlohmann/json_fwd.hpp>

#include "ionphoton/operators.hpp"
#include "ionphoton/system_model.hpp"

namespace ionphoton {

struct MasterEquationProblem {
  TimeDependentHamiltonian hamiltonian;
  std::vector<ComplexMatrix> collapse_ops;
  ComplexMatrix rho0;
  std::vector<double> t_grid;  // seconds, strictly increasing, starting at 0
  // Expectation values Tr(op rho) recorded at every grid time.
  std::vector<std::pair<std::string, ComplexMatrix>> observables;
  bool store_states = true;
};

struct IntegratorOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 0.0;              // 0: unlimited
  double eigenvalue_floor = -1e-7;    // abort below this, checked on the output grid
};

struct IntegratorStats {
  long accepted_steps = 0;
  long rejected_steps = 0;
  long rhs_evaluations = 0;
  double max_trace_drift = 0.0;
  double min_eigenvalue = 1.0;
};

struct EvolutionResult {
  std::vector<double> times;
  std::vector<ComplexMatrix> states;  // empty when state storage is disabled
  std::map<std::string, std::vector<Complex>> expectations;
  IntegratorStats stats;
};

// -i[H, rho] + sum_k (L rho L^dag - 1/2 {L^dag L, rho})
ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const ComplexMatrix& h, std::span<const ComplexMatrix> collapse_ops);

// Row-major vectorized generator: d/dt vec(rho) = (L0 + sum_k e^{i w_k t} L_k) vec(rho).
class Liouvillian {
 public:
  using Sparse = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

  Liouvillian(const TimeDependentHamiltonian& h, std::span<const ComplexMatrix> collapse_ops);

  // Vectorized indices reachable from `seed` under the generator (including the seed).
  // The dynamics of a state supported there never leaves this set.
  std::vector<Eigen::Index> closure(const std::vector<Eigen::Index>& seed) const;
  // Generator restricted to `keep` (must be closed under the generator).
  Liouvillian restricted(const std::vector<Eigen::Index>& keep) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return static_cast<std::size_t>(static_.rows()); }
  void apply(double t, const ComplexVector& y, ComplexVector& dy) const;
  const Sparse& static_part() const { return static_; }
  std::size_t nonzeros() const;

 private:
  std::size_t dim_ = 0;
  Sparse static_;
  std::vector<std::pair<double, Sparse>> oscillating_;
  mutable ComplexVector scratch_;

  Liouvillian() = default;
};

EvolutionResult integrate(const MasterEquationProblem& problem, const IntegratorOptions& options = {});
EvolutionResult integrate(const MasterEquationProblem& problem, double rel_tol, double abs_tol);

// Tr(op rho(t)) on the result grid; uses stored states or a recorded observable of the same matrix.
std::vector<Complex> expectation_series(const EvolutionResult& result, const ComplexMatrix& op);

std::vector<double> uniform_grid(double t_end, std::size_t points);

nlohmann::json evolution_to_json(const EvolutionResult& result);
// time_us followed by re/im columns of every recorded observable.
std::string observables_to_csv(const EvolutionResult& result);

}  // namespace ionphoton
