#include "ionphoton/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "ionphoton/errors.hpp"
#include "ionphoton/units.hpp"

namespace ionphoton {

ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const ComplexMatrix& h, std::span<const ComplexMatrix> collapse_ops) {
  if (rho.rows() != h.rows() || rho.cols() != h.cols()) throw DimensionError("lindblad_rhs: dimension mismatch");
  ComplexMatrix out = -kI * (h * rho - rho * h);
  for (const auto& l : collapse_ops) {
    if (l.rows() != rho.rows()) throw DimensionError("lindblad_rhs: collapse operator dimension mismatch");
    const ComplexMatrix ldl = l.adjoint() * l;
    out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

namespace {

using Triplet = Eigen::Triplet<Complex>;

// Triplets of scale * (A kron B) for square dense A, B, skipping exact zeros.
void kron_triplets(const ComplexMatrix& a, const ComplexMatrix& b, Complex scale, std::vector<Triplet>& out) {
  const Eigen::Index n = b.rows();
  std::vector<std::pair<std::pair<Eigen::Index, Eigen::Index>, Complex>> bnz;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      if (b(k, l) != Complex(0.0)) bnz.push_back({{k, l}, b(k, l)});
    }
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const Complex aij = a(i, j);
      if (aij == Complex(0.0)) continue;
      for (const auto& [kl, bkl] : bnz) out.emplace_back(i * n + kl.first, j * n + kl.second, scale * aij * bkl);
    }
  }
}

void commutator_triplets(const ComplexMatrix& h, std::vector<Triplet>& out) {
  const auto n = h.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  kron_triplets(h, id, -kI, out);
  kron_triplets(id, h.transpose(), kI, out);
}

Liouvillian::Sparse from_triplets(std::size_t d2, const std::vector<Triplet>& t) {
  Liouvillian::Sparse m(static_cast<Eigen::Index>(d2), static_cast<Eigen::Index>(d2));
  m.setFromTriplets(t.begin(), t.end());
  m.prune(Complex(0.0), 0.0);
  m.makeCompressed();
  return m;
}

}  // namespace

Liouvillian::Liouvillian(const TimeDependentHamiltonian& h, std::span<const ComplexMatrix> collapse_ops)
    : dim_(static_cast<std::size_t>(h.static_part.rows())) {
  if (h.static_part.rows() != h.static_part.cols()) throw DimensionError("Liouvillian: Hamiltonian is not square");
  const auto n = h.static_part.rows();
  const std::size_t d2 = dim_ * dim_;
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);

  std::vector<Triplet> t;
  commutator_triplets(h.static_part, t);
  for (const auto& l : collapse_ops) {
    if (l.rows() != n || l.cols() != n) throw DimensionError("Liouvillian: collapse operator dimension mismatch");
    const ComplexMatrix ldl = l.adjoint() * l;
    kron_triplets(l, l.conjugate(), 1.0, t);
    kron_triplets(ldl, id, -0.5, t);
    kron_triplets(id, ldl.transpose(), -0.5, t);
  }
  static_ = from_triplets(d2, t);

  for (const auto& term : h.oscillating_parts) {
    if (term.op.rows() != n) throw DimensionError("Liouvillian: oscillating term dimension mismatch");
    std::vector<Triplet> tk;
    commutator_triplets(term.op, tk);
    oscillating_.emplace_back(term.frequency, from_triplets(d2, tk));
  }
  scratch_.resize(static_cast<Eigen::Index>(d2));
}

void Liouvillian::apply(double t, const ComplexVector& y, ComplexVector& dy) const {
  dy.noalias() = static_ * y;
  for (const auto& [w, op] : oscillating_) {
    scratch_.noalias() = op * y;
    dy += std::polar(1.0, w * t) * scratch_;
  }
}

std::vector<Eigen::Index> Liouvillian::closure(const std::vector<Eigen::Index>& seed) const {
  const auto n = static_.rows();
  // Column adjacency: j -> rows i with L(i, j) != 0 in any part.
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(n));
  auto collect = [&](const Sparse& m) {
    for (Eigen::Index i = 0; i < m.outerSize(); ++i) {
      for (Sparse::InnerIterator it(m, i); it; ++it) out[static_cast<std::size_t>(it.col())].push_back(i);
    }
  };
  collect(static_);
  for (const auto& [w, op] : oscillating_) collect(op);

  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> stack;
  for (auto i : seed) {
    if (!seen[static_cast<std::size_t>(i)]) {
      seen[static_cast<std::size_t>(i)] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const auto j = stack.back();
    stack.pop_back();
    for (auto i : out[static_cast<std::size_t>(j)]) {
      if (!seen[static_cast<std::size_t>(i)]) {
        seen[static_cast<std::size_t>(i)] = 1;
        stack.push_back(i);
      }
    }
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (seen[static_cast<std::size_t>(i)]) keep.push_back(i);
  }
  return keep;
}

Liouvillian Liouvillian::restricted(const std::vector<Eigen::Index>& keep) const {
  std::vector<Eigen::Index> pos(static_cast<std::size_t>(static_.rows()), -1);
  for (std::size_t k = 0; k < keep.size(); ++k) pos[static_cast<std::size_t>(keep[k])] = static_cast<Eigen::Index>(k);
  auto cut = [&](const Sparse& m) {
    std::vector<Triplet> t;
    for (auto i : keep) {
      for (Sparse::InnerIterator it(m, i); it; ++it) {
        const auto c = pos[static_cast<std::size_t>(it.col())];
        if (c < 0) continue;  // multiplies an entry that stays zero
        t.emplace_back(pos[static_cast<std::size_t>(i)], c, it.value());
      }
    }
    return from_triplets(keep.size(), t);
  };
  Liouvillian r;
  r.dim_ = dim_;
  r.static_ = cut(static_);
  for (const auto& [w, op] : oscillating_) r.oscillating_.emplace_back(w, cut(op));
  r.scratch_.resize(static_cast<Eigen::Index>(keep.size()));
  return r;
}

std::size_t Liouvillian::nonzeros() const {
  std::size_t n = static_cast<std::size_t>(static_.nonZeros());
  for (const auto& [w, op] : oscillating_) n += static_cast<std::size_t>(op.nonZeros());
  return n;
}

namespace {

// Dormand-Prince 5(4) coefficients with Hairer's dense output.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// partner[k]: position of the transposed entry of support index k.
void symmetrize(ComplexVector& y, const std::vector<Eigen::Index>& partner) {
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const auto p = partner[static_cast<std::size_t>(k)];
    if (p == k) {
      y(k) = Complex(y(k).real(), 0.0);
    } else if (p > k) {
      const Complex avg = 0.5 * (y(k) + std::conj(y(p)));
      y(k) = avg;
      y(p) = std::conj(avg);
    }
  }
}

ComplexMatrix unvec(const ComplexVector& y, Eigen::Index d) {
  ComplexMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = y(i * d + j);
  }
  return m;
}

ComplexVector vec(const ComplexMatrix& m) {
  const auto d = m.rows();
  ComplexVector y(d * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) y(i * d + j) = m(i, j);
  }
  return y;
}

// RMS over the full vectorized state (entries outside the support contribute zero).
double error_norm(const ComplexVector& err, const ComplexVector& y0, const ComplexVector& y1, double rtol, double atol,
                  double full_size) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double r = std::abs(err(i)) / sc;
    acc += r * r;
  }
  return std::sqrt(acc / full_size);
}

struct Recorder {
  const MasterEquationProblem& problem;
  const IntegratorOptions& options;
  Eigen::Index d;
  const std::vector<Eigen::Index>& support;
  EvolutionResult& result;

  void record(double t, const ComplexVector& ys) {
    ComplexVector y = ComplexVector::Zero(d * d);
    for (std::size_t k = 0; k < support.size(); ++k) y(support[k]) = ys(static_cast<Eigen::Index>(k));
    const ComplexMatrix rho = hermitian_part(unvec(y, d));
    const double drift = std::abs(rho.trace() - Complex(1.0, 0.0));
    result.stats.max_trace_drift = std::max(result.stats.max_trace_drift, drift);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    result.stats.min_eigenvalue = std::min(result.stats.min_eigenvalue, min_eig);
    if (min_eig < options.eigenvalue_floor) {
      std::ostringstream os;
      os << std::setprecision(6) << "integrate: density matrix lost positivity at t = " << units::to_us(t)
         << " us (min eigenvalue " << min_eig << ", trace drift " << drift << ", accepted steps "
         << result.stats.accepted_steps << ")";
      throw PhysicalityError(os.str());
    }
    result.times.push_back(t);
    for (const auto& [name, op] : problem.observables) result.expectations[name].push_back((op * rho).trace());
    if (problem.store_states) result.states.push_back(rho);
  }
};

}  // namespace

EvolutionResult integrate(const MasterEquationProblem& problem, double rel_tol, double abs_tol) {
  IntegratorOptions o;
  o.rel_tol = rel_tol;
  o.abs_tol = abs_tol;
  return integrate(problem, o);
}

EvolutionResult integrate(const MasterEquationProblem& problem, const IntegratorOptions& options) {
  const auto& grid = problem.t_grid;
  if (grid.empty() || grid.front() != 0.0) throw std::invalid_argument("integrate: time grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("integrate: time grid must be strictly increasing");
  }
  if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0)) throw std::invalid_argument("integrate: tolerances must be positive");
  const auto d = problem.rho0.rows();
  if (problem.hamiltonian.static_part.rows() != d) throw DimensionError("integrate: Hamiltonian and rho0 dimensions differ");
  for (const auto& [name, op] : problem.observables) {
    if (op.rows() != d) throw DimensionError("integrate: observable '" + name + "' has the wrong dimension");
  }

  const Liouvillian full(problem.hamiltonian, problem.collapse_ops);
  const ComplexVector y_full = vec(problem.rho0);
  std::vector<Eigen::Index> seed;
  for (Eigen::Index i = 0; i < y_full.size(); ++i) {
    if (y_full(i) != Complex(0.0)) seed.push_back(i);
  }
  const auto support = full.closure(seed);
  const Liouvillian gen = full.restricted(support);
  std::vector<Eigen::Index> partner(support.size());
  {
    std::vector<Eigen::Index> pos(static_cast<std::size_t>(y_full.size()), -1);
    for (std::size_t k = 0; k < support.size(); ++k) pos[static_cast<std::size_t>(support[k])] = static_cast<Eigen::Index>(k);
    for (std::size_t k = 0; k < support.size(); ++k) {
      const auto i = support[k] / d, j = support[k] % d;
      partner[k] = pos[static_cast<std::size_t>(j * d + i)];
      if (partner[k] < 0) throw std::logic_error("integrate: support is not closed under transposition");
    }
  }
  const double full_size = static_cast<double>(y_full.size());

  EvolutionResult result;
  Recorder rec{problem, options, d, support, result};

  const Eigen::Index n = static_cast<Eigen::Index>(support.size());
  ComplexVector y(n);
  for (Eigen::Index k = 0; k < n; ++k) y(k) = y_full(support[static_cast<std::size_t>(k)]);
  ComplexVector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  ComplexVector rc1(n), rc2(n), rc3(n), rc4(n), rc5(n);

  double t = 0.0;
  const double t_end = grid.back();
  rec.record(t, y);
  if (grid.size() == 1) return result;

  gen.apply(t, y, k1);
  ++result.stats.rhs_evaluations;

  // Initial step from the generator scale (Hairer & Wanner's heuristic).
  double h;
  {
    const double d0 = error_norm(y, y, y, options.rel_tol, options.abs_tol, full_size);
    const double d1n = error_norm(k1, y, y, options.rel_tol, options.abs_tol, full_size);
    h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-12 : 0.01 * d0 / d1n;
    h = std::min(h, grid[1] - grid[0]);
  }
  if (options.max_step > 0.0) h = std::min(h, options.max_step);

  std::size_t next = 1;
  const double h_min = 1e-14 * std::max(1e-6, t_end);
  double err_prev = 1e-4;

  while (next < grid.size()) {
    if (t + h > t_end) h = t_end - t;
    if (h < h_min) throw StiffnessError("integrate: step size underflow", t);

    ytmp = y + h * (a21 * k1);
    gen.apply(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    gen.apply(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    gen.apply(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    gen.apply(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    gen.apply(t + h, ytmp, k6);
    ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    gen.apply(t + h, ynew, k7);
    result.stats.rhs_evaluations += 6;

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, ynew, options.rel_tol, options.abs_tol, full_size);

    if (!std::isfinite(en)) throw StiffnessError("integrate: non-finite error estimate", t);

    if (en <= 1.0) {
      // Dense output over [t, t + h].
      rc1 = y;
      rc2 = ynew - y;
      rc3 = h * k1 - rc2;
      rc4 = rc2 - h * k7 - rc3;
      rc5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      const double t_new = t + h;
      while (next < grid.size() && grid[next] <= t_new) {
        const double theta = (grid[next] - t) / h;
        const double theta1 = 1.0 - theta;
        ytmp = rc1 + theta * (rc2 + theta1 * (rc3 + theta * (rc4 + theta1 * rc5)));
        rec.record(grid[next], ytmp);
        ++next;
      }
      t = t_new;
      y = ynew;
      symmetrize(y, partner);
      k1 = k7;
      ++result.stats.accepted_steps;

      // PI step-size controller.
      const double e = std::max(en, 1e-10);
      double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 10.0);
      err_prev = std::max(en, 1e-4);
      h *= fac;
    } else {
      ++result.stats.rejected_steps;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
    }
    if (options.max_step > 0.0) h = std::min(h, options.max_step);
  }
  return result;
}

std::vector<Complex> expectation_series(const EvolutionResult& result, const ComplexMatrix& op) {
  std::vector<Complex> out;
  if (!result.states.empty()) {
    out.reserve(result.states.size());
    for (const auto& rho : result.states) {
      if (rho.rows() != op.rows()) throw DimensionError("expectation_series: dimension mismatch");
      out.push_back((op * rho).trace());
    }
    return out;
  }
  throw std::invalid_argument("expectation_series: result holds no states; record the operator as an observable");
}

std::vector<double> uniform_grid(double t_end, std::size_t points) {
  if (points < 2 || !(t_end > 0.0)) throw std::invalid_argument("uniform_grid: need at least two points and t_end > 0");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = t_end * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

nlohmann::json evolution_to_json(const EvolutionResult& result) {
  nlohmann::json j;
  j["times"] = result.times;
  j["states"] = nlohmann::json::array();
  for (const auto& s : result.states) j["states"].push_back(matrix_to_json(s));
  for (const auto& [name, series] : result.expectations) {
    std::vector<double> re, im;
    for (auto v : series) {
      re.push_back(v.real());
      im.push_back(v.imag());
    }
    j["observables"][name] = {{"re", re}, {"im", im}};
  }
  j["stats"] = {{"accepted_steps", result.stats.accepted_steps},
                {"rejected_steps", result.stats.rejected_steps},
                {"rhs_evaluations", result.stats.rhs_evaluations},
                {"max_trace_drift", result.stats.max_trace_drift},
                {"min_eigenvalue", result.stats.min_eigenvalue}};
  return j;
}

std::string observables_to_csv(const EvolutionResult& result) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "time_us";
  for (const auto& [name, series] : result.expectations) os << ',' << name << "_re," << name << "_im";
  os << '\n';
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    os << units::to_us(result.times[i]);
    for (const auto& [name, series] : result.expectations) os << ',' << series[i].real() << ',' << series[i].imag();
    os << '\n';
  }
  return os.str();
}

}  // namespace ionphoton
