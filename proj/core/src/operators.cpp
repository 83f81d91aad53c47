#include "ionphoton/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "ionphoton/errors.hpp"

namespace ionphoton {

double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double hermiticity_error(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("hermiticity_error: matrix is not square");
  return max_abs(m - m.adjoint());
}

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

PhysicalityReport check_physical(const ComplexMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError("check_physical: state must be a non-empty square matrix");
  }
  PhysicalityReport r;
  r.hermiticity_error = hermiticity_error(m);
  r.trace_error = std::abs(m.trace() - Complex(1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  return r;
}

PureState::PureState(ComplexVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() == 0) throw DimensionError("PureState: empty amplitude vector");
  const double norm = amplitudes_.norm();
  if (std::abs(norm - 1.0) > kNormTol) {
    std::ostringstream os;
    os << "PureState: norm " << norm << " differs from 1";
    throw PhysicalityError(os.str());
  }
}

PureState PureState::qubit(double alpha, double phi) {
  ComplexVector v(2);
  v << std::cos(alpha), std::polar(std::sin(alpha), phi);
  return PureState(v);
}

PureState PureState::basis(std::size_t dim, std::size_t index) {
  if (index >= dim) throw DimensionError("PureState::basis: index out of range");
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return PureState(v);
}

DensityMatrix::DensityMatrix(ComplexMatrix m)
    : DensityMatrix(std::move(m), kHermiticityTol, kTraceTol, kEigenvalueFloor) {}

DensityMatrix::DensityMatrix(ComplexMatrix m, double herm_tol, double trace_tol, double eig_floor)
    : matrix_(std::move(m)) {
  const auto r = check_physical(matrix_);
  if (!r.ok(herm_tol, trace_tol, eig_floor)) {
    std::ostringstream os;
    os << "DensityMatrix: not physical (hermiticity " << r.hermiticity_error << ", trace error "
       << r.trace_error << ", min eigenvalue " << r.min_eigenvalue << ")";
    throw PhysicalityError(os.str());
  }
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) { return DensityMatrix(psi.projector()); }

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return DensityMatrix(ComplexMatrix::Identity(n, n) / static_cast<double>(dim));
}

double DensityMatrix::purity() const { return (matrix_ * matrix_).trace().real(); }

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ComplexMatrix tensor(std::span<const ComplexMatrix> factors) {
  if (factors.empty()) return ComplexMatrix::Identity(1, 1);
  ComplexMatrix out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = tensor(out, factors[k]);
  return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& op, std::span<const std::size_t> dims,
                            std::span<const std::size_t> keep) {
  if (op.rows() != op.cols()) throw DimensionError("partial_trace: operator is not square");
  if (dims.empty()) throw DimensionError("partial_trace: no subsystem dimensions given");
  const std::size_t total =
      std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  if (total != static_cast<std::size_t>(op.rows())) {
    std::ostringstream os;
    os << "partial_trace: subsystem dimensions multiply to " << total << " but operator has dimension "
       << op.rows();
    throw DimensionError(os.str());
  }
  if (keep.empty()) throw DimensionError("partial_trace: keep set is empty");

  const std::size_t n = dims.size();
  std::vector<bool> kept(n, false);
  for (auto k : keep) {
    if (k >= n) throw DimensionError("partial_trace: keep index out of range");
    if (kept[k]) throw DimensionError("partial_trace: duplicate keep index");
    kept[k] = true;
  }

  std::vector<std::size_t> kept_dims, traced_dims;
  for (std::size_t s = 0; s < n; ++s) (kept[s] ? kept_dims : traced_dims).push_back(dims[s]);
  const auto prod = [](const std::vector<std::size_t>& v) {
    return std::accumulate(v.begin(), v.end(), std::size_t{1}, std::multiplies<>());
  };
  const std::size_t dk = prod(kept_dims);
  const std::size_t dt = prod(traced_dims);

  // Compose a full index from (kept multi-index, traced multi-index).
  std::vector<std::size_t> strides(n, 1);
  for (std::size_t s = n - 1; s > 0; --s) strides[s - 1] = strides[s] * dims[s];
  auto full_index = [&](std::size_t ik, std::size_t it) {
    std::size_t idx = 0;
    for (std::size_t s = n; s-- > 0;) {
      if (kept[s]) {
        idx += (ik % dims[s]) * strides[s];
        ik /= dims[s];
      } else {
        idx += (it % dims[s]) * strides[s];
        it /= dims[s];
      }
    }
    return static_cast<Eigen::Index>(idx);
  };

  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::size_t r = 0; r < dk; ++r) {
    for (std::size_t c = 0; c < dk; ++c) {
      Complex acc{0.0, 0.0};
      for (std::size_t t = 0; t < dt; ++t) acc += op(full_index(r, t), full_index(c, t));
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = acc;
    }
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> dims,
                            std::span<const std::size_t> keep) {
  return DensityMatrix(partial_trace(rho.matrix(), dims, keep));
}

double state_fidelity(const PureState& psi, const DensityMatrix& rho) {
  if (psi.dim() != rho.dim()) throw DimensionError("state_fidelity: dimension mismatch");
  const Complex f = psi.amplitudes().dot(rho.matrix() * psi.amplitudes());
  return std::clamp(f.real(), 0.0, 1.0);
}

ComplexMatrix pauli(int i) {
  ComplexMatrix m(2, 2);
  switch (i) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -kI, kI, 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: throw std::out_of_range("pauli: index must be in 0..3");
  }
  return m;
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("trace_distance: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(a - b), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

nlohmann::json matrix_to_json(const ComplexMatrix& m) {
  std::vector<double> re, im;
  re.reserve(static_cast<std::size_t>(m.size()));
  im.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      re.push_back(m(i, j).real());
      im.push_back(m(i, j).imag());
    }
  }
  return {{"dim_rows", m.rows()}, {"dim_cols", m.cols()}, {"re", re}, {"im", im}};
}

ComplexMatrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("dim_rows").get<Eigen::Index>();
  const auto cols = j.at("dim_cols").get<Eigen::Index>();
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (rows <= 0 || cols <= 0 || re.size() != static_cast<std::size_t>(rows * cols) || im.size() != re.size()) {
    throw DimensionError("matrix_from_json: entry count does not match dimensions");
  }
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto idx = static_cast<std::size_t>(i * cols + k);
      m(i, k) = Complex(re[idx], im[idx]);
    }
  }
  return m;
}

}  // namespace ionphoton
