#pragma once

// Dense complex linear algebra for small composite quantum systems.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace ionphoton {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

// Tolerances that every physical state produced by the library must satisfy.
inline constexpr double kHermiticityTol = 1e-10;
inline constexpr double kTraceTol = 1e-9;
inline constexpr double kEigenvalueFloor = -1e-9;
inline constexpr double kNormTol = 1e-12;

struct PhysicalityReport {
  double hermiticity_error = 0.0;  // max |M - M^dagger|
  double trace_error = 0.0;        // |Tr M - 1|
  double min_eigenvalue = 0.0;     // of (M + M^dagger)/2

  bool ok(double herm_tol = kHermiticityTol, double trace_tol = kTraceTol,
          double eig_floor = kEigenvalueFloor) const {
    return hermiticity_error <= herm_tol && trace_error <= trace_tol && min_eigenvalue >= eig_floor;
  }
};

PhysicalityReport check_physical(const ComplexMatrix& m);

double max_abs(const ComplexMatrix& m);
double hermiticity_error(const ComplexMatrix& m);
ComplexMatrix hermitian_part(const ComplexMatrix& m);

// Unit-norm state vector.
class PureState {
 public:
  explicit PureState(ComplexVector amplitudes);

  // cos(alpha)|0> + e^{i phi} sin(alpha)|1>
  static PureState qubit(double alpha, double phi);
  static PureState basis(std::size_t dim, std::size_t index);

  std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }
  const ComplexVector& amplitudes() const { return amplitudes_; }
  ComplexMatrix projector() const { return amplitudes_ * amplitudes_.adjoint(); }

 private:
  ComplexVector amplitudes_;
};

// Hermitian, unit-trace, positive semidefinite matrix. Construction validates.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m);
  // Validate against caller-chosen tolerances (e.g. integrator output).
  DensityMatrix(ComplexMatrix m, double herm_tol, double trace_tol, double eig_floor);

  static DensityMatrix from_pure(const PureState& psi);
  static DensityMatrix maximally_mixed(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  const ComplexMatrix& matrix() const { return matrix_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return matrix_(i, j); }

  double purity() const;

 private:
  ComplexMatrix matrix_;
};

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix tensor(std::span<const ComplexMatrix> factors);

// Trace out every subsystem not listed in `keep`. Works on arbitrary square operators.
ComplexMatrix partial_trace(const ComplexMatrix& op, std::span<const std::size_t> dims,
                            std::span<const std::size_t> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> dims,
                            std::span<const std::size_t> keep);

// <psi|rho|psi>
double state_fidelity(const PureState& psi, const DensityMatrix& rho);

// sigma_0..sigma_3 = {1, X, Y, Z}
ComplexMatrix pauli(int i);

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

// {dim_rows, dim_cols, re: [...], im: [...]}, row-major
nlohmann::json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace ionphoton
