#pragma once

#include <random>

#include "ionphoton/operators.hpp"

namespace testing_support {

using ionphoton::Complex;
using ionphoton::ComplexMatrix;

inline ComplexMatrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = Complex(n(rng), n(rng));
  }
  return m;
}

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, Eigen::Index d) {
  const ComplexMatrix a = random_matrix(rng, d, d);
  return 0.5 * (a + a.adjoint());
}

// Ginibre ensemble: G G^dag / Tr.
inline ComplexMatrix random_density(std::mt19937_64& rng, Eigen::Index d) {
  const ComplexMatrix g = random_matrix(rng, d, d);
  ComplexMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline ComplexMatrix random_unitary(std::mt19937_64& rng, Eigen::Index d) {
  Eigen::HouseholderQR<ComplexMatrix> qr(random_matrix(rng, d, d));
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR();
  for (Eigen::Index i = 0; i < d; ++i) q.col(i) *= std::polar(1.0, std::arg(r(i, i)));
  return q;
}

inline ionphoton::ComplexVector random_pure(std::mt19937_64& rng, Eigen::Index d) {
  ComplexMatrix v = random_matrix(rng, d, 1);
  return v.col(0).normalized();
}

}  // namespace testing_support
