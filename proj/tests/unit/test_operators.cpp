#include <doctest.h>

#include <array>
#include <numbers>
#include <nlohmann/json.hpp>

#include "ionphoton/errors.hpp"
#include "ionphoton/operators.hpp"
#include "support.hpp"

using namespace ionphoton;
using testing_support::random_density;
using testing_support::random_matrix;

namespace {

// Four-loop placement oracle for the Kronecker product.
ComplexMatrix kron_oracle(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < b.rows(); ++k)
        for (Eigen::Index l = 0; l < b.cols(); ++l) r(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return r;
}

// Explicit index summation for a bipartite d1 x d2 operator.
ComplexMatrix trace_b_oracle(const ComplexMatrix& m, int d1, int d2) {
  ComplexMatrix r = ComplexMatrix::Zero(d1, d1);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j)
      for (int k = 0; k < d2; ++k) r(i, j) += m(i * d2 + k, j * d2 + k);
  return r;
}

ComplexMatrix trace_a_oracle(const ComplexMatrix& m, int d1, int d2) {
  ComplexMatrix r = ComplexMatrix::Zero(d2, d2);
  for (int k = 0; k < d2; ++k)
    for (int l = 0; l < d2; ++l)
      for (int i = 0; i < d1; ++i) r(k, l) += m(i * d2 + k, i * d2 + l);
  return r;
}

}  // namespace

TEST_CASE("tensor of identities is the identity") {
  const ComplexMatrix r = tensor(ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(3, 3));
  CHECK(r.rows() == 6);
  CHECK(max_abs(r - ComplexMatrix::Identity(6, 6)) == 0.0);
}

TEST_CASE("tensor(sigma_z, I2) diagonal") {
  const ComplexMatrix r = tensor(pauli(3), pauli(0));
  const std::array<double, 4> expect{1, 1, -1, -1};
  for (int i = 0; i < 4; ++i) CHECK(r(i, i) == Complex(expect[static_cast<std::size_t>(i)]));
}

TEST_CASE("tensor matches the brute-force placement oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const ComplexMatrix a = random_matrix(rng, 2, 2);
    const ComplexMatrix b = random_matrix(rng, 2, 2);
    CHECK(max_abs(tensor(a, b) - kron_oracle(a, b)) == 0.0);
  }
  const ComplexMatrix a = random_matrix(rng, 2, 3);
  const ComplexMatrix b = random_matrix(rng, 4, 1);
  CHECK(max_abs(tensor(a, b) - kron_oracle(a, b)) == 0.0);
}

TEST_CASE("tensor is associative with exact entries") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix a = random_matrix(rng, 2, 2), b = random_matrix(rng, 3, 3), c = random_matrix(rng, 2, 2);
    const ComplexMatrix l = tensor(tensor(a, b), c);
    const ComplexMatrix r = tensor(a, tensor(b, c));
    CHECK(l.rows() == 12);
    CHECK((l - r).cwiseAbs().maxCoeff() <= 1e-15 * l.cwiseAbs().maxCoeff());
    const std::array<ComplexMatrix, 3> f{a, b, c};
    CHECK(max_abs(tensor(std::span<const ComplexMatrix>(f)) - l) == 0.0);
  }
}

TEST_CASE("partial trace of a product state") {
  std::mt19937_64 rng(13);
  const ComplexMatrix a = random_density(rng, 2), b = random_density(rng, 3);
  const std::array<std::size_t, 2> dims{2, 3};
  const std::array<std::size_t, 1> keep_a{0}, keep_b{1};
  CHECK(max_abs(partial_trace(tensor(a, b), dims, keep_a) - a) < 1e-14);
  CHECK(max_abs(partial_trace(tensor(a, b), dims, keep_b) - b) < 1e-14);
}

TEST_CASE("partial trace of a Bell state is maximally mixed") {
  ComplexVector bell = ComplexVector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const DensityMatrix rho = DensityMatrix::from_pure(PureState(bell));
  const std::array<std::size_t, 2> dims{2, 2};
  for (std::size_t k : {0u, 1u}) {
    const std::array<std::size_t, 1> keep{k};
    CHECK(max_abs(partial_trace(rho, dims, keep).matrix() - 0.5 * ComplexMatrix::Identity(2, 2)) < 1e-15);
  }
}

TEST_CASE("partial trace matches the index-summation oracle on random 2x3 states") {
  std::mt19937_64 rng(14);
  const std::array<std::size_t, 2> dims{2, 3};
  for (int trial = 0; trial < 100; ++trial) {
    const DensityMatrix rho(random_density(rng, 6));
    const std::array<std::size_t, 1> keep_a{0}, keep_b{1};
    const DensityMatrix ra = partial_trace(rho, dims, keep_a);
    const DensityMatrix rb = partial_trace(rho, dims, keep_b);
    CHECK(max_abs(ra.matrix() - trace_b_oracle(rho.matrix(), 2, 3)) < 1e-14);
    CHECK(max_abs(rb.matrix() - trace_a_oracle(rho.matrix(), 2, 3)) < 1e-14);
    CHECK(std::abs(ra.matrix().trace() - Complex(1.0)) < 1e-12);
  }
}

TEST_CASE("partial trace composes") {
  std::mt19937_64 rng(15);
  const std::array<std::size_t, 3> dims{2, 3, 2};
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix rho = random_density(rng, 12);
    const std::array<std::size_t, 2> keep_ab{0, 1};
    const std::array<std::size_t, 1> keep_a{0};
    const std::array<std::size_t, 2> dims_ab{2, 3};
    const ComplexMatrix step = partial_trace(partial_trace(rho, dims, keep_ab), dims_ab, keep_a);
    CHECK(max_abs(step - partial_trace(rho, dims, keep_a)) < 1e-14);
  }
}

TEST_CASE("partial trace keeps subsystems in their original order") {
  std::mt19937_64 rng(16);
  const ComplexMatrix a = random_density(rng, 2), b = random_density(rng, 3), c = random_density(rng, 2);
  const ComplexMatrix abc = tensor(tensor(a, b), c);
  const std::array<std::size_t, 3> dims{2, 3, 2};
  const std::array<std::size_t, 2> keep{2, 0};
  CHECK(max_abs(partial_trace(abc, dims, keep) - tensor(a, c)) < 1e-14);
}

TEST_CASE("partial trace rejects inconsistent decompositions") {
  const ComplexMatrix rho = ComplexMatrix::Identity(6, 6) / 6.0;
  const std::array<std::size_t, 2> bad{2, 2};
  const std::array<std::size_t, 2> dims{2, 3};
  const std::array<std::size_t, 1> keep{0}, out_of_range{2};
  const std::array<std::size_t, 2> dup{0, 0};
  CHECK_THROWS_AS(partial_trace(rho, bad, keep), DimensionError);
  CHECK_THROWS_AS(partial_trace(rho, dims, std::span<const std::size_t>{}), DimensionError);
  CHECK_THROWS_AS(partial_trace(rho, dims, out_of_range), DimensionError);
  CHECK_THROWS_AS(partial_trace(rho, dims, dup), DimensionError);
}

TEST_CASE("state fidelity examples") {
  const PureState h = PureState::basis(2, 0);
  const PureState v = PureState::basis(2, 1);
  CHECK(state_fidelity(h, DensityMatrix::from_pure(h)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(state_fidelity(h, DensityMatrix::maximally_mixed(2)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(state_fidelity(h, DensityMatrix::from_pure(v)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(state_fidelity(PureState::basis(3, 0), DensityMatrix::maximally_mixed(2)), DimensionError);
}

TEST_CASE("state fidelity is linear in rho and blind to global phase") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const ComplexVector psi = testing_support::random_pure(rng, 3);
    const DensityMatrix r1(random_density(rng, 3)), r2(random_density(rng, 3));
    const double p = u(rng);
    const DensityMatrix mix(p * r1.matrix() + (1 - p) * r2.matrix());
    const PureState s(psi);
    const double lin = p * state_fidelity(s, r1) + (1 - p) * state_fidelity(s, r2);
    CHECK(std::abs(state_fidelity(s, mix) - lin) < 1e-12);
    const PureState rotated(std::polar(1.0, 2 * std::numbers::pi * u(rng)) * psi);
    CHECK(std::abs(state_fidelity(rotated, r1) - state_fidelity(s, r1)) < 1e-12);
  }
}

TEST_CASE("Pauli matrices") {
  CHECK(max_abs(pauli(0) - ComplexMatrix::Identity(2, 2)) == 0.0);
  ComplexMatrix z(2, 2);
  z << 1, 0, 0, -1;
  CHECK(max_abs(pauli(3) - z) == 0.0);
  CHECK(max_abs(pauli(1) * pauli(2) - kI * pauli(3)) == 0.0);
  CHECK_THROWS_AS(pauli(4), std::out_of_range);
  CHECK_THROWS_AS(pauli(-1), std::out_of_range);
}

TEST_CASE("PureState and DensityMatrix validate their invariants") {
  CHECK_THROWS(PureState(ComplexVector::Ones(2)));
  ComplexMatrix not_herm(2, 2);
  not_herm << 0.5, 0.1, 0.0, 0.5;
  CHECK_THROWS_AS(DensityMatrix{not_herm}, PhysicalityError);
  CHECK_THROWS_AS(DensityMatrix{ComplexMatrix::Identity(2, 2)}, PhysicalityError);
  ComplexMatrix neg(2, 2);
  neg << 1.1, 0, 0, -0.1;
  CHECK_THROWS_AS(DensityMatrix{neg}, PhysicalityError);
  const PureState q = PureState::qubit(std::numbers::pi / 4, std::numbers::pi);
  CHECK(std::abs(q.amplitudes()(0) - Complex(1 / std::sqrt(2.0))) < 1e-15);
  CHECK(std::abs(q.amplitudes()(1) + Complex(1 / std::sqrt(2.0))) < 1e-15);
}

TEST_CASE("random density matrices satisfy the physicality contract") {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = 2 + trial % 5;
    const auto rep = check_physical(random_density(rng, d));
    CHECK(rep.ok());
  }
}

TEST_CASE("matrix JSON round trip") {
  std::mt19937_64 rng(19);
  const ComplexMatrix m = random_matrix(rng, 2, 3);
  const auto j = matrix_to_json(m);
  CHECK(j.at("dim_rows") == 2);
  CHECK(j.at("dim_cols") == 3);
  CHECK(j.at("re").size() == 6);
  CHECK(j.at("re")[1].get<double>() == m(0, 1).real());
  CHECK(max_abs(matrix_from_json(j) - m) == 0.0);
  nlohmann::json bad = j;
  bad["re"].erase(0);
  CHECK_THROWS(matrix_from_json(bad));
}

TEST_CASE("trace distance") {
  const DensityMatrix h = DensityMatrix::from_pure(PureState::basis(2, 0));
  const DensityMatrix v = DensityMatrix::from_pure(PureState::basis(2, 1));
  CHECK(trace_distance(h.matrix(), v.matrix()) == doctest::Approx(1.0));
  CHECK(trace_distance(h.matrix(), h.matrix()) == doctest::Approx(0.0));
}
