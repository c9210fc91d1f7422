#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pilotwave/hilbert.hpp"
#include "pilotwave/rng.hpp"

using namespace pilotwave::hilbert;
using pilotwave::Rng;

namespace {

CMatrix random_matrix(Rng& rng, int n) {
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
  return m;
}

CMatrix random_hermitian(Rng& rng, int n) {
  const CMatrix m = random_matrix(rng, n);
  return 0.5 * (m + m.adjoint());
}

CMatrix random_density(Rng& rng, int n) {
  const CMatrix m = random_matrix(rng, n);
  CMatrix w = m * m.adjoint();
  return w / w.trace().real();
}

}  // namespace

TEST_CASE("tensor products") {
  CHECK(max_abs(tensor_product(identity(2), identity(2)) - identity(4)) == 0.0);
  for (std::size_t d : {1u, 3u, 5u}) CHECK(max_abs(tensor_product(identity(d), identity(d + 1)) - identity(d * (d + 1))) == 0.0);

  CMatrix expected = CMatrix::Zero(4, 4);
  expected(0, 0) = 1;
  expected(1, 1) = 1;
  expected(2, 2) = -1;
  expected(3, 3) = -1;
  CHECK(max_abs(tensor_product(pauli_z(), identity(2)) - expected) == 0.0);

  const auto e = tensor_product(spin_up(), spin_down());
  CHECK(max_abs(e.amplitudes() - StateVector::basis(4, 1).amplitudes()) == 0.0);

  CHECK_THROWS_AS(tensor_product(identity(100), identity(41)), pilotwave::SizeError);
  CHECK_NOTHROW(tensor_product(identity(64), identity(64)));
}

TEST_CASE("spectral decomposition") {
  const auto sz = spectral_decompose(HermitianOperator(pauli_z()));
  REQUIRE(sz.eigenvalues.size() == 2);
  CHECK(sz.eigenvalues[0] == doctest::Approx(-1.0));
  CHECK(sz.eigenvalues[1] == doctest::Approx(1.0));
  CMatrix down = CMatrix::Zero(2, 2), up = CMatrix::Zero(2, 2);
  down(1, 1) = 1;
  up(0, 0) = 1;
  CHECK(max_abs(sz.projectors[0] - down) < 1e-14);
  CHECK(max_abs(sz.projectors[1] - up) < 1e-14);

  const auto id = spectral_decompose(HermitianOperator(identity(3)));
  REQUIRE(id.eigenvalues.size() == 1);
  CHECK(max_abs(id.projectors[0] - identity(3)) < 1e-14);

  CMatrix deg = CMatrix::Zero(3, 3);
  deg.diagonal() << 1, 2, 1;
  const auto sd = spectral_decompose(HermitianOperator(deg));
  REQUIRE(sd.eigenvalues.size() == 2);
  CHECK(sd.projectors[0].trace().real() == doctest::Approx(2.0));

  CHECK_THROWS_AS(HermitianOperator(pauli_x() * Complex(0, 1)), pilotwave::ValidationError);
}

TEST_CASE("spectral round trip on random Hermitian matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u32() % 16);
    const CMatrix a = random_hermitian(rng, n);
    const auto sd = spectral_decompose(HermitianOperator(a));
    CHECK(max_abs(sd.reconstruct() - a) <= 1e-10);
    CMatrix sum = CMatrix::Zero(n, n);
    for (std::size_t i = 0; i < sd.projectors.size(); ++i) {
      sum += sd.projectors[i];
      for (std::size_t j = 0; j < sd.projectors.size(); ++j) {
        const CMatrix prod = sd.projectors[i] * sd.projectors[j];
        const CMatrix target = i == j ? sd.projectors[i] : CMatrix::Zero(n, n);
        CHECK(max_abs(prod - target) <= 1e-10);
      }
    }
    CHECK(max_abs(sum - identity(n)) <= 1e-10);
    for (std::size_t i = 1; i < sd.eigenvalues.size(); ++i) CHECK(sd.eigenvalues[i] > sd.eigenvalues[i - 1]);
  }
}

TEST_CASE("partial trace") {
  const std::size_t dims[] = {2, 2};
  // Brute-force oracle for the singlet: rho_1(a, b) = sum_k s(a k) conj(s(b k)).
  const auto s = singlet();
  CMatrix oracle = CMatrix::Zero(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int k = 0; k < 2; ++k) oracle(a, b) += s[2 * a + k] * std::conj(s[2 * b + k]);
  const auto reduced = partial_trace(DensityMatrix::pure(s), 0, dims);
  CHECK(max_abs(reduced.matrix() - oracle) < 1e-15);
  CHECK(max_abs(reduced.matrix() - identity(2) / 2.0) < 1e-12);

  const StateVector psi(CVector::Constant(2, Complex(0.6, 0)) + CVector::Unit(2, 1) * Complex(0.0, 0.2));
  const auto p = psi.normalized();
  const auto phi = StateVector(CVector::Unit(3, 2));
  const std::size_t d23[] = {2, 3};
  const auto w = DensityMatrix::pure(tensor_product(p, phi));
  CHECK(max_abs(partial_trace(w, 0, d23).matrix() - p.projector()) < 1e-14);
  CHECK(max_abs(partial_trace(w, 1, d23).matrix() - phi.projector()) < 1e-14);

  Rng rng(5);
  const CMatrix w1 = random_density(rng, 3);
  const CMatrix prod = tensor_product(w1, identity(2) / 2.0);
  const std::size_t d32[] = {3, 2};
  CHECK(max_abs(partial_trace(prod, 1, d32) - identity(2) / 2.0) < 1e-14);
  CHECK(max_abs(partial_trace(prod, 0, d32) - w1) < 1e-14);

  const std::size_t bad[] = {2, 3};
  CHECK_THROWS_AS(partial_trace(DensityMatrix::maximally_mixed(4), 0, bad), pilotwave::DimensionError);
}

TEST_CASE("partial trace preserves trace and positivity") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d1 = 1 + rng.next_u32() % 4, d2 = 1 + rng.next_u32() % 4, d3 = 1 + rng.next_u32() % 3;
    const std::size_t dims[] = {d1, d2, d3};
    const DensityMatrix w(random_density(rng, static_cast<int>(d1 * d2 * d3)));
    for (std::size_t keep = 0; keep < 3; ++keep) {
      const auto r = partial_trace(w, keep, dims);
      CHECK(std::abs(r.matrix().trace().real() - 1.0) <= 1e-10);
      CHECK(min_eigenvalue(r.matrix()) >= -1e-10);
    }
  }
}

TEST_CASE("commuting families") {
  const HermitianOperator z(pauli_z()), x(pauli_x()), id(identity(2));
  CHECK(commuting_family(std::vector{z, id}));
  CHECK_FALSE(commuting_family(std::vector{z, x}));
  CHECK(max_abs(commutator(pauli_z(), pauli_x()) - Complex(0, 2) * pauli_y()) < 1e-15);
  const HermitianOperator z1(tensor_product(pauli_z(), identity(2)));
  const HermitianOperator x2(tensor_product(identity(2), pauli_x()));
  CHECK(commuting_family(std::vector{z1, x2}));
  CHECK_THROWS_AS(commuting_family(std::vector{z, z1}), pilotwave::DimensionError);
}

TEST_CASE("unitaries and states") {
  CHECK_THROWS_AS(UnitaryOperator{2.0 * identity(2)}, pilotwave::ValidationError);
  const auto u = UnitaryOperator::evolution(HermitianOperator(pauli_x()), std::numbers::pi / 2);
  // exp(-i pi/2 sigma_x) = -i sigma_x
  CHECK(max_abs(u.matrix() - Complex(0, -1) * pauli_x()) < 1e-14);
  CHECK_THROWS_AS(StateVector::basis(2, 2), pilotwave::DimensionError);
  CHECK(singlet().is_normalized());
  CHECK_THROWS_AS(spin_along({1, 1, 0}), pilotwave::ValidationError);
  const double c = std::sqrt(0.5);
  CHECK(max_abs(spin_along({c, 0, c}).matrix() - c * (pauli_x() + pauli_z())) < 1e-15);
  CHECK_THROWS_AS(DensityMatrix{pauli_z()}, pilotwave::ValidationError);
}
