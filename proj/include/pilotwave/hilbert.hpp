#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "pilotwave/error.hpp"

/// Dense finite-dimensional complex linear algebra: states, operators,
/// spectral decomposition, tensor products and partial traces.
namespace pilotwave::hilbert {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr std::size_t kDefaultDimensionCap = 4096;

/// Largest absolute entry; the norm used by every tolerance in this module.
double max_abs(const CMatrix& m);

class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(CVector amplitudes);

  static StateVector basis(std::size_t dim, std::size_t index);

  std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
  const CVector& amplitudes() const { return amps_; }
  Complex operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }

  double norm() const { return amps_.norm(); }
  bool is_normalized(double tol = 1e-12) const;
  StateVector normalized() const;

  /// |psi><psi|
  CMatrix projector() const { return amps_ * amps_.adjoint(); }

 private:
  CVector amps_;
};

StateVector operator+(const StateVector& a, const StateVector& b);
StateVector operator*(Complex c, const StateVector& s);
Complex inner(const StateVector& a, const StateVector& b);

class HermitianOperator {
 public:
  HermitianOperator() = default;
  /// Throws ValidationError unless m equals its adjoint within `tol`.
  explicit HermitianOperator(CMatrix m, double tol = 1e-12);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }

 private:
  CMatrix m_;
};

class UnitaryOperator {
 public:
  UnitaryOperator() = default;
  /// Throws ValidationError unless U^dagger U = I within `tol`.
  explicit UnitaryOperator(CMatrix m, double tol = 1e-10);

  static UnitaryOperator identity(std::size_t dim);
  /// exp(-i t H / hbar)
  static UnitaryOperator evolution(const HermitianOperator& h, double t, double hbar = 1.0);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  UnitaryOperator adjoint() const;

 private:
  CMatrix m_;
};

/// One projector per distinct eigenvalue, eigenvalues ascending.
struct SpectralDecomposition {
  std::vector<double> eigenvalues;
  std::vector<CMatrix> projectors;

  CMatrix reconstruct() const;
};

/// Eigenvalues closer than `degeneracy_tol` (chained, after sorting) share a
/// projector. A negative tolerance selects the default 1e-9 * max|A_ij|.
SpectralDecomposition spectral_decompose(const HermitianOperator& a, double degeneracy_tol = -1.0);

/// f(A) through the spectral decomposition.
template <class Fn>
CMatrix apply_function(const SpectralDecomposition& sd, Fn&& fn) {
  const auto n = sd.projectors.empty() ? 0 : sd.projectors.front().rows();
  CMatrix out = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < sd.eigenvalues.size(); ++i) out += fn(sd.eigenvalues[i]) * sd.projectors[i];
  return out;
}

/// Smallest eigenvalue of a Hermitian matrix (no validation).
double min_eigenvalue(const CMatrix& m);

/// Positive square root of a positive semidefinite matrix.
CMatrix psd_sqrt(const CMatrix& m);

CMatrix tensor_product(const CMatrix& a, const CMatrix& b, std::size_t cap = kDefaultDimensionCap);
StateVector tensor_product(const StateVector& a, const StateVector& b, std::size_t cap = kDefaultDimensionCap);
HermitianOperator tensor_product(const HermitianOperator& a, const HermitianOperator& b,
                                 std::size_t cap = kDefaultDimensionCap);
UnitaryOperator tensor_product(const UnitaryOperator& a, const UnitaryOperator& b,
                               std::size_t cap = kDefaultDimensionCap);

/// Positive operator with unit trace.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  /// Throws ValidationError if `m` is not Hermitian, has an eigenvalue below
  /// -tol, or has trace differing from 1 by more than tol.
  explicit DensityMatrix(CMatrix m, double tol = 1e-10);

  static DensityMatrix pure(const StateVector& psi);
  static DensityMatrix maximally_mixed(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  double expectation(const CMatrix& op) const { return (m_ * op).trace().real(); }

 private:
  CMatrix m_;
};

/// Reduced density matrix of factor `keep` of a product space with factor
/// dimensions `dims` (row-major: the first factor is the slowest index).
DensityMatrix partial_trace(const DensityMatrix& w, std::size_t keep, std::span<const std::size_t> dims);
CMatrix partial_trace(const CMatrix& w, std::size_t keep, std::span<const std::size_t> dims);

/// true iff every pairwise commutator has max-abs entry <= tol.
bool commuting_family(std::span<const HermitianOperator> ops, double tol = 1e-10);
CMatrix commutator(const CMatrix& a, const CMatrix& b);

// Spin-1/2 helpers. Basis ordering is (up, down) = (psi+, psi-).
CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();
CMatrix identity(std::size_t dim);
/// n . sigma for a unit vector n; throws ValidationError if |n| != 1.
HermitianOperator spin_along(const std::array<double, 3>& n);
StateVector spin_up();
StateVector spin_down();
/// (psi+ (x) psi- - psi- (x) psi+)/sqrt(2)
StateVector singlet();

}  // namespace pilotwave::hilbert
