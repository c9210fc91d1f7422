#include "pilotwave/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pilotwave::hilbert {

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

StateVector::StateVector(CVector amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.size() == 0) throw DimensionError("state vector must have positive dimension");
  if (!amps_.allFinite()) throw ValidationError("state vector has non-finite amplitudes");
}

StateVector StateVector::basis(std::size_t dim, std::size_t index) {
  if (index >= dim) throw DimensionError("basis index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(std::move(v));
}

bool StateVector::is_normalized(double tol) const { return std::abs(norm() - 1.0) <= tol; }

StateVector StateVector::normalized() const {
  const double n = norm();
  if (n == 0.0) throw ValidationError("cannot normalize the zero vector");
  return StateVector(amps_ / n);
}

StateVector operator+(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw DimensionError("state dimensions differ");
  return StateVector(a.amplitudes() + b.amplitudes());
}

StateVector operator*(Complex c, const StateVector& s) { return StateVector(c * s.amplitudes()); }

Complex inner(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw DimensionError("state dimensions differ");
  return a.amplitudes().dot(b.amplitudes());
}

HermitianOperator::HermitianOperator(CMatrix m, double tol) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) throw DimensionError("operator must be square and non-empty");
  const double dev = max_abs(m_ - m_.adjoint());
  if (!(dev <= tol)) throw ValidationError("operator is not Hermitian (deviation " + std::to_string(dev) + ")");
  // Symmetrize so downstream solvers see an exactly Hermitian matrix.
  m_ = 0.5 * (m_ + m_.adjoint()).eval();
}

UnitaryOperator::UnitaryOperator(CMatrix m, double tol) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) throw DimensionError("operator must be square and non-empty");
  const double dev = max_abs(m_.adjoint() * m_ - CMatrix::Identity(m_.rows(), m_.cols()));
  if (!(dev <= tol)) throw ValidationError("operator is not unitary (deviation " + std::to_string(dev) + ")");
}

UnitaryOperator UnitaryOperator::identity(std::size_t dim) { return UnitaryOperator(hilbert::identity(dim)); }

UnitaryOperator UnitaryOperator::evolution(const HermitianOperator& h, double t, double hbar) {
  const auto sd = spectral_decompose(h, 0.0);
  return UnitaryOperator(apply_function(sd, [&](double e) { return std::exp(Complex(0.0, -e * t / hbar)); }));
}

UnitaryOperator UnitaryOperator::adjoint() const { return UnitaryOperator(m_.adjoint()); }

CMatrix SpectralDecomposition::reconstruct() const {
  return apply_function(*this, [](double e) { return Complex(e, 0.0); });
}

SpectralDecomposition spectral_decompose(const HermitianOperator& a, double degeneracy_tol) {
  const CMatrix& m = a.matrix();
  if (degeneracy_tol < 0.0) degeneracy_tol = 1e-9 * max_abs(m);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m);
  if (solver.info() != Eigen::Success) throw ValidationError("Hermitian eigensolver failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const CMatrix& evecs = solver.eigenvectors();

  SpectralDecomposition out;
  Eigen::Index start = 0;
  const Eigen::Index n = evals.size();
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && evals(end) - evals(end - 1) <= degeneracy_tol) ++end;
    const auto block = evecs.middleCols(start, end - start);
    out.eigenvalues.push_back(evals.segment(start, end - start).mean());
    out.projectors.push_back(block * block.adjoint());
    start = end;
  }
  return out;
}

double min_eigenvalue(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

CMatrix psd_sqrt(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().adjoint();
}

namespace {

std::size_t checked_product(std::size_t a, std::size_t b, std::size_t cap) {
  const std::size_t d = a * b;
  if (a != 0 && d / a != b) throw SizeError("tensor product dimension overflow");
  if (d > cap) throw SizeError("tensor product dimension " + std::to_string(d) + " exceeds cap " + std::to_string(cap));
  return d;
}

}  // namespace

CMatrix tensor_product(const CMatrix& a, const CMatrix& b, std::size_t cap) {
  const auto rows = checked_product(static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(b.rows()), cap);
  const auto cols = checked_product(static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(b.cols()), cap);
  CMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

StateVector tensor_product(const StateVector& a, const StateVector& b, std::size_t cap) {
  const CMatrix m = tensor_product(CMatrix(a.amplitudes()), CMatrix(b.amplitudes()), cap);
  return StateVector(CVector(m.col(0)));
}

HermitianOperator tensor_product(const HermitianOperator& a, const HermitianOperator& b, std::size_t cap) {
  return HermitianOperator(tensor_product(a.matrix(), b.matrix(), cap));
}

UnitaryOperator tensor_product(const UnitaryOperator& a, const UnitaryOperator& b, std::size_t cap) {
  return UnitaryOperator(tensor_product(a.matrix(), b.matrix(), cap));
}

DensityMatrix::DensityMatrix(CMatrix m, double tol) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) throw DimensionError("density matrix must be square and non-empty");
  if (max_abs(m_ - m_.adjoint()) > tol) throw ValidationError("density matrix is not Hermitian");
  const double tr = m_.trace().real();
  if (std::abs(tr - 1.0) > tol) throw ValidationError("density matrix trace " + std::to_string(tr) + " != 1");
  const double lo = min_eigenvalue(m_);
  if (lo < -tol) throw ValidationError("density matrix is not positive (min eigenvalue " + std::to_string(lo) + ")");
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  if (!psi.is_normalized(1e-10)) throw ValidationError("pure density matrix needs a normalized state");
  return DensityMatrix(psi.projector());
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
  return DensityMatrix(identity(dim) / static_cast<double>(dim));
}

CMatrix partial_trace(const CMatrix& w, std::size_t keep, std::span<const std::size_t> dims) {
  if (dims.empty() || keep >= dims.size()) throw DimensionError("partial trace: bad subsystem index");
  const std::size_t total = std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  if (w.rows() != w.cols() || static_cast<std::size_t>(w.rows()) != total)
    throw DimensionError("partial trace: factor dimensions do not multiply to dim(W)");

  // Index = (outer, kept, inner) with outer the product of the dimensions
  // before `keep` and inner the product after it.
  const std::size_t dk = dims[keep];
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < keep; ++i) outer *= dims[i];
  for (std::size_t i = keep + 1; i < dims.size(); ++i) inner *= dims[i];

  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t b = 0; b < dk; ++b) {
      Complex s = 0.0;
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i) {
          const auto r = static_cast<Eigen::Index>((o * dk + a) * inner + i);
          const auto c = static_cast<Eigen::Index>((o * dk + b) * inner + i);
          s += w(r, c);
        }
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
    }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& w, std::size_t keep, std::span<const std::size_t> dims) {
  return DensityMatrix(partial_trace(w.matrix(), keep, dims));
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

bool commuting_family(std::span<const HermitianOperator> ops, double tol) {
  for (std::size_t i = 0; i < ops.size(); ++i)
    if (ops[i].dim() != ops.front().dim()) throw DimensionError("commuting_family: operator dimensions differ");
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (std::size_t j = i + 1; j < ops.size(); ++j)
      if (max_abs(commutator(ops[i].matrix(), ops[j].matrix())) > tol) return false;
  return true;
}

CMatrix pauli_x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

CMatrix pauli_y() {
  CMatrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

CMatrix pauli_z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

CMatrix identity(std::size_t dim) {
  return CMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
}

HermitianOperator spin_along(const std::array<double, 3>& n) {
  const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  if (std::abs(len - 1.0) > 1e-12) throw ValidationError("spin direction must be a unit vector");
  return HermitianOperator(n[0] * pauli_x() + n[1] * pauli_y() + n[2] * pauli_z());
}

StateVector spin_up() { return StateVector::basis(2, 0); }
StateVector spin_down() { return StateVector::basis(2, 1); }

StateVector singlet() {
  const StateVector a = tensor_product(spin_up(), spin_down());
  const StateVector b = tensor_product(spin_down(), spin_up());
  return StateVector((a.amplitudes() - b.amplitudes()) / std::sqrt(2.0));
}

}  // namespace pilotwave::hilbert
