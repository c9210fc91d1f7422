#include <Eigen/Eigenvalues>
#include <cmath>

#include "pilotwave/wavefield.hpp"

namespace pilotwave::wavefield {

namespace {

void check_hamiltonian(const GridWaveFunction& psi, const HamiltonianSpec& h) {
  const auto& grid = psi.grid();
  const std::size_t n = grid.size();
  if (h.masses.size() != grid.ndim()) throw DimensionError("one mass per grid axis is required");
  for (double m : h.masses)
    if (!(m > 0.0)) throw ValidationError("masses must be positive");
  if (!(h.hbar > 0.0)) throw ValidationError("hbar must be positive");
  if (!h.scalar.empty() && h.scalar.size() != n) throw DimensionError("scalar potential does not match the grid");
  if (!h.spin_diagonal.empty() && !h.spin_matrix.empty())
    throw ValidationError("give either a diagonal or a matrix spin potential, not both");
  if (!h.spin_diagonal.empty()) {
    if (h.spin_diagonal.size() != psi.spin_dim()) throw DimensionError("spin potential has the wrong number of components");
    for (const auto& d : h.spin_diagonal)
      if (d.size() != n) throw DimensionError("spin potential does not match the grid");
  }
  if (!h.spin_matrix.empty()) {
    if (h.spin_matrix.size() != n) throw DimensionError("spin potential does not match the grid");
    const auto sd = static_cast<Eigen::Index>(psi.spin_dim());
    for (const auto& m : h.spin_matrix)
      if (m.rows() != sd || m.cols() != sd) throw DimensionError("spin matrix has the wrong dimension");
  }
}

}  // namespace

GridWaveFunction evolve(const GridWaveFunction& psi, const HamiltonianSpec& h, double dt, std::size_t steps,
                        const std::function<void(const GridWaveFunction&)>& on_step, const EvolveOptions& options) {
  check_hamiltonian(psi, h);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time step must be positive and finite");
  if (!options.allow_large_steps) {
    const double ratio = dt * h.max_potential_on_support(psi) / h.hbar;
    if (ratio > 0.1)
      throw ValidationError("time step too large for the potential: dt*max|V|/hbar = " + std::to_string(ratio) + " > 0.1");
  }
  if (psi.boundary_ratio() > options.boundary_tolerance)
    throw WrapAroundError("initial state already reaches the grid boundary");

  const auto& grid = psi.grid();
  const std::size_t n = grid.size(), sd = psi.spin_dim();
  const Complex mi(0.0, -1.0);
  const double half = 0.5 * dt / h.hbar;

  // Half-step potential factors.
  std::vector<Complex> vphase;
  std::vector<Eigen::MatrixXcd> vmat;
  if (h.spin_matrix.empty()) {
    vphase.resize(n * sd);
    for (std::size_t c = 0; c < sd; ++c)
      for (std::size_t i = 0; i < n; ++i) {
        const double v = (h.scalar.empty() ? 0.0 : h.scalar[i]) + (h.spin_diagonal.empty() ? 0.0 : h.spin_diagonal[c][i]);
        vphase[c * n + i] = std::exp(mi * v * half);
      }
  } else {
    vmat.resize(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::MatrixXcd m = h.spin_matrix[i];
      if (!h.scalar.empty()) m.diagonal().array() += h.scalar[i];
      es.compute(m);
      const Eigen::VectorXcd ph = (es.eigenvalues().cast<Complex>() * (mi * half)).array().exp();
      vmat[i] = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    }
  }

  std::vector<Complex> kphase(n);
  for (std::size_t f = 0; f < n; ++f) {
    const auto idx = grid.unflat(f);
    double e = 0.0;
    for (std::size_t k = 0; k < grid.ndim(); ++k) {
      const double kk = grid.axis(k).wavenumber(idx[k]);
      e += h.hbar * h.hbar * kk * kk / (2.0 * h.masses[k]);
    }
    kphase[f] = std::exp(mi * e * dt / h.hbar);
  }

  const Fft fft(grid);
  GridWaveFunction cur = psi;
  auto& s = cur.samples();
  Eigen::VectorXcd spinor(static_cast<Eigen::Index>(sd));
  auto potential_half = [&] {
    if (vmat.empty()) {
      for (std::size_t j = 0; j < s.size(); ++j) s[j] *= vphase[j];
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < sd; ++c) spinor(static_cast<Eigen::Index>(c)) = s[c * n + i];
      spinor = vmat[i] * spinor;
      for (std::size_t c = 0; c < sd; ++c) s[c * n + i] = spinor(static_cast<Eigen::Index>(c));
    }
  };

  const double t0 = psi.time();
  for (std::size_t step = 1; step <= steps; ++step) {
    potential_half();
    for (std::size_t c = 0; c < sd; ++c) {
      Complex* d = s.data() + c * n;
      fft.forward(d);
      for (std::size_t f = 0; f < n; ++f) d[f] *= kphase[f];
      fft.backward(d);
    }
    potential_half();
    cur.set_time(t0 + dt * static_cast<double>(step));
    if (cur.boundary_ratio() > options.boundary_tolerance)
      throw WrapAroundError("wave function reached the grid boundary at t = " + std::to_string(cur.time()) +
                            "; enlarge the box or shorten the run");
    if (on_step) on_step(cur);
  }
  return cur;
}

}  // namespace pilotwave::wavefield
