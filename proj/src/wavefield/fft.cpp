#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "pilotwave/wavefield.hpp"

namespace pilotwave::wavefield {

namespace {

// The FFTW planner is not reentrant; execution on new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

struct Fft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

Fft::Fft(const GridSpec& grid) : plans_(std::make_unique<Plans>()), n_(grid.size()) {
  std::lock_guard lock(planner_mutex());
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_));
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const int n0 = static_cast<int>(grid.axis(0).points);
  if (grid.ndim() == 1) {
    plans_->forward = fftw_plan_dft_1d(n0, buf, buf, FFTW_FORWARD, flags);
    plans_->backward = fftw_plan_dft_1d(n0, buf, buf, FFTW_BACKWARD, flags);
  } else {
    const int n1 = static_cast<int>(grid.axis(1).points);
    plans_->forward = fftw_plan_dft_2d(n0, n1, buf, buf, FFTW_FORWARD, flags);
    plans_->backward = fftw_plan_dft_2d(n0, n1, buf, buf, FFTW_BACKWARD, flags);
  }
  fftw_free(buf);
  if (!plans_->forward || !plans_->backward) throw Error("FFTW planning failed");
}

Fft::~Fft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->backward);
}

void Fft::forward(Complex* data) const { fftw_execute_dft(plans_->forward, as_fftw(data), as_fftw(data)); }

void Fft::backward(Complex* data) const {
  fftw_execute_dft(plans_->backward, as_fftw(data), as_fftw(data));
  const double s = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) data[i] *= s;
}

namespace {

// Wavenumber along `axis` for every flat index, Nyquist zeroed (odd derivative).
std::vector<double> derivative_symbol(const GridSpec& grid, std::size_t axis) {
  std::vector<double> k(grid.size());
  const auto& ax = grid.axis(axis);
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const std::size_t i = grid.unflat(f)[axis];
    k[f] = i == ax.points / 2 ? 0.0 : ax.wavenumber(i);
  }
  return k;
}

}  // namespace

std::vector<Complex> spectral_gradient(const GridWaveFunction& psi, std::size_t axis) {
  const auto& grid = psi.grid();
  if (axis >= grid.ndim()) throw DimensionError("gradient axis out of range");
  const Fft fft(grid);
  const auto k = derivative_symbol(grid, axis);
  const std::size_t n = grid.size();
  std::vector<Complex> out(psi.samples());
  for (std::size_t c = 0; c < psi.spin_dim(); ++c) {
    Complex* d = out.data() + c * n;
    fft.forward(d);
    for (std::size_t f = 0; f < n; ++f) d[f] *= Complex(0.0, k[f]);
    fft.backward(d);
  }
  return out;
}

MomentumDensity momentum_density(const GridWaveFunction& psi, double hbar) {
  const auto& grid = psi.grid();
  const Fft fft(grid);
  const std::size_t n = grid.size();
  std::vector<double> raw(n, 0.0);
  std::vector<Complex> buf(n);
  for (std::size_t c = 0; c < psi.spin_dim(); ++c) {
    std::copy_n(psi.samples().begin() + static_cast<std::ptrdiff_t>(c * n), n, buf.begin());
    fft.forward(buf.data());
    for (std::size_t f = 0; f < n; ++f) raw[f] += std::norm(buf[f]);
  }

  MomentumDensity out;
  double cell = 1.0;
  for (const auto& ax : grid.axes()) {
    std::vector<double> p(ax.points);
    // Ascending order: FFT bin (i + points/2) mod points goes to slot i.
    for (std::size_t i = 0; i < ax.points; ++i) p[i] = hbar * ax.wavenumber((i + ax.points / 2) % ax.points);
    out.cell.push_back(p[1] - p[0]);
    cell *= p[1] - p[0];
    out.p.push_back(std::move(p));
  }
  out.density.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    const auto idx = grid.unflat(f);
    const std::size_t s0 = (idx[0] + grid.axis(0).points / 2) % grid.axis(0).points;
    const std::size_t s1 = grid.ndim() == 2 ? (idx[1] + grid.axis(1).points / 2) % grid.axis(1).points : 0;
    out.density[grid.flat(s0, s1)] = raw[f];
    total += raw[f];
  }
  for (auto& d : out.density) d /= total * cell;
  return out;
}

std::vector<std::vector<double>> probability_current(const GridWaveFunction& psi, const HamiltonianSpec& h) {
  const auto& grid = psi.grid();
  if (h.masses.size() != grid.ndim()) throw DimensionError("one mass per grid axis is required");
  const std::size_t n = grid.size();
  std::vector<std::vector<double>> j(grid.ndim(), std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < grid.ndim(); ++k) {
    const auto g = spectral_gradient(psi, k);
    const double f = h.hbar / h.masses[k];
    for (std::size_t c = 0; c < psi.spin_dim(); ++c)
      for (std::size_t i = 0; i < n; ++i) j[k][i] += f * std::imag(std::conj(psi.at(c, i)) * g[c * n + i]);
  }
  return j;
}

GridWaveFunction apply_hamiltonian(const GridWaveFunction& psi, const HamiltonianSpec& h) {
  const auto& grid = psi.grid();
  if (h.masses.size() != grid.ndim()) throw DimensionError("one mass per grid axis is required");
  const std::size_t n = grid.size(), sd = psi.spin_dim();
  std::vector<double> kin(n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    const auto idx = grid.unflat(f);
    for (std::size_t k = 0; k < grid.ndim(); ++k) {
      const double kk = grid.axis(k).wavenumber(idx[k]);
      kin[f] += h.hbar * h.hbar * kk * kk / (2.0 * h.masses[k]);
    }
  }
  const Fft fft(grid);
  GridWaveFunction out = psi;
  for (std::size_t c = 0; c < sd; ++c) {
    Complex* d = out.samples().data() + c * n;
    fft.forward(d);
    for (std::size_t f = 0; f < n; ++f) d[f] *= kin[f];
    fft.backward(d);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double v = h.scalar.empty() ? 0.0 : h.scalar[i];
    if (!h.spin_matrix.empty()) {
      Eigen::VectorXcd s(static_cast<Eigen::Index>(sd));
      for (std::size_t c = 0; c < sd; ++c) s(static_cast<Eigen::Index>(c)) = psi.at(c, i);
      const Eigen::VectorXcd hs = h.spin_matrix[i] * s + v * s;
      for (std::size_t c = 0; c < sd; ++c) out.at(c, i) += hs(static_cast<Eigen::Index>(c));
    } else {
      for (std::size_t c = 0; c < sd; ++c) {
        const double vc = v + (h.spin_diagonal.empty() ? 0.0 : h.spin_diagonal[c][i]);
        out.at(c, i) += vc * psi.at(c, i);
      }
    }
  }
  return out;
}

std::vector<double> density_rate(const GridWaveFunction& psi, const HamiltonianSpec& h) {
  const auto hpsi = apply_hamiltonian(psi, h);
  const std::size_t n = psi.grid().size();
  std::vector<double> rate(n, 0.0);
  // d/dt |Psi|^2 = 2 Re(conj(Psi) dPsi/dt) with dPsi/dt = -i H Psi / hbar.
  for (std::size_t c = 0; c < psi.spin_dim(); ++c)
    for (std::size_t i = 0; i < n; ++i)
      rate[i] += 2.0 * std::real(std::conj(psi.at(c, i)) * Complex(0.0, -1.0 / h.hbar) * hpsi.at(c, i));
  return rate;
}

}  // namespace pilotwave::wavefield
