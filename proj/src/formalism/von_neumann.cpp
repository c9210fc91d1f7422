#include <algorithm>
#include <cmath>

#include "pilotwave/von_neumann.hpp"

namespace pilotwave::formalism {

namespace {

// Phi(y - shift) by a Fourier phase, exact for band-limited periodic data.
wavefield::GridWaveFunction shifted(const wavefield::GridWaveFunction& phi, double shift) {
  const auto& grid = phi.grid();
  const wavefield::Fft fft(grid);
  auto out = phi;
  auto* d = out.samples().data();
  fft.forward(d);
  for (std::size_t i = 0; i < grid.size(); ++i) d[i] *= std::exp(Complex(0.0, -grid.axis(0).wavenumber(i) * shift));
  fft.backward(d);
  return out;
}

Complex overlap(const wavefield::GridWaveFunction& a, const wavefield::GridWaveFunction& b) {
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) s += std::conj(a.samples()[i]) * b.samples()[i];
  return s * a.grid().cell_volume();
}

}  // namespace

VonNeumannExperiment von_neumann_experiment(const HermitianOperator& a, double gamma_t,
                                            const wavefield::GridWaveFunction& pointer,
                                            const VonNeumannOptions& options) {
  if (pointer.grid().ndim() != 1 || pointer.spin_dim() != 1) throw ValidationError("pointer must be a scalar 1D wave function");
  if (std::abs(pointer.norm_squared() - 1.0) > 1e-6) throw ValidationError("pointer must be normalized");
  if (!std::isfinite(gamma_t)) throw ValidationError("gamma T must be finite");

  VonNeumannExperiment e;
  e.spectral = pvm_of_operator(a);
  e.ready = pointer;
  const auto& outs = e.spectral.outcomes();
  const std::size_t n = outs.size();
  for (const auto& o : outs) {
    e.pointer_positions.push_back(o.label[0] * gamma_t);
    e.pointers.push_back(gamma_t == 0.0 ? pointer : shifted(pointer, e.pointer_positions.back()));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) e.max_overlap = std::max(e.max_overlap, std::abs(overlap(e.pointers[i], e.pointers[j])));
  e.separated = n == 1 || e.max_overlap <= options.overlap_tolerance;

  // Calibration cells: sort the distinct positions and cut at midpoints.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return e.pointer_positions[x] < e.pointer_positions[y]; });
  std::vector<std::vector<std::size_t>> cells;
  for (std::size_t k : order) {
    if (!cells.empty() && e.pointer_positions[cells.back().front()] == e.pointer_positions[k])
      cells.back().push_back(k);
    else
      cells.push_back({k});
  }
  const auto& grid = pointer.grid();
  const auto d = static_cast<Eigen::Index>(a.dim());
  std::vector<Outcome> effects;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double lo = c == 0 ? -INFINITY : 0.5 * (e.pointer_positions[cells[c - 1].front()] + e.pointer_positions[cells[c].front()]);
    const double hi = c + 1 == cells.size() ? INFINITY : 0.5 * (e.pointer_positions[cells[c].front()] + e.pointer_positions[cells[c + 1].front()]);
    CMatrix op = CMatrix::Zero(d, d);
    // O_cell = sum_alpha w_alpha P_alpha: the cross terms vanish because the
    // branches P_alpha psi are orthogonal.
    for (std::size_t alpha = 0; alpha < n; ++alpha) {
      double w = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double y = grid.coords(i)[0];
        if (y >= lo && y < hi) w += std::norm(e.pointers[alpha].at(0, i));
      }
      op += w * grid.cell_volume() * outs[alpha].op;
    }
    effects.push_back({outs[cells[c].front()].label, op});
  }
  e.readout = Povm(std::move(effects), 1e-8);
  for (const auto& o : e.readout.outcomes())
    for (const auto& p : outs)
      if (same_label(o.label, p.label)) e.ideal_deviation = std::max(e.ideal_deviation, hilbert::max_abs(o.op - p.op));

  CMatrix u0 = CMatrix::Identity(d, d);
  if (options.h0) {
    if (options.h0->dim() != a.dim()) throw DimensionError("H0 dimension does not match A");
    const std::vector<HermitianOperator> pair{a, *options.h0};
    if (!hilbert::commuting_family(pair)) throw ValidationError("H0 must commute with A");
    u0 = hilbert::UnitaryOperator::evolution(*options.h0, options.duration, options.hbar).matrix();
  }
  std::vector<Outcome> rs;
  for (const auto& o : outs) rs.push_back({o.label, u0 * o.op});
  e.measurement = StrongMeasurement(std::move(rs), Mode::Strong);
  return e;
}

std::vector<Complex> VonNeumannExperiment::apply(const StateVector& psi) const {
  const std::size_t d = spectral.dim(), n = ready.grid().size();
  if (psi.dim() != d) throw DimensionError("state dimension does not match A");
  std::vector<Complex> out(d * n, 0.0);
  for (std::size_t alpha = 0; alpha < pointers.size(); ++alpha) {
    const CVector branch = measurement.outcomes()[alpha].op * psi.amplitudes();
    for (std::size_t s = 0; s < d; ++s)
      for (std::size_t y = 0; y < n; ++y) out[s * n + y] += branch(static_cast<Eigen::Index>(s)) * pointers[alpha].at(0, y);
  }
  return out;
}

}  // namespace pilotwave::formalism
