#include <cmath>

#include "pilotwave/experiments.hpp"

namespace pilotwave::experiments {

using wavefield::Complex;

double RunRecord::frequency(const Label& l) const {
  const auto it = frequencies.find(formalism::canonical(l));
  return it == frequencies.end() ? 0.0 : it->second;
}

RunRecord run(const ExperimentSpec& spec, const GridWaveFunction& initial, std::size_t n, std::uint64_t seed) {
  if (!(initial.grid() == spec.grid)) throw DimensionError("initial state is not on the experiment grid");
  if (!spec.calibration) throw ValidationError("experiment has no calibration");
  const auto ens = bohm::sample_equilibrium(initial, n, seed);
  const auto flow = bohm::transport(initial, spec.hamiltonian, spec.dt(), spec.steps, ens.members, spec.flow);

  RunRecord r;
  r.name = spec.name;
  r.seed = seed;
  r.warnings = spec.warnings;
  r.trials.resize(n);
  std::size_t done = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& tr = flow.trajectories[i];
    auto& t = r.trials[i];
    t.initial = ens.members[i];
    t.final = tr.end();
    t.status = tr.status;
    if (!tr.completed()) continue;
    t.label = formalism::canonical(spec.calibration(t.final));
    r.frequencies[t.label] += 1.0;
    if (r.mean.empty()) r.mean.assign(t.label.size(), 0.0), r.variance.assign(t.label.size(), 0.0);
    ++done;
    // Welford update per component
    for (std::size_t k = 0; k < r.mean.size(); ++k) {
      const double x = t.label[k], delta = x - r.mean[k];
      r.mean[k] += delta / static_cast<double>(done);
      r.variance[k] += delta * (x - r.mean[k]);
    }
  }
  for (auto& [l, f] : r.frequencies) f /= static_cast<double>(done);
  if (done > 0)
    for (auto& v : r.variance) v /= static_cast<double>(done);
  r.aborted = flow.aborted;
  r.flagged = static_cast<double>(flow.aborted) > 5e-3 * static_cast<double>(n);
  return r;
}

RunRecord run(const ExperimentSpec& spec, const StateVector& psi, std::size_t n, std::uint64_t seed) {
  if (!spec.prepare) throw ValidationError("experiment takes a grid wave function as its initial state");
  return run(spec, spec.prepare(psi), n, seed);
}

formalism::Povm povm_of_experiment(const ExperimentSpec& spec, const std::vector<GridWaveFunction>& basis) {
  if (basis.empty()) throw ValidationError("empty system basis");
  const std::size_t k = basis.size(), size = spec.grid.size();
  const double dv = spec.grid.cell_volume();
  for (std::size_t i = 0; i < k; ++i) {
    if (!(basis[i].grid() == spec.grid) || basis[i].spin_dim() != basis[0].spin_dim())
      throw DimensionError("basis element does not match the experiment grid");
    for (std::size_t j = 0; j <= i; ++j) {
      Complex g = 0.0;
      for (std::size_t s = 0; s < basis[i].samples().size(); ++s)
        g += std::conj(basis[i].samples()[s]) * basis[j].samples()[s];
      if (std::abs(g * dv - (i == j ? 1.0 : 0.0)) > 1e-6) throw ValidationError("system basis is not orthonormal");
    }
  }

  std::vector<GridWaveFunction> out;
  out.reserve(k);
  for (const auto& b : basis)
    out.push_back(wavefield::evolve(b, spec.hamiltonian, spec.dt(), spec.steps, {}, spec.flow.evolve));

  std::map<Label, std::vector<std::size_t>> cells;
  for (std::size_t f = 0; f < size; ++f) cells[formalism::canonical(spec.calibration(spec.grid.coords(f)))].push_back(f);

  const std::size_t spin = basis[0].spin_dim();
  std::vector<formalism::Outcome> outcomes;
  hilbert::CMatrix total = hilbert::CMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (const auto& [label, nodes] : cells) {
    hilbert::CMatrix o = hilbert::CMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i; j < k; ++j) {
        Complex acc = 0.0;
        for (std::size_t c = 0; c < spin; ++c)
          for (std::size_t f : nodes) acc += std::conj(out[i].at(c, f)) * out[j].at(c, f);
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        o(ii, jj) = acc * dv;
        o(jj, ii) = std::conj(o(ii, jj));
      }
    total += o;
    outcomes.push_back({label, o});
  }
  const double residual = hilbert::max_abs(total - hilbert::identity(k));
  if (residual > 1e-4)
    throw QuadratureError("experiment effects close only to " + std::to_string(residual) + " (grid or duration too coarse)");
  return formalism::Povm(std::move(outcomes), 1e-4);
}

formalism::Povm povm_of_experiment(const ExperimentSpec& spec, const std::vector<StateVector>& basis) {
  if (!spec.prepare) throw ValidationError("experiment takes grid wave functions as system states");
  std::vector<GridWaveFunction> grid_basis;
  grid_basis.reserve(basis.size());
  for (const auto& b : basis) grid_basis.push_back(spec.prepare(b));
  return povm_of_experiment(spec, grid_basis);
}

ExperimentSpec extend(const ExperimentSpec& spec, const wavefield::Axis& spectator, double mass) {
  if (spec.grid.ndim() != 1) throw DimensionError("only line experiments can be extended");
  ExperimentSpec e = spec;
  e.name = spec.name + "+spectator";
  e.grid = GridSpec({spec.grid.axis(0), spectator});
  const std::size_t nz = spec.grid.size(), nw = spectator.points;
  const auto widen = [&](const std::vector<double>& v) {
    std::vector<double> out(nz * nw);
    for (std::size_t i = 0; i < nz; ++i)
      for (std::size_t j = 0; j < nw; ++j) out[i * nw + j] = v[i];
    return out;
  };
  auto& h = e.hamiltonian;
  h.masses = {spec.hamiltonian.masses.at(0), mass};
  if (!h.scalar.empty()) h.scalar = widen(spec.hamiltonian.scalar);
  for (auto& d : h.spin_diagonal) d = widen(d);
  if (!h.spin_matrix.empty()) {
    h.spin_matrix.clear();
    h.spin_matrix.reserve(nz * nw);
    for (std::size_t i = 0; i < nz; ++i)
      for (std::size_t j = 0; j < nw; ++j) h.spin_matrix.push_back(spec.hamiltonian.spin_matrix[i]);
  }
  const Calibration inner = spec.calibration;
  e.calibration = [inner](const Configuration& q) { return inner({q[0], 0.0}); };
  e.prepare = {};
  return e;
}

}  // namespace pilotwave::experiments
