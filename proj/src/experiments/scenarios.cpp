#include <algorithm>
#include <cmath>

#include "pilotwave/experiments.hpp"
#include "pilotwave/parallel.hpp"

namespace pilotwave::experiments {

using wavefield::Complex;
namespace analytic = wavefield::analytic;

namespace {

std::size_t pow2_at_least(double x, std::size_t floor) {
  std::size_t n = floor;
  while (static_cast<double>(n) < x) n *= 2;
  return n;
}

// Nodes at cell centers, so 0 is a cell edge and sign readouts split the
// grid into whole cells.
wavefield::Axis edge_centered(double half, std::size_t points) {
  const double h = 2.0 * half / static_cast<double>(points);
  return {-half + 0.5 * h, half + 0.5 * h, points};
}

double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

// Sign readout relative to the magnet polarity; z == 0 reads +1.
double polarity_sign(double z, double a) { return z == 0.0 ? 1.0 : sign_of(a) * sign_of(z); }

std::size_t stride_for(double dt, double interval) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(interval / dt)));
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ValidationError(std::string(what) + " must be positive");
}

}  // namespace

double stern_gerlach_offset(const SternGerlachParams& p, int s) {
  return s * p.a * p.duration * p.duration / (2.0 * p.mass);
}

ExperimentSpec stern_gerlach(const SternGerlachParams& p) {
  require_positive(p.d, "packet width");
  require_positive(p.duration, "duration");
  require_positive(p.mass, "mass");
  require_positive(p.hbar, "hbar");
  if (p.readout == Readout::SpinOperator && p.a == 0.0) throw ValidationError("spin-operator readout needs a != 0");
  const double zbar = std::abs(stern_gerlach_offset(p, 1));
  const double width = analytic::free_gaussian_width(p.duration, p.d, p.mass, p.hbar);
  const double extent = zbar + 6.0 * width;
  const double half = p.half_width > 0.0 ? p.half_width : std::ceil(extent + 2.0 * width);
  const std::size_t points = p.points > 0 ? p.points : pow2_at_least(2.0 * half / 0.0625, 256);

  ExperimentSpec s;
  s.name = "stern-gerlach";
  s.grid = GridSpec({edge_centered(half, points)});
  s.hamiltonian = HamiltonianSpec::free(1, p.mass, p.hbar).with_stern_gerlach(s.grid, p.a, p.b);
  s.duration = p.duration;
  s.steps = p.steps > 0 ? p.steps
                        : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(
                                                       p.duration * (std::abs(p.b) + std::abs(p.a) * extent) /
                                                       (0.095 * p.hbar))));
  s.flow.snapshot_stride = stride_for(s.dt(), 0.02);
  if (zbar < 3.0 * width) s.warnings.push_back("packets end less than three widths apart; outcomes overlap");

  const GridSpec grid = s.grid;
  s.prepare = [grid, p](const StateVector& spin) {
    if (spin.dim() != 2) throw DimensionError("Stern-Gerlach system state must be a 2-spinor");
    auto psi = GridWaveFunction::from_function(grid, 2, [&](std::size_t c, const wavefield::Point& q) {
      return spin[c] * analytic::free_gaussian(q[0], 0.0, 0.0, p.d, 0.0, p.mass, p.hbar);
    });
    psi.normalize();
    return psi;
  };
  if (p.readout == Readout::Sign) {
    s.calibration = [a = p.a](const Configuration& q) { return Label{polarity_sign(q[0], a)}; };
  } else {
    const double scale = 2.0 * p.mass / (p.a * p.duration * p.duration);
    s.calibration = [scale](const Configuration& q) { return Label{scale * q[0]}; };
  }
  return s;
}

ExperimentSpec time_of_flight(const TimeOfFlightParams& p) {
  require_positive(p.duration, "duration");
  require_positive(p.mass, "mass");
  if (p.steps == 0) throw ValidationError("time of flight needs at least one step");
  ExperimentSpec s;
  s.name = "time-of-flight";
  s.grid = GridSpec::line(-p.half_width, p.half_width, p.points);
  s.hamiltonian = HamiltonianSpec::free(1, p.mass, p.hbar);
  s.duration = p.duration;
  s.steps = p.steps;
  const double scale = p.mass / p.duration;
  s.calibration = [scale](const Configuration& q) { return Label{scale * q[0]}; };
  return s;
}

GridWaveFunction time_of_flight_gaussian(const TimeOfFlightParams& p) {
  require_positive(p.d, "packet width");
  auto psi = analytic::sample(GridSpec::line(-p.half_width, p.half_width, p.points), 0.0, [&](const wavefield::Point& q) {
    return analytic::free_gaussian(q[0], 0.0, 0.0, p.d, 0.0, p.mass, p.hbar);
  });
  psi.normalize();
  return psi;
}

TimeOfFlightReport time_of_flight_momentum(const TimeOfFlightParams& p, const GridWaveFunction& psi0, std::size_t n,
                                           std::uint64_t seed) {
  const auto spec = time_of_flight(p);
  TimeOfFlightReport r;
  r.record = run(spec, psi0, n, seed);

  const auto md = wavefield::momentum_density(psi0, p.hbar);
  const auto& pk = md.p[0];
  const wavefield::Axis paxis{pk.front(), pk.front() + md.cell[0] * static_cast<double>(pk.size()), pk.size()};
  const auto [lo, hi] = bohm::support_range(paxis, md.density);

  std::vector<double> labels;
  labels.reserve(n);
  for (const auto& t : r.record.trials)
    if (t.status == bohm::TrajectoryStatus::Completed) labels.push_back(t.label[0]);
  r.tv_sampled = bohm::tv_distance(labels, paxis, md.density, lo, hi);

  const auto psi_t = wavefield::evolve(psi0, spec.hamiltonian, spec.dt(), spec.steps, {}, spec.flow.evolve);
  const double scale = p.mass / p.duration;
  const auto& x = spec.grid.axis(0);
  const wavefield::Axis scaled{x.min * scale, x.max * scale, x.points};
  r.tv_exact = bohm::tv_distance(scaled, psi_t.density(), paxis, md.density, lo, hi);
  return r;
}

CoupledOscillatorReport coupled_oscillator(std::size_t n, std::uint64_t seed, const CoupledOscillatorParams& p) {
  const auto grid = GridSpec::square(-p.half_width, p.half_width, p.points);
  const auto h = HamiltonianSpec::free(2).with_potential(grid, [](const wavefield::Point& q) {
    const double u = q[0] - q[1];
    return 0.25 * u * u;
  });
  const auto psi0 = analytic::sample(grid, 0.0, [](const wavefield::Point& q) { return analytic::two_particle(q, 0.0); });
  const auto ens = bohm::sample_equilibrium(psi0, n, seed);
  std::vector<Configuration> starts = ens.members;
  for (const auto& q : ens.members) starts.push_back({q[1], q[0]});

  bohm::FlowOptions opts;
  opts.integrate.record_path = true;
  const auto steps = static_cast<std::size_t>(std::lround(p.duration / p.dt));
  const auto flow = bohm::transport(psi0, h, p.dt, steps, starts, opts);

  CoupledOscillatorReport r;
  r.n = n;
  r.aborted = flow.aborted;
  r.starts = ens.members;
  r.ends.resize(n);
  r.errors.assign(n, std::nan(""));
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto& tr = flow.trajectories[i];
    if (!tr.completed()) continue;
    const auto& q0 = starts[i];
    double e = 0.0;
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
      const double a = analytic::two_particle_a(tr.times[j]), b = analytic::two_particle_b(tr.times[j]);
      e = std::max({e, std::abs(tr.points[j][0] - (a * q0[0] + b * q0[1])), std::abs(tr.points[j][1] - (b * q0[0] + a * q0[1]))});
    }
    r.max_error = std::max(r.max_error, e);
    if (i < n) r.errors[i] = e, r.ends[i] = tr.end();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto &x = flow.trajectories[i], &y = flow.trajectories[n + i];
    if (!x.completed() || !y.completed()) continue;
    r.symmetry_error = std::max({r.symmetry_error, std::abs(x.end()[0] - y.end()[1]), std::abs(x.end()[1] - y.end()[0])});
  }
  return r;
}

ParadoxReport oscillator2d_paradox(const std::vector<double>& probe_radii, std::size_t n, std::uint64_t seed,
                                   const ParadoxParams& p) {
  const auto grid = GridSpec::square(-p.half_width, p.half_width, p.points);
  const double omega = p.omega;
  const auto h = HamiltonianSpec::free(2).with_potential(grid, [omega](const wavefield::Point& q) {
    return 0.5 * omega * omega * (q[0] * q[0] + q[1] * q[1]);
  });
  auto psi = analytic::sample(grid, 0.0, [omega](const wavefield::Point& q) { return analytic::oscillator2d_11(q, 0.0, omega); });
  psi.normalize();
  bohm::GuidanceOptions g;
  g.order = 8;
  g.mode = bohm::VelocityInterpolation::Ratio;
  const bohm::GuidanceField field(psi, h, g);

  ParadoxReport r;
  r.n = n;
  for (double rad : probe_radii) {
    const double expected = h.hbar / (h.masses[0] * rad * rad);
    for (int k = 0; k < 8; ++k) {
      const double phi = 0.3 + k * M_PI / 4.0;
      const Configuration q{rad * std::cos(phi), rad * std::sin(phi)};
      const auto v = field.velocity(q);
      const double w = (q[0] * v[1] - q[1] * v[0]) / (rad * rad);
      const double radial = (q[0] * v[0] + q[1] * v[1]) / (rad * rad);
      r.angular_velocity_error =
          std::max({r.angular_velocity_error, std::abs(w - expected) / expected, std::abs(radial) / expected});
    }
  }

  const auto ens = bohm::sample_equilibrium(psi, n, seed);
  std::vector<Configuration> ends(n);
  std::vector<bohm::TrajectoryStatus> status(n);
  const bohm::VelocityFn v = [&](double, const Configuration& q) { return field.velocity(q); };
  parallel_for(n, 0, [&](std::size_t i) {
    Configuration q = ens.members[i];
    double t = 0.0, step = 0.05;
    status[i] = bohm::advance(v, grid, q, t, p.tau, step, {});
    ends[i] = q;
  });

  std::vector<Configuration> starts, finals;
  std::vector<double> disp;
  for (std::size_t i = 0; i < n; ++i) {
    const double moved = std::hypot(ends[i][0] - ens.members[i][0], ends[i][1] - ens.members[i][1]);
    r.trials.push_back({ens.members[i], ends[i], {moved}, status[i]});
    if (status[i] != bohm::TrajectoryStatus::Completed) {
      ++r.aborted;
      continue;
    }
    starts.push_back(ens.members[i]);
    finals.push_back(ends[i]);
    disp.push_back(std::hypot(ends[i][0] - ens.members[i][0], ends[i][1] - ens.members[i][1]));
  }
  if (disp.empty()) throw NumericalGuardError("every paradox trajectory aborted");
  r.tv = bohm::tv_to_density(finals, grid, psi.density());
  const auto rho = psi.density();
  for (std::size_t k = 0; k < 2; ++k) {
    const auto m = bohm::marginal(grid, rho, k);
    const auto [lo, hi] = bohm::support_range(grid.axis(k), m);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < starts.size(); ++i) a.push_back(starts[i][k]), b.push_back(finals[i][k]);
    r.tv_two_sample = std::max(r.tv_two_sample, bohm::tv_distance(a, b, lo, hi));
  }
  std::size_t moved = 0;
  for (double d : disp) moved += d > 0.05;
  r.fraction_displaced = static_cast<double>(moved) / static_cast<double>(disp.size());
  std::nth_element(disp.begin(), disp.begin() + static_cast<std::ptrdiff_t>(disp.size() / 2), disp.end());
  r.median_displacement = disp[disp.size() / 2];
  return r;
}

namespace {

// Columns: eigenvectors of n . sigma for +1 then -1.
hilbert::CMatrix eigenbasis(const Direction& n) {
  const Eigen::SelfAdjointEigenSolver<hilbert::CMatrix> es(hilbert::spin_along(n).matrix());
  hilbert::CMatrix v(2, 2);
  v.col(0) = es.eigenvectors().col(1);
  v.col(1) = es.eigenvectors().col(0);
  return v;
}

}  // namespace

ExperimentSpec eprb(const EprbParams& p) {
  require_positive(p.d, "packet width");
  require_positive(p.duration, "duration");
  const double zbar = std::abs(p.a) * p.duration * p.duration / 2.0;
  const double width = analytic::free_gaussian_width(p.duration, p.d);
  const double extent = zbar + 6.0 * width;
  if (extent > p.half_width) throw ValidationError("EPRB packets would leave the grid; widen half_width");

  ExperimentSpec s;
  s.name = "eprb";
  const auto axis = edge_centered(p.half_width, p.points);
  s.grid = GridSpec({axis, axis});
  s.hamiltonian = HamiltonianSpec::free(2);
  const std::size_t size = s.grid.size();
  s.hamiltonian.spin_diagonal.assign(4, std::vector<double>(size));
  for (std::size_t f = 0; f < size; ++f) {
    const auto q = s.grid.coords(f);
    const double e1 = p.b + p.a * q[0], e2 = p.b + p.a * q[1];
    s.hamiltonian.spin_diagonal[0][f] = -e1 - e2;
    s.hamiltonian.spin_diagonal[1][f] = -e1 + e2;
    s.hamiltonian.spin_diagonal[2][f] = e1 - e2;
    s.hamiltonian.spin_diagonal[3][f] = e1 + e2;
  }
  s.duration = p.duration;
  s.steps = p.steps > 0 ? p.steps
                        : static_cast<std::size_t>(
                              std::ceil(p.duration * 2.0 * (std::abs(p.b) + std::abs(p.a) * extent) / 0.095));
  s.flow.snapshot_stride = stride_for(s.dt(), 0.02);
  if (zbar < 3.0 * width) s.warnings.push_back("packets end less than three widths apart; outcomes overlap");

  const hilbert::CMatrix to_local = hilbert::tensor_product(eigenbasis(p.first), eigenbasis(p.second)).adjoint();
  const GridSpec grid = s.grid;
  const double d = p.d;
  s.prepare = [grid, to_local, d](const StateVector& spin) {
    if (spin.dim() != 4) throw DimensionError("EPRB system state must live in C^2 (x) C^2");
    const hilbert::CVector local = to_local * spin.amplitudes();
    auto psi = GridWaveFunction::from_function(grid, 4, [&](std::size_t c, const wavefield::Point& q) {
      return local(static_cast<Eigen::Index>(c)) * analytic::free_gaussian(q[0], 0.0, 0.0, d, 0.0) *
             analytic::free_gaussian(q[1], 0.0, 0.0, d, 0.0);
    });
    psi.normalize();
    return psi;
  };
  s.calibration = [a = p.a](const Configuration& q) { return Label{polarity_sign(q[0], a), polarity_sign(q[1], a)}; };
  return s;
}

RunRecord eprb_run(const EprbParams& p, std::size_t n, std::uint64_t seed) {
  return run(eprb(p), hilbert::singlet(), n, seed);
}

double anticorrelation(const RunRecord& r) {
  std::size_t done = 0, anti = 0;
  for (const auto& t : r.trials) {
    if (t.status != bohm::TrajectoryStatus::Completed) continue;
    if (t.label.size() != 2) throw DimensionError("anticorrelation needs two-wing labels");
    ++done;
    anti += t.label[0] == -t.label[1];
  }
  if (done == 0) throw ValidationError("no completed trials");
  return static_cast<double>(anti) / static_cast<double>(done);
}

double flip_fraction(const RunRecord& a, const RunRecord& b) {
  if (a.trials.size() != b.trials.size() || a.seed != b.seed)
    throw ValidationError("flip fraction needs two runs with the same seed and size");
  std::size_t done = 0, flips = 0;
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    const auto &x = a.trials[i], &y = b.trials[i];
    if (x.status != bohm::TrajectoryStatus::Completed || y.status != bohm::TrajectoryStatus::Completed) continue;
    ++done;
    flips += x.label[0] != y.label[0];
  }
  if (done == 0) throw ValidationError("no trial completed in both runs");
  return static_cast<double>(flips) / static_cast<double>(done);
}

double eprb_flip_fraction_quadrature(const EprbParams& p, const EprbParams& q, std::size_t subdivisions) {
  if (subdivisions == 0) throw ValidationError("subdivisions must be positive");
  const auto sp = eprb(p), sq = eprb(q);
  if (!(sp.grid == sq.grid) || p.d != q.d) throw ValidationError("setting pairs must share the grid and ready state");
  const auto psi0 = sp.prepare(hilbert::singlet());
  const auto rho = psi0.density();
  const double peak = *std::max_element(rho.begin(), rho.end());
  std::vector<Configuration> starts;
  std::vector<double> weights;
  // k x k sub-cell midpoints per cell: the law sample_equilibrium draws from
  const std::size_t k = subdivisions;
  const double h0 = sp.grid.axis(0).spacing(), h1 = sp.grid.axis(1).spacing();
  for (std::size_t f = 0; f < rho.size(); ++f) {
    if (rho[f] < 1e-6 * peak) continue;
    const auto c = sp.grid.coords(f);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        starts.push_back({c[0] + h0 * ((static_cast<double>(i) + 0.5) / static_cast<double>(k) - 0.5),
                          c[1] + h1 * ((static_cast<double>(j) + 0.5) / static_cast<double>(k) - 0.5)});
        weights.push_back(rho[f]);
      }
  }
  const auto fp = bohm::transport(psi0, sp.hamiltonian, sp.dt(), sp.steps, starts, sp.flow);
  const auto fq = bohm::transport(sq.prepare(hilbert::singlet()), sq.hamiltonian, sq.dt(), sq.steps, starts, sq.flow);
  double total = 0.0, flipped = 0.0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto &x = fp.trajectories[i], &y = fq.trajectories[i];
    if (!x.completed() || !y.completed()) continue;
    total += weights[i];
    if (sp.calibration(x.end())[0] != sq.calibration(y.end())[0]) flipped += weights[i];
  }
  if (!(total > 0.0)) throw NumericalGuardError("no quadrature trajectory completed");
  return flipped / total;
}

}  // namespace pilotwave::experiments
