#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>

#include "pilotwave/bohm.hpp"
#include "pilotwave/parallel.hpp"

namespace pilotwave::bohm {

std::string to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::Completed:
      return "completed";
    case TrajectoryStatus::AbortedNearNode:
      return "aborted-near-node";
    case TrajectoryStatus::LeftGrid:
      return "left-grid";
  }
  return "unknown";
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
// Fifth minus fourth order weights.
constexpr double kE[7] = {71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

}  // namespace

TrajectoryStatus advance(const VelocityFn& v, const GridSpec& grid, Configuration& q, double& t, double t1, double& step,
                         const IntegrateOptions& options, Trajectory* path) {
  if (!(options.tol > 0.0)) throw ValidationError("integration tolerance must be positive");
  const std::size_t nd = grid.ndim();
  const double span = t1 - t;
  if (span == 0.0) return TrajectoryStatus::Completed;
  const double dir = span > 0 ? 1.0 : -1.0;
  if (!(step > 0.0) || !std::isfinite(step)) step = std::abs(span);
  const bool record = path && options.record_path;

  std::array<Configuration, 7> k{};
  try {
    k[0] = v(t, q);
  } catch (const NearNodeError&) {
    return TrajectoryStatus::AbortedNearNode;
  } catch (const WrapAroundError&) {
    return TrajectoryStatus::LeftGrid;
  }

  int shrinks = 0;
  auto failure = TrajectoryStatus::AbortedNearNode;
  while (dir * (t1 - t) > 0.0) {
    const double remaining = std::abs(t1 - t);
    double h = std::min(step, remaining);
    const bool last = h >= remaining * (1.0 - 1e-12);
    if (last) h = remaining;
    const double hs = dir * h;

    Configuration y5 = q;
    bool node = false, outside = false;
    try {
      for (int s = 1; s < 7; ++s) {
        Configuration y = q;
        for (std::size_t d = 0; d < nd; ++d)
          for (int r = 0; r < s; ++r) y[d] += hs * kA[s][r] * k[static_cast<std::size_t>(r)][d];
        if (s == 6) y5 = y;
        k[static_cast<std::size_t>(s)] = v(t + kC[s] * hs, y);
      }
    } catch (const NearNodeError&) {
      node = true;
    } catch (const WrapAroundError&) {
      outside = true;
    }
    if (node || outside) {
      failure = node ? TrajectoryStatus::AbortedNearNode : TrajectoryStatus::LeftGrid;
      step = h / 4.0;
      if (++shrinks > options.max_shrinks || step < 1e-14 * std::max(1.0, std::abs(t))) return failure;
      continue;
    }

    double err = 0.0;
    for (std::size_t d = 0; d < nd; ++d) {
      double e = 0.0;
      for (std::size_t s = 0; s < 7; ++s) e += kE[s] * k[s][d];
      err = std::max(err, std::abs(hs * e));
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(options.tol / err, 0.2), 0.2, 5.0);
    if (err <= options.tol) {
      t = last ? t1 : t + hs;
      q = y5;
      k[0] = k[6];
      shrinks = 0;
      step = last ? std::max(step, h * factor) : h * factor;
      if (record) {
        path->times.push_back(t);
        path->points.push_back(q);
      }
    } else {
      step = h * factor;
    }
    if (step < 1e-14 * std::max(1.0, std::abs(t))) return failure;
  }
  return TrajectoryStatus::Completed;
}

FieldHistory FieldHistory::record(const GridWaveFunction& psi0, const HamiltonianSpec& h, double dt, std::size_t steps,
                                  GuidanceOptions options) {
  FieldHistory out;
  out.dt_ = dt;
  out.fields_.reserve(steps + 1);
  out.fields_.emplace_back(psi0, h, options);
  wavefield::evolve(psi0, h, dt, steps, [&](const GridWaveFunction& psi) { out.fields_.emplace_back(psi, h, options); });
  return out;
}

Configuration FieldHistory::velocity(double t, const Configuration& q) const {
  const double slack = 1e-9 * dt_;
  if (t < t_begin() - slack || t > t_end() + slack) throw ValidationError("time outside the recorded field history");
  if (fields_.size() == 1) return fields_.front().velocity(q);
  const double x = (t - t_begin()) / dt_;
  const auto i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(x))), fields_.size() - 2);
  const double theta = x - static_cast<double>(i);
  return fields_[i].velocity_towards(fields_[i + 1], theta, q);
}

Trajectory integrate(const FieldHistory& history, const Configuration& q0, double t0, double t1,
                     const IntegrateOptions& options) {
  Trajectory tr;
  tr.times.push_back(t0);
  tr.points.push_back(q0);
  Configuration q = q0;
  double t = t0, step = 0.0;
  const VelocityFn field = [&](double s, const Configuration& x) { return history.velocity(s, x); };
  // Segment by segment, so no step straddles the kinks of the piecewise
  // linear time interpolation.
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  while (tr.completed() && dir * (t1 - t) > 0.0) {
    const double x = (t - history.t_begin()) / history.dt();
    const double k = dir > 0 ? std::floor(x + 1e-9) + 1.0 : std::ceil(x - 1e-9) - 1.0;
    const double edge = history.t_begin() + k * history.dt();
    const double target = dir > 0 ? std::min(edge, t1) : std::max(edge, t1);
    tr.status = advance(field, history.grid(), q, t, target, step, options, &tr);
  }
  if (!options.record_path) {
    tr.times.push_back(t);
    tr.points.push_back(q);
  }
  return tr;
}

FlowResult transport(const GridWaveFunction& psi0, const HamiltonianSpec& h, double dt, std::size_t steps,
                     const std::vector<Configuration>& starts, const FlowOptions& options,
                     const std::function<void(const GridWaveFunction&)>& on_step) {
  const auto& grid = psi0.grid();
  const std::size_t n = starts.size();
  FlowResult out;
  out.trajectories.resize(n);
  std::vector<Configuration> q = starts;
  std::vector<double> t(n, psi0.time()), step(n, dt);
  auto prev = std::make_unique<GuidanceField>(psi0, h, options.guidance);
  for (std::size_t i = 0; i < n; ++i) {
    auto& tr = out.trajectories[i];
    tr.times.push_back(t[i]);
    tr.points.push_back(q[i]);
    try {
      prev->velocity(q[i]);
    } catch (const NearNodeError&) {
      tr.status = TrajectoryStatus::AbortedNearNode;
    } catch (const WrapAroundError&) {
      tr.status = TrajectoryStatus::LeftGrid;
    }
  }

  if (options.snapshot_stride == 0) throw ValidationError("snapshot stride must be positive");
  std::size_t taken = 0;
  auto segment = [&](const GridWaveFunction& psi) {
    ++taken;
    if (taken % options.snapshot_stride != 0 && taken != steps) {
      if (on_step) on_step(psi);
      return;
    }
    auto cur = std::make_unique<GuidanceField>(psi, h, options.guidance);
    const GuidanceField& a = *prev;
    const GuidanceField& b = *cur;
    const double t0 = a.time(), len = b.time() - a.time();
    const VelocityFn field = [&](double s, const Configuration& x) { return a.velocity_towards(b, (s - t0) / len, x); };
    parallel_for(n, options.threads, [&](std::size_t i) {
      auto& tr = out.trajectories[i];
      if (!tr.completed()) return;
      tr.status = advance(field, grid, q[i], t[i], b.time(), step[i], options.integrate, &tr);
    });
    prev = std::move(cur);
    if (on_step) on_step(psi);
  };
  out.final_state = steps == 0 ? psi0 : wavefield::evolve(psi0, h, dt, steps, segment, options.evolve);

  for (std::size_t i = 0; i < n; ++i) {
    auto& tr = out.trajectories[i];
    if (!options.integrate.record_path || tr.times.back() != t[i]) {
      tr.times.push_back(t[i]);
      tr.points.push_back(q[i]);
    }
    if (!tr.completed()) ++out.aborted;
  }
  return out;
}

void write_trajectories(const std::vector<Trajectory>& trajectories, std::size_t ndim, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << std::setprecision(17) << "id,t";
  for (std::size_t k = 0; k < ndim; ++k) os << ",q" << k;
  os << ",status\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& tr = trajectories[i];
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
      os << i << ',' << tr.times[j];
      for (std::size_t k = 0; k < ndim; ++k) os << ',' << tr.points[j][k];
      os << ',' << to_string(tr.status) << '\n';
    }
  }
}

}  // namespace pilotwave::bohm
