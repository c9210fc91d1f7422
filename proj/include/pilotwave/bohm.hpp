#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pilotwave/wavefield.hpp"

/// The guiding equation dQ/dt = v^Psi(Q): velocity fields sampled from grid
/// wave functions, adaptive trajectory integration, quantum-equilibrium
/// ensembles and conditional wave functions.
namespace pilotwave::bohm {

using wavefield::GridSpec;
using wavefield::GridWaveFunction;
using wavefield::HamiltonianSpec;

/// A point in configuration space; entries past grid.ndim() are ignored.
using Configuration = wavefield::Point;

/// How v is obtained between grid nodes. Direct interpolation of v is exact
/// for linear velocity fields and robust in Gaussian tails; the ratio of
/// interpolated J and rho stays accurate where v is singular (nodes, vortex
/// cores). Hybrid takes the ratio only when the stencil's min/max density
/// ratio falls below smooth_ratio.
enum class VelocityInterpolation { Hybrid, Direct, Ratio };

struct GuidanceOptions {
  /// Lagrange interpolation stencil per axis (even, 2..10). 4 is cubic.
  int order = 4;
  /// Densities below node_floor x peak count as a node.
  double node_floor = 1e-12;
  VelocityInterpolation mode = VelocityInterpolation::Hybrid;
  double smooth_ratio = 1e-3;
};

/// rho, J and v = J/rho of one wave function, ready for interpolation.
class GuidanceField {
 public:
  GuidanceField(const GridWaveFunction& psi, const HamiltonianSpec& h, GuidanceOptions options = {});

  const GridSpec& grid() const { return grid_; }
  double time() const { return time_; }
  double peak_density() const { return peak_; }
  const std::vector<double>& density() const { return rho_; }
  const std::vector<double>& current(std::size_t axis) const { return j_[axis]; }
  const std::vector<double>& velocity(std::size_t axis) const { return v_[axis]; }

  /// Interpolated velocity. Throws NearNodeError when the density at q is
  /// below the node floor and WrapAroundError when q is outside the grid.
  Configuration velocity(const Configuration& q) const;
  /// (1 - theta) v_this(q) + theta v_next(q); both fields share one stencil.
  Configuration velocity_towards(const GuidanceField& next, double theta, const Configuration& q) const;
  double density(const Configuration& q) const;

 private:
  struct Stencil;
  Stencil stencil(const Configuration& q) const;
  double interpolate(const std::vector<double>& field, const Stencil& s) const;
  Configuration velocity_at(const Stencil& s) const;

  GridSpec grid_;
  double time_ = 0.0;
  GuidanceOptions options_;
  double peak_ = 0.0;
  std::vector<double> rho_;
  std::vector<std::vector<double>> j_, v_;
};

/// v_k = (hbar/m_k) Im(Psi^dagger d_k Psi) / (Psi^dagger Psi) at q.
Configuration velocity(const GridWaveFunction& psi, const Configuration& q, const HamiltonianSpec& h,
                       GuidanceOptions options = {});

enum class TrajectoryStatus { Completed, AbortedNearNode, LeftGrid };
std::string to_string(TrajectoryStatus s);

struct Trajectory {
  std::vector<double> times;
  std::vector<Configuration> points;
  TrajectoryStatus status = TrajectoryStatus::Completed;

  const Configuration& end() const { return points.back(); }
  bool completed() const { return status == TrajectoryStatus::Completed; }
};

struct IntegrateOptions {
  /// Absolute local error per accepted step.
  double tol = 1e-9;
  /// Consecutive 4x step reductions tolerated near a node before aborting.
  int max_shrinks = 20;
  /// Keep every accepted step; otherwise only the start and end points.
  bool record_path = false;
};

using VelocityFn = std::function<Configuration(double, const Configuration&)>;

/// Dormand-Prince 5(4) from (t, q) to t1 (t1 < t integrates backward).
/// On return (t, q) is the last accepted point: t == t1 unless the status
/// says otherwise. `step` carries the step-size suggestion between calls.
/// With `path` and options.record_path every accepted point is appended.
TrajectoryStatus advance(const VelocityFn& v, const GridSpec& grid, Configuration& q, double& t, double t1, double& step,
                         const IntegrateOptions& options, Trajectory* path = nullptr);

/// Guidance snapshots at every solver step, interpolated linearly in time.
/// Holds the whole history in memory, so it suits 1D runs and short 2D runs.
class FieldHistory {
 public:
  static FieldHistory record(const GridWaveFunction& psi0, const HamiltonianSpec& h, double dt, std::size_t steps,
                             GuidanceOptions options = {});

  double t_begin() const { return fields_.front().time(); }
  double t_end() const { return fields_.back().time(); }
  double dt() const { return dt_; }
  const GridSpec& grid() const { return fields_.front().grid(); }
  Configuration velocity(double t, const Configuration& q) const;
  const GuidanceField& snapshot(std::size_t i) const { return fields_[i]; }
  std::size_t size() const { return fields_.size(); }

 private:
  std::vector<GuidanceField> fields_;
  double dt_ = 0.0;
};

Trajectory integrate(const FieldHistory& history, const Configuration& q0, double t0, double t1,
                     const IntegrateOptions& options = {});

struct FlowOptions {
  GuidanceOptions guidance;
  IntegrateOptions integrate;
  wavefield::EvolveOptions evolve;
  unsigned threads = 0;
  /// Guidance snapshots every this many solver steps (and at the last one).
  /// Larger strides suit fields that vary slowly in time.
  std::size_t snapshot_stride = 1;
};

struct FlowResult {
  GridWaveFunction final_state;
  std::vector<Trajectory> trajectories;
  std::size_t aborted = 0;
};

/// Evolves psi0 for `steps` solver steps and carries every start point along
/// in lockstep; only two field snapshots are alive at any time.
/// `on_step` sees each new wave function; on snapshot steps the trajectories
/// have already been advanced to its time.
FlowResult transport(const GridWaveFunction& psi0, const HamiltonianSpec& h, double dt, std::size_t steps,
                     const std::vector<Configuration>& starts, const FlowOptions& options = {},
                     const std::function<void(const GridWaveFunction&)>& on_step = {});

struct Ensemble {
  std::uint64_t seed = 0;
  std::vector<Configuration> members;
};

/// n draws from |Psi|^2: a cell (centered on its grid node) by inverse CDF,
/// then a uniform point in the cell. Member i uses Rng(seed, i), so the
/// ensemble does not depend on the thread count. Throws ValidationError
/// unless psi is normalized within 1e-6.
Ensemble sample_equilibrium(const GridWaveFunction& psi, std::size_t n, std::uint64_t seed);

/// Density of coordinate `axis` per grid node, the other axis integrated out.
std::vector<double> marginal(const GridSpec& grid, const std::vector<double>& density, std::size_t axis);

/// Smallest [lo, hi) around the nodes where the density reaches rel x peak,
/// padded by half a cell on each side.
std::pair<double, double> support_range(const wavefield::Axis& axis, const std::vector<double>& density,
                                        double rel = 1e-8);

/// Total variation between the empirical distribution of `samples` and a
/// density sampled on the nodes of `axis`, over `bins` equal bins of
/// [lo, hi) plus one overflow bin for everything outside. Each node carries
/// the mass of its cell, split between bins by overlap.
double tv_distance(const std::vector<double>& samples, const wavefield::Axis& axis, const std::vector<double>& density,
                   double lo, double hi, std::size_t bins = 64);
/// Two empirical samples, same binning rule.
double tv_distance(const std::vector<double>& a, const std::vector<double>& b, double lo, double hi,
                   std::size_t bins = 64);
/// Two densities on (possibly different) node sets, same binning rule.
double tv_distance(const wavefield::Axis& a, const std::vector<double>& da, const wavefield::Axis& b,
                   const std::vector<double>& db, double lo, double hi, std::size_t bins = 64);

/// Largest per-axis tv between points and the marginals of `density` on
/// `grid`, each axis binned over its support range.
double tv_to_density(const std::vector<Configuration>& points, const GridSpec& grid, const std::vector<double>& density,
                     std::size_t bins = 64);

struct EquivarianceReport {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double time = 0.0;
  double tv_distance = 0.0;
  std::size_t aborted = 0;
  /// More than 0.1% of the trajectories aborted.
  bool flagged = false;
};

/// Samples |psi0|^2, transports the ensemble to steps*dt and compares the
/// result with |Psi_t|^2.
EquivarianceReport equivariance_check(const GridWaveFunction& psi0, const HamiltonianSpec& h, double dt,
                                      std::size_t steps, std::size_t n, std::uint64_t seed,
                                      const FlowOptions& options = {});

struct ConditionalWaveFunction {
  GridWaveFunction psi;
  /// The section lies in a y-support component on which Psi factorizes.
  bool effective = false;
};

/// psi(x) = Psi(x, Y) (trigonometric interpolation along y), normalized.
/// Throws NumericalGuardError when the section norm is below 1e-12 of the
/// largest section norm.
ConditionalWaveFunction conditional_wavefunction(const GridWaveFunction& psi, double y);

/// J^W / rho^W for the mixture W = sum p_i |psi_i><psi_i| (zero where rho^W
/// is below 1e-12 of its peak). One array per axis.
std::vector<std::vector<double>> mixture_velocity(const std::vector<std::pair<double, GridWaveFunction>>& mixture,
                                                  const HamiltonianSpec& h);

/// CSV with columns id,t,q0[,q1],status; one row per stored point.
void write_trajectories(const std::vector<Trajectory>& trajectories, std::size_t ndim, const std::string& path);

}  // namespace pilotwave::bohm
