#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pilotwave/bohm.hpp"
#include "pilotwave/formalism.hpp"
#include "pilotwave/wavefield.hpp"

/// Experiments as {ready state, evolution, calibration}: Monte Carlo runs
/// over Bohmian trajectories, POVM extraction by quadrature, and the
/// standard scenarios (Stern-Gerlach, time of flight, EPRB, ...).
namespace pilotwave::experiments {

using bohm::Configuration;
using formalism::Label;
using hilbert::StateVector;
using wavefield::GridSpec;
using wavefield::GridWaveFunction;
using wavefield::HamiltonianSpec;

using Calibration = std::function<Label(const Configuration&)>;

struct ExperimentSpec {
  std::string name;
  GridSpec grid;
  HamiltonianSpec hamiltonian;
  double duration = 0.0;
  std::size_t steps = 0;
  /// Builds psi (x) Phi_0 on the grid from a system spinor. Empty when the
  /// system state is itself a grid wave function.
  std::function<GridWaveFunction(const StateVector&)> prepare;
  Calibration calibration;
  bohm::FlowOptions flow;
  std::vector<std::string> warnings;

  double dt() const { return duration / static_cast<double>(steps); }
};

struct Trial {
  Configuration initial{};
  Configuration final{};
  Label label;
  bohm::TrajectoryStatus status = bohm::TrajectoryStatus::Completed;
};

struct RunRecord {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<Trial> trials;
  /// Over completed trials, keyed by canonical label.
  std::map<Label, double> frequencies;
  /// Per label component, over completed trials.
  std::vector<double> mean, variance;
  std::size_t aborted = 0;
  /// More than 0.5% of the trajectories aborted.
  bool flagged = false;
  std::vector<std::string> warnings;

  double frequency(const Label& l) const;
};

/// Samples n configurations from |initial|^2, evolves the field once and
/// carries all of them to the final time, then applies the calibration.
/// Deterministic for a given seed.
RunRecord run(const ExperimentSpec& spec, const GridWaveFunction& initial, std::size_t n, std::uint64_t seed);
/// Same, starting from spec.prepare(psi).
RunRecord run(const ExperimentSpec& spec, const StateVector& psi, std::size_t n, std::uint64_t seed);

/// O(Delta)_ij = integral over F^-1(Delta) of (U psi_i)^dagger (U psi_j), one
/// evolution per basis element and a sum over grid cells grouped by the
/// calibration label of their node. The basis must be orthonormal. Throws
/// QuadratureError when the closure residual exceeds 1e-4.
formalism::Povm povm_of_experiment(const ExperimentSpec& spec, const std::vector<GridWaveFunction>& basis);
formalism::Povm povm_of_experiment(const ExperimentSpec& spec, const std::vector<StateVector>& basis);

/// Adds a decoupled coordinate as a second axis with free motion of the
/// given mass. The calibration keeps reading the original coordinate.
ExperimentSpec extend(const ExperimentSpec& spec, const wavefield::Axis& spectator, double mass = 1.0);

enum class Readout { Sign, SpinOperator };

/// Zero (auto) grid and step values are sized from T so that both packets
/// stay on the grid and dt * max|V| <= 0.095 over the whole box.
struct SternGerlachParams {
  double a = 1.0;
  double b = 0.0;
  double d = 1.0;
  double duration = 5.0;
  double mass = 1.0;
  double hbar = 1.0;
  double half_width = 0.0;
  std::size_t points = 0;
  std::size_t steps = 0;
  Readout readout = Readout::Sign;
};

/// Spinor on a z line, coupling -(b + a z) sigma_z, Phi_0 the centered
/// Gaussian of width d. The z grid has a cell edge at 0. Sign readout gives
/// sign(a) sign(z) (z = 0 counts as +); spin-operator readout gives
/// 2 m z / (a T^2). Warns when the packets end closer than 3 widths.
ExperimentSpec stern_gerlach(const SternGerlachParams& p);
/// Mean z of the spin-s packet at time T: s a T^2 / 2m.
double stern_gerlach_offset(const SternGerlachParams& p, int s);

struct TimeOfFlightParams {
  double d = 1.0;
  double duration = 50.0;
  double mass = 1.0;
  double hbar = 1.0;
  double half_width = 200.0;
  std::size_t points = 2048;
  std::size_t steps = 500;
};

/// Free motion for T, readout m x / T.
ExperimentSpec time_of_flight(const TimeOfFlightParams& p);
/// The centered Gaussian of width d on the time-of-flight grid.
GridWaveFunction time_of_flight_gaussian(const TimeOfFlightParams& p);

struct TimeOfFlightReport {
  RunRecord record;
  /// Empirical labels against |psi~(p)|^2.
  double tv_sampled = 0.0;
  /// |psi_T|^2 pushed through the readout against |psi~(p)|^2.
  double tv_exact = 0.0;
};
TimeOfFlightReport time_of_flight_momentum(const TimeOfFlightParams& p, const GridWaveFunction& psi0, std::size_t n,
                                           std::uint64_t seed);

struct CoupledOscillatorParams {
  double half_width = 20.0;
  std::size_t points = 256;
  double dt = 0.005;
  double duration = 5.0;
};

struct CoupledOscillatorReport {
  std::size_t n = 0;
  /// max |X_t - (a X + b Y)|, |Y_t - (b X + a Y)| over all recorded points.
  double max_error = 0.0;
  /// max |trajectory from (Y,X) - mirrored trajectory from (X,Y)| at the end.
  double symmetry_error = 0.0;
  std::size_t aborted = 0;
  /// Per drawn start: its end point and its own max error (NaN if aborted).
  std::vector<Configuration> starts, ends;
  std::vector<double> errors;
};

/// Starts drawn from |Psi_0|^2 of the two-particle example plus their mirror
/// images, integrated through the solver field and compared with the closed
/// form trajectories.
CoupledOscillatorReport coupled_oscillator(std::size_t n, std::uint64_t seed, const CoupledOscillatorParams& p = {});

struct ParadoxParams {
  double omega = 1.0;
  double tau = 1.0;
  double half_width = 8.0;
  std::size_t points = 256;
};

struct ParadoxReport {
  std::size_t n = 0;
  /// Largest relative error of the field's angular velocity against
  /// hbar / (m r^2) over the probe radii.
  double angular_velocity_error = 0.0;
  /// Per-axis tv between X_tau and the |psi|^2 law of X_0.
  double tv = 0.0;
  /// Same between the two samples X_tau and X_0.
  double tv_two_sample = 0.0;
  double median_displacement = 0.0;
  double fraction_displaced = 0.0;  // |X_tau - X_0| > 0.05
  std::size_t aborted = 0;
  /// X_0 and X_tau per draw; the label is the displacement.
  std::vector<Trial> trials;
};

/// Reading X_0 versus transporting to tau and reading X_tau for the
/// stationary vortex state r e^{i phi} e^{-r^2/2}.
ParadoxReport oscillator2d_paradox(const std::vector<double>& probe_radii, std::size_t n, std::uint64_t seed,
                                   const ParadoxParams& p = {});

using Direction = std::array<double, 3>;

struct EprbParams {
  Direction first{0.0, 0.0, 1.0};
  Direction second{0.0, 0.0, 1.0};
  double a = 2.0;
  double b = 0.0;
  double d = 1.25;
  double duration = 3.0;
  double half_width = 22.0;
  std::size_t points = 128;
  std::size_t steps = 0;  // 0: from the step precondition
};

/// Two wings on a (z1, z2) grid, spin C^2 (x) C^2. Each wing carries its own
/// Stern-Gerlach coupling along its setting, written in the product
/// eigenbasis of (n1 . sigma) (x) (n2 . sigma) so the spin potential is
/// diagonal. prepare() takes a spin state in the standard basis. Labels are
/// (sign z1, sign z2).
ExperimentSpec eprb(const EprbParams& p);
RunRecord eprb_run(const EprbParams& p, std::size_t n, std::uint64_t seed);
/// Fraction of completed trials with label[0] == -label[1].
double anticorrelation(const RunRecord& r);

/// Fraction of trials whose first label component differs between two runs
/// with the same seed (trial i in both starts from the same configuration).
double flip_fraction(const RunRecord& a, const RunRecord& b);
/// The |Psi_0|^2-weight of initial configurations whose first-wing result
/// differs between the two setting pairs. Trajectories start at the
/// midpoints of a subdivisions^2 split of every cell carrying mass above
/// 1e-6 of the peak, each weighted by its cell's node density.
double eprb_flip_fraction_quadrature(const EprbParams& p, const EprbParams& q, std::size_t subdivisions = 4);

}  // namespace pilotwave::experiments
