#pragma once

#include <optional>
#include <vector>

#include "pilotwave/formalism.hpp"
#include "pilotwave/wavefield.hpp"

namespace pilotwave::formalism {

struct VonNeumannOptions {
  /// System Hamiltonian commuting with A, acting alongside the coupling for
  /// time T; turns the ideal measurement into a normal one.
  std::optional<HermitianOperator> h0;
  double duration = 1.0;
  double hbar = 1.0;
  /// Largest pointer overlap still counted as separated.
  double overlap_tolerance = 1e-6;
};

/// Coupling H = gamma A (x) P_y with the apparatus momentum P_y = -i hbar d/dy,
/// run long enough that gamma T is given. In the eigenbasis of A it shifts
/// the pointer by y_alpha = lambda_alpha gamma T:
///   psi (x) Phi_0 -> sum_alpha (R_alpha psi) (x) Phi_0(y - y_alpha).
struct VonNeumannExperiment {
  Pvm spectral;                                 // P_alpha, descending eigenvalues
  std::vector<double> pointer_positions;        // y_alpha
  std::vector<wavefield::GridWaveFunction> pointers;  // Phi_alpha
  wavefield::GridWaveFunction ready;
  /// Largest |<Phi_alpha, Phi_beta>| over alpha != beta.
  double max_overlap = 0.0;
  /// max_overlap <= tolerance; false is the insufficient-separation flag.
  bool separated = false;
  /// Readout with calibration F(y) = y_alpha / gamma T on the cells between
  /// neighbouring pointer positions. Coinciding positions share a cell
  /// labeled by the first eigenvalue in it.
  Povm readout;
  /// max_alpha |O_alpha - P_alpha| entrywise; 0 for an exactly ideal readout.
  double ideal_deviation = 0.0;
  /// R_alpha = exp(-i T H0 / hbar) P_alpha.
  StrongMeasurement measurement;

  /// U(psi (x) Phi_0) as system_dim x grid amplitudes, index s * N + y.
  std::vector<Complex> apply(const StateVector& psi) const;
};

VonNeumannExperiment von_neumann_experiment(const HermitianOperator& a, double gamma_t,
                                            const wavefield::GridWaveFunction& pointer,
                                            const VonNeumannOptions& options = {});

}  // namespace pilotwave::formalism
