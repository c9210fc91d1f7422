#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pilotwave/hilbert.hpp"
#include "pilotwave/rng.hpp"

/// The operator calculus of measurement: PVMs, POVMs, strong measurements and
/// experiments, their discrete-experiment realizations, sequential outcomes,
/// density matrices and instruments.
namespace pilotwave::formalism {

using hilbert::CMatrix;
using hilbert::Complex;
using hilbert::CVector;
using hilbert::DensityMatrix;
using hilbert::HermitianOperator;
using hilbert::StateVector;
using hilbert::UnitaryOperator;

/// Results are real vectors; scalar results have length one.
using Label = std::vector<double>;
using LabelPredicate = std::function<bool(const Label&)>;

/// Rounds every component to 12 significant digits (and -0 to 0). Two labels
/// denote the same result iff their canonical forms are equal.
Label canonical(const Label& l);
bool same_label(const Label& a, const Label& b);
std::string label_string(const Label& l);

LabelPredicate any_label();
LabelPredicate label_in(std::vector<Label> labels);

/// (label, operator) pair: a projector, an effect or a transformer depending
/// on the container.
struct Outcome {
  Label label;
  CMatrix op;
};

class Povm {
 public:
  Povm() = default;
  /// Effects must be positive (min eigenvalue >= -tol) and sum to I within tol.
  explicit Povm(std::vector<Outcome> outcomes, double tol = 1e-10);

  std::size_t dim() const { return dim_; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  /// Effects with equal labels summed, first-appearance order.
  Povm grouped() const;
  double closure_residual() const;
  bool is_pvm(double tol = 1e-10) const;

 private:
  std::vector<Outcome> outcomes_;
  std::size_t dim_ = 0;
};

class Pvm {
 public:
  Pvm() = default;
  /// Projectors must be idempotent, mutually orthogonal and sum to I; labels distinct.
  explicit Pvm(std::vector<Outcome> outcomes, double tol = 1e-10);

  std::size_t dim() const { return dim_; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  Povm as_povm() const { return Povm(outcomes_); }

 private:
  std::vector<Outcome> outcomes_;
  std::size_t dim_ = 0;
};

/// Strong: every R^dagger R is a projection. Experiment: only the closure
/// sum R^dagger R = I is required.
enum class Mode { Strong, Experiment };

class StrongMeasurement {
 public:
  StrongMeasurement() = default;
  StrongMeasurement(std::vector<Outcome> transformers, Mode mode, double tol = 1e-10);

  std::size_t dim() const { return dim_; }
  Mode mode() const { return mode_; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }

 private:
  std::vector<Outcome> outcomes_;
  Mode mode_ = Mode::Strong;
  std::size_t dim_ = 0;
};

Pvm pvm_of_operator(const HermitianOperator& a);

double born_probability(const Povm& m, const StateVector& psi, const LabelPredicate& delta);
double born_probability(const Pvm& m, const StateVector& psi, const LabelPredicate& delta);
/// Probability per grouped label, in the order of Povm::grouped().
std::vector<std::pair<Label, double>> born_distribution(const Povm& m, const StateVector& psi);
/// tr(W O(delta))
double born_probability(const Povm& m, const DensityMatrix& w, const LabelPredicate& delta);

StrongMeasurement ideal_measurement(const HermitianOperator& a);
/// R_alpha = U_alpha P_alpha. rotations[alpha] is a full-space unitary that
/// must leave the alpha-th eigenspace (ascending eigenvalue order) invariant.
StrongMeasurement normal_measurement(const HermitianOperator& a, const std::vector<UnitaryOperator>& rotations);
/// R_alpha = T_alpha P_alpha; each T_alpha must be isometric on range(P_alpha).
StrongMeasurement standard_measurement(const Pvm& spaces, const std::vector<CMatrix>& isometries);

struct MeasureResult {
  std::size_t index;
  Label label;
  StateVector post_state;
};
/// Samples alpha with probability |R_alpha psi|^2 and collapses onto R_alpha psi.
MeasureResult strong_measure(const StrongMeasurement& m, const StateVector& psi, Rng& rng);

using LabelTuple = std::vector<Label>;
/// Joint probabilities |R_n(t_n)...R_1(t_1) psi|^2 with R(t) = U_t^-1 R U_t.
/// Outcome tuples with equal labels are merged; keys hold canonical labels.
std::map<LabelTuple, double> sequential_probability(const std::vector<StrongMeasurement>& ms,
                                                    const std::vector<UnitaryOperator>& evolutions,
                                                    const StateVector& psi);

StrongMeasurement recalibrate(const StrongMeasurement& m, const std::function<Label(const Label&)>& f);
/// Pushforward of a POVM under a relabeling.
Povm pushforward(const Povm& p, const std::function<Label(const Label&)>& f);

/// O_alpha = R_alpha^dagger R_alpha with duplicate labels grouped.
Povm povm_of(const StrongMeasurement& m);

/// O(bin) = integral over the bin of eta(lambda - A), eta Gaussian of width
/// sigma, labeled by the bin midpoint. `edges` are ascending bin edges. The
/// first and last bins absorb the Gaussian tails beyond the outer edges so
/// the effects close exactly; the edges must cover the spectrum +- 6 sigma.
Povm approximate_povm(const HermitianOperator& a, double sigma, const std::vector<double>& edges);
/// R_bin = sqrt(O(bin)) of the Gaussian POVM: the discretized quarter-power
/// Gaussian transformer xi(lambda - A) sqrt(d lambda). Experiment mode.
StrongMeasurement weak_transformers(const HermitianOperator& a, double sigma, const std::vector<double>& edges);

/// A finite model of psi (x) Phi_0 -> sum_alpha (R_alpha psi) (x) Phi_alpha.
/// The apparatus space has dimension n+1 with Phi_0 = e_0 and Phi_alpha =
/// e_{alpha+1}; composite index = system * apparatus_dim + apparatus.
struct DiscreteExperimentSpec {
  std::size_t system_dim = 0;
  std::size_t apparatus_dim = 0;
  StateVector ready;
  std::vector<StateVector> pointers;
  UnitaryOperator u;
  std::vector<Label> calibration;

  StateVector apply(const StateVector& psi) const;
  /// Probability of pointer alpha after U acts on psi (x) Phi_0.
  std::vector<double> pointer_probabilities(const StateVector& psi) const;
};

/// Builds U on H (x) C^{n+1}; the isometry on H (x) Phi_0 is completed to a
/// unitary with an orthonormal complement.
DiscreteExperimentSpec build_discrete_experiment(const StrongMeasurement& m);

/// Product PVM of a commuting family, labeled by joint eigenvalue tuples.
Pvm joint_pvm(const std::vector<HermitianOperator>& family);

struct DensityUpdate {
  double probability;
  DensityMatrix state;
};
/// Lueders update for the result `label`: W' = sum R W R^dagger / prob over
/// the outcomes carrying that label.
DensityUpdate density_update(const DensityMatrix& w, const StrongMeasurement& m, const Label& label);

DensityMatrix ensemble_density(const std::vector<std::pair<double, StateVector>>& ensemble);

/// Delta -> (W -> sum_{alpha in Delta} R_alpha W R_alpha^dagger)
class Instrument {
 public:
  explicit Instrument(StrongMeasurement m) : m_(std::move(m)) {}
  CMatrix apply(const LabelPredicate& delta, const CMatrix& w) const;
  /// R(delta)W / tr(R(delta)W); throws MeasurementError if the trace vanishes.
  DensityMatrix conditional(const LabelPredicate& delta, const DensityMatrix& w) const;
  const StrongMeasurement& measurement() const { return m_; }

 private:
  StrongMeasurement m_;
};

Instrument instrument_of(const StrongMeasurement& m);

/// The shift experiment R_{+-1} = V_{+-}(P_{+-} + P_0/sqrt 2) on a cyclic
/// truncation spanned by e_{-k}..e_k (index i <-> e_{i-k}).
StrongMeasurement shift_experiment(std::size_t k);
/// Coin flip R_alpha = c_alpha I; statistics independent of the state.
StrongMeasurement coin_flip_experiment(std::size_t dim, const std::vector<Complex>& c, const std::vector<Label>& labels);

}  // namespace pilotwave::formalism
