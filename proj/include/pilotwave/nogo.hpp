#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pilotwave/formalism.hpp"
#include "pilotwave/wavefield.hpp"

/// Quantitative no-go results: Bell's inequality on the singlet, linear
/// feasibility of noncontextual value assignments, Hardy's conditions and
/// the quadratic-map test for measurability.
namespace pilotwave::nogo {

using hilbert::CVector;
using hilbert::HermitianOperator;
using hilbert::StateVector;
using Direction = std::array<double, 3>;

/// Prob(Z1_x = -Z2_y) for spin components along x (first particle) and y
/// (second particle) on the singlet, from their joint PVM.
double anticorrelation_probability(const Direction& x, const Direction& y);
/// Prob(Z1_a = -Z2_b) + Prob(Z1_b = -Z2_c) + Prob(Z1_c = -Z2_a). Any local
/// assignment gives at least 1.
double bell_lhs(const Direction& a, const Direction& b, const Direction& c);
/// z, then z rotated about y by `degrees`, then by twice that.
std::array<Direction, 3> planar_directions(double degrees);

/// Observables on one space; two of them are compatible iff they commute.
class PairwiseModel {
 public:
  struct PairDistribution {
    std::size_t first, second;
    /// (value of first, value of second, probability)
    std::vector<std::array<double, 3>> entries;
  };

  PairwiseModel(std::vector<std::string> names, std::vector<HermitianOperator> observables, StateVector state);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<HermitianOperator>& observables() const { return observables_; }
  const StateVector& state() const { return state_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& compatible() const { return compatible_; }
  /// Distinct eigenvalues per observable, ascending.
  const std::vector<std::vector<double>>& spectra() const { return spectra_; }
  const std::vector<PairDistribution>& distributions() const { return distributions_; }

 private:
  std::vector<std::string> names_;
  std::vector<HermitianOperator> observables_;
  StateVector state_;
  std::vector<std::pair<std::size_t, std::size_t>> compatible_;
  std::vector<std::vector<double>> spectra_;
  std::vector<PairDistribution> distributions_;
};

/// Spin components along a, b, c on each wing of the singlet.
PairwiseModel bell_model(const Direction& a, const Direction& b, const Direction& c);

/// coefficient * Prob(first = x and second = y) for one compatible pair.
struct InequalityTerm {
  std::size_t pair;  // index into PairwiseModel::distributions()
  double x, y, coefficient;
};

struct FeasibilityCertificate {
  bool feasible = false;
  /// Feasible: deterministic assignments (one value per observable) and
  /// their weights.
  std::vector<std::vector<double>> assignments;
  std::vector<double> weights;
  /// Infeasible: sum of terms <= bound holds for every noncontextual model;
  /// the model's own probabilities exceed the bound by `violation`.
  std::vector<InequalityTerm> terms;
  double bound = 0.0;
  double violation = 0.0;
};

/// Whether a mixture of deterministic assignments reproduces every
/// compatible-pair distribution. Throws SizeError above 10^6 assignments.
FeasibilityCertificate value_map_feasibility(const PairwiseModel& model);
/// Substitutes the witness back: mixture within tol of every distribution,
/// or inequality valid for every assignment (within tol) and violated by the
/// model by at least 1e-6.
bool verify(const PairwiseModel& model, const FeasibilityCertificate& cert, double tol = 1e-9);
/// Largest value of sum(terms) over deterministic assignments.
double deterministic_max(const PairwiseModel& model, const std::vector<InequalityTerm>& terms);
/// sum(terms) under the model's distributions.
double quantum_value(const PairwiseModel& model, const std::vector<InequalityTerm>& terms);

nlohmann::json to_json(const PairwiseModel& model, const FeasibilityCertificate& cert);

struct LpFeasibility {
  bool feasible = false;
  Eigen::VectorXd x;       // A x = b, x >= 0 when feasible
  Eigen::VectorXd farkas;  // A^T y <= 0 and b^T y > 0 when infeasible
  double infeasibility = 0.0;
  std::size_t iterations = 0;
};
/// Phase-1 simplex with Bland's rule on a dense tableau.
LpFeasibility solve_feasibility(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol = 1e-9);

/// A and C are spin components of the first particle, B and D of the second.
struct HardySetup {
  StateVector state;
  Direction a, b, c, d;
};

struct HardyConditions {
  double p = 0.0;               // Prob(A=1, B=1)
  double a_implies_d = 0.0;     // Prob(D=1 | A=1)
  double b_implies_c = 0.0;     // Prob(C=1 | B=1)
  double d_and_c = 0.0;         // Prob(D=1, C=1)

  bool hold(double tol = 1e-6) const;
};

/// From scratch via joint PVMs of the four compatible pairs.
HardyConditions hardy_conditions(const HardySetup& s);
PairwiseModel hardy_model(const HardySetup& s);

struct HardySearchOptions {
  std::size_t grid = 16;  // points per angle in the coarse scan
  double step_floor = 1e-8;
  std::size_t max_evaluations = 2000000;
};

struct HardyResult {
  HardySetup setup;
  /// Values computed by the optimizer's own formula.
  HardyConditions claimed;
  bool converged = false;
  std::size_t evaluations = 0;
};

/// Maximizes Prob(A=1, B=1) over directions and two-qubit states subject to
/// (A=1 => D=1), (B=1 => C=1) and Prob(D=1, C=1) = 0. C and D lie along z;
/// for given A and B the three constraints fix the state up to a factor,
/// leaving four angles to optimize (coarse scan, then coordinate descent).
HardyResult hardy_search(const HardySearchOptions& options = {});

struct ProductSweep {
  double sup_p = 0.0;
  std::size_t feasible = 0;
  std::size_t evaluated = 0;
};
/// Product states u (x) v and directions a, b, c, d drawn from the 14 axis
/// and diagonal directions; sup of Prob(A=1, B=1) over the points where the
/// three constraints hold within tol.
ProductSweep hardy_product_sweep(double tol = 1e-6);

/// Maps a (not necessarily normalized) state to the masses of a fixed set of
/// bins.
using DistributionMap = std::function<std::vector<double>(const CVector&)>;

struct QuadraticMapReport {
  /// min over pairs and bins of 2(mu1 + mu2) - mu(psi1 + psi2)
  double worst_slack = 0.0;
  std::size_t worst_pair = 0, worst_bin = 0;
  std::size_t pairs = 0;
};
QuadraticMapReport quadratic_map_test(const DistributionMap& mu, const std::vector<std::pair<CVector, CVector>>& pairs);

/// <psi, O_k psi> for the grouped effects of p.
DistributionMap povm_map(const formalism::Povm& p);
/// Mass |psi|^2 dx of the nodes with v < -threshold, |v| <= threshold and
/// v > threshold (nodes below 1e-12 of the peak density count as v = 0).
DistributionMap velocity_sign_map(const wavefield::GridSpec& grid, const wavefield::HamiltonianSpec& h,
                                  double threshold = 1e-6);
/// |psi|^2 placed on the bin of the listed value psi is proportional to,
/// or on a last "other" bin.
DistributionMap wavefunction_identity_map(std::vector<CVector> values, double tol = 1e-9);
/// (Re psi, i Im psi)
std::pair<CVector, CVector> real_imaginary_split(const CVector& psi);

}  // namespace pilotwave::nogo
