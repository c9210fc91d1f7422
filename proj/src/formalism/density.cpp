#include <cmath>

#include "pilotwave/formalism.hpp"

namespace pilotwave::formalism {

DensityUpdate density_update(const DensityMatrix& w, const StrongMeasurement& m, const Label& label) {
  if (w.dim() != m.dim()) throw DimensionError("density matrix dimension does not match the measurement");
  const auto result = instrument_of(m).apply(label_in({label}), w.matrix());
  const double p = result.trace().real();
  if (!(p >= 1e-14)) throw MeasurementError("outcome " + label_string(label) + " is impossible for this state");
  return {p, DensityMatrix(result / p)};
}

DensityMatrix ensemble_density(const std::vector<std::pair<double, StateVector>>& ensemble) {
  if (ensemble.empty()) throw ValidationError("ensemble must not be empty");
  const std::size_t d = ensemble.front().second.dim();
  CMatrix w = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  double total = 0.0;
  for (const auto& [p, psi] : ensemble) {
    if (!(p >= 0.0)) throw ValidationError("ensemble weights must be nonnegative");
    if (psi.dim() != d) throw DimensionError("ensemble states have different dimensions");
    if (!psi.is_normalized(1e-10)) throw ValidationError("ensemble states must be normalized");
    w += p * psi.projector();
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-10) throw ValidationError("ensemble weights must sum to 1");
  return DensityMatrix(std::move(w));
}

CMatrix Instrument::apply(const LabelPredicate& delta, const CMatrix& w) const {
  if (static_cast<std::size_t>(w.rows()) != m_.dim() || w.cols() != w.rows())
    throw DimensionError("instrument applied to an operator of the wrong dimension");
  CMatrix out = CMatrix::Zero(w.rows(), w.cols());
  for (const auto& o : m_.outcomes())
    if (delta(o.label)) out += o.op * w * o.op.adjoint();
  return out;
}

DensityMatrix Instrument::conditional(const LabelPredicate& delta, const DensityMatrix& w) const {
  const CMatrix r = apply(delta, w.matrix());
  const double p = r.trace().real();
  if (!(p >= 1e-14)) throw MeasurementError("conditioning on an event of zero probability");
  return DensityMatrix(r / p);
}

Instrument instrument_of(const StrongMeasurement& m) { return Instrument(m); }

}  // namespace pilotwave::formalism
