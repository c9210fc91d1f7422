#include <cmath>
#include <cstdio>
#include <sstream>

#include "pilotwave/formalism.hpp"

namespace pilotwave::formalism {

using hilbert::max_abs;

Label canonical(const Label& l) {
  Label out(l.size());
  char buf[32];
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (!std::isfinite(l[i])) throw ValidationError("labels must be finite");
    std::snprintf(buf, sizeof buf, "%.11e", l[i]);
    const double v = std::strtod(buf, nullptr);
    out[i] = v == 0.0 ? 0.0 : v;
  }
  return out;
}

bool same_label(const Label& a, const Label& b) { return canonical(a) == canonical(b); }

std::string label_string(const Label& l) {
  std::ostringstream os;
  os.precision(12);
  for (std::size_t i = 0; i < l.size(); ++i) os << (i ? " " : "") << canonical(l)[i];
  return os.str();
}

LabelPredicate any_label() {
  return [](const Label&) { return true; };
}

LabelPredicate label_in(std::vector<Label> labels) {
  std::set<Label> keys;
  for (const auto& l : labels) keys.insert(canonical(l));
  return [keys = std::move(keys)](const Label& l) { return keys.count(canonical(l)) > 0; };
}

namespace {

std::size_t common_dim(const std::vector<Outcome>& outcomes, const char* what) {
  if (outcomes.empty()) throw ValidationError(std::string(what) + " needs at least one outcome");
  const auto d = outcomes.front().op.rows();
  for (const auto& o : outcomes) {
    if (o.op.rows() != d || o.op.cols() != d || d == 0)
      throw DimensionError(std::string(what) + ": operators must be square and of equal dimension");
    if (o.label.empty()) throw ValidationError(std::string(what) + ": empty label");
  }
  return static_cast<std::size_t>(d);
}

void check_closure(const CMatrix& sum, double tol, const char* what) {
  const double r = max_abs(sum - hilbert::identity(static_cast<std::size_t>(sum.rows())));
  if (!(r <= tol)) throw ValidationError(std::string(what) + ": effects do not sum to the identity (residual " + std::to_string(r) + ")");
}

}  // namespace

Povm::Povm(std::vector<Outcome> outcomes, double tol) : outcomes_(std::move(outcomes)) {
  dim_ = common_dim(outcomes_, "POVM");
  CMatrix sum = CMatrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (auto& o : outcomes_) {
    if (max_abs(o.op - o.op.adjoint()) > tol) throw ValidationError("POVM effect is not Hermitian");
    if (hilbert::min_eigenvalue(o.op) < -tol) throw ValidationError("POVM effect is not positive");
    sum += o.op;
  }
  check_closure(sum, tol, "POVM");
}

Povm Povm::grouped() const {
  std::vector<Outcome> out;
  std::map<Label, std::size_t> where;
  for (const auto& o : outcomes_) {
    const Label key = canonical(o.label);
    auto [it, fresh] = where.emplace(key, out.size());
    if (fresh)
      out.push_back(o);
    else
      out[it->second].op += o.op;
  }
  return Povm(std::move(out), 1e-9);
}

double Povm::closure_residual() const {
  CMatrix sum = CMatrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (const auto& o : outcomes_) sum += o.op;
  return max_abs(sum - hilbert::identity(dim_));
}

bool Povm::is_pvm(double tol) const {
  const Povm g = grouped();
  for (const auto& o : g.outcomes())
    if (max_abs(o.op * o.op - o.op) > tol) return false;
  return true;
}

Pvm::Pvm(std::vector<Outcome> outcomes, double tol) : outcomes_(std::move(outcomes)) {
  dim_ = common_dim(outcomes_, "PVM");
  std::set<Label> seen;
  CMatrix sum = CMatrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < outcomes_.size(); ++i) {
    const auto& p = outcomes_[i].op;
    if (!seen.insert(canonical(outcomes_[i].label)).second) throw ValidationError("PVM labels must be distinct");
    if (max_abs(p - p.adjoint()) > tol || max_abs(p * p - p) > tol) throw ValidationError("PVM element is not a projection");
    for (std::size_t j = 0; j < i; ++j)
      if (max_abs(p * outcomes_[j].op) > tol) throw ValidationError("PVM projections are not mutually orthogonal");
    sum += p;
  }
  check_closure(sum, tol, "PVM");
}

StrongMeasurement::StrongMeasurement(std::vector<Outcome> transformers, Mode mode, double tol)
    : outcomes_(std::move(transformers)), mode_(mode) {
  dim_ = common_dim(outcomes_, "measurement");
  CMatrix sum = CMatrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (const auto& o : outcomes_) {
    if (!o.op.allFinite()) throw ValidationError("transformer has non-finite entries");
    const CMatrix e = o.op.adjoint() * o.op;
    if (mode_ == Mode::Strong && max_abs(e * e - e) > tol)
      throw ValidationError("strong measurement: R^dagger R is not a projection");
    sum += e;
  }
  check_closure(sum, tol, "measurement");
}

Pvm pvm_of_operator(const HermitianOperator& a) {
  const auto sd = hilbert::spectral_decompose(a);
  std::vector<Outcome> out;
  // Descending so that sigma_z lists +1 first, matching the usual (up, down) order.
  for (std::size_t i = sd.eigenvalues.size(); i-- > 0;) out.push_back({{sd.eigenvalues[i]}, sd.projectors[i]});
  return Pvm(std::move(out));
}

namespace {

void require_normalized(const StateVector& psi, std::size_t dim) {
  if (psi.dim() != dim) throw DimensionError("state dimension does not match the measurement");
  if (!psi.is_normalized(1e-10)) throw ValidationError("state must be normalized");
}

double expectation(const CMatrix& op, const StateVector& psi) {
  return psi.amplitudes().dot(op * psi.amplitudes()).real();
}

}  // namespace

double born_probability(const Povm& m, const StateVector& psi, const LabelPredicate& delta) {
  require_normalized(psi, m.dim());
  double p = 0.0;
  for (const auto& o : m.outcomes())
    if (delta(o.label)) p += expectation(o.op, psi);
  return p;
}

double born_probability(const Pvm& m, const StateVector& psi, const LabelPredicate& delta) {
  return born_probability(m.as_povm(), psi, delta);
}

std::vector<std::pair<Label, double>> born_distribution(const Povm& m, const StateVector& psi) {
  require_normalized(psi, m.dim());
  std::vector<std::pair<Label, double>> out;
  const Povm g = m.grouped();
  for (const auto& o : g.outcomes()) out.emplace_back(o.label, expectation(o.op, psi));
  return out;
}

double born_probability(const Povm& m, const DensityMatrix& w, const LabelPredicate& delta) {
  if (w.dim() != m.dim()) throw DimensionError("density matrix dimension does not match the POVM");
  double p = 0.0;
  for (const auto& o : m.outcomes())
    if (delta(o.label)) p += w.expectation(o.op);
  return p;
}

StrongMeasurement ideal_measurement(const HermitianOperator& a) {
  return StrongMeasurement(pvm_of_operator(a).outcomes(), Mode::Strong);
}

StrongMeasurement normal_measurement(const HermitianOperator& a, const std::vector<UnitaryOperator>& rotations) {
  const auto sd = hilbert::spectral_decompose(a);
  if (rotations.size() != sd.eigenvalues.size())
    throw ValidationError("normal measurement needs one unitary per eigenspace");
  std::vector<Outcome> out;
  for (std::size_t i = 0; i < sd.eigenvalues.size(); ++i) {
    const CMatrix& p = sd.projectors[i];
    const CMatrix& u = rotations[i].matrix();
    if (u.rows() != p.rows()) throw ValidationError("normal measurement: unitary dimension mismatch");
    if (max_abs(p * u * p - u * p) > 1e-10) throw ValidationError("normal measurement: unitary does not preserve its eigenspace");
    out.push_back({{sd.eigenvalues[i]}, u * p});
  }
  return StrongMeasurement(std::move(out), Mode::Strong);
}

StrongMeasurement standard_measurement(const Pvm& spaces, const std::vector<CMatrix>& isometries) {
  if (isometries.size() != spaces.outcomes().size())
    throw ValidationError("standard measurement needs one isometry per subspace");
  std::vector<Outcome> out;
  for (std::size_t i = 0; i < isometries.size(); ++i) {
    const CMatrix& p = spaces.outcomes()[i].op;
    if (isometries[i].cols() != p.rows()) throw ValidationError("standard measurement: isometry dimension mismatch");
    const CMatrix r = isometries[i] * p;
    if (max_abs(r.adjoint() * r - p) > 1e-10) throw ValidationError("standard measurement: map is not isometric on its subspace");
    out.push_back({spaces.outcomes()[i].label, r});
  }
  return StrongMeasurement(std::move(out), Mode::Strong);
}

MeasureResult strong_measure(const StrongMeasurement& m, const StateVector& psi, Rng& rng) {
  require_normalized(psi, m.dim());
  std::vector<CVector> images;
  std::vector<double> probs;
  double total = 0.0;
  for (const auto& o : m.outcomes()) {
    images.push_back(o.op * psi.amplitudes());
    probs.push_back(images.back().squaredNorm());
    total += probs.back();
  }
  if (!(total >= 1e-14)) throw MeasurementError("every outcome has vanishing probability");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t pick = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc && probs[i] > 0.0) {
      pick = i;
      break;
    }
  }
  if (pick == probs.size())  // u landed in the rounding gap above acc
    for (std::size_t i = probs.size(); i-- > 0;)
      if (probs[i] > 0.0) {
        pick = i;
        break;
      }
  return {pick, m.outcomes()[pick].label, StateVector(images[pick] / std::sqrt(probs[pick]))};
}

std::map<LabelTuple, double> sequential_probability(const std::vector<StrongMeasurement>& ms,
                                                    const std::vector<UnitaryOperator>& evolutions,
                                                    const StateVector& psi) {
  if (ms.empty()) throw ValidationError("sequential_probability needs at least one measurement");
  if (evolutions.size() != ms.size()) throw DimensionError("need one evolution per measurement");
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (ms[i].dim() != psi.dim() || evolutions[i].dim() != psi.dim())
      throw DimensionError("sequential_probability: dimensions differ");
  require_normalized(psi, psi.dim());

  // Heisenberg-picture transformers R(t) = U^-1 R U.
  std::vector<std::vector<CMatrix>> heis(ms.size());
  for (std::size_t k = 0; k < ms.size(); ++k) {
    const CMatrix& u = evolutions[k].matrix();
    for (const auto& o : ms[k].outcomes()) heis[k].push_back(u.adjoint() * o.op * u);
  }

  std::map<LabelTuple, double> out;
  LabelTuple labels(ms.size());
  std::function<void(std::size_t, const CVector&)> walk = [&](std::size_t k, const CVector& v) {
    if (k == ms.size()) {
      out[labels] += v.squaredNorm();
      return;
    }
    for (std::size_t a = 0; a < heis[k].size(); ++a) {
      labels[k] = canonical(ms[k].outcomes()[a].label);
      walk(k + 1, heis[k][a] * v);
    }
  };
  walk(0, psi.amplitudes());
  return out;
}

StrongMeasurement recalibrate(const StrongMeasurement& m, const std::function<Label(const Label&)>& f) {
  std::vector<Outcome> out;
  for (const auto& o : m.outcomes()) out.push_back({f(o.label), o.op});
  return StrongMeasurement(std::move(out), m.mode());
}

Povm pushforward(const Povm& p, const std::function<Label(const Label&)>& f) {
  std::vector<Outcome> out;
  for (const auto& o : p.outcomes()) out.push_back({f(o.label), o.op});
  return Povm(std::move(out)).grouped();
}

Povm povm_of(const StrongMeasurement& m) {
  std::vector<Outcome> out;
  for (const auto& o : m.outcomes()) out.push_back({o.label, o.op.adjoint() * o.op});
  return Povm(std::move(out)).grouped();
}

}  // namespace pilotwave::formalism
