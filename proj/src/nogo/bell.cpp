#include <algorithm>
#include <cmath>
#include <numbers>

#include "pilotwave/nogo.hpp"

namespace pilotwave::nogo {

namespace {

const HermitianOperator& id2() {
  static const HermitianOperator id(hilbert::identity(2));
  return id;
}

double snap(double v, const std::vector<double>& spectrum) {
  for (double s : spectrum)
    if (std::abs(s - v) <= 1e-8 * std::max(1.0, std::abs(s))) return s;
  throw ValidationError("joint eigenvalue does not match the spectrum");
}

// Rounded to 12 significant digits so labels compare exactly.
double tidy(double v) {
  if (v == 0.0) return 0.0;
  const double scale = std::pow(10.0, 11 - std::floor(std::log10(std::abs(v))));
  return std::round(v * scale) / scale;
}

}  // namespace

double anticorrelation_probability(const Direction& x, const Direction& y) {
  const auto first = hilbert::tensor_product(hilbert::spin_along(x), id2());
  const auto second = hilbert::tensor_product(id2(), hilbert::spin_along(y));
  const auto pvm = formalism::joint_pvm({first, second});
  return formalism::born_probability(pvm, hilbert::singlet(),
                                     [](const formalism::Label& l) { return std::abs(l[0] + l[1]) < 1e-8; });
}

double bell_lhs(const Direction& a, const Direction& b, const Direction& c) {
  return anticorrelation_probability(a, b) + anticorrelation_probability(b, c) + anticorrelation_probability(c, a);
}

std::array<Direction, 3> planar_directions(double degrees) {
  const double t = degrees * std::numbers::pi / 180.0;
  return {Direction{0.0, 0.0, 1.0}, Direction{std::sin(t), 0.0, std::cos(t)},
          Direction{std::sin(2 * t), 0.0, std::cos(2 * t)}};
}

PairwiseModel::PairwiseModel(std::vector<std::string> names, std::vector<HermitianOperator> observables,
                             StateVector state)
    : names_(std::move(names)), observables_(std::move(observables)), state_(std::move(state)) {
  if (observables_.empty() || names_.size() != observables_.size())
    throw ValidationError("pairwise model needs one name per observable");
  for (const auto& o : observables_)
    if (o.dim() != state_.dim()) throw DimensionError("observable and state dimensions differ");
  if (!state_.is_normalized(1e-10)) throw ValidationError("pairwise model state must be normalized");

  for (const auto& o : observables_) {
    auto ev = hilbert::spectral_decompose(o).eigenvalues;
    for (auto& v : ev) v = tidy(v);
    std::sort(ev.begin(), ev.end());
    spectra_.push_back(ev);
  }
  for (std::size_t i = 0; i < observables_.size(); ++i)
    for (std::size_t j = i + 1; j < observables_.size(); ++j) {
      if (hilbert::max_abs(hilbert::commutator(observables_[i].matrix(), observables_[j].matrix())) > 1e-10) continue;
      compatible_.emplace_back(i, j);
      PairDistribution d{i, j, {}};
      for (double x : spectra_[i])
        for (double y : spectra_[j]) d.entries.push_back({x, y, 0.0});
      const auto pvm = formalism::joint_pvm({observables_[i], observables_[j]});
      for (const auto& o : pvm.outcomes()) {
        const double x = snap(o.label[0], spectra_[i]), y = snap(o.label[1], spectra_[j]);
        const double p = std::max(0.0, state_.amplitudes().dot(o.op * state_.amplitudes()).real());
        for (auto& e : d.entries)
          if (e[0] == x && e[1] == y) e[2] += p;
      }
      distributions_.push_back(std::move(d));
    }
}

PairwiseModel bell_model(const Direction& a, const Direction& b, const Direction& c) {
  std::vector<std::string> names;
  std::vector<HermitianOperator> ops;
  const char* tags[] = {"a", "b", "c"};
  const Direction dirs[] = {a, b, c};
  for (int k = 0; k < 3; ++k) {
    names.push_back(std::string("1") + tags[k]);
    ops.push_back(hilbert::tensor_product(hilbert::spin_along(dirs[k]), id2()));
  }
  for (int k = 0; k < 3; ++k) {
    names.push_back(std::string("2") + tags[k]);
    ops.push_back(hilbert::tensor_product(id2(), hilbert::spin_along(dirs[k])));
  }
  return PairwiseModel(std::move(names), std::move(ops), hilbert::singlet());
}

}  // namespace pilotwave::nogo
