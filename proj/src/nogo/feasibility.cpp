#include <cmath>

#include "pilotwave/nogo.hpp"

namespace pilotwave::nogo {

namespace {

// Mixed-radix walk over every assignment of one spectrum value per observable.
class Assignments {
 public:
  explicit Assignments(const PairwiseModel& m) : spectra_(m.spectra()) {
    double total = 1.0;
    for (const auto& s : spectra_) total *= static_cast<double>(s.size());
    if (total > 1e6) throw SizeError("more than 10^6 deterministic assignments");
    count_ = static_cast<std::size_t>(total);
  }
  std::size_t size() const { return count_; }
  std::vector<double> operator[](std::size_t k) const {
    std::vector<double> v(spectra_.size());
    for (std::size_t i = spectra_.size(); i-- > 0;) {
      v[i] = spectra_[i][k % spectra_[i].size()];
      k /= spectra_[i].size();
    }
    return v;
  }

 private:
  const std::vector<std::vector<double>>& spectra_;
  std::size_t count_ = 0;
};

double evaluate(const PairwiseModel& model, const std::vector<InequalityTerm>& terms, const std::vector<double>& v) {
  double s = 0.0;
  for (const auto& t : terms) {
    const auto& d = model.distributions().at(t.pair);
    if (v[d.first] == t.x && v[d.second] == t.y) s += t.coefficient;
  }
  return s;
}

}  // namespace

FeasibilityCertificate value_map_feasibility(const PairwiseModel& model) {
  const Assignments all(model);
  const auto& dists = model.distributions();
  std::size_t rows = 1;
  for (const auto& d : dists) rows += d.entries.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(all.size()));
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows));
  b(0) = 1.0;
  a.row(0).setOnes();
  for (std::size_t col = 0; col < all.size(); ++col) {
    const auto v = all[col];
    Eigen::Index r = 1;
    for (const auto& d : dists)
      for (const auto& e : d.entries) {
        if (v[d.first] == e[0] && v[d.second] == e[1]) a(r, static_cast<Eigen::Index>(col)) = 1.0;
        ++r;
      }
  }
  {
    Eigen::Index r = 1;
    for (const auto& d : dists)
      for (const auto& e : d.entries) b(r++) = e[2];
  }

  const auto lp = solve_feasibility(a, b);
  FeasibilityCertificate cert;
  cert.feasible = lp.feasible;
  if (lp.feasible) {
    for (std::size_t col = 0; col < all.size(); ++col)
      if (lp.x(static_cast<Eigen::Index>(col)) > 1e-14) {
        cert.assignments.push_back(all[col]);
        cert.weights.push_back(lp.x(static_cast<Eigen::Index>(col)));
      }
    return cert;
  }
  // y^T A <= 0 per assignment: y_0 + sum_k y_k [event k] <= 0.
  const Eigen::VectorXd& y = lp.farkas;
  const double scale = y.tail(y.size() - 1).cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw NumericalGuardError("degenerate infeasibility witness");
  Eigen::Index r = 1;
  for (std::size_t k = 0; k < dists.size(); ++k)
    for (const auto& e : dists[k].entries) {
      const double c = y(r++) / scale;
      if (std::abs(c) > 1e-12) cert.terms.push_back({k, e[0], e[1], c});
    }
  cert.bound = -y(0) / scale;
  cert.violation = quantum_value(model, cert.terms) - cert.bound;
  return cert;
}

double deterministic_max(const PairwiseModel& model, const std::vector<InequalityTerm>& terms) {
  const Assignments all(model);
  double best = -INFINITY;
  for (std::size_t k = 0; k < all.size(); ++k) best = std::max(best, evaluate(model, terms, all[k]));
  return best;
}

double quantum_value(const PairwiseModel& model, const std::vector<InequalityTerm>& terms) {
  double s = 0.0;
  for (const auto& t : terms)
    for (const auto& e : model.distributions().at(t.pair).entries)
      if (e[0] == t.x && e[1] == t.y) s += t.coefficient * e[2];
  return s;
}

bool verify(const PairwiseModel& model, const FeasibilityCertificate& cert, double tol) {
  if (!cert.feasible) {
    if (cert.terms.empty()) return false;
    return deterministic_max(model, cert.terms) <= cert.bound + tol &&
           quantum_value(model, cert.terms) - cert.bound >= 1e-6;
  }
  if (cert.assignments.size() != cert.weights.size() || cert.assignments.empty()) return false;
  double total = 0.0;
  for (double w : cert.weights) {
    if (w < -tol) return false;
    total += w;
  }
  if (std::abs(total - 1.0) > tol) return false;
  for (const auto& d : model.distributions())
    for (const auto& e : d.entries) {
      double p = 0.0;
      for (std::size_t k = 0; k < cert.assignments.size(); ++k)
        if (cert.assignments[k][d.first] == e[0] && cert.assignments[k][d.second] == e[1]) p += cert.weights[k];
      if (std::abs(p - e[2]) > tol) return false;
    }
  return true;
}

nlohmann::json to_json(const PairwiseModel& model, const FeasibilityCertificate& cert) {
  nlohmann::json j;
  j["observables"] = model.names();
  auto& ds = j["distributions"] = nlohmann::json::array();
  for (const auto& d : model.distributions()) {
    nlohmann::json e = {{"first", model.names()[d.first]}, {"second", model.names()[d.second]}};
    e["entries"] = d.entries;
    ds.push_back(e);
  }
  j["feasible"] = cert.feasible;
  if (cert.feasible) {
    j["assignments"] = cert.assignments;
    j["weights"] = cert.weights;
  } else {
    auto& terms = j["inequality"]["terms"] = nlohmann::json::array();
    for (const auto& t : cert.terms)
      terms.push_back({{"pair", t.pair}, {"x", t.x}, {"y", t.y}, {"coefficient", t.coefficient}});
    j["inequality"]["bound"] = cert.bound;
    j["inequality"]["violation"] = cert.violation;
  }
  return j;
}

}  // namespace pilotwave::nogo
