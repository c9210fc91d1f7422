#include <cmath>
#include <numbers>

#include "pilotwave/formalism.hpp"

namespace pilotwave::formalism {

using hilbert::max_abs;

namespace {

// Standard normal mass of [a, b), accurate in both tails.
double normal_mass(double a, double b) {
  constexpr double r = std::numbers::sqrt2;
  if (a >= 0.0) return 0.5 * (std::erfc(a / r) - std::erfc(b / r));
  if (b <= 0.0) return 0.5 * (std::erfc(-b / r) - std::erfc(-a / r));
  return 1.0 - 0.5 * (std::erfc(-a / r) + std::erfc(b / r));
}

// weights[k][j] = mass of bin k under a Gaussian of width sigma centred at
// eigenvalue j, with the outer bins extended to infinity.
std::vector<std::vector<double>> bin_weights(const std::vector<double>& eigenvalues, double sigma,
                                             const std::vector<double>& edges) {
  if (!(sigma > 0.0)) throw ValidationError("noise width must be positive");
  if (edges.size() < 2) throw ValidationError("need at least one bin");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw ValidationError("bin edges must be strictly ascending");
  if (edges.front() > eigenvalues.front() - 6.0 * sigma || edges.back() < eigenvalues.back() + 6.0 * sigma)
    throw CoverageError("bins do not cover the spectrum +- 6 sigma");
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t nbins = edges.size() - 1;
  std::vector<std::vector<double>> w(nbins, std::vector<double>(eigenvalues.size()));
  for (std::size_t k = 0; k < nbins; ++k)
    for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
      const double lo = k == 0 ? -inf : (edges[k] - eigenvalues[j]) / sigma;
      const double hi = k + 1 == nbins ? inf : (edges[k + 1] - eigenvalues[j]) / sigma;
      w[k][j] = normal_mass(lo, hi);
    }
  return w;
}

}  // namespace

Povm approximate_povm(const HermitianOperator& a, double sigma, const std::vector<double>& edges) {
  const auto sd = hilbert::spectral_decompose(a);
  const auto w = bin_weights(sd.eigenvalues, sigma, edges);
  std::vector<Outcome> out;
  for (std::size_t k = 0; k < w.size(); ++k) {
    CMatrix o = CMatrix::Zero(static_cast<Eigen::Index>(a.dim()), static_cast<Eigen::Index>(a.dim()));
    for (std::size_t j = 0; j < sd.eigenvalues.size(); ++j) o += w[k][j] * sd.projectors[j];
    out.push_back({{0.5 * (edges[k] + edges[k + 1])}, o});
  }
  return Povm(std::move(out));
}

StrongMeasurement weak_transformers(const HermitianOperator& a, double sigma, const std::vector<double>& edges) {
  const auto sd = hilbert::spectral_decompose(a);
  const auto w = bin_weights(sd.eigenvalues, sigma, edges);
  std::vector<Outcome> out;
  for (std::size_t k = 0; k < w.size(); ++k) {
    CMatrix r = CMatrix::Zero(static_cast<Eigen::Index>(a.dim()), static_cast<Eigen::Index>(a.dim()));
    for (std::size_t j = 0; j < sd.eigenvalues.size(); ++j) r += std::sqrt(w[k][j]) * sd.projectors[j];
    out.push_back({{0.5 * (edges[k] + edges[k + 1])}, r});
  }
  return StrongMeasurement(std::move(out), Mode::Experiment);
}

StateVector DiscreteExperimentSpec::apply(const StateVector& psi) const {
  if (psi.dim() != system_dim) throw DimensionError("state dimension does not match the experiment");
  return StateVector(u.matrix() * hilbert::tensor_product(psi, ready).amplitudes());
}

std::vector<double> DiscreteExperimentSpec::pointer_probabilities(const StateVector& psi) const {
  const CVector out = apply(psi).amplitudes();
  std::vector<double> p(pointers.size(), 0.0);
  for (std::size_t s = 0; s < system_dim; ++s)
    for (std::size_t a = 0; a < pointers.size(); ++a)
      p[a] += std::norm(out(static_cast<Eigen::Index>(s * apparatus_dim + a + 1)));
  return p;
}

DiscreteExperimentSpec build_discrete_experiment(const StrongMeasurement& m) {
  const std::size_t ds = m.dim(), n = m.outcomes().size(), da = n + 1;
  const std::size_t d = ds * da;
  if (d > hilbert::kDefaultDimensionCap) throw SizeError("discrete experiment composite dimension exceeds cap");
  const auto D = static_cast<Eigen::Index>(d);

  CMatrix v = CMatrix::Zero(D, static_cast<Eigen::Index>(ds));
  for (std::size_t a = 0; a < n; ++a) {
    const CMatrix& r = m.outcomes()[a].op;
    for (std::size_t s = 0; s < ds; ++s)
      for (std::size_t i = 0; i < ds; ++i)
        v(static_cast<Eigen::Index>(s * da + a + 1), static_cast<Eigen::Index>(i)) = r(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i));
  }
  if (max_abs(v.adjoint() * v - hilbert::identity(ds)) > 1e-10) throw ValidationError("transformers do not close to the identity");

  Eigen::HouseholderQR<CMatrix> qr(v);
  const CMatrix q = qr.householderQ() * CMatrix::Identity(D, D);
  CMatrix u(D, D);
  Eigen::Index next = static_cast<Eigen::Index>(ds);
  for (std::size_t s = 0; s < ds; ++s)
    for (std::size_t j = 0; j < da; ++j) {
      const auto col = static_cast<Eigen::Index>(s * da + j);
      u.col(col) = j == 0 ? CVector(v.col(static_cast<Eigen::Index>(s))) : CVector(q.col(next++));
    }

  DiscreteExperimentSpec spec;
  spec.system_dim = ds;
  spec.apparatus_dim = da;
  spec.ready = StateVector::basis(da, 0);
  for (std::size_t a = 0; a < n; ++a) {
    spec.pointers.push_back(StateVector::basis(da, a + 1));
    spec.calibration.push_back(m.outcomes()[a].label);
  }
  spec.u = UnitaryOperator(std::move(u));
  return spec;
}

Pvm joint_pvm(const std::vector<HermitianOperator>& family) {
  if (family.empty()) throw ValidationError("joint_pvm needs a non-empty family");
  if (!hilbert::commuting_family(family)) throw ValidationError("joint_pvm: operators do not commute");
  std::vector<hilbert::SpectralDecomposition> sds;
  for (const auto& a : family) sds.push_back(hilbert::spectral_decompose(a));

  std::vector<Outcome> out;
  const std::size_t dim = family.front().dim();
  Label label(family.size());
  std::function<void(std::size_t, const CMatrix&)> walk = [&](std::size_t k, const CMatrix& p) {
    if (p.trace().real() < 0.5) return;  // commuting projections: trace is the rank
    if (k == family.size()) {
      out.push_back({label, p});
      return;
    }
    // Descending eigenvalues, as in pvm_of_operator.
    for (std::size_t j = sds[k].eigenvalues.size(); j-- > 0;) {
      label[k] = sds[k].eigenvalues[j];
      walk(k + 1, p * sds[k].projectors[j]);
    }
  };
  walk(0, hilbert::identity(dim));
  return Pvm(std::move(out));
}

StrongMeasurement shift_experiment(std::size_t k) {
  if (k == 0) throw ValidationError("shift experiment needs k >= 1");
  const std::size_t n = 2 * k + 1;
  const auto N = static_cast<Eigen::Index>(n);
  CMatrix vp = CMatrix::Zero(N, N), vm = CMatrix::Zero(N, N);
  CMatrix pp = CMatrix::Zero(N, N), pm = CMatrix::Zero(N, N), p0 = CMatrix::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    vp((i + 1) % N, i) = 1.0;
    vm((i + N - 1) % N, i) = 1.0;
    const auto centre = static_cast<Eigen::Index>(k);
    (i > centre ? pp : i < centre ? pm : p0)(i, i) = 1.0;
  }
  const double h = std::sqrt(0.5);
  return StrongMeasurement({{{1.0}, vp * (pp + h * p0)}, {{-1.0}, vm * (pm + h * p0)}}, Mode::Experiment);
}

StrongMeasurement coin_flip_experiment(std::size_t dim, const std::vector<Complex>& c, const std::vector<Label>& labels) {
  if (c.size() != labels.size()) throw ValidationError("coin flip needs one label per amplitude");
  std::vector<Outcome> out;
  for (std::size_t i = 0; i < c.size(); ++i) out.push_back({labels[i], c[i] * hilbert::identity(dim)});
  return StrongMeasurement(std::move(out), Mode::Experiment);
}

}  // namespace pilotwave::formalism
