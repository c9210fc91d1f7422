#include <algorithm>
#include <cmath>

#include "pilotwave/nogo.hpp"

namespace pilotwave::nogo {

QuadraticMapReport quadratic_map_test(const DistributionMap& mu, const std::vector<std::pair<CVector, CVector>>& pairs) {
  if (pairs.empty()) throw ValidationError("quadratic map test needs at least one pair");
  QuadraticMapReport r;
  r.worst_slack = INFINITY;
  r.pairs = pairs.size();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& [a, b] = pairs[k];
    if (a.size() != b.size()) throw DimensionError("pair members differ in dimension");
    const auto m1 = mu(a), m2 = mu(b), m12 = mu(a + b);
    if (m1.size() != m2.size() || m1.size() != m12.size()) throw DimensionError("map returned inconsistent bins");
    for (std::size_t bin = 0; bin < m1.size(); ++bin) {
      const double slack = 2.0 * (m1[bin] + m2[bin]) - m12[bin];
      if (slack < r.worst_slack) r.worst_slack = slack, r.worst_pair = k, r.worst_bin = bin;
    }
  }
  return r;
}

DistributionMap povm_map(const formalism::Povm& p) {
  const auto grouped = p.grouped();
  return [grouped](const CVector& psi) {
    if (static_cast<std::size_t>(psi.size()) != grouped.dim()) throw DimensionError("state does not match the POVM");
    std::vector<double> out;
    for (const auto& o : grouped.outcomes()) out.push_back(psi.dot(o.op * psi).real());
    return out;
  };
}

DistributionMap velocity_sign_map(const wavefield::GridSpec& grid, const wavefield::HamiltonianSpec& h,
                                  double threshold) {
  return [grid, h, threshold](const CVector& psi) {
    if (static_cast<std::size_t>(psi.size()) != grid.size()) throw DimensionError("state does not match the grid");
    const wavefield::GridWaveFunction w(grid, 1, std::vector<wavefield::Complex>(psi.data(), psi.data() + psi.size()));
    const auto rho = w.density();
    const auto j = wavefield::probability_current(w, h)[0];
    const double peak = *std::max_element(rho.begin(), rho.end());
    const double dv = grid.cell_volume();
    std::vector<double> out(3, 0.0);
    for (std::size_t f = 0; f < rho.size(); ++f) {
      const double v = rho[f] > 1e-12 * peak ? j[f] / rho[f] : 0.0;
      out[v < -threshold ? 0 : v > threshold ? 2 : 1] += rho[f] * dv;
    }
    return out;
  };
}

DistributionMap wavefunction_identity_map(std::vector<CVector> values, double tol) {
  return [values = std::move(values), tol](const CVector& psi) {
    std::vector<double> out(values.size() + 1, 0.0);
    const double n2 = psi.squaredNorm();
    if (n2 == 0.0) return out;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k].size() != psi.size()) throw DimensionError("candidate value differs in dimension");
      const double v2 = values[k].squaredNorm();
      if (v2 > 0.0 && std::norm(values[k].dot(psi)) >= (1.0 - tol) * v2 * n2) {
        out[k] = n2;
        return out;
      }
    }
    out.back() = n2;
    return out;
  };
}

std::pair<CVector, CVector> real_imaginary_split(const CVector& psi) {
  const CVector re = psi.real().cast<hilbert::Complex>();
  const CVector im = hilbert::Complex(0.0, 1.0) * psi.imag().cast<hilbert::Complex>();
  return {re, im};
}

}  // namespace pilotwave::nogo
