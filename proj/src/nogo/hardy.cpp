#include <algorithm>
#include <cmath>
#include <numbers>

#include "pilotwave/nogo.hpp"

namespace pilotwave::nogo {

using hilbert::Complex;

namespace {

constexpr double kPi = std::numbers::pi;

using Spinor = std::array<Complex, 2>;

Spinor up_along(double theta, double phi) {
  return {std::cos(theta / 2), std::polar(std::sin(theta / 2), phi)};
}

Spinor up_along(const Direction& n) {
  return up_along(std::acos(std::clamp(n[2], -1.0, 1.0)), std::atan2(n[1], n[0]));
}

Direction bloch(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

Complex bra_ket(const Spinor& u, const Spinor& v) { return std::conj(u[0]) * v[0] + std::conj(u[1]) * v[1]; }

// <u (x) v | psi> with psi indexed i1 * 2 + i2
Complex overlap(const Spinor& u, const Spinor& v, const CVector& psi) {
  Complex s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s += std::conj(u[i] * v[j]) * psi(2 * i + j);
  return s;
}

// Mass of psi with the first (wing = 0) or second particle projected on u.
double wing_mass(const Spinor& u, int wing, const CVector& psi) {
  double m = 0.0;
  for (int k = 0; k < 2; ++k) {
    Complex s = 0.0;
    for (int i = 0; i < 2; ++i) s += std::conj(u[i]) * (wing == 0 ? psi(2 * i + k) : psi(2 * k + i));
    m += std::norm(s);
  }
  return m;
}

const Spinor kUp{1.0, 0.0}, kDown{0.0, 1.0};

// With C = D = sigma_z the constraints <c+ d+|psi> = 0, <a+ d-|psi> = 0 and
// <c- b+|psi> = 0 leave psi = alpha|+-> + beta|-+> + |-->.
bool constrained_state(const Spinor& a, const Spinor& b, CVector& psi) {
  const Complex ac = bra_ket(a, kUp), bd = bra_ket(b, kUp);
  if (std::abs(ac) < 1e-12 || std::abs(bd) < 1e-12) return false;
  psi = CVector::Zero(4);
  psi(1) = -bra_ket(a, kDown) / ac;
  psi(2) = -bra_ket(b, kDown) / bd;
  psi(3) = 1.0;
  psi.normalize();
  return true;
}

HardyConditions fast_conditions(const Spinor& a, const Spinor& b, const CVector& psi) {
  HardyConditions h;
  h.p = std::norm(overlap(a, b, psi));
  const double pa = wing_mass(a, 0, psi), pb = wing_mass(b, 1, psi);
  h.a_implies_d = pa > 0 ? std::norm(overlap(a, kUp, psi)) / pa : 1.0;
  h.b_implies_c = pb > 0 ? std::norm(overlap(kUp, b, psi)) / pb : 1.0;
  h.d_and_c = std::norm(overlap(kUp, kUp, psi));
  return h;
}

double pair_probability(const HermitianOperator& x, const HermitianOperator& y, const StateVector& psi, double vx,
                        double vy) {
  const auto pvm = formalism::joint_pvm({x, y});
  return formalism::born_probability(pvm, psi, [&](const formalism::Label& l) {
    return std::abs(l[0] - vx) < 1e-8 && std::abs(l[1] - vy) < 1e-8;
  });
}

}  // namespace

bool HardyConditions::hold(double tol) const {
  return std::abs(a_implies_d - 1.0) <= tol && std::abs(b_implies_c - 1.0) <= tol && d_and_c <= tol;
}

PairwiseModel hardy_model(const HardySetup& s) {
  const HermitianOperator id(hilbert::identity(2));
  return PairwiseModel({"A", "B", "C", "D"},
                       {hilbert::tensor_product(hilbert::spin_along(s.a), id), hilbert::tensor_product(id, hilbert::spin_along(s.b)),
                        hilbert::tensor_product(hilbert::spin_along(s.c), id), hilbert::tensor_product(id, hilbert::spin_along(s.d))},
                       s.state);
}

HardyConditions hardy_conditions(const HardySetup& s) {
  if (s.state.dim() != 4) throw DimensionError("Hardy setup needs a two-qubit state");
  const HermitianOperator id(hilbert::identity(2));
  const auto a = hilbert::tensor_product(hilbert::spin_along(s.a), id);
  const auto b = hilbert::tensor_product(id, hilbert::spin_along(s.b));
  const auto c = hilbert::tensor_product(hilbert::spin_along(s.c), id);
  const auto d = hilbert::tensor_product(id, hilbert::spin_along(s.d));
  HardyConditions h;
  h.p = pair_probability(a, b, s.state, 1, 1);
  const double pa = pair_probability(a, d, s.state, 1, 1) + pair_probability(a, d, s.state, 1, -1);
  const double pb = pair_probability(c, b, s.state, 1, 1) + pair_probability(c, b, s.state, -1, 1);
  h.a_implies_d = pa > 0 ? pair_probability(a, d, s.state, 1, 1) / pa : 1.0;
  h.b_implies_c = pb > 0 ? pair_probability(c, b, s.state, 1, 1) / pb : 1.0;
  h.d_and_c = pair_probability(c, d, s.state, 1, 1);
  return h;
}

HardyResult hardy_search(const HardySearchOptions& options) {
  if (options.grid < 2) throw ValidationError("Hardy scan needs at least two points per angle");
  HardyResult r;
  auto value = [&](const std::array<double, 4>& x) {
    ++r.evaluations;
    CVector psi;
    const Spinor a = up_along(x[0], x[1]), b = up_along(x[2], x[3]);
    if (!constrained_state(a, b, psi)) return 0.0;
    return std::norm(overlap(a, b, psi));
  };

  // coarse scan over theta in (0, pi), phi in [0, 2 pi)
  const std::size_t g = options.grid;
  std::array<double, 4> best{}, x{};
  double best_p = -1.0;
  for (std::size_t i0 = 0; i0 < g; ++i0)
    for (std::size_t i1 = 0; i1 < g; ++i1)
      for (std::size_t i2 = 0; i2 < g; ++i2)
        for (std::size_t i3 = 0; i3 < g; ++i3) {
          x = {kPi * (static_cast<double>(i0) + 0.5) / static_cast<double>(g), 2 * kPi * static_cast<double>(i1) / static_cast<double>(g),
               kPi * (static_cast<double>(i2) + 0.5) / static_cast<double>(g), 2 * kPi * static_cast<double>(i3) / static_cast<double>(g)};
          const double p = value(x);
          if (p > best_p) best_p = p, best = x;
        }

  double step = kPi / static_cast<double>(g);
  r.converged = true;
  while (step >= options.step_floor) {
    bool improved = false;
    for (std::size_t k = 0; k < 4; ++k)
      for (double dir : {1.0, -1.0}) {
        x = best;
        x[k] += dir * step;
        const double p = value(x);
        if (p > best_p) best_p = p, best = x, improved = true;
      }
    if (!improved) step /= 2;
    if (r.evaluations > options.max_evaluations) {
      r.converged = false;
      break;
    }
  }

  const Spinor a = up_along(best[0], best[1]), b = up_along(best[2], best[3]);
  CVector psi;
  if (!constrained_state(a, b, psi)) throw NumericalGuardError("Hardy search ended on a degenerate point");
  r.setup = {StateVector(psi), bloch(best[0], best[1]), bloch(best[2], best[3]), {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}};
  r.claimed = fast_conditions(a, b, psi);
  return r;
}

ProductSweep hardy_product_sweep(double tol) {
  std::vector<Direction> dirs;
  for (int k = 0; k < 3; ++k)
    for (double s : {1.0, -1.0}) {
      Direction d{0, 0, 0};
      d[k] = s;
      dirs.push_back(d);
    }
  const double q = 1.0 / std::sqrt(3.0);
  for (double sx : {1.0, -1.0})
    for (double sy : {1.0, -1.0})
      for (double sz : {1.0, -1.0}) dirs.push_back({sx * q, sy * q, sz * q});
  const std::size_t n = dirs.size();
  std::vector<std::size_t> anti(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(dirs[i][0] + dirs[j][0]) + std::abs(dirs[i][1] + dirs[j][1]) + std::abs(dirs[i][2] + dirs[j][2]) < 1e-12)
        anti[i] = j;
  // ov[m][s] = |<m+|s+>|^2
  std::vector<std::vector<double>> ov(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) ov[i][j] = std::norm(bra_ket(up_along(dirs[i]), up_along(dirs[j])));

  ProductSweep r;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t c = 0; c < n; ++c)
            for (std::size_t d = 0; d < n; ++d) {
              ++r.evaluated;
              if (ov[a][u] * ov[anti[d]][v] > tol) continue;  // A=1 and D=-1
              if (ov[anti[c]][u] * ov[b][v] > tol) continue;  // C=-1 and B=1
              if (ov[c][u] * ov[d][v] > tol) continue;        // C=1 and D=1
              ++r.feasible;
              r.sup_p = std::max(r.sup_p, ov[a][u] * ov[b][v]);
            }
  return r;
}

}  // namespace pilotwave::nogo
