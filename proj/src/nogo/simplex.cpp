#include <cmath>

#include "pilotwave/nogo.hpp"

namespace pilotwave::nogo {

LpFeasibility solve_feasibility(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol) {
  const Eigen::Index m = a.rows(), n = a.cols();
  if (b.size() != m) throw DimensionError("right-hand side does not match the constraint rows");
  if (m == 0 || n == 0) throw ValidationError("empty linear program");
  constexpr double kPivot = 1e-12;

  // Tableau: columns are the n variables, m artificials, then the rhs; the
  // last row holds reduced costs of min sum(artificials).
  const Eigen::Index rhs = n + m;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  Eigen::VectorXd sign(m);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    sign(i) = b(i) < 0 ? -1.0 : 1.0;
    t.row(i).head(n) = sign(i) * a.row(i);
    t(i, n + i) = 1.0;
    t(i, rhs) = sign(i) * b(i);
    basis[static_cast<std::size_t>(i)] = n + i;
  }
  for (Eigen::Index j = 0; j < n; ++j) t(m, j) = -t.col(j).head(m).sum();
  t(m, rhs) = -t.col(rhs).head(m).sum();

  LpFeasibility out;
  const std::size_t limit = 200 * static_cast<std::size_t>(n + m) + 1000;
  for (;;) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j)
      if (t(m, j) < -kPivot) {
        enter = j;  // Bland: lowest index
        break;
      }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (t(i, enter) <= kPivot) continue;
      const double r = t(i, rhs) / t(i, enter);
      if (leave < 0 || r < best - kPivot ||
          (std::abs(r - best) <= kPivot && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        leave = i;
        best = r;
      }
    }
    if (leave < 0) break;  // cannot happen for a bounded phase 1
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
    if (++out.iterations > limit) throw NumericalGuardError("simplex did not terminate within the iteration limit");
  }

  out.infeasibility = -t(m, rhs);
  out.feasible = out.infeasibility <= tol;
  out.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index k = basis[static_cast<std::size_t>(i)];
    if (k < n) out.x(k) = std::max(0.0, t(i, rhs));
  }
  // Reduced cost of artificial i is 1 - y_i in the sign-flipped system.
  out.farkas.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) out.farkas(i) = sign(i) * (1.0 - t(m, n + i));
  return out;
}

}  // namespace pilotwave::nogo
