#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "pilotwave/bohm.hpp"

namespace pilotwave::bohm {

namespace {

// Weights of periodic trigonometric interpolation at y from the nodes of
// `ax`: f(y) = sum_j w_j f(y_j). The Nyquist mode enters as a cosine.
std::vector<wavefield::Complex> trig_weights(const wavefield::Axis& ax, double y) {
  const std::size_t n = ax.points;
  std::vector<wavefield::Complex> w(n);
  const double h = ax.spacing();
  for (std::size_t j = 0; j < n; ++j) {
    const double u = (y - ax.coord(j)) / h;  // in units of grid spacing
    const double nd = static_cast<double>(n);
    double s = 1.0 + std::cos(std::numbers::pi * u);
    for (std::size_t m = 1; m < n / 2; ++m) s += 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(m) * u / nd);
    w[j] = s / nd;
  }
  return w;
}

}  // namespace

ConditionalWaveFunction conditional_wavefunction(const GridWaveFunction& psi, double y) {
  const auto& grid = psi.grid();
  if (grid.ndim() != 2) throw DimensionError("conditional wave function needs a two-axis grid");
  const auto& ax = grid.axis(0);
  const auto& ay = grid.axis(1);
  if (!(y >= ay.min && y < ay.max)) throw ValidationError("section coordinate outside the grid");
  const std::size_t nx = ax.points, ny = ay.points, sd = psi.spin_dim();

  const auto w = trig_weights(ay, y);
  std::vector<wavefield::Complex> section(nx * sd, 0.0);
  for (std::size_t c = 0; c < sd; ++c)
    for (std::size_t i = 0; i < nx; ++i) {
      wavefield::Complex s = 0.0;
      for (std::size_t j = 0; j < ny; ++j) s += w[j] * psi.at(c, grid.flat(i, j));
      section[c * nx + i] = s;
    }

  // Section norms along y decide both degeneracy and the support components.
  std::vector<double> ymass(ny, 0.0);
  for (std::size_t c = 0; c < sd; ++c)
    for (std::size_t f = 0; f < grid.size(); ++f) ymass[grid.unflat(f)[1]] += std::norm(psi.at(c, f));
  const double ypeak = *std::max_element(ymass.begin(), ymass.end());
  double snorm = 0.0;
  for (const auto& z : section) snorm += std::norm(z);
  if (!(snorm >= 1e-12 * ypeak)) throw NumericalGuardError("degenerate section: Psi(., Y) vanishes");

  GridWaveFunction out(wavefield::GridSpec({ax}), sd, std::move(section), psi.time());
  out.normalize();

  // The y-support component containing Y: a maximal run of nodes whose
  // section mass is at least 1e-8 of the peak (runs wrap periodically).
  const double thr = 1e-8 * ypeak;
  const auto yi = static_cast<std::size_t>(std::lround((y - ay.min) / ay.spacing())) % ny;
  ConditionalWaveFunction result{std::move(out), false};
  if (ymass[yi] < thr) return result;
  std::vector<std::size_t> comp{yi};
  for (std::size_t j = (yi + 1) % ny; j != yi && ymass[j] >= thr; j = (j + 1) % ny) comp.push_back(j);
  if (comp.size() < ny)
    for (std::size_t j = (yi + ny - 1) % ny; ymass[j] >= thr && std::find(comp.begin(), comp.end(), j) == comp.end();
         j = (j + ny - 1) % ny)
      comp.push_back(j);

  // Psi restricted to the component must factor as psi(x) Phi(y).
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(nx * sd), static_cast<Eigen::Index>(comp.size()));
  for (std::size_t c = 0; c < sd; ++c)
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t b = 0; b < comp.size(); ++b)
        m(static_cast<Eigen::Index>(c * nx + i), static_cast<Eigen::Index>(b)) = psi.at(c, grid.flat(i, comp[b]));
  const Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  const auto& sv = svd.singularValues();
  result.effective = sv.size() < 2 || sv(1) <= 1e-6 * sv(0);
  return result;
}

}  // namespace pilotwave::bohm
