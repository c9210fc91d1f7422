#include <algorithm>
#include <cmath>
#include <numbers>

#include "pilotwave/wavefield.hpp"

namespace pilotwave::wavefield {

double Axis::wavenumber(std::size_t i) const {
  const auto n = static_cast<double>(points);
  const double j = i < points / 2 ? static_cast<double>(i) : static_cast<double>(i) - n;
  return 2.0 * std::numbers::pi * j / length();
}

GridSpec::GridSpec(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 2) throw ValidationError("grids have one or two axes");
  for (const auto& a : axes_) {
    if (!(a.max > a.min) || !std::isfinite(a.min) || !std::isfinite(a.max)) throw ValidationError("grid extent must be positive and finite");
    if (a.points < 32 || (a.points & (a.points - 1)) != 0)
      throw ValidationError("grid points per axis must be a power of two >= 32");
  }
}

GridSpec GridSpec::line(double min, double max, std::size_t points) { return GridSpec({Axis{min, max, points}}); }

GridSpec GridSpec::square(double min, double max, std::size_t points) {
  return GridSpec({Axis{min, max, points}, Axis{min, max, points}});
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& a : axes_) n *= a.points;
  return n;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (const auto& a : axes_) v *= a.spacing();
  return v;
}

std::array<std::size_t, 2> GridSpec::unflat(std::size_t f) const {
  if (ndim() == 1) return {f, 0};
  return {f / axes_[1].points, f % axes_[1].points};
}

Point GridSpec::coords(std::size_t f) const {
  const auto idx = unflat(f);
  Point p{axes_[0].coord(idx[0]), 0.0};
  if (ndim() == 2) p[1] = axes_[1].coord(idx[1]);
  return p;
}

bool GridSpec::contains(const Point& q) const {
  for (std::size_t k = 0; k < ndim(); ++k)
    if (!(q[k] >= axes_[k].min && q[k] < axes_[k].max)) return false;
  return true;
}

bool operator==(const GridSpec& a, const GridSpec& b) {
  if (a.ndim() != b.ndim()) return false;
  for (std::size_t k = 0; k < a.ndim(); ++k)
    if (a.axes_[k].min != b.axes_[k].min || a.axes_[k].max != b.axes_[k].max || a.axes_[k].points != b.axes_[k].points)
      return false;
  return true;
}

GridWaveFunction::GridWaveFunction(GridSpec grid, std::size_t spin_dim, double time)
    : GridWaveFunction(grid, spin_dim, std::vector<Complex>(grid.size() * spin_dim), time) {}

GridWaveFunction::GridWaveFunction(GridSpec grid, std::size_t spin_dim, std::vector<Complex> samples, double time)
    : grid_(std::move(grid)), spin_dim_(spin_dim), samples_(std::move(samples)), time_(time) {
  if (spin_dim_ != 1 && spin_dim_ != 2 && spin_dim_ != 4) throw ValidationError("spin dimension must be 1, 2 or 4");
  if (samples_.size() != grid_.size() * spin_dim_) throw DimensionError("sample count does not match grid and spin dimension");
  for (const auto& z : samples_)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw ValidationError("wave function has non-finite samples");
}

GridWaveFunction GridWaveFunction::from_function(const GridSpec& grid, std::size_t spin_dim,
                                                 const std::function<Complex(std::size_t, const Point&)>& f, double time) {
  std::vector<Complex> s(grid.size() * spin_dim);
  for (std::size_t c = 0; c < spin_dim; ++c)
    for (std::size_t i = 0; i < grid.size(); ++i) s[c * grid.size() + i] = f(c, grid.coords(i));
  return GridWaveFunction(grid, spin_dim, std::move(s), time);
}

std::vector<double> GridWaveFunction::density() const {
  const std::size_t n = grid_.size();
  std::vector<double> rho(n, 0.0);
  for (std::size_t c = 0; c < spin_dim_; ++c)
    for (std::size_t i = 0; i < n; ++i) rho[i] += std::norm(samples_[c * n + i]);
  return rho;
}

double GridWaveFunction::norm_squared() const {
  double s = 0.0;
  for (const auto& z : samples_) s += std::norm(z);
  return s * grid_.cell_volume();
}

void GridWaveFunction::normalize() {
  const double n2 = norm_squared();
  if (!(n2 > 0.0)) throw ValidationError("cannot normalize a vanishing wave function");
  const double f = 1.0 / std::sqrt(n2);
  for (auto& z : samples_) z *= f;
}

double GridWaveFunction::boundary_ratio() const {
  const auto rho = density();
  const double peak = *std::max_element(rho.begin(), rho.end());
  if (!(peak > 0.0)) return 0.0;
  double edge = 0.0;
  if (grid_.ndim() == 1) {
    edge = std::max(rho.front(), rho.back());
  } else {
    const std::size_t n0 = grid_.axis(0).points, n1 = grid_.axis(1).points;
    for (std::size_t i = 0; i < n0; ++i) edge = std::max({edge, rho[grid_.flat(i, 0)], rho[grid_.flat(i, n1 - 1)]});
    for (std::size_t j = 0; j < n1; ++j) edge = std::max({edge, rho[grid_.flat(0, j)], rho[grid_.flat(n0 - 1, j)]});
  }
  return edge / peak;
}

HamiltonianSpec HamiltonianSpec::free(std::size_t ndim, double mass, double hbar) {
  HamiltonianSpec h;
  h.masses.assign(ndim, mass);
  h.hbar = hbar;
  return h;
}

HamiltonianSpec& HamiltonianSpec::with_potential(const GridSpec& grid, const std::function<double(const Point&)>& v) {
  if (scalar.empty()) scalar.assign(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) scalar[i] += v(grid.coords(i));
  return *this;
}

HamiltonianSpec& HamiltonianSpec::with_stern_gerlach(const GridSpec& grid, double a, double b, std::size_t axis) {
  if (axis >= grid.ndim()) throw ValidationError("Stern-Gerlach axis out of range");
  spin_diagonal.assign(2, std::vector<double>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double field = b + a * grid.coords(i)[axis];
    spin_diagonal[0][i] = -field;
    spin_diagonal[1][i] = field;
  }
  return *this;
}

double HamiltonianSpec::max_potential_on_support(const GridWaveFunction& psi, double rel) const {
  const auto rho = psi.density();
  const double peak = *std::max_element(rho.begin(), rho.end());
  double vmax = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] < rel * peak) continue;
    const double v = scalar.empty() ? 0.0 : scalar[i];
    if (!spin_matrix.empty()) {
      // Row-sum bound on the spectral radius.
      const auto& m = spin_matrix[i];
      for (Eigen::Index r = 0; r < m.rows(); ++r) vmax = std::max(vmax, std::abs(v) + m.row(r).cwiseAbs().sum());
    } else if (!spin_diagonal.empty()) {
      for (const auto& d : spin_diagonal) vmax = std::max(vmax, std::abs(v + d[i]));
    } else {
      vmax = std::max(vmax, std::abs(v));
    }
  }
  return vmax;
}

}  // namespace pilotwave::wavefield
