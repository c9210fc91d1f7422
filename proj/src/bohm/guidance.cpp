#include <algorithm>
#include <cmath>

#include "pilotwave/bohm.hpp"

namespace pilotwave::bohm {

struct GuidanceField::Stencil {
  std::array<std::vector<std::size_t>, 2> idx;
  std::array<std::vector<double>, 2> w;
};

GuidanceField::GuidanceField(const GridWaveFunction& psi, const HamiltonianSpec& h, GuidanceOptions options)
    : grid_(psi.grid()), time_(psi.time()), options_(options) {
  if (options_.order < 2 || options_.order > 10 || options_.order % 2 != 0)
    throw ValidationError("interpolation order must be even and between 2 and 10");
  rho_ = psi.density();
  peak_ = *std::max_element(rho_.begin(), rho_.end());
  if (!(peak_ > 0.0)) throw ValidationError("guidance field of a vanishing wave function");
  j_ = wavefield::probability_current(psi, h);
  v_.assign(grid_.ndim(), std::vector<double>(grid_.size(), 0.0));
  const double floor = options_.node_floor * peak_;
  for (std::size_t k = 0; k < grid_.ndim(); ++k)
    for (std::size_t i = 0; i < grid_.size(); ++i)
      if (rho_[i] >= floor) v_[k][i] = j_[k][i] / rho_[i];
}

GuidanceField::Stencil GuidanceField::stencil(const Configuration& q) const {
  if (!grid_.contains(q)) throw WrapAroundError("configuration left the grid");
  Stencil s;
  const int p = options_.order;
  for (std::size_t k = 0; k < grid_.ndim(); ++k) {
    const auto& ax = grid_.axis(k);
    const double x = (q[k] - ax.min) / ax.spacing();
    const auto base = static_cast<long>(std::floor(x)) - (p / 2 - 1);
    const auto n = static_cast<long>(ax.points);
    s.idx[k].resize(static_cast<std::size_t>(p));
    s.w[k].resize(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
      s.idx[k][static_cast<std::size_t>(j)] = static_cast<std::size_t>(((base + j) % n + n) % n);
      double w = 1.0;
      for (int m = 0; m < p; ++m)
        if (m != j) w *= (x - static_cast<double>(base + m)) / static_cast<double>(j - m);
      s.w[k][static_cast<std::size_t>(j)] = w;
    }
  }
  return s;
}

double GuidanceField::interpolate(const std::vector<double>& field, const Stencil& s) const {
  if (grid_.ndim() == 1) {
    double sum = 0.0;
    for (std::size_t a = 0; a < s.idx[0].size(); ++a) sum += s.w[0][a] * field[s.idx[0][a]];
    return sum;
  }
  double sum = 0.0;
  for (std::size_t a = 0; a < s.idx[0].size(); ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < s.idx[1].size(); ++b) row += s.w[1][b] * field[grid_.flat(s.idx[0][a], s.idx[1][b])];
    sum += s.w[0][a] * row;
  }
  return sum;
}

double GuidanceField::density(const Configuration& q) const { return interpolate(rho_, stencil(q)); }

Configuration GuidanceField::velocity(const Configuration& q) const { return velocity_at(stencil(q)); }

Configuration GuidanceField::velocity_towards(const GuidanceField& next, double theta, const Configuration& q) const {
  const Stencil s = stencil(q);
  const auto a = velocity_at(s), b = next.velocity_at(s);
  return {(1.0 - theta) * a[0] + theta * b[0], (1.0 - theta) * a[1] + theta * b[1]};
}

Configuration GuidanceField::velocity_at(const Stencil& s) const {
  const double rho = interpolate(rho_, s);
  if (!(rho >= options_.node_floor * peak_)) throw NearNodeError("configuration is at a node of the wave function");

  bool smooth = options_.mode == VelocityInterpolation::Direct;
  if (options_.mode == VelocityInterpolation::Hybrid) {
    double lo = rho_[grid_.flat(s.idx[0][0], grid_.ndim() == 2 ? s.idx[1][0] : 0)], hi = lo;
    for (std::size_t a = 0; a < s.idx[0].size(); ++a) {
      if (grid_.ndim() == 1) {
        lo = std::min(lo, rho_[s.idx[0][a]]);
        hi = std::max(hi, rho_[s.idx[0][a]]);
        continue;
      }
      for (std::size_t b = 0; b < s.idx[1].size(); ++b) {
        const double r = rho_[grid_.flat(s.idx[0][a], s.idx[1][b])];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
    }
    smooth = lo >= options_.smooth_ratio * hi;
  }
  Configuration v{0.0, 0.0};
  for (std::size_t k = 0; k < grid_.ndim(); ++k) v[k] = smooth ? interpolate(v_[k], s) : interpolate(j_[k], s) / rho;
  return v;
}

Configuration velocity(const GridWaveFunction& psi, const Configuration& q, const HamiltonianSpec& h,
                       GuidanceOptions options) {
  return GuidanceField(psi, h, options).velocity(q);
}

std::vector<std::vector<double>> mixture_velocity(const std::vector<std::pair<double, GridWaveFunction>>& mixture,
                                                  const HamiltonianSpec& h) {
  if (mixture.empty()) throw ValidationError("mixture must not be empty");
  const auto& grid = mixture.front().second.grid();
  std::vector<double> rho(grid.size(), 0.0);
  std::vector<std::vector<double>> j(grid.ndim(), std::vector<double>(grid.size(), 0.0));
  for (const auto& [p, psi] : mixture) {
    if (!(psi.grid() == grid)) throw DimensionError("mixture members live on different grids");
    if (!(p >= 0.0)) throw ValidationError("mixture weights must be nonnegative");
    const auto r = psi.density();
    const auto jj = wavefield::probability_current(psi, h);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      rho[i] += p * r[i];
      for (std::size_t k = 0; k < grid.ndim(); ++k) j[k][i] += p * jj[k][i];
    }
  }
  const double floor = 1e-12 * *std::max_element(rho.begin(), rho.end());
  for (std::size_t k = 0; k < grid.ndim(); ++k)
    for (std::size_t i = 0; i < grid.size(); ++i) j[k][i] = rho[i] >= floor ? j[k][i] / rho[i] : 0.0;
  return j;
}

}  // namespace pilotwave::bohm
