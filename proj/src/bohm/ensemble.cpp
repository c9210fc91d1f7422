#include <algorithm>
#include <cmath>

#include "pilotwave/bohm.hpp"
#include "pilotwave/rng.hpp"

namespace pilotwave::bohm {

Ensemble sample_equilibrium(const GridWaveFunction& psi, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("ensemble needs at least one member");
  if (std::abs(psi.norm_squared() - 1.0) > 1e-6) throw ValidationError("equilibrium sampling needs a normalized wave function");
  const auto& grid = psi.grid();
  const auto rho = psi.density();
  std::vector<double> cdf(rho.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) cdf[i] = acc += rho[i];

  Ensemble e{seed, std::vector<Configuration>(n)};
  for (std::size_t m = 0; m < n; ++m) {
    Rng rng(seed, m);
    const double u = rng.uniform() * acc;
    auto cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    cell = std::min(cell, cdf.size() - 1);
    while (rho[cell] == 0.0 && cell > 0) --cell;  // never land in an empty cell
    Configuration q = grid.coords(cell);
    for (std::size_t k = 0; k < grid.ndim(); ++k) {
      const auto& ax = grid.axis(k);
      q[k] += (rng.uniform() - 0.5) * ax.spacing();
      if (q[k] < ax.min) q[k] += ax.length();
      if (q[k] >= ax.max) q[k] -= ax.length();
    }
    e.members[m] = q;
  }
  return e;
}

std::vector<double> marginal(const GridSpec& grid, const std::vector<double>& density, std::size_t axis) {
  if (density.size() != grid.size()) throw DimensionError("density does not match the grid");
  if (axis >= grid.ndim()) throw DimensionError("marginal axis out of range");
  if (grid.ndim() == 1) return density;
  const std::size_t other = 1 - axis;
  std::vector<double> out(grid.axis(axis).points, 0.0);
  for (std::size_t f = 0; f < grid.size(); ++f) out[grid.unflat(f)[axis]] += density[f];
  for (auto& x : out) x *= grid.axis(other).spacing();
  return out;
}

std::pair<double, double> support_range(const wavefield::Axis& axis, const std::vector<double>& density, double rel) {
  const double peak = *std::max_element(density.begin(), density.end());
  std::size_t first = density.size(), last = 0;
  for (std::size_t i = 0; i < density.size(); ++i)
    if (density[i] >= rel * peak) {
      first = std::min(first, i);
      last = i;
    }
  if (first == density.size()) throw ValidationError("density has no support");
  const double h = axis.spacing();
  return {axis.coord(first) - 0.5 * h, axis.coord(last) + 0.5 * h};
}

namespace {

void check_bins(double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw ValidationError("tv binning needs hi > lo and at least one bin");
}

// bins + 1 entries; the last one collects everything outside [lo, hi).
std::vector<double> empirical(const std::vector<double>& xs, double lo, double hi, std::size_t bins) {
  if (xs.empty()) throw ValidationError("tv of an empty sample");
  std::vector<double> h(bins + 1, 0.0);
  const double w = (hi - lo) / static_cast<double>(bins);
  for (double x : xs) {
    if (x >= lo && x < hi)
      h[std::min(bins - 1, static_cast<std::size_t>((x - lo) / w))] += 1.0;
    else
      h[bins] += 1.0;
  }
  for (auto& v : h) v /= static_cast<double>(xs.size());
  return h;
}

double half_l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace

namespace {

// Node masses split between the bins by cell overlap; last entry is overflow.
std::vector<double> binned(const wavefield::Axis& axis, const std::vector<double>& density, double lo, double hi,
                           std::size_t bins) {
  if (density.size() != axis.points) throw DimensionError("density does not match the axis");
  const double h = axis.spacing(), w = (hi - lo) / static_cast<double>(bins);
  std::vector<double> model(bins + 1, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double m = density[i] * h;
    total += m;
    const double a = axis.coord(i) - 0.5 * h, b = a + h;
    const double ia = std::max(a, lo), ib = std::min(b, hi);
    if (ib <= ia) {
      model[bins] += m;
      continue;
    }
    model[bins] += m * ((ia - a) + (b - ib)) / h;
    auto k = static_cast<std::size_t>(std::max(0.0, std::floor((ia - lo) / w)));
    for (; k < bins; ++k) {
      const double ba = lo + w * static_cast<double>(k), bb = ba + w;
      if (ba >= ib) break;
      const double ov = std::min(bb, ib) - std::max(ba, ia);
      if (ov > 0.0) model[k] += m * ov / h;
    }
  }
  if (!(total > 0.0)) throw ValidationError("tv against a vanishing density");
  for (auto& v : model) v /= total;
  return model;
}

}  // namespace

double tv_distance(const std::vector<double>& samples, const wavefield::Axis& axis, const std::vector<double>& density,
                   double lo, double hi, std::size_t bins) {
  check_bins(lo, hi, bins);
  return half_l1(empirical(samples, lo, hi, bins), binned(axis, density, lo, hi, bins));
}

double tv_distance(const wavefield::Axis& a, const std::vector<double>& da, const wavefield::Axis& b,
                   const std::vector<double>& db, double lo, double hi, std::size_t bins) {
  check_bins(lo, hi, bins);
  return half_l1(binned(a, da, lo, hi, bins), binned(b, db, lo, hi, bins));
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b, double lo, double hi, std::size_t bins) {
  check_bins(lo, hi, bins);
  return half_l1(empirical(a, lo, hi, bins), empirical(b, lo, hi, bins));
}

double tv_to_density(const std::vector<Configuration>& points, const GridSpec& grid, const std::vector<double>& density,
                     std::size_t bins) {
  double tv = 0.0;
  for (std::size_t k = 0; k < grid.ndim(); ++k) {
    const auto m = marginal(grid, density, k);
    const auto [lo, hi] = support_range(grid.axis(k), m);
    std::vector<double> xs;
    xs.reserve(points.size());
    for (const auto& p : points) xs.push_back(p[k]);
    tv = std::max(tv, tv_distance(xs, grid.axis(k), m, lo, hi, bins));
  }
  return tv;
}

EquivarianceReport equivariance_check(const GridWaveFunction& psi0, const HamiltonianSpec& h, double dt,
                                      std::size_t steps, std::size_t n, std::uint64_t seed, const FlowOptions& options) {
  const auto ens = sample_equilibrium(psi0, n, seed);
  const auto flow = transport(psi0, h, dt, steps, ens.members, options);
  std::vector<Configuration> ends;
  ends.reserve(n);
  for (const auto& tr : flow.trajectories)
    if (tr.completed()) ends.push_back(tr.end());
  EquivarianceReport r;
  r.seed = seed;
  r.n = n;
  r.time = flow.final_state.time();
  r.aborted = flow.aborted;
  r.flagged = static_cast<double>(flow.aborted) > 1e-3 * static_cast<double>(n);
  r.tv_distance = tv_to_density(ends, flow.final_state.grid(), flow.final_state.density());
  return r;
}

}  // namespace pilotwave::bohm
