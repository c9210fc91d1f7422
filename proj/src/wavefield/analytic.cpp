#include <cmath>
#include <numbers>

#include "pilotwave/wavefield.hpp"

namespace pilotwave::wavefield::analytic {

namespace {
constexpr Complex kI{0.0, 1.0};
}

Complex free_gaussian(double x, double t, double center, double d, double k, double mass, double hbar) {
  const Complex alpha = 1.0 + kI * hbar * t / (2.0 * mass * d * d);
  const double drift = x - center - hbar * k * t / mass;
  const Complex expo = -drift * drift / (4.0 * d * d * alpha) + kI * k * (x - center) - kI * hbar * k * k * t / (2.0 * mass);
  return std::pow(2.0 * std::numbers::pi * d * d, -0.25) / std::sqrt(alpha) * std::exp(expo);
}

double free_gaussian_width(double t, double d, double mass, double hbar) {
  const double r = hbar * t / (2.0 * mass * d * d);
  return d * std::sqrt(1.0 + r * r);
}

Complex sg_gaussian(int s, double z, double t, double a, double b, double d, double center, double k, double mass,
                    double hbar) {
  if (s != 1 && s != -1) throw ValidationError("spin sign must be +1 or -1");
  const double f = s * a;
  const double phase = s * b * t + f * t * z - f * f * t * t * t / (6.0 * mass);
  return std::exp(kI * phase / hbar) * free_gaussian(z - f * t * t / (2.0 * mass), t, center, d, k, mass, hbar);
}

double trap_eigenstate(std::size_t n, double x, double omega, double mass, double hbar) {
  const double beta = mass * omega / hbar;
  const double xi = std::sqrt(beta) * x;
  // Normalized Hermite functions by three-term recurrence.
  double prev = 0.0;
  double cur = std::pow(beta / std::numbers::pi, 0.25) * std::exp(-0.5 * xi * xi);
  for (std::size_t j = 0; j < n; ++j) {
    const double jj = static_cast<double>(j);
    const double next = std::sqrt(2.0 / (jj + 1.0)) * xi * cur - std::sqrt(jj / (jj + 1.0)) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

Complex trap_superposition(const std::vector<Complex>& c, double x, double t, double omega, double mass, double hbar) {
  Complex sum = 0.0;
  for (std::size_t n = 0; n < c.size(); ++n)
    sum += c[n] * trap_eigenstate(n, x, omega, mass, hbar) * std::exp(-kI * omega * (static_cast<double>(n) + 0.5) * t);
  return sum;
}

Complex trap_coherent(double x, double t, double x0, double omega, double mass, double hbar) {
  const double beta = mass * omega / hbar;
  const double xc = x0 * std::cos(omega * t);
  const double pc = -mass * omega * x0 * std::sin(omega * t);
  const Complex expo = -0.5 * beta * (x - xc) * (x - xc) + kI * (pc * (x - 0.5 * xc) / hbar - 0.5 * omega * t);
  return std::pow(beta / std::numbers::pi, 0.25) * std::exp(expo);
}

Complex oscillator2d_11(const Point& q, double t, double omega, double mass, double hbar) {
  const double beta = mass * omega / hbar;
  const double r2 = q[0] * q[0] + q[1] * q[1];
  // Energy 2 hbar omega.
  return beta / std::sqrt(std::numbers::pi) * Complex(q[0], q[1]) * std::exp(-0.5 * beta * r2) *
         std::exp(-2.0 * kI * omega * t);
}

Complex two_particle(const Point& q, double t) {
  const double u = q[0] - q[1], w = q[0] + q[1];
  const Complex g = 1.0 + kI * t;
  return std::exp(-0.5 * kI * t) / std::sqrt(std::numbers::pi * g) * std::exp(-0.25 * (u * u + w * w / g));
}

double two_particle_a(double t) { return 0.5 * (std::sqrt(1.0 + t * t) + 1.0); }
double two_particle_b(double t) { return 0.5 * (std::sqrt(1.0 + t * t) - 1.0); }

GridWaveFunction sample(const GridSpec& grid, double t, const std::function<Complex(const Point&)>& f) {
  return GridWaveFunction::from_function(grid, 1, [&](std::size_t, const Point& q) { return f(q); }, t);
}

}  // namespace pilotwave::wavefield::analytic
