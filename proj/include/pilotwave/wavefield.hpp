#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pilotwave/error.hpp"

/// Spinor-valued wave functions on periodic rectangular grids, split-step
/// Fourier evolution and closed-form reference states.
namespace pilotwave::wavefield {

using Complex = std::complex<double>;
using Point = std::array<double, 2>;

struct Axis {
  double min = 0.0;
  double max = 0.0;
  std::size_t points = 0;

  double length() const { return max - min; }
  double spacing() const { return length() / static_cast<double>(points); }
  double coord(std::size_t i) const { return min + spacing() * static_cast<double>(i); }
  /// Angular wavenumber of FFT bin i (standard FFT ordering).
  double wavenumber(std::size_t i) const;
};

/// One or two periodic axes; samples sit at min + i*spacing, i < points.
class GridSpec {
 public:
  GridSpec() = default;
  /// Throws ValidationError unless each axis has a positive extent and a
  /// power-of-two point count >= 32.
  explicit GridSpec(std::vector<Axis> axes);
  static GridSpec line(double min, double max, std::size_t points);
  static GridSpec square(double min, double max, std::size_t points);

  std::size_t ndim() const { return axes_.size(); }
  const Axis& axis(std::size_t k) const { return axes_[k]; }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t size() const;
  double cell_volume() const;
  /// Row-major flat index; the last axis varies fastest.
  std::size_t flat(std::size_t i0, std::size_t i1 = 0) const { return ndim() == 1 ? i0 : i0 * axes_[1].points + i1; }
  std::array<std::size_t, 2> unflat(std::size_t f) const;
  Point coords(std::size_t f) const;
  bool contains(const Point& q) const;

  friend bool operator==(const GridSpec& a, const GridSpec& b);

 private:
  std::vector<Axis> axes_;
};

/// Samples are component-major: samples[c * grid.size() + flat].
class GridWaveFunction {
 public:
  GridWaveFunction() = default;
  GridWaveFunction(GridSpec grid, std::size_t spin_dim, double time = 0.0);
  GridWaveFunction(GridSpec grid, std::size_t spin_dim, std::vector<Complex> samples, double time = 0.0);

  /// Fills every component c with f(c, point).
  static GridWaveFunction from_function(const GridSpec& grid, std::size_t spin_dim,
                                        const std::function<Complex(std::size_t, const Point&)>& f, double time = 0.0);

  const GridSpec& grid() const { return grid_; }
  std::size_t spin_dim() const { return spin_dim_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }
  std::vector<Complex>& samples() { return samples_; }
  const std::vector<Complex>& samples() const { return samples_; }
  Complex& at(std::size_t c, std::size_t f) { return samples_[c * grid_.size() + f]; }
  Complex at(std::size_t c, std::size_t f) const { return samples_[c * grid_.size() + f]; }

  /// Spin-summed |Psi|^2 per grid point.
  std::vector<double> density() const;
  /// Sum |Psi|^2 * cell volume.
  double norm_squared() const;
  void normalize();
  /// Largest spin-summed density on the outermost samples of any axis,
  /// relative to the peak density.
  double boundary_ratio() const;

 private:
  GridSpec grid_;
  std::size_t spin_dim_ = 1;
  std::vector<Complex> samples_;
  double time_ = 0.0;
};

/// H = sum_k -hbar^2/(2 m_k) d_k^2 + V(q) + spin potential.
/// The spin potential is either diagonal (one real array per component) or
/// a full Hermitian spin_dim x spin_dim matrix per grid point.
struct HamiltonianSpec {
  std::vector<double> masses;
  double hbar = 1.0;
  std::vector<double> scalar;                      // empty or grid.size()
  std::vector<std::vector<double>> spin_diagonal;  // empty or spin_dim arrays
  std::vector<Eigen::MatrixXcd> spin_matrix;       // empty or grid.size() matrices

  static HamiltonianSpec free(std::size_t ndim, double mass = 1.0, double hbar = 1.0);
  /// Adds V(q) sampled on the grid.
  HamiltonianSpec& with_potential(const GridSpec& grid, const std::function<double(const Point&)>& v);
  /// Stern-Gerlach coupling -(b + a z) sigma_z along `axis`: component 0
  /// (spin up) gets -(b + a z), component 1 gets +(b + a z).
  HamiltonianSpec& with_stern_gerlach(const GridSpec& grid, double a, double b, std::size_t axis = 0);

  /// Largest |potential| over points where the density exceeds `rel` x peak.
  double max_potential_on_support(const GridWaveFunction& psi, double rel = 1e-10) const;
};

struct EvolveOptions {
  /// Relative boundary density that trips the wrap-around guard.
  double boundary_tolerance = 1e-8;
  /// Skip the dt * max|V| / hbar <= 0.1 precondition (used by order studies).
  bool allow_large_steps = false;
};

/// Strang split-step: half potential, full kinetic in Fourier space, half
/// potential. `on_step`, if set, sees the state after every step. Throws
/// WrapAroundError when the boundary guard trips and ValidationError when
/// the step violates dt * max|V| / hbar <= 0.1 on the support of psi.
GridWaveFunction evolve(const GridWaveFunction& psi, const HamiltonianSpec& h, double dt, std::size_t steps,
                        const std::function<void(const GridWaveFunction&)>& on_step = {},
                        const EvolveOptions& options = {});

/// In-place FFT over all axes of one component; backward is normalized.
class Fft {
 public:
  explicit Fft(const GridSpec& grid);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  void forward(Complex* data) const;
  void backward(Complex* data) const;

 private:
  struct Plans;
  std::unique_ptr<Plans> plans_;
  std::size_t n_;
};

/// Spectral derivative d/dq_axis of every component (same layout as samples).
std::vector<Complex> spectral_gradient(const GridWaveFunction& psi, std::size_t axis);

struct MomentumDensity {
  std::vector<std::vector<double>> p;  // ascending momenta per axis
  std::vector<double> density;         // row-major over the p grids
  std::vector<double> cell;            // momentum spacing per axis
};
/// |psi~(p)|^2 on the conjugate grid, summed over spin, normalized so that
/// sum density * prod(cell) = 1.
MomentumDensity momentum_density(const GridWaveFunction& psi, double hbar = 1.0);

/// J_k = (hbar/m_k) Im(Psi^dagger d_k Psi); one array per axis.
std::vector<std::vector<double>> probability_current(const GridWaveFunction& psi, const HamiltonianSpec& h);

/// d|Psi|^2/dt computed from i hbar dPsi/dt = H Psi.
std::vector<double> density_rate(const GridWaveFunction& psi, const HamiltonianSpec& h);
/// H Psi with the spectral Laplacian.
GridWaveFunction apply_hamiltonian(const GridWaveFunction& psi, const HamiltonianSpec& h);

namespace analytic {

/// Freely evolved Gaussian with psi_0 = (2 pi d^2)^{-1/4} exp(-(x-c)^2/4d^2 + ik(x-c)).
Complex free_gaussian(double x, double t, double center, double d, double k, double mass = 1.0, double hbar = 1.0);
/// Width sqrt(<x^2> - <x>^2) of the free Gaussian at time t.
double free_gaussian_width(double t, double d, double mass = 1.0, double hbar = 1.0);

/// Gaussian packet under V = -F z - s b (the spin-s component of the
/// Stern-Gerlach coupling with F = s a), initial data as free_gaussian.
Complex sg_gaussian(int s, double z, double t, double a, double b, double d, double center = 0.0, double k = 0.0,
                    double mass = 1.0, double hbar = 1.0);

/// Harmonic-trap eigenfunction phi_n for V = m w^2 x^2 / 2.
double trap_eigenstate(std::size_t n, double x, double omega, double mass = 1.0, double hbar = 1.0);
/// sum_n c_n phi_n(x) exp(-i E_n t / hbar).
Complex trap_superposition(const std::vector<Complex>& c, double x, double t, double omega, double mass = 1.0,
                           double hbar = 1.0);
/// Coherent state of the trap: ground state displaced to x0 at t = 0.
Complex trap_coherent(double x, double t, double x0, double omega, double mass = 1.0, double hbar = 1.0);

/// The 2D isotropic oscillator state proportional to r e^{-m w r^2/2hbar} e^{i phi}.
Complex oscillator2d_11(const Point& q, double t, double omega, double mass = 1.0, double hbar = 1.0);

/// Two-particle example for H = -(d_x^2 + d_y^2)/2 + (x - y)^2/4 (m = hbar = 1).
Complex two_particle(const Point& q, double t);
/// Its trajectories: X_t = a X + b Y, Y_t = b X + a Y.
double two_particle_a(double t);
double two_particle_b(double t);

GridWaveFunction sample(const GridSpec& grid, double t, const std::function<Complex(const Point&)>& f);

}  // namespace analytic

/// Writes `<prefix>.json` (grid, spin_dim, time) and `<prefix>.csv` with rows
/// (component, index..., re, im).
void write_wavefunction(const GridWaveFunction& psi, const std::string& prefix);
/// Reads a pair written by write_wavefunction and validates it.
GridWaveFunction read_wavefunction(const std::string& prefix);

}  // namespace pilotwave::wavefield
