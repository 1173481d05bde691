#pragma once

// Periodic-grid representation of functions on the torus [-L, L)^N with a
// Fourier-multiplier fractional Laplacian, norms and singular-weight quadrature.

#include <cmath>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fnls/errors.hpp"

namespace fnls {

enum class PotentialKind { Harmonic, ShiftedHarmonic, None };

struct PotentialSpec {
  PotentialKind kind = PotentialKind::Harmonic;
  double shift = 0.0;  // only used by ShiftedHarmonic

  double operator()(double r2) const;
  /// V(0).
  double at_origin() const { return (*this)(0.0); }
  bool trapping() const { return kind != PotentialKind::None; }

  static PotentialSpec harmonic() { return {PotentialKind::Harmonic, 0.0}; }
  static PotentialSpec shifted(double c) { return {PotentialKind::ShiftedHarmonic, c}; }
  static PotentialSpec none() { return {PotentialKind::None, 0.0}; }
};

std::string to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(const std::string& name);

struct ProblemParams {
  int dim = 2;
  double s = 0.75;
  double b = 0.5;
  double a = 0.0;
  PotentialSpec potential;
  double half_width = 16.0;  // L
  int points = 128;          // M per dimension

  /// (2s - b) / N; always derived, never stored.
  double beta_sq() const { return (2.0 * s - b) / dim; }

  /// Throws ParameterError unless 1/2 < s < 1, N > 2s, 0 < b < 2s, a >= 0,
  /// L > 0, M >= 16 and even, N in {2, 3}.
  void validate() const;
};

/// Uniform periodic grid on [-L, L)^N. Coordinates are (i - M/2) h so that
/// the point reflection x -> -x maps grid points to grid points exactly.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, int points, double half_width);

  int dim() const { return dim_; }
  int points() const { return points_; }
  double half_width() const { return half_width_; }
  double spacing() const { return 2.0 * half_width_ / points_; }
  double cell_volume() const;
  std::size_t size() const { return size_; }

  double coordinate(int i) const { return (i - points_ / 2) * spacing(); }
  /// Angular wavenumber of FFT index k in the standard aliased range.
  double wavenumber(int k) const;
  /// Index of the reflected point -x for axis index i.
  int mirror(int i) const { return (points_ - i) % points_; }

  /// Squared radius of flat (row-major) index.
  double radius_sq(std::size_t flat) const;
  void unflatten(std::size_t flat, int* idx) const;

  bool operator==(const Grid& other) const = default;

 private:
  int dim_ = 0;
  int points_ = 0;
  double half_width_ = 0.0;
  std::size_t size_ = 0;
};

/// Real samples of a function on a Grid, row-major.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& grid, double fill = 0.0)
      : grid_(grid), values_(grid.size(), fill) {}
  Field(const Grid& grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool all_finite() const;
  double max() const;
  double min() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double c);
  /// this += c * other
  Field& axpy(double c, const Field& other);

 private:
  Grid grid_;
  std::vector<double> values_;
};

Field operator+(Field lhs, const Field& rhs);
Field operator-(Field lhs, const Field& rhs);
Field operator*(double c, Field f);

/// Immutable per-problem tables: |xi|^{2s} multipliers over the half spectrum,
/// singular weight samples W(x) ~ |x|^{-b}, potential samples and FFT plans.
/// Safe to share across threads; every transform uses per-call buffers.
class SpectrumCache {
 public:
  explicit SpectrumCache(const ProblemParams& params);
  ~SpectrumCache();
  SpectrumCache(const SpectrumCache&) = delete;
  SpectrumCache& operator=(const SpectrumCache&) = delete;

  const Grid& grid() const { return grid_; }
  const ProblemParams& params() const { return params_; }
  double s() const { return params_.s; }
  double b() const { return params_.b; }
  double beta_sq() const { return params_.beta_sq(); }

  /// Number of complex coefficients of the real-to-complex transform.
  std::size_t spectrum_size() const { return multipliers_.size(); }
  std::span<const double> multipliers() const { return multipliers_; }
  /// Plancherel weight of each half-spectrum coefficient (1 or 2).
  std::span<const double> spectrum_weights() const { return spectrum_weights_; }
  std::span<const double> weight() const { return weight_; }
  std::span<const double> potential() const { return potential_; }
  /// |xi|^2 at each half-spectrum coefficient.
  std::span<const double> wavenumber_sq() const { return wavenumber_sq_; }

  /// Unnormalized forward transform (sum_j u_j e^{-i xi x_j}).
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Inverse transform including the 1/M^N factor.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

  void require_grid(const Field& u) const;

  /// Apply an arbitrary real symbol sigma(|xi|^2) as a Fourier multiplier.
  template <typename Symbol>
  Field apply_symbol(const Field& u, Symbol&& symbol) const {
    require_grid(u);
    std::vector<std::complex<double>> spec(spectrum_size());
    forward(u.values(), spec);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= symbol(wavenumber_sq_[k]);
    Field out(grid_);
    inverse(spec, out.values());
    return out;
  }

 private:
  struct Plans;
  ProblemParams params_;
  Grid grid_;
  std::vector<double> multipliers_;
  std::vector<double> spectrum_weights_;
  std::vector<double> wavenumber_sq_;
  std::vector<double> weight_;
  std::vector<double> potential_;
  std::unique_ptr<Plans> plans_;
};

/// Cell average of |x|^{-b} over the origin cell [-h/2, h/2]^N (requires b < N).
double origin_cell_average(int dim, double b, double h);

/// Analytically continued lattice sum Z_N(s) = sum_{j in Z^N, j != 0} |j|^{-s},
/// evaluated by theta-function splitting. Valid for s != 0, N.
double epstein_zeta(int dim, double s);

/// Corrected weights of |x|^{-b} at the origin and its 2N axis neighbours. With
/// point values |x|^{-b} elsewhere, h^N sum W g integrates |x|^{-b} g for smooth g
/// with error O(h^{N+4-b}): the origin carries -Z_N(b) h^{-b} (punctured-sum
/// correction) and a five-point Laplacian with Z_N(b-2) carries the next term.
struct SingularWeightStencil {
  double origin = 0.0;
  double neighbour = 0.0;
};
SingularWeightStencil singular_weight_stencil(int dim, double b, double h);

std::shared_ptr<const SpectrumCache> build_grid(const ProblemParams& params);

/// (-Delta)^s u realized as the multiplier |xi|^{2s}.
Field frac_laplacian(const Field& u, const SpectrumCache& cache);
/// sum multipliers |u_hat|^2 with Plancherel normalization (= <(-Delta)^s u, u>).
double seminorm_sq(const Field& u, const SpectrumCache& cache);
/// h^N sum u^2 in physical space.
double l2_norm_sq(const Field& u);
/// Plancherel-side mass, for cross-checks.
double spectral_l2_norm_sq(const Field& u, const SpectrumCache& cache);
/// h^N sum W |u|^{2 + 2 beta^2} without the a / (1 + beta^2) prefactor.
double interaction_integral(const Field& u, const SpectrumCache& cache);
double potential_integral(const Field& u, const SpectrumCache& cache);
/// h^N sum u v.
double inner(const Field& u, const Field& v);

/// Samples f(x) at every grid point.
template <typename F>
Field sample(const Grid& grid, F&& f) {
  Field out(grid);
  std::vector<double> x(grid.dim());
  std::vector<int> idx(grid.dim());
  for (std::size_t n = 0; n < grid.size(); ++n) {
    grid.unflatten(n, idx.data());
    for (int d = 0; d < grid.dim(); ++d) x[d] = grid.coordinate(idx[d]);
    out[n] = f(std::span<const double>(x));
  }
  return out;
}

/// Result of a spectral dilation.
struct Dilation {
  Field field;
  double lost_fraction = 0.0;  // mass fraction outside the window or band
};

/// Returns x -> u(factor * x) via separable trigonometric interpolation; points
/// mapped outside the box are set to zero. Throws ResolutionError when the
/// discarded mass fraction (outside the sampled window, or beyond the shrunken
/// band when factor > 1) exceeds max_lost_fraction.
Dilation spectral_dilate(const Field& u, double factor, const SpectrumCache& cache,
                         double max_lost_fraction = 1e-6);

/// Binary checkpoint: "FNLS", u32 version, u32 N, u32 M, f64 L, s, b, then M^N
/// f64 samples, all little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Field field;
  double s = 0.0;
  double b = 0.0;
};

void write_checkpoint(std::ostream& os, const Field& u, double s, double b);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const Field& u, double s, double b);
Checkpoint load_checkpoint(const std::string& path);

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace fnls
