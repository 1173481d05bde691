#include "fnls/spectral_core.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

namespace fnls {

namespace {

// FFTW planning is not thread-safe; execution on per-call buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <typename T>
class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n) : ptr_(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (ptr_ == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  T* get() const { return ptr_; }

 private:
  T* ptr_;
};

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

// ---------------------------------------------------------------- params

double PotentialSpec::operator()(double r2) const {
  switch (kind) {
    case PotentialKind::Harmonic:
      return r2;
    case PotentialKind::ShiftedHarmonic:
      return r2 + shift;
    case PotentialKind::None:
      return 0.0;
  }
  return 0.0;
}

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Harmonic:
      return "harmonic";
    case PotentialKind::ShiftedHarmonic:
      return "shifted";
    case PotentialKind::None:
      return "none";
  }
  return "unknown";
}

PotentialKind potential_kind_from_string(const std::string& name) {
  if (name == "harmonic") return PotentialKind::Harmonic;
  if (name == "shifted") return PotentialKind::ShiftedHarmonic;
  if (name == "none") return PotentialKind::None;
  throw ParameterError("unknown potential '" + name + "' (expected harmonic, shifted or none)");
}

void ProblemParams::validate() const {
  auto fail = [](const std::string& msg) { throw ParameterError(msg); };
  if (dim != 2 && dim != 3) fail("N must be 2 or 3, got " + std::to_string(dim));
  if (!std::isfinite(s) || !(s > 0.5 && s < 1.0))
    fail("s must lie in the open interval (1/2, 1), got " + std::to_string(s));
  if (!(dim > 2.0 * s)) fail("N > 2s is required");
  if (!std::isfinite(b) || !(b > 0.0 && b < 2.0 * s))
    fail("b must satisfy 0 < b < 2s = " + std::to_string(2.0 * s) + ", got " + std::to_string(b));
  if (!(b < dim)) fail("b < N is required for a locally integrable weight");
  if (!std::isfinite(a) || a < 0.0) fail("a must be >= 0, got " + std::to_string(a));
  if (!std::isfinite(half_width) || half_width <= 0.0)
    fail("L must be > 0, got " + std::to_string(half_width));
  if (points < 16 || points % 2 != 0)
    fail("M must be even and >= 16, got " + std::to_string(points));
  if (potential.kind == PotentialKind::ShiftedHarmonic &&
      (!std::isfinite(potential.shift) || potential.shift < 0.0))
    fail("potential shift must be >= 0 so that V >= 0");
}

// ---------------------------------------------------------------- grid

Grid::Grid(int dim, int points, double half_width)
    : dim_(dim), points_(points), half_width_(half_width), size_(ipow(points, dim)) {
  if (dim < 1 || points < 2 || points % 2 != 0 || !(half_width > 0.0))
    throw ParameterError("invalid grid: need dim >= 1, even M, L > 0");
}

double Grid::cell_volume() const { return std::pow(spacing(), dim_); }

double Grid::wavenumber(int k) const {
  const int signed_k = k < points_ / 2 ? k : k - points_;
  return std::numbers::pi * signed_k / half_width_;
}

double Grid::radius_sq(std::size_t flat) const {
  double r2 = 0.0;
  for (int d = dim_ - 1; d >= 0; --d) {
    const double x = coordinate(static_cast<int>(flat % points_));
    r2 += x * x;
    flat /= points_;
  }
  return r2;
}

void Grid::unflatten(std::size_t flat, int* idx) const {
  for (int d = dim_ - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(flat % points_);
    flat /= points_;
  }
}

// ---------------------------------------------------------------- field

Field::Field(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw GridMismatch("field has " + std::to_string(values_.size()) + " samples, grid needs " +
                       std::to_string(grid_.size()));
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

static void require_same(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw GridMismatch("fields live on different grids");
}

Field& Field::operator+=(const Field& other) {
  require_same(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double c) {
  for (double& v : values_) v *= c;
  return *this;
}

Field& Field::axpy(double c, const Field& other) {
  require_same(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += c * other.values_[i];
  return *this;
}

Field operator+(Field lhs, const Field& rhs) { return lhs += rhs; }
Field operator-(Field lhs, const Field& rhs) { return lhs -= rhs; }
Field operator*(double c, Field f) { return f *= c; }

// ---------------------------------------------------------------- weight

double origin_cell_average(int dim, double b, double h) {
  if (!(b < dim)) throw ParameterError("origin cell average needs b < N");
  if (!(h > 0.0)) throw ParameterError("cell width must be positive");
  // Divergence theorem with div(x f) = (N - b) f for f = |x|^{-b}:
  //   int_cell f = (h/2) / (N - b) * sum over 2N faces of int_face f.
  // Face integrands are analytic (distance >= h/2 from the origin).
  using Gauss = boost::math::quadrature::gauss<double, 30>;
  const double c = 0.5 * h;
  double face = 0.0;
  if (dim == 1) {
    face = std::pow(c, -b);
  } else if (dim == 2) {
    face = 2.0 * Gauss::integrate([&](double t) { return std::pow(c * c + t * t, -0.5 * b); }, 0.0, c);
  } else if (dim == 3) {
    auto inner = [&](double t1) {
      return Gauss::integrate(
          [&](double t2) { return std::pow(c * c + t1 * t1 + t2 * t2, -0.5 * b); }, 0.0, c);
    };
    face = 4.0 * Gauss::integrate(inner, 0.0, c);
  } else {
    throw ParameterError("origin cell average implemented for N <= 3");
  }
  const double integral = 2.0 * dim * c * face / (dim - b);
  return integral / std::pow(h, dim);
}

namespace {

// Upper incomplete gamma for any real a, via the recurrence down from a > 0 or a = 0.
double upper_gamma(double a, double x) {
  if (a > 0.0) return boost::math::tgamma(a, x);
  if (a == 0.0) return boost::math::expint(1, x);
  return (upper_gamma(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
}

}  // namespace

double epstein_zeta(int dim, double s) {
  if (dim < 1 || dim > 3) throw ParameterError("lattice zeta implemented for N <= 3");
  if (s == 0.0 || s == dim) throw ParameterError("lattice zeta has poles at s = 0 and s = N");
  // Theta-function splitting at pi |j|^2 = 1; both tails are below 1e-40 for R = 6.
  constexpr int R = 6;
  double sum = -2.0 / s + 2.0 / (s - dim);
  const int span = 2 * R + 1;
  int count = 1;
  for (int d = 0; d < dim; ++d) count *= span;
  for (int c = 0; c < count; ++c) {
    int rest = c;
    double r2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const int j = rest % span - R;
      rest /= span;
      r2 += double(j) * j;
    }
    if (r2 == 0.0) continue;
    const double x = std::numbers::pi * r2;
    sum += std::pow(x, -0.5 * s) * upper_gamma(0.5 * s, x) +
           std::pow(x, 0.5 * (s - dim)) * upper_gamma(0.5 * (dim - s), x);
  }
  return sum * std::pow(std::numbers::pi, 0.5 * s) / std::tgamma(0.5 * s);
}

SingularWeightStencil singular_weight_stencil(int dim, double b, double h) {
  if (!(b < dim)) throw ParameterError("singular weight needs b < N");
  if (!(h > 0.0)) throw ParameterError("cell width must be positive");
  const double zb = epstein_zeta(dim, b);
  const double zb2 = epstein_zeta(dim, b - 2.0);
  const double hb = std::pow(h, -b);
  return {hb * (zb2 - zb), hb * (1.0 - zb2 / (2.0 * dim))};
}

// ---------------------------------------------------------------- cache

struct SpectrumCache::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

namespace {
const ProblemParams& validated(const ProblemParams& p) {
  p.validate();
  return p;
}
}  // namespace

SpectrumCache::SpectrumCache(const ProblemParams& params)
    : params_(validated(params)), grid_(params.dim, params.points, params.half_width) {
  const int n = grid_.dim();
  const int m = grid_.points();
  const int half = m / 2 + 1;
  const std::size_t nspec = ipow(m, n - 1) * half;

  multipliers_.resize(nspec);
  spectrum_weights_.resize(nspec);
  wavenumber_sq_.resize(nspec);
  for (std::size_t k = 0; k < nspec; ++k) {
    std::size_t rest = k;
    const int k_last = static_cast<int>(rest % half);
    rest /= half;
    double xi2 = std::pow(grid_.wavenumber(k_last), 2);
    for (int d = 0; d < n - 1; ++d) {
      xi2 += std::pow(grid_.wavenumber(static_cast<int>(rest % m)), 2);
      rest /= m;
    }
    wavenumber_sq_[k] = xi2;
    multipliers_[k] = xi2 == 0.0 ? 0.0 : std::pow(xi2, params_.s);
    spectrum_weights_[k] = (k_last == 0 || k_last == m / 2) ? 1.0 : 2.0;
  }

  const double h = grid_.spacing();
  const SingularWeightStencil st = singular_weight_stencil(n, params_.b, h);
  const double near = 1.5 * h * h;
  weight_.resize(grid_.size());
  potential_.resize(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double r2 = grid_.radius_sq(i);
    if (r2 == 0.0)
      weight_[i] = st.origin;
    else if (r2 < near)
      weight_[i] = st.neighbour;
    else
      weight_[i] = std::pow(r2, -0.5 * params_.b);
    potential_[i] = params_.potential(r2);
  }

  plans_ = std::make_unique<Plans>();
  std::vector<int> dims(n, m);
  FftwBuffer<double> real(grid_.size());
  FftwBuffer<fftw_complex> spec(nspec);
  std::lock_guard lock(planner_mutex());
  plans_->r2c = fftw_plan_dft_r2c(n, dims.data(), real.get(), spec.get(), FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r(n, dims.data(), spec.get(), real.get(), FFTW_ESTIMATE);
  if (!plans_->r2c || !plans_->c2r) throw std::runtime_error("FFTW planning failed");
}

SpectrumCache::~SpectrumCache() = default;

void SpectrumCache::require_grid(const Field& u) const {
  if (!(u.grid() == grid_)) throw GridMismatch("field grid does not match the spectrum cache");
}

void SpectrumCache::forward(std::span<const double> in,
                            std::span<std::complex<double>> out) const {
  if (in.size() != grid_.size() || out.size() != spectrum_size())
    throw GridMismatch("transform buffer sizes do not match the grid");
  FftwBuffer<double> real(grid_.size());
  FftwBuffer<fftw_complex> spec(spectrum_size());
  std::copy(in.begin(), in.end(), real.get());
  fftw_execute_dft_r2c(plans_->r2c, real.get(), spec.get());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {spec.get()[k][0], spec.get()[k][1]};
}

void SpectrumCache::inverse(std::span<const std::complex<double>> in,
                            std::span<double> out) const {
  if (out.size() != grid_.size() || in.size() != spectrum_size())
    throw GridMismatch("transform buffer sizes do not match the grid");
  FftwBuffer<double> real(grid_.size());
  FftwBuffer<fftw_complex> spec(spectrum_size());
  for (std::size_t k = 0; k < in.size(); ++k) {
    spec.get()[k][0] = in[k].real();
    spec.get()[k][1] = in[k].imag();
  }
  fftw_execute_dft_c2r(plans_->c2r, spec.get(), real.get());
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = real.get()[i] * scale;
}

std::shared_ptr<const SpectrumCache> build_grid(const ProblemParams& params) {
  return std::make_shared<const SpectrumCache>(params);
}

// ---------------------------------------------------------------- operators

Field frac_laplacian(const Field& u, const SpectrumCache& cache) {
  cache.require_grid(u);
  std::vector<std::complex<double>> spec(cache.spectrum_size());
  cache.forward(u.values(), spec);
  const auto mult = cache.multipliers();
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= mult[k];
  Field out(u.grid());
  cache.inverse(spec, out.values());
  return out;
}

namespace {

double spectral_quadratic(const Field& u, const SpectrumCache& cache, bool with_multiplier) {
  cache.require_grid(u);
  std::vector<std::complex<double>> spec(cache.spectrum_size());
  cache.forward(u.values(), spec);
  const auto mult = cache.multipliers();
  const auto w = cache.spectrum_weights();
  CompensatedSum acc;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double m = with_multiplier ? mult[k] : 1.0;
    acc.add(w[k] * m * std::norm(spec[k]));
  }
  const Grid& g = cache.grid();
  return acc.value() * g.cell_volume() / static_cast<double>(g.size());
}

}  // namespace

double seminorm_sq(const Field& u, const SpectrumCache& cache) {
  return spectral_quadratic(u, cache, true);
}

double spectral_l2_norm_sq(const Field& u, const SpectrumCache& cache) {
  return spectral_quadratic(u, cache, false);
}

double l2_norm_sq(const Field& u) {
  CompensatedSum acc;
  for (double v : u.values()) acc.add(v * v);
  return acc.value() * u.grid().cell_volume();
}

double inner(const Field& u, const Field& v) {
  require_same(u, v);
  CompensatedSum acc;
  for (std::size_t i = 0; i < u.size(); ++i) acc.add(u[i] * v[i]);
  return acc.value() * u.grid().cell_volume();
}

double interaction_integral(const Field& u, const SpectrumCache& cache) {
  cache.require_grid(u);
  const double p = 2.0 + 2.0 * cache.beta_sq();
  const auto w = cache.weight();
  CompensatedSum acc;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double au = std::abs(u[i]);
    if (au != 0.0) acc.add(w[i] * std::pow(au, p));
  }
  return acc.value() * u.grid().cell_volume();
}

double potential_integral(const Field& u, const SpectrumCache& cache) {
  cache.require_grid(u);
  const auto v = cache.potential();
  CompensatedSum acc;
  for (std::size_t i = 0; i < u.size(); ++i) acc.add(v[i] * u[i] * u[i]);
  return acc.value() * u.grid().cell_volume();
}

// ---------------------------------------------------------------- dilation

namespace {

// Row i evaluates the trigonometric interpolant at factor * x_i; rows whose
// target leaves [-L, L) are zero.
std::vector<double> interpolation_matrix(const Grid& g, double factor) {
  const int m = g.points();
  const double L = g.half_width();
  const double dk = std::numbers::pi / L;
  std::vector<double> t(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double y = factor * g.coordinate(i);
    if (y < -L || y >= L) continue;
    for (int j = 0; j < m; ++j) {
      const double theta = dk * (y - g.coordinate(j));
      // 1 + 2 sum_{k=1}^{m/2-1} cos(k theta) + cos(m/2 theta), by recurrence.
      const double c1 = std::cos(theta);
      double prev = 1.0, cur = c1, sum = 1.0;
      for (int k = 1; k < m / 2; ++k) {
        sum += 2.0 * cur;
        const double next = 2.0 * c1 * cur - prev;
        prev = cur;
        cur = next;
      }
      sum += cur;
      t[static_cast<std::size_t>(i) * m + j] = sum / m;
    }
  }
  return t;
}

void apply_along_axis(std::vector<double>& data, const std::vector<double>& t, const Grid& g,
                      int axis) {
  const int m = g.points();
  const std::size_t stride = ipow(m, g.dim() - 1 - axis);
  const std::size_t block = stride * m;
  std::vector<double> line(m), out(m);
  for (std::size_t base = 0; base < data.size(); base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      for (int j = 0; j < m; ++j) line[j] = data[base + off + j * stride];
      for (int i = 0; i < m; ++i) {
        const double* row = &t[static_cast<std::size_t>(i) * m];
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += row[j] * line[j];
        out[i] = acc;
      }
      for (int i = 0; i < m; ++i) data[base + off + i * stride] = out[i];
    }
  }
}

}  // namespace

Dilation spectral_dilate(const Field& u, double factor, const SpectrumCache& cache,
                         double max_lost_fraction) {
  cache.require_grid(u);
  if (!(factor > 0.0) || !std::isfinite(factor))
    throw ResolutionError("dilation factor must be positive and finite");
  const Grid& g = cache.grid();
  const double total = l2_norm_sq(u);
  double lost = 0.0;
  if (total > 0.0) {
    if (factor < 1.0) {
      // Samples beyond the window |x|_inf <= factor L are never evaluated.
      const double window = factor * g.half_width();
      std::vector<int> idx(g.dim());
      CompensatedSum outside;
      for (std::size_t n = 0; n < g.size(); ++n) {
        g.unflatten(n, idx.data());
        bool in = true;
        for (int d = 0; d < g.dim(); ++d) in = in && std::abs(g.coordinate(idx[d])) <= window;
        if (!in) outside.add(u[n] * u[n]);
      }
      lost = outside.value() * g.cell_volume() / total;
    } else if (factor > 1.0) {
      // Modes with factor |xi_d| above the Nyquist wavenumber alias.
      const double cutoff = std::numbers::pi / (g.spacing() * factor);
      std::vector<std::complex<double>> spec(cache.spectrum_size());
      cache.forward(u.values(), spec);
      const int m = g.points();
      const int half = m / 2 + 1;
      const auto w = cache.spectrum_weights();
      CompensatedSum all, beyond;
      for (std::size_t k = 0; k < spec.size(); ++k) {
        std::size_t rest = k;
        double kmax = std::abs(g.wavenumber(static_cast<int>(rest % half)));
        rest /= half;
        for (int d = 0; d < g.dim() - 1; ++d) {
          kmax = std::max(kmax, std::abs(g.wavenumber(static_cast<int>(rest % m))));
          rest /= m;
        }
        const double e = w[k] * std::norm(spec[k]);
        all.add(e);
        if (kmax > cutoff) beyond.add(e);
      }
      lost = all.value() > 0.0 ? beyond.value() / all.value() : 0.0;
    }
  }
  if (lost > max_lost_fraction) {
    std::ostringstream msg;
    msg << "dilation by " << factor << " discards a mass fraction " << lost << " > "
        << max_lost_fraction << "; increase M or L";
    throw ResolutionError(msg.str());
  }
  if (factor == 1.0) return {u, 0.0};
  std::vector<double> data(u.values().begin(), u.values().end());
  const auto t = interpolation_matrix(g, factor);
  for (int axis = 0; axis < g.dim(); ++axis) apply_along_axis(data, t, g, axis);
  return {Field(g, std::move(data)), lost};
}

// ---------------------------------------------------------------- checkpoint

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b, 4);
}

void put_f64(std::ostream& os, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b, 8);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void write_checkpoint(std::ostream& os, const Field& u, double s, double b) {
  const Grid& g = u.grid();
  os.write("FNLS", 4);
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<std::uint32_t>(g.dim()));
  put_u32(os, static_cast<std::uint32_t>(g.points()));
  put_f64(os, g.half_width());
  put_f64(os, s);
  put_f64(os, b);
  for (double v : u.values()) put_f64(os, v);
  if (!os) throw std::runtime_error("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "FNLS")
    throw std::runtime_error("not a field checkpoint (bad magic)");
  const auto version = get_u32(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const auto dim = static_cast<int>(get_u32(is));
  const auto points = static_cast<int>(get_u32(is));
  if (dim < 1 || dim > 3 || points < 2 || points > (1 << 14))
    throw std::runtime_error("checkpoint header has implausible grid");
  const double L = get_f64(is);
  Checkpoint cp;
  cp.s = get_f64(is);
  cp.b = get_f64(is);
  Grid g(dim, points, L);
  std::vector<double> values(g.size());
  for (double& v : values) v = get_f64(is);
  cp.field = Field(g, std::move(values));
  return cp;
}

void save_checkpoint(const std::string& path, const Field& u, double s, double b) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing", path);
  write_checkpoint(os, u, s, b);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open", path);
  return read_checkpoint(is);
}

}  // namespace fnls
