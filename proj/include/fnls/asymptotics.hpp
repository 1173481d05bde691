#pragma once

// Behaviour of minimizers as a approaches a*: vanishing energy, multiplier
// limit, blow-up scale and convergence of the rescaled profile.

#include <iosfwd>
#include <string>
#include <vector>

#include "fnls/ground_state.hpp"

namespace fnls {

/// Grid with the same points per axis and half-width L / eps.
Grid relabeled_grid(const Grid& grid, double eps);

/// w(x) = eps^{N/2} u(eps x). The dilation is realized exactly by relabeling the
/// grid: w lives on relabeled_grid(u.grid(), eps) with samples eps^{N/2} u, so mass
/// and kinetic energy scale without interpolation error.
Field rescale_w(const Field& u, double eps);

/// Ground state dilated to unit kinetic energy and unit mass, sampled on target
/// (any half-width) by spectral interpolation of Q. Throws ResolutionError when the
/// interpolation discards more than max_lost_fraction of the mass.
Field reference_profile(const GroundState& gs, const SpectrumCache& cache, const Grid& target,
                        double max_lost_fraction = 1e-3);

/// Fraction of kinetic energy carried by modes with |xi| > cut * pi / h.
double high_frequency_fraction(const Field& u, const SpectrumCache& cache, double cut = 2.0 / 3.0);

struct SweepRecord {
  double a = 0.0;
  double e_a = 0.0;
  double kinetic = 0.0;
  double eps_a = 0.0;
  double scaled_mu = 0.0;    // eps_a^{2s} mu_a
  double profile_dist = 0.0;
  double far_sup = 0.0;
  double linf = 0.0;
  double resolution = 0.0;
  // not part of the CSV schema
  double mu_a = 0.0;
  double w_mass = 0.0;
  double w_kinetic = 0.0;
  double el_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool ok = false;
  std::string error;
};

/// a = a* (1 - offset) for offsets {0.5, 0.3, 0.2, 0.12, 0.08, 0.05}.
std::vector<double> default_sweep_couplings(double a_star);

struct SweepOutput {
  std::vector<SweepRecord> records;
  std::vector<Field> minimizers;  // one per record (empty field on failure)
};

/// Warm-started sweep over increasing a; the first solve starts from init.
/// r_far defaults to L/4 in rescaled coordinates. profile_max_lost bounds the mass
/// the band-limited reference profile may shed when zoomed onto each w_a grid.
SweepOutput sweep(const SpectrumCache& cache, const GroundState& gs, const std::vector<double>& a_grid,
                  const Field& init, const MinimizeOptions& opts, double r_far = -1.0,
                  double profile_max_lost = 1e-2);

inline constexpr const char* kSweepHeader =
    "a,e_a,kinetic,eps_a,scaled_mu,profile_dist,far_sup,linf,resolution";
void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records);

struct VanishingReport {
  bool far_ok = false;
  bool linf_ok = false;
  double max_far_sup = 0.0;
  double linf_ratio = 0.0;
  bool pass = false;
};

/// Checks the second half of the records: far_sup <= far_tol, max/min linf <= linf_ratio.
VanishingReport uniform_vanishing_check(const std::vector<SweepRecord>& records,
                                        double far_tol = 1e-3, double linf_ratio = 2.0);

struct VShiftReport {
  bool declined = false;
  double c_shift = 0.0;
  double a = 0.0;
  double e_astar = 0.0;
  double kinetic = 0.0;
  double resolution = 0.0;
  bool converged = false;
  bool bounded_kinetic = false;  // converged with less than 5% high-frequency kinetic energy
  bool below_v0 = false;         // e(a*) < V(0) = c_shift
  bool nonnegative = false;      // e(a*) >= -1e-9
  std::string message;
};

/// Solves at a = a_star with V = |x|^2 + c_shift on the grid of params.
VShiftReport v_shift_probe(const ProblemParams& params, double c_shift, double a_star,
                           const MinimizeOptions& opts);

}  // namespace fnls
