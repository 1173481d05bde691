#pragma once

// Minimization of E_a on the unit L2 sphere by preconditioned Riemannian
// descent with retraction, plus the per-minimizer bound checks.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fnls/energy.hpp"

namespace fnls {

struct MinimizeOptions {
  double step0 = 1.0;
  double backtrack = 0.5;
  double tol_energy = 1e-15;  // relative energy change, held over 5 iterations
  double tol_grad = 1e-8;     // L2 norm of the tangent Euler-Lagrange residual
  int max_iters = 20000;
  std::uint64_t seed = 0;
  double threshold_margin = 1e-3;  // minimize_Ea refuses a >= a* (1 - margin)
  bool conjugate = true;           // Polak-Ribiere momentum on top of the gradient

  void validate() const;
};

struct TraceEntry {
  int iteration = 0;
  double energy = 0.0;
  double residual = 0.0;
  double step = 0.0;
};

struct MinimizerResult {
  Field u;
  double a = 0.0;
  double e_a = 0.0;
  EnergyBreakdown breakdown;
  double mu_a = 0.0;
  double eps_a = 0.0;
  double el_residual = 0.0;   // full Euler-Lagrange residual, clipped samples included
  double kkt_residual = 0.0;  // residual with the clipped active set removed (stopping test)
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<TraceEntry> trace;
};

/// Extra constraints for the low-level sphere solver.
struct SphereConstraints {
  std::span<const Field> orthogonal_to;  // orthonormal fields the iterate must avoid
  bool clip_negative = true;
};

/// Low-level solver: no threshold check, optional deflation.
MinimizerResult minimize_on_sphere(const SpectrumCache& cache, double a, const Field& init,
                                   const MinimizeOptions& opts,
                                   const SphereConstraints& constraints = {});

/// Minimizes E_a over nonnegative unit-mass fields. With a_star given, refuses
/// a >= a_star (1 - opts.threshold_margin) by throwing ThresholdError.
MinimizerResult minimize_Ea(const SpectrumCache& cache, double a, const Field& init,
                            const MinimizeOptions& opts,
                            std::optional<double> a_star = std::nullopt);

/// Fills e_a, breakdown, mu_a (Lagrange multiplier identity), eps_a and the
/// Euler-Lagrange residual for a unit-mass u.
void finalize_result(MinimizerResult& res, const SpectrumCache& cache);

/// Rayleigh multiplier <gradient(u), u> / 2 for a unit-mass u.
double rayleigh_multiplier(const Field& u, double a, const SpectrumCache& cache);

/// Isotropic Gaussian exp(-|x|^2 / (2 width^2)), normalized to unit mass.
Field gaussian_field(const Grid& grid, double width);

/// Positive sum of three randomly placed Gaussians, unit mass; deterministic in seed.
Field random_positive_field(const Grid& grid, std::uint64_t seed);

/// One to four Gaussian bumps with random signed amplitudes, centres within L/4 of
/// the origin and widths in [L/32, L/8]; unit mass, deterministic in seed.
Field random_smooth_field(const Grid& grid, std::uint64_t seed);

struct BoundCheck {
  bool pass = false;
  double interaction = 0.0;
  double energy_bound = 0.0;  // e_a (1 + beta^2) / (a* - a)
  double mu1_bound = 0.0;     // mu1 (1 + beta^2) / (a* - a)
  double margin = 0.0;        // min(bound) - interaction
};

BoundCheck interaction_bound_check(const MinimizerResult& res, double beta_sq, double a_star,
                                   double mu1, double tol = 1e-9);

enum class UniquenessStatus { Unique, NotUnique, Inconclusive };
std::string to_string(UniquenessStatus status);

struct UniquenessReport {
  double a = 0.0;
  std::vector<MinimizerResult> runs;
  double max_pairwise_l2 = 0.0;
  double energy_spread = 0.0;  // (max - min) / |mean|
  UniquenessStatus status = UniquenessStatus::Inconclusive;
};

/// k >= 3 solves from random positive inits (seeds opts.seed .. opts.seed + k - 1),
/// run concurrently. Requires a <= max_fraction * a_star.
UniquenessReport multistart_uniqueness(const SpectrumCache& cache, double a, int k,
                                       const MinimizeOptions& opts, double a_star,
                                       double l2_tol = 1e-4, double energy_tol = 1e-8,
                                       double max_fraction = 0.1);

/// True when values (ordered by increasing a) never increase by more than tol.
bool energy_monotonicity_check(std::span<const double> e_values, double tol = 1e-8);

}  // namespace fnls
