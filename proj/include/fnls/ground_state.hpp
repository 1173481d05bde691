#pragma once

// Ground state Q of (-Delta)^s Q + Q - |x|^{-b} Q^{1 + 2 beta^2} = 0, the
// critical coupling a* = |Q|_2^{2 beta^2}, and the diagnostics attached to Q.

#include <array>
#include <vector>

#include "fnls/minimizer.hpp"

namespace fnls {

struct WeinsteinResult {
  Field v;                 // unit mass, beta^2 kinetic = mass, nonnegative
  double quotient = 0.0;   // W(v)
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<double> trace;  // quotient at every accepted iterate
};

/// Gaussian of width L/8, dilated so that beta^2 kinetic = mass, unit mass.
Field default_weinstein_init(const SpectrumCache& cache);

/// Minimizes the Weinstein quotient over nonnegative fields with unit mass and
/// beta^2 kinetic = mass (a slice transversal to the dilation orbit). The init is
/// first dilated spectrally onto that slice.
WeinsteinResult minimize_weinstein(const SpectrumCache& cache, const Field& init,
                                   const MinimizeOptions& opts);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  int bins = 0;
  bool polynomial = true;  // false when slope < -2 (N + 2s): faster than any fitted power
};

/// Least-squares slope of log(radial bin average) against log(mean bin radius)
/// on r0 <= |x| < r1, with bins of width h. Requires r1 <= L/2 and >= 8 bins.
DecayFit decay_fit(const Field& q, double r0, double r1, double s);

struct GroundState {
  Field Q;
  double mass = 0.0;
  double a_star = 0.0;
  double kinetic = 0.0;
  double interaction_raw = 0.0;
  double quotient = 0.0;        // W(v) of the minimizer that produced Q
  std::array<double, 3> identity_residuals{};  // K vs M/b2, K vs I/(1+b2), M/b2 vs I/(1+b2)
  double el_residual = 0.0;     // |(-Delta)^s Q + Q - W Q^{1+2 beta^2}|_2
  double el_residual_relative = 0.0;  // el_residual / |Q|_2
  double lambda = 1.0;
  double alpha = 1.0;
  DecayFit decay;               // on [L/8, L/3]
  double dilation_loss = 0.0;
};

/// Q = alpha v(lambda x) with alpha, lambda fixed by kinetic = mass / beta^2 and
/// kinetic = interaction / (1 + beta^2).
GroundState rescale_to_Q(const Field& v, const SpectrumCache& cache,
                         double max_lost_fraction = 1e-6);

/// Fills the derived fields of gs from gs.Q.
void evaluate_ground_state(GroundState& gs, const SpectrumCache& cache);

/// Convenience pipeline: default init, minimize, rescale.
struct GroundStateRun {
  WeinsteinResult weinstein;
  GroundState gs;
};
GroundStateRun compute_ground_state(const SpectrumCache& cache, const MinimizeOptions& opts);

struct GnCorpusReport {
  int count = 0;
  double min_quotient = 0.0;
  double min_margin = 0.0;  // min over the corpus of (W(u) - a*) / a*
  int violations = 0;       // fields with W(u) < a* (1 - tol)
  int degenerate = 0;       // fields with vanishing interaction (quotient = +inf)
};

/// Weinstein quotient of count random smooth fields (seeds seed .. seed + count - 1)
/// against a_star.
GnCorpusReport verify_gn_corpus(const SpectrumCache& cache, double a_star, int count,
                                std::uint64_t seed, double tol = 1e-6);

/// Smooth cutoff: 1 for r <= 1, 0 for r >= 2, C-infinity in between.
double cutoff_profile(double r);

struct CutoffRow {
  double tau = 0.0;
  double delta = 0.0;  // seminorm_sq(phi(x/tau) Q) - seminorm_sq(Q)
  bool fitted = false;
};
struct CutoffProbe {
  std::vector<CutoffRow> rows;
  double slope = 0.0;          // log|delta| vs log tau over fitted rows
  bool decreasing = false;     // |delta| strictly decreasing over fitted rows
};

/// Rows with tau <= fit_max (default L/4) and nonzero delta enter the slope fit.
CutoffProbe cutoff_seminorm_probe(const GroundState& gs, const std::vector<double>& taus,
                                  const SpectrumCache& cache, double fit_max = -1.0);

struct TrialFunction {
  Field u;
  double tau = 1.0;
  double a_tau_sq = 1.0;     // |Q|^2 / |phi(x/tau) Q|^2
  double lost_fraction = 0.0;
};

/// u_tau(x) = A_tau tau^{N/2} phi(x) Q(tau x) / |Q|_2, normalized to unit discrete mass.
TrialFunction trial_function(const GroundState& gs, double tau, const SpectrumCache& cache,
                             double max_lost_fraction = 1e-2);

struct TrialRow {
  double tau = 0.0;
  EnergyBreakdown energy;     // E_a(u_tau) from the dilation scaling of Q_tau
  double direct_total = 0.0;  // E_a of the sampled trial_function; NaN when under-resolved
  double a_tau_sq = 1.0;
  double lost_fraction = 0.0;
};

/// Energies of u_tau. Each term is evaluated as the exactly dilated integral of
/// phi(x/tau) Q on the base grid (equivalently, on a grid refined by tau), so the
/// curve stays resolved for every tau; the directly sampled trial function is
/// reported alongside when its dilation passes the resolution guard.
std::vector<TrialRow> trial_energy_curve(const GroundState& gs, double a,
                                         const std::vector<double>& taus,
                                         const SpectrumCache& cache,
                                         double max_lost_fraction = 1e-2);

/// True when E strictly decreases over the last half of the rows.
bool decreasing_tail(const std::vector<TrialRow>& rows);

/// Coefficient c of the least-squares fit E = c tau^{2s} + d + e tau^{-2}.
double leading_coefficient(const std::vector<TrialRow>& rows, double s);

}  // namespace fnls
