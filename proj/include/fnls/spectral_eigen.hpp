#pragma once

// First eigenpair of (-Delta)^s + V, the deflated second eigenvalue, and the
// small-coupling limit check.

#include <vector>

#include "fnls/minimizer.hpp"

namespace fnls {

struct EigenResult {
  double mu1 = 0.0;
  Field phi1;
  double mu2 = 0.0;
  Field phi2;
  double gap = 0.0;
  double residual = 0.0;   // |(-Delta)^s phi1 + V phi1 - mu1 phi1|_2
  double residual2 = 0.0;
  bool converged = false;
};

/// Requires a trapping potential. mu2 comes from a second sphere minimization
/// constrained orthogonal to phi1, started from an odd trial field.
EigenResult first_eigenpair(const SpectrumCache& cache, const MinimizeOptions& opts);

struct SmallARow {
  double a = 0.0;
  double e_a = 0.0;
  double mu_a = 0.0;
  double interaction = 0.0;
  double distance = 0.0;  // |u_a - phi1|_2
  bool multiplier_bound = false;  // |mu_a - mu1| <= |e_a - mu1| + a b2/(1+b2) I
  bool converged = false;
};

struct SmallAReport {
  std::vector<SmallARow> rows;
  bool distance_decreasing = false;
  bool energy_approaches_mu1 = false;
  bool final_below_threshold = false;
  bool pass = false;
};

/// a_grid must be decreasing toward 0.
SmallAReport small_a_limit_check(const SpectrumCache& cache, const std::vector<double>& a_grid,
                                 const EigenResult& eig, const MinimizeOptions& opts,
                                 double threshold = 1e-3);

}  // namespace fnls
