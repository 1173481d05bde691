#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// None of these route through the FFT path or the library's quadrature rules.

#include <vector>

#include "fnls/spectral_core.hpp"

namespace oracle {

/// Smallest eigenvalue of the dense matrix of (-Delta)^s + V on the grid of params,
/// assembled entrywise from the cosine series of the multiplier in long double.
double dense_mu1(const fnls::ProblemParams& params);

/// (-Delta)^s u by direct (separable, long double) DFT and multiplier sum.
std::vector<double> direct_frac_laplacian(const fnls::Field& u, double s);

/// Average of |x|^{-b} over [-h/2, h/2]^2 by nested tanh-sinh quadrature.
double cell_average_tanh_sinh(double b, double h);

/// int_{R^N} |x|^{-b} exp(-alpha |x|^2) dx in closed form.
double gaussian_weighted_integral(int dim, double b, double alpha);

/// Same integral by adaptive Gauss-Kronrod quadrature of the radial profile.
double gaussian_weighted_integral_adaptive(int dim, double b, double alpha);

/// Lattice sums Z_N(s) from independent high-precision evaluations
/// (4 zeta(s/2) beta(s/2) in 2-D, Ewald splitting in 3-D).
struct ZetaReference {
  int dim;
  double s;
  double value;
};
const std::vector<ZetaReference>& zeta_references();

}  // namespace oracle
