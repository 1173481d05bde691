#include "fnls/spectral_eigen.hpp"

#include <cmath>

namespace fnls {

EigenResult first_eigenpair(const SpectrumCache& cache, const MinimizeOptions& opts) {
  if (!cache.params().potential.trapping())
    throw ParameterError("first eigenpair needs a trapping potential");
  const Grid& g = cache.grid();
  EigenResult res;

  const Field init = gaussian_field(g, 1.0);
  MinimizerResult first = minimize_on_sphere(cache, 0.0, init, opts);
  res.phi1 = std::move(first.u);
  res.mu1 = first.mu_a;
  res.residual = first.el_residual;

  Field odd = sample(g, [](std::span<const double> x) {
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    return (x[0] + 0.5 * x[1]) * std::exp(-0.5 * r2);
  });
  odd.axpy(-inner(odd, res.phi1), res.phi1);
  const Field deflate[] = {res.phi1};
  SphereConstraints cons{deflate, false};
  MinimizerResult second = minimize_on_sphere(cache, 0.0, odd, opts, cons);
  res.phi2 = std::move(second.u);
  res.mu2 = second.mu_a;
  res.residual2 = second.el_residual;
  res.gap = res.mu2 - res.mu1;
  res.converged = first.converged && second.converged;
  return res;
}

SmallAReport small_a_limit_check(const SpectrumCache& cache, const std::vector<double>& a_grid,
                                 const EigenResult& eig, const MinimizeOptions& opts,
                                 double threshold) {
  for (std::size_t i = 1; i < a_grid.size(); ++i)
    if (!(a_grid[i] < a_grid[i - 1])) throw ParameterError("a-grid must decrease toward 0");
  const double bs = cache.beta_sq();
  SmallAReport rep;
  for (double a : a_grid) {
    const MinimizerResult r = minimize_on_sphere(cache, a, eig.phi1, opts);
    SmallARow row;
    row.a = a;
    row.e_a = r.e_a;
    row.mu_a = r.mu_a;
    row.interaction = r.breakdown.interaction_raw;
    row.distance = std::sqrt(l2_norm_sq(r.u - eig.phi1));
    row.multiplier_bound = std::abs(r.mu_a - eig.mu1) <=
                           std::abs(r.e_a - eig.mu1) + a * bs / (1.0 + bs) * row.interaction + 1e-12;
    row.converged = r.converged;
    rep.rows.push_back(row);
  }
  rep.distance_decreasing = !rep.rows.empty();
  rep.energy_approaches_mu1 = !rep.rows.empty();
  bool bounds = true;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    bounds = bounds && rep.rows[i].multiplier_bound && rep.rows[i].converged;
    if (i > 0) {
      rep.distance_decreasing =
          rep.distance_decreasing && rep.rows[i].distance < rep.rows[i - 1].distance;
      rep.energy_approaches_mu1 =
          rep.energy_approaches_mu1 &&
          std::abs(rep.rows[i].e_a - eig.mu1) < std::abs(rep.rows[i - 1].e_a - eig.mu1);
    }
  }
  rep.final_below_threshold = !rep.rows.empty() && rep.rows.back().distance <= threshold;
  rep.pass = bounds && rep.distance_decreasing && rep.energy_approaches_mu1 &&
             rep.final_below_threshold;
  return rep;
}

}  // namespace fnls
