#include "fnls/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <ostream>

namespace fnls {

Grid relabeled_grid(const Grid& grid, double eps) {
  if (!(eps > 0.0)) throw ParameterError("blow-up scale eps must be positive");
  return Grid(grid.dim(), grid.points(), grid.half_width() / eps);
}

Field rescale_w(const Field& u, double eps) {
  const Grid g = relabeled_grid(u.grid(), eps);
  if (eps == 1.0) return u;
  std::vector<double> v(u.values().begin(), u.values().end());
  const double c = std::pow(eps, u.grid().dim() / 2.0);
  for (auto& x : v) x *= c;
  return Field(g, std::move(v));
}

Field reference_profile(const GroundState& gs, const SpectrumCache& cache, const Grid& target,
                        double max_lost_fraction) {
  const Grid& base = cache.grid();
  if (target.points() != base.points() || target.dim() != base.dim())
    throw GridMismatch("reference profile target must share the base grid layout");
  const double lambda = std::pow(gs.mass / gs.kinetic, 1.0 / (2.0 * cache.s()));
  const double factor = lambda * target.spacing() / base.spacing();
  Dilation d;
  try {
    d = spectral_dilate(gs.Q, factor, cache, max_lost_fraction);
  } catch (const ResolutionError& e) {
    throw ResolutionError(std::string(e.what()) +
                          "; reference profile is not resolved at this scale, use a finer grid");
  }
  std::vector<double> v(d.field.values().begin(), d.field.values().end());
  return sphere_retract(Field(target, std::move(v)));
}

double high_frequency_fraction(const Field& u, const SpectrumCache& cache, double cut) {
  cache.require_grid(u);
  std::vector<std::complex<double>> spec(cache.spectrum_size());
  cache.forward(u.values(), spec);
  const double kmax = M_PI / cache.grid().spacing();
  const double c2 = cut * cut * kmax * kmax;
  const auto m = cache.multipliers();
  const auto wt = cache.spectrum_weights();
  const auto k2 = cache.wavenumber_sq();
  CompensatedSum hi, all;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double e = wt[k] * m[k] * std::norm(spec[k]);
    all.add(e);
    if (k2[k] > c2) hi.add(e);
  }
  return all.value() > 0.0 ? hi.value() / all.value() : 0.0;
}

std::vector<double> default_sweep_couplings(double a_star) {
  std::vector<double> out;
  for (double off : {0.5, 0.3, 0.2, 0.12, 0.08, 0.05}) out.push_back(a_star * (1.0 - off));
  return out;
}

SweepOutput sweep(const SpectrumCache& cache, const GroundState& gs,
                  const std::vector<double>& a_grid, const Field& init,
                  const MinimizeOptions& opts, double r_far, double profile_max_lost) {
  const Grid& g = cache.grid();
  if (r_far < 0.0) r_far = g.half_width() / 4.0;
  for (std::size_t i = 1; i < a_grid.size(); ++i)
    if (!(a_grid[i] > a_grid[i - 1])) throw ParameterError("sweep couplings must increase");
  const double two_s = 2.0 * cache.s();
  SweepOutput out;
  Field start = init;
  for (double a : a_grid) {
    SweepRecord rec;
    rec.a = a;
    Field u;
    try {
      MinimizerResult r = minimize_Ea(cache, a, start, opts, gs.a_star);
      rec.e_a = r.e_a;
      rec.kinetic = r.breakdown.kinetic;
      rec.eps_a = r.eps_a;
      rec.mu_a = r.mu_a;
      rec.scaled_mu = std::pow(r.eps_a, two_s) * r.mu_a;
      rec.el_residual = r.el_residual;
      rec.iterations = r.iterations;
      rec.converged = r.converged;
      rec.resolution = high_frequency_fraction(r.u, cache);
      const Field w = rescale_w(r.u, r.eps_a);
      ProblemParams pw = cache.params();
      pw.half_width = w.grid().half_width();
      const SpectrumCache wcache(pw);
      rec.w_mass = l2_norm_sq(w);
      rec.w_kinetic = seminorm_sq(w, wcache);
      rec.profile_dist =
          std::sqrt(l2_norm_sq(w - reference_profile(gs, cache, w.grid(), profile_max_lost)));
      rec.linf = 0.0;
      rec.far_sup = 0.0;
      const double rf2 = r_far * r_far;
      for (std::size_t n = 0; n < w.size(); ++n) {
        const double v = std::abs(w[n]);
        rec.linf = std::max(rec.linf, v);
        if (w.grid().radius_sq(n) > rf2) rec.far_sup = std::max(rec.far_sup, v);
      }
      rec.ok = true;
      u = std::move(r.u);
      start = u;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    out.records.push_back(rec);
    out.minimizers.push_back(std::move(u));
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << kSweepHeader << '\n';
  os << std::setprecision(17);
  for (const auto& r : records) {
    if (!r.ok) continue;
    os << r.a << ',' << r.e_a << ',' << r.kinetic << ',' << r.eps_a << ',' << r.scaled_mu << ','
       << r.profile_dist << ',' << r.far_sup << ',' << r.linf << ',' << r.resolution << '\n';
  }
}

VanishingReport uniform_vanishing_check(const std::vector<SweepRecord>& records, double far_tol,
                                        double linf_ratio) {
  VanishingReport rep;
  const std::size_t start = records.size() / 2;
  if (start >= records.size()) return rep;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool ok = true;
  for (std::size_t i = start; i < records.size(); ++i) {
    const auto& r = records[i];
    ok = ok && r.ok && std::isfinite(r.far_sup) && std::isfinite(r.linf);
    rep.max_far_sup = std::max(rep.max_far_sup, r.far_sup);
    lo = std::min(lo, r.linf);
    hi = std::max(hi, r.linf);
  }
  rep.linf_ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  rep.far_ok = ok && rep.max_far_sup <= far_tol;
  rep.linf_ok = ok && rep.linf_ratio <= linf_ratio;
  rep.pass = rep.far_ok && rep.linf_ok;
  return rep;
}

VShiftReport v_shift_probe(const ProblemParams& params, double c_shift, double a_star,
                           const MinimizeOptions& opts) {
  VShiftReport rep;
  rep.c_shift = c_shift;
  rep.a = a_star;
  if (!(c_shift > 0.0)) {
    rep.declined = true;
    rep.message = "V(0) = 0: no minimizer exists at a = a*, probe declined";
    return rep;
  }
  ProblemParams p = params;
  p.potential = PotentialSpec::shifted(c_shift);
  p.a = a_star;
  const SpectrumCache cache(p);
  const MinimizerResult r =
      minimize_on_sphere(cache, a_star, gaussian_field(cache.grid(), 1.0), opts);
  rep.e_astar = r.e_a;
  rep.kinetic = r.breakdown.kinetic;
  rep.converged = r.converged;
  rep.resolution = high_frequency_fraction(r.u, cache);
  rep.bounded_kinetic = r.converged && rep.resolution < 0.05;
  rep.below_v0 = r.e_a < c_shift;
  rep.nonnegative = r.e_a >= -1e-9;
  rep.message = rep.bounded_kinetic ? "bounded-kinetic state found"
                                    : "no bounded minimizer detected";
  return rep;
}

}  // namespace fnls
