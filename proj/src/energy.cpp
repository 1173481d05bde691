#include "fnls/energy.hpp"

#include <cmath>
#include <limits>

namespace fnls {

EnergyBreakdown energy(const Field& u, double a, const SpectrumCache& cache) {
  EnergyBreakdown e;
  e.kinetic = seminorm_sq(u, cache);
  e.potential = potential_integral(u, cache);
  e.interaction_raw = interaction_integral(u, cache);
  e.total = e.kinetic + e.potential - a / (1.0 + cache.beta_sq()) * e.interaction_raw;
  return e;
}

Field gradient_from(const Field& u, const Field& lap_u, double a, const SpectrumCache& cache) {
  cache.require_grid(u);
  const double q = 2.0 * cache.beta_sq();
  const auto w = cache.weight();
  const auto v = cache.potential();
  Field g(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double au = std::abs(u[i]);
    const double nonlinear = au == 0.0 ? 0.0 : a * w[i] * std::pow(au, q) * u[i];
    g[i] = 2.0 * (lap_u[i] + v[i] * u[i] - nonlinear);
  }
  return g;
}

Field gradient(const Field& u, double a, const SpectrumCache& cache) {
  return gradient_from(u, frac_laplacian(u, cache), a, cache);
}

bool QuotientParts::degenerate() const { return !std::isfinite(value); }

QuotientParts quotient_parts(const Field& u, const SpectrumCache& cache) {
  const double bs = cache.beta_sq();
  QuotientParts p;
  p.kinetic = seminorm_sq(u, cache);
  p.mass = l2_norm_sq(u);
  p.interaction_raw = interaction_integral(u, cache);
  // Scale-aware guard: the interaction of a field with mass m is naturally
  // of order m^{1 + beta^2}.
  const double scale = std::pow(std::max(p.mass, std::numeric_limits<double>::min()), 1.0 + bs);
  if (!(p.interaction_raw > std::numeric_limits<double>::epsilon() * scale) || p.mass == 0.0)
    p.value = std::numeric_limits<double>::infinity();
  else
    p.value = p.kinetic * std::pow(p.mass, bs) * (1.0 + bs) / p.interaction_raw;
  return p;
}

double weinstein_quotient(const Field& u, const SpectrumCache& cache) {
  return quotient_parts(u, cache).value;
}

Field weinstein_gradient(const Field& u, const Field& lap_u, const QuotientParts& parts,
                         const SpectrumCache& cache) {
  if (parts.degenerate()) throw DegenerateInput("Weinstein gradient of a degenerate field");
  const double bs = cache.beta_sq();
  const double q = 2.0 * bs;
  const auto w = cache.weight();
  const double ck = 2.0 / parts.kinetic;
  const double cm = 2.0 * bs / parts.mass;
  const double ci = (2.0 + 2.0 * bs) / parts.interaction_raw;
  Field g(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double au = std::abs(u[i]);
    const double nl = au == 0.0 ? 0.0 : w[i] * std::pow(au, q) * u[i];
    g[i] = parts.value * (ck * lap_u[i] + cm * u[i] - ci * nl);
  }
  return g;
}

Field sphere_retract(const Field& u) {
  const double m = l2_norm_sq(u);
  if (!(m > 0.0)) throw DegenerateInput("cannot retract the zero field onto the unit sphere");
  Field out = u;
  out *= 1.0 / std::sqrt(m);
  return out;
}

Field tangent_project(const Field& u, const Field& g) {
  const double m = l2_norm_sq(u);
  if (!(m > 0.0)) throw DegenerateInput("tangent space of the zero field is undefined");
  Field out = g;
  out.axpy(-inner(g, u) / m, u);
  return out;
}

}  // namespace fnls
