#pragma once

// Energy functional E_a, its L2 gradient, the Weinstein quotient and the
// sphere geometry shared by every minimization loop.

#include "fnls/spectral_core.hpp"

namespace fnls {

struct EnergyBreakdown {
  double kinetic = 0.0;          // |(-Delta)^{s/2} u|_2^2
  double potential = 0.0;        // int V u^2
  double interaction_raw = 0.0;  // int W |u|^{2 + 2 beta^2}
  double total = 0.0;            // kinetic + potential - a/(1+beta^2) interaction_raw
};

/// Breakdown of E_a(u); no normalization of u is assumed.
EnergyBreakdown energy(const Field& u, double a, const SpectrumCache& cache);

/// L2 gradient 2[(-Delta)^s u + V u - a W |u|^{2 beta^2} u] of E_a.
Field gradient(const Field& u, double a, const SpectrumCache& cache);

/// Same as gradient() but reuses an already computed (-Delta)^s u.
Field gradient_from(const Field& u, const Field& lap_u, double a, const SpectrumCache& cache);

/// kinetic * mass^{beta^2} / (interaction_raw / (1 + beta^2)). Returns +infinity
/// for fields whose interaction integral vanishes to machine precision.
double weinstein_quotient(const Field& u, const SpectrumCache& cache);

/// Parts of the quotient, so callers can reuse them.
struct QuotientParts {
  double kinetic = 0.0;
  double mass = 0.0;
  double interaction_raw = 0.0;
  double value = 0.0;
  bool degenerate() const;
};
QuotientParts quotient_parts(const Field& u, const SpectrumCache& cache);

/// L2 gradient of the Weinstein quotient at u.
Field weinstein_gradient(const Field& u, const Field& lap_u, const QuotientParts& parts,
                         const SpectrumCache& cache);

/// u / |u|_2. Throws DegenerateInput for the zero field.
Field sphere_retract(const Field& u);

/// g - <g, u> u / |u|_2^2. Throws DegenerateInput for the zero field.
Field tangent_project(const Field& u, const Field& g);

}  // namespace fnls
