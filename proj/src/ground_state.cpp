#include "fnls/ground_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace fnls {

namespace {

struct PinnedPoint {
  Field u;
  Field lap;
  QuotientParts parts;
};

// Projects w onto {mass = 1, beta^2 kinetic = mass} by moving along
// (-Delta)^s w - kinetic(w) w, then renormalizing.
Field pin(Field w, const SpectrumCache& cache, bool clip) {
  const double bs = cache.beta_sq();
  for (int pass = 0; pass < 8; ++pass) {
    if (clip)
      for (auto& x : w.values()) x = std::max(x, 0.0);
    w = sphere_retract(w);
    const Field lw = frac_laplacian(w, cache);
    const double k = inner(lw, w);
    const double f = bs * k - 1.0;
    if (std::abs(f) <= 1e-15) break;
    Field n = lw;
    n.axpy(-k, w);
    const Field ln = frac_laplacian(n, cache);
    const double qa = bs * inner(ln, n) - l2_norm_sq(n);
    const double qb = 2.0 * bs * inner(lw, n);
    double theta;
    if (std::abs(qa) <= 1e-300) {
      theta = -f / qb;
    } else {
      const double disc = qb * qb - 4.0 * qa * f;
      if (disc < 0.0) {
        theta = -qb / (2.0 * qa);
      } else {
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (qb + std::copysign(sq, qb));
        const double t1 = q / qa;
        const double t2 = q != 0.0 ? f / q : t1;
        theta = std::abs(t1) < std::abs(t2) ? t1 : t2;
      }
    }
    w.axpy(theta, n);
    bool negative = false;
    if (clip)
      for (double x : w.values()) negative = negative || x < 0.0;
    if (!negative && pass > 0 && std::abs(theta) * std::sqrt(l2_norm_sq(n)) < 1e-15) break;
  }
  return sphere_retract(w);
}

PinnedPoint evaluate_pinned(Field u, const SpectrumCache& cache) {
  PinnedPoint p;
  p.lap = frac_laplacian(u, cache);
  p.parts = quotient_parts(u, cache);
  p.u = std::move(u);
  return p;
}

// Removes the components of f along span{u, lap} (the normal space of the slice).
void project_slice(const PinnedPoint& p, Field& f) {
  Eigen::Matrix2d g;
  g(0, 0) = l2_norm_sq(p.u);
  g(0, 1) = g(1, 0) = inner(p.u, p.lap);
  g(1, 1) = l2_norm_sq(p.lap);
  Eigen::Vector2d rhs(inner(f, p.u), inner(f, p.lap));
  const Eigen::Vector2d c = g.ldlt().solve(rhs);
  f.axpy(-c(0), p.u);
  f.axpy(-c(1), p.lap);
}

double linear_fit_slope(const std::vector<double>& x, const std::vector<double>& y,
                        double* intercept = nullptr) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  if (intercept) *intercept = my - slope * mx;
  return slope;
}

double relative_gap(double x, double y) {
  return std::abs(x - y) / std::max({std::abs(x), std::abs(y), std::numeric_limits<double>::min()});
}

}  // namespace

Field default_weinstein_init(const SpectrumCache& cache) {
  const Grid& g = cache.grid();
  const double width0 = g.half_width() / 8.0;
  const Field g0 = gaussian_field(g, width0);
  const double ratio = cache.beta_sq() * seminorm_sq(g0, cache) / l2_norm_sq(g0);
  return gaussian_field(g, width0 * std::pow(ratio, 1.0 / (2.0 * cache.s())));
}

WeinsteinResult minimize_weinstein(const SpectrumCache& cache, const Field& init,
                                   const MinimizeOptions& opts) {
  opts.validate();
  cache.require_grid(init);
  if (!init.all_finite()) throw DegenerateInput("initial field has non-finite samples");
  if (quotient_parts(init, cache).degenerate())
    throw DegenerateInput("initial field has no interaction with the weight");

  const double two_s = 2.0 * cache.s();
  const double ratio = cache.beta_sq() * seminorm_sq(init, cache) / l2_norm_sq(init);
  Field start = init;
  if (std::abs(ratio - 1.0) > 1e-12)
    start = spectral_dilate(init, std::pow(ratio, -1.0 / two_s), cache, 1e-3).field;

  WeinsteinResult res;
  PinnedPoint cur = evaluate_pinned(pin(std::move(start), cache, true), cache);
  double step = opts.step0;
  int streak = 0, flat = 0;
  bool have_prev = false;
  Field r_prev, d_prev;
  double rz_prev = 0.0;

  auto precondition = [&](const Field& r) {
    return cache.apply_symbol(r, [&](double k2) { return 1.0 / (1.0 + std::pow(k2, cache.s())); });
  };

  int it = 0;
  for (;; ++it) {
    res.trace.push_back(cur.parts.value);
    Field r = weinstein_gradient(cur.u, cur.lap, cur.parts, cache);
    project_slice(cur, r);
    res.gradient_norm = std::sqrt(l2_norm_sq(r));
    if (res.gradient_norm <= opts.tol_grad) {
      res.converged = true;
      res.stop_reason = "gradient below tol_grad";
      break;
    }
    if (it >= opts.max_iters) {
      res.stop_reason = "max_iters reached";
      break;
    }
    Field z = precondition(r);
    project_slice(cur, z);
    const double rz = inner(r, z);
    Field d = -1.0 * z;
    if (opts.conjugate && have_prev && rz_prev > 0.0) {
      const double beta = std::max(0.0, (rz - inner(r_prev, z)) / rz_prev);
      if (beta > 0.0) {
        Field dp = d_prev;
        project_slice(cur, dp);
        d.axpy(beta, dp);
      }
    }
    double slope = inner(r, d);
    if (!(slope < 0.0)) {
      d = -1.0 * z;
      slope = -rz;
    }
    if (!(slope < 0.0)) {
      res.stop_reason = "no descent direction";
      break;
    }

    double t = step;
    bool backtracked = false, accepted = false;
    PinnedPoint next;
    const double w0 = cur.parts.value;
    for (int tries = 0; tries < 80; ++tries) {
      Field w = cur.u;
      w.axpy(t, d);
      PinnedPoint cand = evaluate_pinned(pin(std::move(w), cache, true), cache);
      const double predicted = t * slope;
      const bool noise = std::abs(predicted) < 1e-12 * w0;
      const double curv = (cand.parts.value - w0 - predicted) / (t * t);
      const bool armijo = cand.parts.value <= w0 + 1e-4 * predicted;
      const bool floor_ok =
          noise && cand.parts.value <= w0 * (1.0 + 4.0 * std::numeric_limits<double>::epsilon());
      if (armijo || floor_ok) {
        next = std::move(cand);
        accepted = true;
        if (!noise && curv > 0.0) {
          const double tq = -slope / (2.0 * curv);
          if (tq > 1.5 * t) {
            const double t2 = std::min(tq, 8.0 * t);
            Field w2 = cur.u;
            w2.axpy(t2, d);
            PinnedPoint cand2 = evaluate_pinned(pin(std::move(w2), cache, true), cache);
            if (cand2.parts.value < next.parts.value) {
              next = std::move(cand2);
              t = t2;
            }
          }
        }
        break;
      }
      backtracked = true;
      double tn = t * opts.backtrack;
      if (!noise && curv > 0.0) tn = std::clamp(-slope / (2.0 * curv), 0.1 * t, tn);
      t = tn;
    }
    if (!accepted) {
      res.stop_reason = "line search stalled";
      break;
    }
    const double change = std::abs(w0 - next.parts.value) / w0;
    flat = change <= opts.tol_energy ? flat + 1 : 0;
    r_prev = std::move(r);
    d_prev = std::move(d);
    rz_prev = rz;
    have_prev = true;
    cur = std::move(next);
    step = t;
    if (backtracked) {
      streak = 0;
    } else if (++streak == 5) {
      step *= 2.0;
      streak = 0;
    }
    if (flat >= 5) {
      ++it;
      res.trace.push_back(cur.parts.value);
      Field rr = weinstein_gradient(cur.u, cur.lap, cur.parts, cache);
      project_slice(cur, rr);
      res.gradient_norm = std::sqrt(l2_norm_sq(rr));
      res.converged = true;
      res.stop_reason = "quotient change below tol_energy";
      break;
    }
  }
  res.iterations = it;
  res.quotient = cur.parts.value;
  res.v = std::move(cur.u);
  return res;
}

DecayFit decay_fit(const Field& q, double r0, double r1, double s) {
  const Grid& g = q.grid();
  if (!(r0 > 0.0 && r1 > r0)) throw ParameterError("decay annulus needs 0 < r0 < r1");
  if (r1 > g.half_width() / 2.0 + 1e-12)
    throw ParameterError("decay annulus must satisfy r1 <= L/2 to avoid periodic wrap-around");
  const double h = g.spacing();
  const int nbins = static_cast<int>(std::floor((r1 - r0) / h + 1e-12));
  if (nbins < 8) throw ParameterError("decay annulus holds fewer than 8 radial bins");
  std::vector<double> sum(nbins, 0.0), rsum(nbins, 0.0);
  std::vector<int> count(nbins, 0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double r = std::sqrt(g.radius_sq(n));
    if (r < r0 || r >= r1) continue;
    const int k = static_cast<int>((r - r0) / h);
    if (k >= nbins) continue;
    sum[k] += q[n];
    rsum[k] += r;
    ++count[k];
  }
  std::vector<double> lx, ly;
  for (int k = 0; k < nbins; ++k) {
    if (count[k] == 0) continue;
    const double avg = sum[k] / count[k];
    if (!(avg > 0.0)) continue;
    lx.push_back(std::log(rsum[k] / count[k]));
    ly.push_back(std::log(avg));
  }
  if (lx.size() < 8) throw ParameterError("decay annulus holds fewer than 8 usable radial bins");
  DecayFit fit;
  fit.bins = static_cast<int>(lx.size());
  fit.slope = linear_fit_slope(lx, ly, &fit.intercept);
  fit.polynomial = fit.slope >= -2.0 * (g.dim() + 2.0 * s);
  return fit;
}

void evaluate_ground_state(GroundState& gs, const SpectrumCache& cache) {
  const double bs = cache.beta_sq();
  const Field& Q = gs.Q;
  gs.mass = l2_norm_sq(Q);
  gs.kinetic = seminorm_sq(Q, cache);
  gs.interaction_raw = interaction_integral(Q, cache);
  gs.a_star = std::pow(gs.mass, bs);
  const double m = gs.mass / bs;
  const double i = gs.interaction_raw / (1.0 + bs);
  gs.identity_residuals = {relative_gap(gs.kinetic, m), relative_gap(gs.kinetic, i),
                           relative_gap(m, i)};
  Field r = frac_laplacian(Q, cache);
  const auto w = cache.weight();
  const double p = 1.0 + 2.0 * bs;
  for (std::size_t n = 0; n < r.size(); ++n)
    r[n] += Q[n] - (Q[n] > 0.0 ? w[n] * std::pow(Q[n], p) : 0.0);
  gs.el_residual = std::sqrt(l2_norm_sq(r));
  gs.el_residual_relative = gs.el_residual / std::sqrt(gs.mass);
  const double L = cache.grid().half_width();
  try {
    gs.decay = decay_fit(Q, L / 8.0, L / 3.0, cache.s());
  } catch (const ParameterError&) {
    gs.decay = DecayFit{};
    gs.decay.bins = 0;
  }
}

GroundState rescale_to_Q(const Field& v, const SpectrumCache& cache, double max_lost_fraction) {
  cache.require_grid(v);
  const double bs = cache.beta_sq();
  const double two_s = 2.0 * cache.s();
  const QuotientParts parts = quotient_parts(v, cache);
  if (parts.degenerate()) throw DegenerateInput("cannot rescale a field without interaction");
  GroundState gs;
  gs.quotient = parts.value;
  gs.lambda = std::pow(parts.mass / (bs * parts.kinetic), 1.0 / two_s);
  Field dil = v;
  if (std::abs(gs.lambda - 1.0) > 1e-13) {
    try {
      Dilation d = spectral_dilate(v, gs.lambda, cache, max_lost_fraction);
      dil = std::move(d.field);
      gs.dilation_loss = d.lost_fraction;
    } catch (const ResolutionError& e) {
      throw ResolutionError(std::string(e.what()) +
                            "; the rescaled ground state is not resolved, increase M or L");
    }
  }
  gs.alpha = std::pow((1.0 + bs) * std::pow(gs.lambda, two_s - cache.b()) * parts.kinetic /
                          parts.interaction_raw,
                      1.0 / (2.0 * bs));
  dil *= gs.alpha;
  gs.Q = std::move(dil);
  evaluate_ground_state(gs, cache);
  return gs;
}

GroundStateRun compute_ground_state(const SpectrumCache& cache, const MinimizeOptions& opts) {
  GroundStateRun run;
  run.weinstein = minimize_weinstein(cache, default_weinstein_init(cache), opts);
  run.gs = rescale_to_Q(run.weinstein.v, cache);
  return run;
}

GnCorpusReport verify_gn_corpus(const SpectrumCache& cache, double a_star, int count,
                                std::uint64_t seed, double tol) {
  if (count < 1) throw ParameterError("corpus size must be positive");
  GnCorpusReport rep;
  rep.count = count;
  rep.min_quotient = std::numeric_limits<double>::infinity();
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const double w = weinstein_quotient(random_smooth_field(cache.grid(), seed + i), cache);
    if (!std::isfinite(w)) {
      ++rep.degenerate;
      continue;
    }
    rep.min_quotient = std::min(rep.min_quotient, w);
    rep.min_margin = std::min(rep.min_margin, (w - a_star) / a_star);
    if (w < a_star * (1.0 - tol)) ++rep.violations;
  }
  return rep;
}

double cutoff_profile(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  auto f = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  const double t = 2.0 - r;
  return f(t) / (f(t) + f(1.0 - t));
}

CutoffProbe cutoff_seminorm_probe(const GroundState& gs, const std::vector<double>& taus,
                                  const SpectrumCache& cache, double fit_max) {
  const Grid& g = cache.grid();
  if (fit_max < 0.0) fit_max = g.half_width() / 4.0;
  const double base = seminorm_sq(gs.Q, cache);
  CutoffProbe probe;
  std::vector<double> lx, ly;
  for (double tau : taus) {
    if (!(tau > 0.0)) throw ParameterError("cutoff scale tau must be positive");
    Field qt = gs.Q;
    for (std::size_t n = 0; n < g.size(); ++n)
      qt[n] *= cutoff_profile(std::sqrt(g.radius_sq(n)) / tau);
    CutoffRow row;
    row.tau = tau;
    row.delta = seminorm_sq(qt, cache) - base;
    row.fitted = tau <= fit_max && row.delta != 0.0;
    if (row.fitted) {
      lx.push_back(std::log(tau));
      ly.push_back(std::log(std::abs(row.delta)));
    }
    probe.rows.push_back(row);
  }
  if (lx.size() >= 2) probe.slope = linear_fit_slope(lx, ly);
  probe.decreasing = lx.size() >= 2;
  for (std::size_t i = 1; i < ly.size(); ++i)
    probe.decreasing = probe.decreasing && ly[i] < ly[i - 1] && lx[i] > lx[i - 1];
  return probe;
}

TrialFunction trial_function(const GroundState& gs, double tau, const SpectrumCache& cache,
                             double max_lost_fraction) {
  if (!(tau >= 1.0)) throw ParameterError("trial function needs tau >= 1");
  const Grid& g = cache.grid();
  TrialFunction tf;
  tf.tau = tau;
  double cut_mass = 0.0;
  {
    CompensatedSum acc;
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double c = cutoff_profile(std::sqrt(g.radius_sq(n)) / tau) * gs.Q[n];
      acc.add(c * c);
    }
    cut_mass = acc.value() * g.cell_volume();
  }
  const double mass = l2_norm_sq(gs.Q);
  tf.a_tau_sq = mass / cut_mass;
  Dilation d;
  try {
    d = spectral_dilate(gs.Q, tau, cache, max_lost_fraction);
  } catch (const ResolutionError& e) {
    throw ResolutionError(std::string(e.what()) + "; trial function at tau = " +
                          std::to_string(tau) + " is under-resolved, increase M");
  }
  tf.lost_fraction = d.lost_fraction;
  Field u = std::move(d.field);
  const double scale = std::sqrt(tf.a_tau_sq) * std::pow(tau, g.dim() / 2.0) / std::sqrt(mass);
  for (std::size_t n = 0; n < g.size(); ++n)
    u[n] *= scale * cutoff_profile(std::sqrt(g.radius_sq(n)));
  tf.u = sphere_retract(u);
  return tf;
}

std::vector<TrialRow> trial_energy_curve(const GroundState& gs, double a,
                                         const std::vector<double>& taus,
                                         const SpectrumCache& cache, double max_lost_fraction) {
  const Grid& g = cache.grid();
  const double bs = cache.beta_sq();
  const double two_s = 2.0 * cache.s();
  const double mass = l2_norm_sq(gs.Q);
  const PotentialSpec& pot = cache.params().potential;
  std::vector<TrialRow> rows;
  for (double tau : taus) {
    if (!(tau >= 1.0)) throw ParameterError("trial function needs tau >= 1");
    // u_tau(x) = c Q_tau(tau x) with c = A_tau tau^{N/2} / |Q|_2, so every term of E_a(u_tau)
    // is a dilation-scaled integral of Q_tau on the grid where Q_tau is resolved.
    Field qt = gs.Q;
    for (std::size_t n = 0; n < g.size(); ++n)
      qt[n] *= cutoff_profile(std::sqrt(g.radius_sq(n)) / tau);
    TrialRow row;
    row.tau = tau;
    const double cut_mass = l2_norm_sq(qt);
    row.a_tau_sq = mass / cut_mass;
    const double c2 = row.a_tau_sq / mass;
    row.energy.kinetic = c2 * std::pow(tau, two_s) * seminorm_sq(qt, cache);
    row.energy.interaction_raw =
        std::pow(c2, 1.0 + bs) * std::pow(tau, two_s) * interaction_integral(qt, cache);
    CompensatedSum pv;
    const double inv_tau2 = 1.0 / (tau * tau);
    for (std::size_t n = 0; n < g.size(); ++n) pv.add(pot(g.radius_sq(n) * inv_tau2) * qt[n] * qt[n]);
    row.energy.potential = c2 * pv.value() * g.cell_volume();
    row.energy.total = row.energy.kinetic + row.energy.potential -
                       a / (1.0 + bs) * row.energy.interaction_raw;
    try {
      const TrialFunction tf = trial_function(gs, tau, cache, max_lost_fraction);
      row.direct_total = energy(tf.u, a, cache).total;
      row.lost_fraction = tf.lost_fraction;
    } catch (const ResolutionError&) {
      row.direct_total = std::numeric_limits<double>::quiet_NaN();
      row.lost_fraction = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

bool decreasing_tail(const std::vector<TrialRow>& rows) {
  if (rows.size() < 2) return false;
  const std::size_t start = rows.size() / 2;
  for (std::size_t i = start + 1; i < rows.size(); ++i)
    if (!(rows[i].energy.total < rows[i - 1].energy.total)) return false;
  return start + 1 < rows.size();
}

double leading_coefficient(const std::vector<TrialRow>& rows, double s) {
  if (rows.size() < 3) throw ParameterError("leading coefficient fit needs at least 3 rows");
  Eigen::MatrixXd A(rows.size(), 3);
  Eigen::VectorXd y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    A(i, 0) = std::pow(rows[i].tau, 2.0 * s);
    A(i, 1) = 1.0;
    A(i, 2) = std::pow(rows[i].tau, -2.0);
    y(i) = rows[i].energy.total;
  }
  return A.colPivHouseholderQr().solve(y)(0);
}

}  // namespace fnls
