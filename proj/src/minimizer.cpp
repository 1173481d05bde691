#include "fnls/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>

namespace fnls {

void MinimizeOptions::validate() const {
  if (!(step0 > 0.0)) throw ParameterError("step0 must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0))
    throw ParameterError("backtrack must lie in the open interval (0, 1)");
  if (!(tol_energy > 0.0)) throw ParameterError("tol_energy must be positive");
  if (!(tol_grad > 0.0)) throw ParameterError("tol_grad must be positive");
  if (max_iters < 1) throw ParameterError("max_iters must be at least 1");
  if (!(threshold_margin >= 0.0 && threshold_margin < 1.0))
    throw ParameterError("threshold_margin must lie in [0, 1)");
}

namespace {

struct Point {
  Field u;
  Field lap;
  double energy = 0.0;
};

class Engine {
 public:
  Engine(const SpectrumCache& cache, double a, const SphereConstraints& constraints)
      : cache_(cache), a_(a), cons_(constraints), q_(2.0 * cache.beta_sq()) {}

  Point evaluate(Field u) const {
    Point p;
    p.lap = frac_laplacian(u, cache_);
    p.energy = inner(p.lap, u) + potential_integral(u, cache_) -
               a_ / (1.0 + cache_.beta_sq()) * interaction_integral(u, cache_);
    p.u = std::move(u);
    return p;
  }

  // (-Delta)^s u + V u - a W |u|^q u
  Field half_gradient(const Point& p) const {
    const auto w = cache_.weight();
    const auto v = cache_.potential();
    Field g(p.u.grid());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = p.u[i];
      const double nl = x == 0.0 ? 0.0 : a_ * w[i] * std::pow(std::abs(x), q_) * x;
      g[i] = p.lap[i] + v[i] * x - nl;
    }
    return g;
  }

  void project(const Field& u, Field& f) const {
    f.axpy(-inner(f, u), u);
    for (const Field& phi : cons_.orthogonal_to) f.axpy(-inner(f, phi), phi);
  }

  Field retract(Field w) const {
    if (cons_.clip_negative)
      for (auto& x : w.values()) x = std::max(x, 0.0);
    for (const Field& phi : cons_.orthogonal_to) w.axpy(-inner(w, phi), phi);
    return sphere_retract(w);
  }

  // P = (alpha + V)^{-1/2} (alpha + |xi|^{2s})^{-1} (alpha + V)^{-1/2}, scaled by alpha.
  Field precondition(const Field& r, double alpha) const {
    const auto v = cache_.potential();
    Field t = r;
    for (std::size_t i = 0; i < t.size(); ++i) t[i] /= std::sqrt(1.0 + v[i] / alpha);
    const double s = cache_.s();
    t = cache_.apply_symbol(t, [&](double k2) { return alpha / (alpha + std::pow(k2, s)); });
    for (std::size_t i = 0; i < t.size(); ++i) t[i] /= std::sqrt(1.0 + v[i] / alpha);
    return t;
  }

 private:
  const SpectrumCache& cache_;
  double a_;
  const SphereConstraints& cons_;
  double q_;
};

}  // namespace

MinimizerResult minimize_on_sphere(const SpectrumCache& cache, double a, const Field& init,
                                   const MinimizeOptions& opts,
                                   const SphereConstraints& constraints) {
  opts.validate();
  cache.require_grid(init);
  if (!init.all_finite()) throw DegenerateInput("initial field has non-finite samples");
  Engine eng(cache, a, constraints);

  MinimizerResult res;
  res.a = a;
  Point cur = eng.evaluate(eng.retract(init));
  double step = opts.step0;
  int streak = 0;
  int flat = 0;
  bool have_prev = false;
  Field r_prev, d_prev;
  double rz_prev = 0.0;
  std::size_t prev_active = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  double stall_residual = best_residual;
  const double eps = std::numeric_limits<double>::epsilon();

  int it = 0;
  for (;; ++it) {
    Field r = eng.half_gradient(cur);
    const double mu = inner(r, cur.u);
    eng.project(cur.u, r);
    // Clipped samples whose gradient pushes them negative form the active set;
    // the stopping residual and the search direction ignore them.
    std::vector<char> active(r.size(), 0);
    std::size_t n_active = 0;
    if (constraints.clip_negative)
      for (std::size_t i = 0; i < r.size(); ++i)
        if (cur.u[i] == 0.0 && r[i] > 0.0) {
          active[i] = 1;
          r[i] = 0.0;
          ++n_active;
        }
    const bool active_changed = n_active != prev_active;
    prev_active = n_active;
    const double residual = std::sqrt(l2_norm_sq(r));
    best_residual = std::min(best_residual, residual);
    res.kkt_residual = residual;
    res.trace.push_back({it, cur.energy, residual, step});
    if (residual <= opts.tol_grad) {
      res.converged = true;
      res.stop_reason = "residual below tol_grad";
      break;
    }
    if (it >= opts.max_iters) {
      res.stop_reason = "max_iters reached";
      break;
    }

    const double alpha = std::max(1.0, std::abs(mu));
    Field z = eng.precondition(r, alpha);
    if (n_active > 0)
      for (std::size_t i = 0; i < z.size(); ++i)
        if (active[i]) z[i] = 0.0;
    eng.project(cur.u, z);
    const double rz = inner(r, z);
    Field d = -1.0 * z;
    if (opts.conjugate && have_prev && rz_prev > 0.0 && !active_changed) {
      const double beta = std::max(0.0, (rz - inner(r_prev, z)) / rz_prev);
      if (beta > 0.0) {
        Field dp = d_prev;
        if (n_active > 0)
          for (std::size_t i = 0; i < dp.size(); ++i)
            if (active[i]) dp[i] = 0.0;
        eng.project(cur.u, dp);
        d.axpy(beta, dp);
      }
    }
    double slope = 2.0 * inner(r, d);
    if (!(slope < 0.0)) {
      d = -1.0 * z;
      slope = -2.0 * rz;
    }
    if (!(slope < 0.0)) {
      res.stop_reason = "no descent direction";
      break;
    }

    double t = step;
    bool backtracked = false;
    bool accepted = false;
    Point next;
    for (int tries = 0; tries < 80; ++tries) {
      Field w = cur.u;
      w.axpy(t, d);
      Point cand = eng.evaluate(eng.retract(std::move(w)));
      const double predicted = t * slope;
      const bool noise = std::abs(predicted) < 1e-12 * std::max(1.0, std::abs(cur.energy));
      const double curv = (cand.energy - cur.energy - predicted) / (t * t);
      const bool armijo = cand.energy <= cur.energy + 1e-4 * predicted;
      const bool floor_ok =
          noise && cand.energy <= cur.energy + 4.0 * eps * std::max(1.0, std::abs(cur.energy));
      if (armijo || floor_ok) {
        if (noise) {
          // Energy differences are at roundoff level: place the step at the zero of
          // the secant model of the directional derivative instead.
          Field gt = eng.half_gradient(cand);
          eng.project(cand.u, gt);
          const double dphi = 2.0 * inner(gt, d);
          if (dphi > slope) {
            const double ts = std::clamp(t * slope / (slope - dphi), 0.1 * t, 10.0 * t);
            Field w2 = cur.u;
            w2.axpy(ts, d);
            Point cand2 = eng.evaluate(eng.retract(std::move(w2)));
            if (cand2.energy <= cur.energy + 4.0 * eps * std::max(1.0, std::abs(cur.energy))) {
              cand = std::move(cand2);
              t = ts;
            }
          }
        }
        next = std::move(cand);
        accepted = true;
        if (!noise && curv > 0.0) {
          const double tq = -slope / (2.0 * curv);
          if (tq > 1.5 * t) {
            const double t2 = std::min(tq, 8.0 * t);
            Field w2 = cur.u;
            w2.axpy(t2, d);
            Point cand2 = eng.evaluate(eng.retract(std::move(w2)));
            if (cand2.energy < next.energy) {
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

    const double change = std::abs(cur.energy - next.energy);
    const bool stalled = change <= opts.tol_energy * std::max(1.0, std::abs(cur.energy)) &&
                         residual >= 0.9 * stall_residual;
    flat = stalled ? flat + 1 : 0;
    if (!stalled) stall_residual = best_residual;
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
      res.trace.push_back({it, cur.energy, residual, step});
      res.converged = true;
      res.stop_reason = "energy change below tol_energy";
      break;
    }
  }
  res.iterations = it;
  res.u = std::move(cur.u);
  finalize_result(res, cache);
  return res;
}

void finalize_result(MinimizerResult& res, const SpectrumCache& cache) {
  const double bs = cache.beta_sq();
  res.breakdown = energy(res.u, res.a, cache);
  res.e_a = res.breakdown.total;
  res.mu_a = res.e_a - res.a * bs / (1.0 + bs) * res.breakdown.interaction_raw;
  res.eps_a = std::pow(res.breakdown.kinetic, -1.0 / (2.0 * cache.s()));
  Field g = gradient(res.u, res.a, cache);
  g *= 0.5;
  g.axpy(-res.mu_a, res.u);
  res.el_residual = std::sqrt(l2_norm_sq(g));
}

double rayleigh_multiplier(const Field& u, double a, const SpectrumCache& cache) {
  return 0.5 * inner(gradient(u, a, cache), u);
}

MinimizerResult minimize_Ea(const SpectrumCache& cache, double a, const Field& init,
                            const MinimizeOptions& opts, std::optional<double> a_star) {
  if (a < 0.0) throw ParameterError("coupling a must be nonnegative");
  if (a_star && a >= *a_star * (1.0 - opts.threshold_margin)) {
    std::ostringstream msg;
    msg << "coupling a = " << a << " is not below the critical coupling a* = " << *a_star
        << " (margin " << opts.threshold_margin
        << "); no minimizer exists for a > a*, use the trial-curve pipeline instead";
    throw ThresholdError(msg.str());
  }
  return minimize_on_sphere(cache, a, init, opts);
}

Field gaussian_field(const Grid& grid, double width) {
  const double inv = 1.0 / (2.0 * width * width);
  Field g = sample(grid, [&](std::span<const double> x) {
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    return std::exp(-r2 * inv);
  });
  return sphere_retract(g);
}

Field random_positive_field(const Grid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double L = grid.half_width();
  struct Bump {
    std::vector<double> c;
    double width, amp;
  };
  std::vector<Bump> bumps(3);
  for (auto& bp : bumps) {
    bp.c.resize(grid.dim());
    for (auto& c : bp.c) c = (unit(rng) - 0.5) * L / 4.0;
    bp.width = L / 16.0 + unit(rng) * (L / 6.0 - L / 16.0);
    bp.amp = 0.5 + unit(rng);
  }
  Field f = sample(grid, [&](std::span<const double> x) {
    double v = 0.0;
    for (const auto& bp : bumps) {
      double r2 = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) r2 += (x[d] - bp.c[d]) * (x[d] - bp.c[d]);
      v += bp.amp * std::exp(-r2 / (2.0 * bp.width * bp.width));
    }
    return v;
  });
  return sphere_retract(f);
}

Field random_smooth_field(const Grid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double L = grid.half_width();
  const int count = 1 + static_cast<int>(unit(rng) * 4.0) % 4;
  struct Bump {
    std::vector<double> c;
    double width, amp;
  };
  std::vector<Bump> bumps(count);
  for (auto& bp : bumps) {
    bp.c.resize(grid.dim());
    for (auto& c : bp.c) c = (2.0 * unit(rng) - 1.0) * L / 4.0;
    bp.width = L / 32.0 + unit(rng) * (L / 8.0 - L / 32.0);
    bp.amp = 2.0 * unit(rng) - 1.0;
  }
  bumps.front().amp = std::copysign(std::max(std::abs(bumps.front().amp), 0.25), bumps.front().amp);
  Field f = sample(grid, [&](std::span<const double> x) {
    double v = 0.0;
    for (const auto& bp : bumps) {
      double r2 = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) r2 += (x[d] - bp.c[d]) * (x[d] - bp.c[d]);
      v += bp.amp * std::exp(-r2 / (2.0 * bp.width * bp.width));
    }
    return v;
  });
  return sphere_retract(f);
}

BoundCheck interaction_bound_check(const MinimizerResult& res, double beta_sq, double a_star,
                                   double mu1, double tol) {
  BoundCheck c;
  if (!(res.a < a_star)) throw ThresholdError("interaction bound requires a < a*");
  c.interaction = res.breakdown.interaction_raw;
  c.energy_bound = res.e_a * (1.0 + beta_sq) / (a_star - res.a);
  c.mu1_bound = mu1 * (1.0 + beta_sq) / (a_star - res.a);
  c.margin = std::min(c.energy_bound, c.mu1_bound) - c.interaction;
  c.pass = c.interaction <= c.energy_bound + tol && c.interaction <= c.mu1_bound + tol;
  return c;
}

std::string to_string(UniquenessStatus status) {
  switch (status) {
    case UniquenessStatus::Unique: return "unique";
    case UniquenessStatus::NotUnique: return "not-unique";
    case UniquenessStatus::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

UniquenessReport multistart_uniqueness(const SpectrumCache& cache, double a, int k,
                                       const MinimizeOptions& opts, double a_star,
                                       double l2_tol, double energy_tol, double max_fraction) {
  if (k < 3) throw ParameterError("multistart uniqueness needs at least 3 starts");
  if (a > max_fraction * a_star)
    throw ParameterError("multistart uniqueness is only meaningful for small a");
  UniquenessReport rep;
  rep.a = a;
  std::vector<std::future<MinimizerResult>> jobs;
  for (int i = 0; i < k; ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      const Field init = random_positive_field(cache.grid(), opts.seed + i);
      return minimize_Ea(cache, a, init, opts, a_star);
    }));
  }
  for (auto& j : jobs) rep.runs.push_back(j.get());

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double mean = 0.0;
  bool all_converged = true;
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    const auto& ri = rep.runs[i];
    all_converged = all_converged && ri.converged;
    lo = std::min(lo, ri.e_a);
    hi = std::max(hi, ri.e_a);
    mean += ri.e_a / rep.runs.size();
    for (std::size_t j = 0; j < i; ++j)
      rep.max_pairwise_l2 =
          std::max(rep.max_pairwise_l2, std::sqrt(l2_norm_sq(ri.u - rep.runs[j].u)));
  }
  rep.energy_spread = (hi - lo) / std::max(std::abs(mean), std::numeric_limits<double>::min());
  if (!all_converged)
    rep.status = UniquenessStatus::Inconclusive;
  else if (rep.max_pairwise_l2 <= l2_tol && rep.energy_spread <= energy_tol)
    rep.status = UniquenessStatus::Unique;
  else
    rep.status = UniquenessStatus::NotUnique;
  return rep;
}

bool energy_monotonicity_check(std::span<const double> e_values, double tol) {
  for (std::size_t i = 1; i < e_values.size(); ++i)
    if (e_values[i] > e_values[i - 1] + tol) return false;
  return true;
}

}  // namespace fnls
