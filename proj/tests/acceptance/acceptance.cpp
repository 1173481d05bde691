// Acceptance suite for the desk instance N=2, s=0.75, b=0.5, L=16, M=128.
// Prints one PASS/FAIL line per criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fnls/asymptotics.hpp"
#include "fnls/pipeline.hpp"
#include "fnls/spectral_eigen.hpp"
#include "oracles.hpp"

using namespace fnls;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Field noise(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = n(rng);
  return f;
}

}  // namespace

int main() {
  const ProblemParams params;
  const auto cache_ptr = build_grid(params);
  const SpectrumCache& cache = *cache_ptr;
  const double bs = params.beta_sq();
  const double L = params.half_width;
  const MinimizeOptions opts;

  // 1. ground-state identities and Euler-Lagrange residual
  const auto t0 = std::chrono::steady_clock::now();
  const GroundStateRun run = compute_ground_state(cache, opts);
  const GroundState& gs = run.gs;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    const double k = gs.kinetic, m = gs.mass / bs, i = gs.interaction_raw / (1.0 + bs);
    const double id = std::max({rel(k, m), rel(k, i), rel(m, i)});
    report(1, run.weinstein.converged && id <= 1e-4 && gs.el_residual_relative <= 1e-4 && secs < 120,
           fmt("identities max rel %.2e (<= 1e-4), EL residual rel %.3e (<= 1e-4), %.1fs", id,
               gs.el_residual_relative, secs));
  }

  // 2. GN corpus certificate
  {
    const GnCorpusReport rep = verify_gn_corpus(cache, gs.a_star, 100, 0);
    const double eq = rel(weinstein_quotient(gs.Q, cache), gs.a_star);
    report(2, rep.violations == 0 && rep.degenerate == 0 && rep.min_margin >= -1e-6 && eq <= 1e-6,
           fmt("a* = %.10f, min W/a* - 1 = %.3e over %d fields (>= -1e-6), |W(Q)/a* - 1| = %.1e (<= 1e-6)",
               gs.a_star, rep.min_margin, rep.count, eq));
  }

  // 3. threshold dichotomy
  {
    bool ok = true;
    std::string d;
    for (double f : {0.25, 0.5, 0.75, 0.9}) {
      const MinimizerResult r =
          minimize_Ea(cache, f * gs.a_star, gaussian_field(cache.grid(), 1.0), opts, gs.a_star);
      const double lb = (1.0 - f) * r.breakdown.kinetic - 1e-9;
      ok = ok && r.converged && r.e_a > 0.0 && r.e_a >= lb;
      d += fmt("e(%.2fa*)=%.4f>=%.4f ", f, r.e_a, lb);
    }
    std::vector<double> taus;
    for (double t = 1.0; t <= L / 4.0 + 1e-9; t += 0.25) taus.push_back(t);
    const auto rows = trial_energy_curve(gs, 1.2 * gs.a_star, taus, cache);
    const bool dec = decreasing_tail(rows);
    report(3, ok && dec,
           d + fmt("; 1.2a* trial curve decreasing on final half: %s (E(%.0f) = %.3f)",
                   dec ? "yes" : "no", rows.back().tau, rows.back().energy.total));
  }

  // 4-6. sweep toward a*
  const SweepOutput sw =
      sweep(cache, gs, default_sweep_couplings(gs.a_star), gaussian_field(cache.grid(), 1.0), opts);
  const auto& recs = sw.records;
  bool sweep_ok = true;
  for (const auto& r : recs) sweep_ok = sweep_ok && r.ok && r.converged;
  {
    bool dec = sweep_ok;
    for (std::size_t i = 1; i < recs.size(); ++i) dec = dec && recs[i].e_a < recs[i - 1].e_a;
    const double ratio = recs.back().e_a / recs.front().e_a;
    report(4, dec && ratio <= 0.15,
           fmt("e strictly decreasing: %s; e(0.95a*)/e(0.5a*) = %.4f (<= 0.15)", dec ? "yes" : "no",
               ratio));
  }
  {
    const double smu = recs.back().scaled_mu;
    report(5, sweep_ok && std::abs(smu + bs) <= 0.1,
           fmt("eps^{2s} mu at 0.95a* = %.4f, |. + %.1f| = %.4f (<= 0.1)", smu, bs,
               std::abs(smu + bs)));
  }
  {
    bool nonincr = true;
    for (std::size_t i = recs.size() / 2 + 1; i < recs.size(); ++i)
      nonincr = nonincr && recs[i].profile_dist <= recs[i - 1].profile_dist;
    double kin = 0.0;
    for (const auto& r : recs) kin = std::max(kin, std::abs(r.w_kinetic - 1.0));
    const VanishingReport v = uniform_vanishing_check(recs, 1e-3, 2.0);
    const double dist = recs.back().profile_dist;
    report(6, sweep_ok && nonincr && dist <= 0.05 && kin <= 1e-6 && v.far_ok,
           fmt("dist nonincreasing on tail: %s, final %.4f (<= 0.05); |kinetic(w)-1| %.1e (<= 1e-6); "
               "far_sup %.2e (<= 1e-3)",
               nonincr ? "yes" : "no", dist, kin, v.max_far_sup));
  }

  // 7. decay law
  {
    const double target = -(params.dim + 2.0 * params.s);
    const double dev = std::abs(gs.decay.slope / target - 1.0);
    report(7, gs.decay.bins >= 8 && dev <= 0.15,
           fmt("slope on [L/8, L/3] = %.4f vs %.1f (dev %.1f%%, <= 15%%)", gs.decay.slope, target,
               100.0 * dev));
  }

  // 8. cutoff semi-norm probe
  {
    const CutoffProbe p = cutoff_seminorm_probe(gs, log_spaced(2.0, L / 4.0, 6), cache);
    report(8, p.decreasing && p.slope <= -2.0 * params.s,
           fmt("|Delta| decreasing: %s, fitted slope %.3f (<= %.2f)", p.decreasing ? "yes" : "no",
               p.slope, -2.0 * params.s));
  }

  // 9. small-a uniqueness and eigen limit
  {
    const UniquenessReport u = multistart_uniqueness(cache, 0.05 * gs.a_star, 5, opts, gs.a_star);
    const EigenResult eig = first_eigenpair(cache, opts);
    const SmallAReport sa = small_a_limit_check(
        cache, {0.1 * gs.a_star, 0.05 * gs.a_star, 0.01 * gs.a_star}, eig, opts, 1e-3);
    ProblemParams tiny;
    tiny.half_width = 4.0;
    tiny.points = 16;
    const auto tc = build_grid(tiny);
    const double mu_tiny = first_eigenpair(*tc, opts).mu1;
    const double dense = oracle::dense_mu1(tiny);
    const double dense_err = rel(mu_tiny, dense);
    const auto& last = sa.rows.back();
    const bool pass = u.max_pairwise_l2 <= 1e-4 && u.energy_spread <= 1e-8 &&
                      sa.energy_approaches_mu1 && last.distance <= 1e-3 && dense_err <= 1e-8;
    report(9, pass,
           fmt("multistart L2 %.1e (<= 1e-4), energy %.1e (<= 1e-8); |e - mu1| at 0.01a* %.2e, "
               "|u - phi1| %.3e (<= 1e-3); tiny-grid mu1 vs dense %.1e (<= 1e-8)",
               u.max_pairwise_l2, u.energy_spread, std::abs(last.e_a - eig.mu1), last.distance,
               dense_err));
  }

  // 10. numerical hygiene
  {
    double grad_err = 0.0;
    const double h = 1e-5;
    for (std::uint64_t k = 0; k < 20; ++k) {
      const Field u = random_smooth_field(cache.grid(), 1000 + 2 * k);
      const Field v = random_smooth_field(cache.grid(), 1001 + 2 * k);
      const double a = 0.5 * gs.a_star;
      const double fd =
          (energy(u + h * v, a, cache).total - energy(u - h * v, a, cache).total) / (2.0 * h);
      grad_err = std::max(grad_err, rel(fd, inner(gradient(u, a, cache), v)));
    }
    double plan = 0.0, adj = 0.0;
    for (std::uint64_t k = 0; k < 10; ++k) {
      const Field u = noise(cache.grid(), 2 * k), v = noise(cache.grid(), 2 * k + 1);
      plan = std::max(plan, rel(spectral_l2_norm_sq(u, cache), l2_norm_sq(u)));
      const double a = inner(frac_laplacian(u, cache), v), b = inner(u, frac_laplacian(v, cache));
      adj = std::max(adj, std::abs(a - b) / std::max(std::abs(a), 1.0));
    }
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "fnls_acceptance_determinism";
    fs::remove_all(base);
    std::string s1, s2;
    bool fields_equal = true;
    {
      RunConfig cfg = parse_config("pipeline = uniqueness\n[run]\nseed = 7\n");
      cfg.run.output_dir = (base / "a").string();
      s1 = run_pipeline(cfg, false).summary_json;
      cfg.run.output_dir = (base / "b").string();
      s2 = run_pipeline(cfg, false).summary_json;
      MinimizeOptions o = opts;
      o.seed = 7;
      const auto r1 = minimize_Ea(cache, 0.5 * gs.a_star, random_positive_field(cache.grid(), 7), o, gs.a_star);
      const auto r2 = minimize_Ea(cache, 0.5 * gs.a_star, random_positive_field(cache.grid(), 7), o, gs.a_star);
      for (std::size_t n = 0; n < r1.u.size(); ++n) fields_equal = fields_equal && r1.u[n] == r2.u[n];
    }
    const bool det = !s1.empty() && s1 == s2 && fields_equal;
    report(10, grad_err <= 1e-5 && plan <= 1e-11 && adj <= 1e-11 && det,
           fmt("gradient FD rel %.1e (<= 1e-5); Plancherel %.1e, self-adjoint %.1e (<= 1e-11); "
               "repeated seeded runs byte-identical: %s",
               grad_err, plan, adj, det ? "yes" : "no"));
  }

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
