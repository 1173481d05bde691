#include "fnls/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "fnls/asymptotics.hpp"
#include "fnls/spectral_eigen.hpp"

namespace fnls {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi > lo) || count < 2) throw ParameterError("log_spaced needs 0 < lo < hi, count >= 2");
  std::vector<double> out(count);
  const double r = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) out[i] = lo * std::exp(r * i);
  out.back() = hi;
  return out;
}

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing", path.string());
  os << text;
  if (!os) throw IoError("write failed", path.string());
}

class Job {
 public:
  Job(const RunConfig& cfg, std::ostream* log) : cfg_(cfg), log_(log) {
    dir_ = fs::path(cfg.run.output_dir) / to_string(cfg.pipeline);
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory (" + ec.message() + ")", dir_.string());
    summary["pipeline"] = to_string(cfg.pipeline);
    summary["config_hash"] = config_hash(cfg);
    json c = json::object();
    std::istringstream in(canonical_text(cfg));
    for (std::string line; std::getline(in, line);) {
      const auto eq = line.find('=');
      c[line.substr(0, eq)] = line.substr(eq + 1);
    }
    summary["config"] = c;
    summary["beta_sq"] = cfg.problem.beta_sq();
  }

  const fs::path& dir() const { return dir_; }
  json& results() { return summary["results"]; }

  void note(const std::string& msg) {
    if (log_ != nullptr) *log_ << "[" << to_string(cfg_.pipeline) << "] " << msg << '\n';
  }

  void check(const std::string& name, bool pass, double value, double bound) {
    checks_.push_back({name, pass, value, bound});
    note(std::string(pass ? "PASS " : "FAIL ") + name);
  }

  void solver(const std::string& name, bool converged, int iterations, const std::string& reason) {
    converged_ = converged_ && converged;
    summary["solvers"][name] = {{"converged", converged}, {"iterations", iterations},
                                 {"stop_reason", reason}};
    if (!converged) note("solver " + name + " did not converge: " + reason);
  }

  void artifact(const std::string& name) { summary["artifacts"].push_back(name); }

  void write_csv(const std::string& name, const std::string& text) {
    write_text(dir_ / name, text);
    artifact(name);
  }

  void checkpoint(const std::string& name, const Field& u) {
    save_checkpoint((dir_ / name).string(), u, cfg_.problem.s, cfg_.problem.b);
    artifact(name);
  }

  PipelineOutcome finish(bool assert_mode, int forced_exit = -1) {
    json cj = json::array();
    bool all = true;
    for (const auto& c : checks_) {
      cj.push_back({{"name", c.name}, {"pass", c.pass}, {"value", finite_or_null(c.value)},
                    {"bound", finite_or_null(c.bound)}});
      all = all && c.pass;
    }
    summary["checks"] = cj;
    summary["all_checks_pass"] = all;
    summary["converged"] = converged_;
    if (!summary.contains("artifacts")) summary["artifacts"] = json::array();
    PipelineOutcome out;
    out.converged = converged_;
    out.checks = checks_;
    out.directory = dir_.string();
    if (forced_exit >= 0)
      out.exit_code = forced_exit;
    else if (!converged_)
      out.exit_code = kExitNonconvergence;
    else if (assert_mode && !all)
      out.exit_code = kExitAssertion;
    summary["exit_code"] = out.exit_code;
    out.summary_json = summary.dump(2) + "\n";
    write_text(dir_ / "summary.json", out.summary_json);
    json meta = {{"started", started_},
                 {"finished", iso_now()},
                 {"wall_seconds", std::chrono::duration<double>(
                                      std::chrono::steady_clock::now() - t0_).count()},
                 {"config_hash", config_hash(cfg_)},
                 {"output_dir", cfg_.run.output_dir}};
    write_text(dir_ / "metadata.json", meta.dump(2) + "\n");
    return out;
  }

  json summary;

 private:
  const RunConfig& cfg_;
  std::ostream* log_;
  fs::path dir_;
  std::vector<CheckOutcome> checks_;
  bool converged_ = true;
  std::string started_ = iso_now();
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

GroundStateRun ground_state(Job& job, const SpectrumCache& cache, const MinimizeOptions& opts) {
  job.note("computing ground state");
  GroundStateRun run = compute_ground_state(cache, opts);
  job.solver("weinstein", run.weinstein.converged, run.weinstein.iterations,
             run.weinstein.stop_reason);
  const GroundState& gs = run.gs;
  job.summary["a_star"] = gs.a_star;
  job.summary["ground_state"] = {
      {"mass", gs.mass},
      {"kinetic", gs.kinetic},
      {"interaction_raw", gs.interaction_raw},
      {"weinstein_quotient", gs.quotient},
      {"identity_residuals", gs.identity_residuals},
      {"el_residual", gs.el_residual},
      {"el_residual_relative", gs.el_residual_relative},
      {"lambda", gs.lambda},
      {"alpha", gs.alpha},
      {"decay_slope", finite_or_null(gs.decay.slope)},
      {"decay_bins", gs.decay.bins}};
  return run;
}

double coupling(const RunConfig& cfg, double a_star, double default_fraction) {
  if (cfg.problem.a > 0.0) return cfg.problem.a;
  const double f = std::isnan(cfg.run.a_fraction) ? default_fraction : cfg.run.a_fraction;
  return f * a_star;
}

void run_ground_state(Job& job, const SpectrumCache& cache, const RunConfig& cfg) {
  const GroundStateRun run = ground_state(job, cache, cfg.solver);
  const GroundState& gs = run.gs;
  const double s = cfg.problem.s;
  const double L = cfg.problem.half_width;
  job.checkpoint("Q.ckpt", gs.Q);

  double id = 0.0;
  for (double r : gs.identity_residuals) id = std::max(id, r);
  job.check("pohozaev_identities", id <= 1e-4, id, 1e-4);
  job.check("euler_lagrange_residual", gs.el_residual_relative <= 1e-4, gs.el_residual_relative,
            1e-4);
  const double wq = weinstein_quotient(gs.Q, cache);
  const double eq = std::abs(wq - gs.a_star) / gs.a_star;
  job.results()["quotient_of_Q"] = wq;
  job.check("quotient_of_Q_equals_a_star", eq <= 1e-6, eq, 1e-6);
  const double target = -(cfg.problem.dim + 2.0 * s);
  const double dev = gs.decay.bins > 0 ? std::abs(gs.decay.slope / target - 1.0)
                                       : std::numeric_limits<double>::infinity();
  job.check("decay_slope", dev <= 0.15, gs.decay.slope, target);

  const CutoffProbe cp = cutoff_seminorm_probe(gs, log_spaced(2.0, L / 4.0, 6), cache);
  std::ostringstream csv;
  csv << "tau,delta,fitted\n" << std::setprecision(17);
  for (const auto& r : cp.rows) csv << r.tau << ',' << r.delta << ',' << (r.fitted ? 1 : 0) << '\n';
  job.write_csv("cutoff.csv", csv.str());
  job.results()["cutoff_slope"] = cp.slope;
  job.results()["cutoff_decreasing"] = cp.decreasing;
  job.check("cutoff_decreasing", cp.decreasing, cp.slope, -2.0 * s);
  job.check("cutoff_slope", cp.slope <= -2.0 * s, cp.slope, -2.0 * s);
}

void write_trace(Job& job, const std::vector<TraceEntry>& trace) {
  std::ostringstream csv;
  csv << "iteration,energy,residual,step\n" << std::setprecision(17);
  for (const auto& t : trace)
    csv << t.iteration << ',' << t.energy << ',' << t.residual << ',' << t.step << '\n';
  job.write_csv("trace.csv", csv.str());
}

json minimizer_json(const MinimizerResult& r) {
  return {{"a", r.a},
          {"e_a", r.e_a},
          {"kinetic", r.breakdown.kinetic},
          {"potential", r.breakdown.potential},
          {"interaction_raw", r.breakdown.interaction_raw},
          {"mu_a", r.mu_a},
          {"eps_a", r.eps_a},
          {"el_residual", r.el_residual},
          {"kkt_residual", r.kkt_residual},
          {"iterations", r.iterations}};
}

void run_minimize(Job& job, const SpectrumCache& cache, const RunConfig& cfg) {
  const GroundState gs = ground_state(job, cache, cfg.solver).gs;
  const double a = coupling(cfg, gs.a_star, 0.5);
  job.results()["a"] = a;
  job.results()["a_over_a_star"] = a / gs.a_star;
  const MinimizerResult r =
      minimize_Ea(cache, a, gaussian_field(cache.grid(), 1.0), cfg.solver, gs.a_star);
  job.solver("minimize_Ea", r.converged, r.iterations, r.stop_reason);
  job.results()["minimizer"] = minimizer_json(r);
  job.checkpoint("u.ckpt", r.u);
  write_trace(job, r.trace);

  job.check("energy_positive", r.e_a > 0.0, r.e_a, 0.0);
  const double lower = (1.0 - a / gs.a_star) * r.breakdown.kinetic - 1e-9;
  job.check("energy_lower_bound", r.e_a >= lower, r.e_a, lower);
  if (cfg.problem.potential.trapping()) {
    const EigenResult eig = first_eigenpair(cache, cfg.solver);
    job.solver("eigen", eig.converged, 0, eig.converged ? "converged" : "not converged");
    job.results()["mu1"] = eig.mu1;
    const BoundCheck bc = interaction_bound_check(r, cache.beta_sq(), gs.a_star, eig.mu1);
    job.results()["interaction_bound"] = {{"interaction", bc.interaction},
                                          {"energy_bound", bc.energy_bound},
                                          {"mu1_bound", bc.mu1_bound},
                                          {"margin", bc.margin}};
    job.check("interaction_bound", bc.pass, bc.interaction,
              std::min(bc.energy_bound, bc.mu1_bound));
  }
}

void run_sweep(Job& job, const SpectrumCache& cache, const RunConfig& cfg) {
  const GroundState gs = ground_state(job, cache, cfg.solver).gs;
  const auto a_grid = default_sweep_couplings(gs.a_star);
  job.note("sweeping " + std::to_string(a_grid.size()) + " couplings");
  const SweepOutput out =
      sweep(cache, gs, a_grid, gaussian_field(cache.grid(), 1.0), cfg.solver, cfg.run.r_far);
  std::ostringstream csv;
  write_sweep_csv(csv, out.records);
  job.write_csv("sweep.csv", csv.str());

  json rows = json::array();
  bool all_ok = true;
  for (const auto& r : out.records) {
    all_ok = all_ok && r.ok;
    job.solver("a=" + std::to_string(r.a / gs.a_star) + "a*", r.ok && r.converged, r.iterations,
               r.ok ? (r.converged ? "converged" : "not converged") : r.error);
    rows.push_back({{"a", r.a}, {"e_a", r.e_a}, {"scaled_mu", r.scaled_mu},
                    {"profile_dist", r.profile_dist}, {"far_sup", r.far_sup}, {"linf", r.linf},
                    {"w_kinetic", r.w_kinetic}, {"w_mass", r.w_mass},
                    {"resolution", r.resolution}, {"el_residual", r.el_residual}});
  }
  job.results()["records"] = rows;
  if (!all_ok || out.records.size() < 2) return;

  const auto& recs = out.records;
  bool dec = true;
  for (std::size_t i = 1; i < recs.size(); ++i) dec = dec && recs[i].e_a < recs[i - 1].e_a;
  job.check("energy_strictly_decreasing", dec, recs.back().e_a, recs.front().e_a);
  const double ratio = recs.back().e_a / recs.front().e_a;
  job.check("energy_ratio", ratio <= 0.15, ratio, 0.15);
  const double bs = cache.beta_sq();
  const double mu_err = std::abs(recs.back().scaled_mu + bs);
  job.check("multiplier_limit", mu_err <= 0.1, recs.back().scaled_mu, -bs);
  bool nonincreasing = true;
  for (std::size_t i = recs.size() / 2 + 1; i < recs.size(); ++i)
    nonincreasing = nonincreasing && recs[i].profile_dist <= recs[i - 1].profile_dist;
  job.check("profile_distance_nonincreasing", nonincreasing, recs.back().profile_dist, 0.0);
  job.check("profile_distance_final", recs.back().profile_dist <= 0.05, recs.back().profile_dist,
            0.05);
  double kin_err = 0.0;
  for (const auto& r : recs) kin_err = std::max(kin_err, std::abs(r.w_kinetic - 1.0));
  job.check("rescaled_kinetic_unit", kin_err <= 1e-6, kin_err, 1e-6);
  const VanishingReport v = uniform_vanishing_check(recs);
  job.check("far_field_bound", v.far_ok, v.max_far_sup, 1e-3);
  job.check("linf_uniform", v.linf_ok, v.linf_ratio, 2.0);
}

void run_eigen(Job& job, const SpectrumCache& cache, const RunConfig& cfg) {
  const EigenResult eig = first_eigenpair(cache, cfg.solver);
  job.solver("eigen", eig.converged, 0, eig.converged ? "converged" : "not converged");
  job.results() = {{"mu1", eig.mu1}, {"mu2", eig.mu2}, {"gap", eig.gap},
                   {"residual", eig.residual}, {"residual2", eig.residual2}};
  job.checkpoint("phi1.ckpt", eig.phi1);
  job.check("spectral_gap", eig.gap > 0.0, eig.gap, 0.0);
  job.check("eigen_residual", eig.residual <= 1e-6, eig.residual, 1e-6);
}

void run_verify_gn(Job& job, const SpectrumCache& cache, const RunConfig& cfg) {
  const GroundState gs = ground_state(job, cache, cfg.solver).gs;
  const GnCorpusReport rep =
      verify_gn_corpus(cache, gs.a_star, cfg.run.corpus_size, cfg.run.seed);
  job.results() = {{"corpus_size", rep.count},
                   {"min_quotient", finite_or_null(rep.min_quotient)},
                   {"min_margin_relative", finite_or_null(rep.min_margin)},
                   {"min_margin", finite_or_null(rep.min_margin * gs.a_star)},
                   {"violations", rep.violations},
                   {"degenerate", rep.degenerate}};
  job.check("corpus_above_a_star", rep.violations == 0 && rep.min_margin >= -1e-6, rep.min_margin,
            -1e-6);
  const double wq = weinstein_quotient(gs.Q, cache);
  const double eq = std::abs(wq - gs.a_star) / gs.a_star;
  job.results()["quotient_of_Q"] = wq;
  job.check("quotient_of_Q_equals_a_star", eq <= 1e-6, eq, 1e-6);
}

void run_trial_curve(Job& job, const SpectrumCache& cache, const RunConfig& cfg) {
  const GroundState gs = ground_state(job, cache, cfg.solver).gs;
  const double a = coupling(cfg, gs.a_star, 1.2);
  const double L = cfg.problem.half_width;
  const auto rows = trial_energy_curve(gs, a, log_spaced(1.0, L / 4.0, cfg.run.tau_count), cache);
  std::ostringstream csv;
  csv << "tau,kinetic,potential,interaction_raw,total,direct_total,a_tau_sq,lost_fraction\n"
      << std::setprecision(17);
  for (const auto& r : rows) {
    csv << r.tau << ',' << r.energy.kinetic << ',' << r.energy.potential << ','
        << r.energy.interaction_raw << ',' << r.energy.total << ',';
    if (std::isfinite(r.direct_total)) csv << r.direct_total;
    csv << ',' << r.a_tau_sq << ',' << r.lost_fraction << '\n';
  }
  job.write_csv("trial.csv", csv.str());
  const double lead = leading_coefficient(rows, cfg.problem.s);
  const double expected = (1.0 - a / gs.a_star) * gs.kinetic / gs.mass;
  job.results() = {{"a", a},
                   {"a_over_a_star", a / gs.a_star},
                   {"leading_coefficient", lead},
                   {"leading_coefficient_expected", expected},
                   {"decreasing_tail", decreasing_tail(rows)}};
  if (a > gs.a_star) {
    job.check("energy_unbounded_below", decreasing_tail(rows), lead, 0.0);
  } else {
    job.check("leading_coefficient_nonnegative", lead >= -1e-9, lead, 0.0);
  }
}

void run_uniqueness(Job& job, const SpectrumCache& cache, const RunConfig& cfg) {
  const GroundState gs = ground_state(job, cache, cfg.solver).gs;
  const double a = coupling(cfg, gs.a_star, 0.05);
  const UniquenessReport rep =
      multistart_uniqueness(cache, a, cfg.run.starts, cfg.solver, gs.a_star);
  json runs = json::array();
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    const auto& r = rep.runs[i];
    job.solver("start" + std::to_string(i), r.converged, r.iterations, r.stop_reason);
    runs.push_back(minimizer_json(r));
  }
  job.results() = {{"a", a},
                   {"a_over_a_star", a / gs.a_star},
                   {"runs", runs},
                   {"max_pairwise_l2", rep.max_pairwise_l2},
                   {"energy_spread", rep.energy_spread},
                   {"status", to_string(rep.status)}};
  job.check("pairwise_l2", rep.max_pairwise_l2 <= 1e-4, rep.max_pairwise_l2, 1e-4);
  job.check("energy_spread", rep.energy_spread <= 1e-8, rep.energy_spread, 1e-8);
}

}  // namespace

PipelineOutcome run_pipeline(const RunConfig& cfg, bool assert_mode, std::ostream* log) {
  Job job(cfg, log);
  try {
    const SpectrumCache cache(cfg.problem);
    switch (cfg.pipeline) {
      case Pipeline::GroundState:
        run_ground_state(job, cache, cfg);
        break;
      case Pipeline::Minimize:
        run_minimize(job, cache, cfg);
        break;
      case Pipeline::Sweep:
        run_sweep(job, cache, cfg);
        break;
      case Pipeline::Eigen:
        run_eigen(job, cache, cfg);
        break;
      case Pipeline::VerifyGn:
        run_verify_gn(job, cache, cfg);
        break;
      case Pipeline::TrialCurve:
        run_trial_curve(job, cache, cfg);
        break;
      case Pipeline::Uniqueness:
        run_uniqueness(job, cache, cfg);
        break;
    }
  } catch (const IoError&) {
    throw;
  } catch (const ThresholdError& e) {
    job.summary["error"] = e.what();
    job.note(e.what());
    return job.finish(assert_mode, kExitConfig);
  } catch (const ParameterError& e) {
    job.summary["error"] = e.what();
    job.note(e.what());
    return job.finish(assert_mode, kExitConfig);
  }
  return job.finish(assert_mode);
}

}  // namespace fnls
