#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fnls/asymptotics.hpp"
#include "fnls/pipeline.hpp"

using namespace fnls;
namespace fs = std::filesystem;

namespace {

ConfigError config_error(const std::string& text, std::vector<std::string> ov = {}) {
  try {
    parse_config(text, ov);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a config error");
  return ConfigError("", 0);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fnls_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal config is valid with documented defaults") {
  const RunConfig c = parse_config("pipeline = ground-state\n");
  CHECK(c.pipeline == Pipeline::GroundState);
  CHECK(c.problem.dim == 2);
  CHECK(c.problem.s == 0.75);
  CHECK(c.problem.b == 0.5);
  CHECK(c.problem.half_width == 16.0);
  CHECK(c.problem.points == 128);
  CHECK(c.run.corpus_size == 100);
  CHECK(c.solver.tol_grad == 1e-8);
}

TEST_CASE("sections, comments and typed values") {
  const RunConfig c = parse_config(
      "# run\npipeline = sweep\n[problem]\nM = 64  # coarse\nL = 8\npotential = shifted\n"
      "c_shift = 0.5\n[solver]\nconjugate = false\nmax_iters = 50\n[run]\nseed = 9\n");
  CHECK(c.pipeline == Pipeline::Sweep);
  CHECK(c.problem.points == 64);
  CHECK(c.problem.half_width == 8.0);
  CHECK(c.problem.potential.kind == PotentialKind::ShiftedHarmonic);
  CHECK(c.problem.potential.shift == 0.5);
  CHECK_FALSE(c.solver.conjugate);
  CHECK(c.solver.max_iters == 50);
  CHECK(c.run.seed == 9);
  CHECK(c.solver.seed == 9);
}

TEST_CASE("s = 1.2 is rejected citing (1/2, 1) and the line") {
  const ConfigError e = config_error("pipeline = eigen\n[problem]\ns = 1.2\n");
  CHECK(e.line == 3);
  CHECK(std::string(e.what()).find("(1/2, 1)") != std::string::npos);
}

TEST_CASE("b = 2.0 with s = 0.75 is rejected since b < 2s fails") {
  const ConfigError e = config_error("[problem]\ns = 0.75\nb = 2.0\n");
  CHECK(e.line == 3);
  CHECK(std::string(e.what()).find("b < 2s") != std::string::npos);
}

TEST_CASE("unknown keys, type mismatches and malformed lines carry line numbers") {
  CHECK(config_error("[solver]\n\ntol = 1\n").line == 3);
  CHECK(std::string(config_error("[solver]\ntol = 1\n").what()).find("unknown key") !=
        std::string::npos);
  const ConfigError t = config_error("[problem]\nM = many\n");
  CHECK(t.line == 2);
  CHECK(std::string(t.what()).find("type mismatch") != std::string::npos);
  CHECK(config_error("[problem]\nM = 12.5\n").line == 2);
  CHECK(config_error("[problem\n").line == 1);
  CHECK(config_error("[nope]\n").line == 1);
  CHECK(config_error("justtext\n").line == 1);
  CHECK(config_error("[problem]\nM = 64\nM = 32\n").line == 3);
  CHECK(config_error("[solver]\nbacktrack = 1.5\n").line == 2);
  CHECK(config_error("pipeline = fly\n").line == 1);
}

TEST_CASE("overrides win over the file and are validated") {
  const std::vector<std::string> ov{"M=64", "problem.L=8", "seed=4"};
  const RunConfig c = parse_config("[problem]\nM = 256\n", ov);
  CHECK(c.problem.points == 64);
  CHECK(c.problem.half_width == 8.0);
  CHECK(c.run.seed == 4);
  const ConfigError e = config_error("", {"s=2"});
  CHECK(e.line == 0);
  CHECK(std::string(e.what()).find("--set") != std::string::npos);
  CHECK(config_error("", {"bogus=1"}).line == 0);
}

TEST_CASE("config hash is stable, sensitive and ignores output_dir") {
  const RunConfig a = parse_config("pipeline = sweep\n");
  const RunConfig b = parse_config("[run]\npipeline=sweep\noutput_dir=/tmp/x\n");
  const RunConfig c = parse_config("pipeline = sweep\n[problem]\nM = 64\n");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("verify-gn pipeline: summary names hash and a*, margin above -1e-6, deterministic") {
  const fs::path d1 = scratch("gn1"), d2 = scratch("gn2");
  RunConfig cfg = parse_config("pipeline = verify-gn\n", std::vector<std::string>{"output_dir=" + d1.string()});
  const PipelineOutcome o1 = run_pipeline(cfg, true);
  cfg.run.output_dir = d2.string();
  const PipelineOutcome o2 = run_pipeline(cfg, true);
  CHECK(o1.exit_code == kExitOk);
  CHECK(o1.summary_json == o2.summary_json);
  CHECK(slurp(d1 / "verify-gn" / "summary.json") == o1.summary_json);
  const auto j = nlohmann::json::parse(o1.summary_json);
  CHECK(j["config_hash"] == config_hash(cfg));
  CHECK(j["a_star"].get<double>() > 0.0);
  CHECK(j["results"]["corpus_size"] == 100);
  CHECK(j["results"]["min_margin"].get<double>() >= -1e-6 * j["a_star"].get<double>());
  CHECK(fs::exists(d1 / "verify-gn" / "metadata.json"));
  CHECK(nlohmann::json::parse(slurp(d1 / "verify-gn" / "metadata.json")).contains("started"));
}

TEST_CASE("sweep pipeline writes the schema CSV") {
  const fs::path d = scratch("sweep");
  const RunConfig cfg = parse_config("", std::vector<std::string>{"pipeline=sweep", "output_dir=" + d.string()});
  run_pipeline(cfg, false);
  std::istringstream in(slurp(d / "sweep" / "sweep.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == kSweepHeader);
}

TEST_CASE("exit codes: nonconvergence 3, threshold refusal 2, assertion 4") {
  const fs::path d = scratch("codes");
  RunConfig cfg = parse_config("", std::vector<std::string>{"pipeline=eigen", "max_iters=2",
                                                            "output_dir=" + d.string()});
  CHECK(run_pipeline(cfg, false).exit_code == kExitNonconvergence);
  cfg = parse_config("", std::vector<std::string>{"pipeline=minimize", "a_fraction=1.5",
                                                  "output_dir=" + d.string()});
  const PipelineOutcome refused = run_pipeline(cfg, false);
  CHECK(refused.exit_code == kExitConfig);
  CHECK(nlohmann::json::parse(refused.summary_json).contains("error"));
  cfg = parse_config("", std::vector<std::string>{"pipeline=trial-curve", "a_fraction=0.5",
                                                  "tau_count=6", "output_dir=" + d.string()});
  CHECK(run_pipeline(cfg, true).exit_code == kExitOk);
  // a coarse grid leaves the ground-state residual far above its 1e-4 gate
  cfg = parse_config("", std::vector<std::string>{"pipeline=ground-state", "M=64",
                                                  "output_dir=" + d.string()});
  CHECK(run_pipeline(cfg, false).exit_code == kExitOk);
  CHECK(run_pipeline(cfg, true).exit_code == kExitAssertion);
}

TEST_CASE("unwritable output directory surfaces the path") {
  const fs::path blocker = scratch("blocker");
  std::ofstream(blocker.string()) << "x";
  const RunConfig cfg =
      parse_config("", std::vector<std::string>{"pipeline=eigen", "output_dir=" + blocker.string()});
  try {
    run_pipeline(cfg, false);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.path.find("blocker") != std::string::npos);
  }
  fs::remove(blocker);
}
