// fnls: batch front end.
//
//   fnls <pipeline> [--config PATH] [--set key=value]... [--assert] [--out DIR] [--seed N]
//
// Pipelines: ground-state, minimize, sweep, eigen, verify-gn, trial-curve, uniqueness.
// Exit codes: 0 ok, 1 I/O error, 2 config error, 3 nonconvergence, 4 assertion failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fnls/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fractional NLS ground states and minimizers"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  bool assert_mode = false;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "override, key=value or section.key=value (repeatable)");
  app.add_flag("--assert", assert_mode, "exit 4 when any check fails");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  for (const char* name :
       {"ground-state", "minimize", "sweep", "eigen", "verify-gn", "trial-curve", "uniqueness"})
    app.add_subcommand(name, std::string("run the ") + name + " pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fnls::kExitConfig;
  }

  std::string text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot read " << config_path << '\n';
      return fnls::kExitIo;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  std::vector<std::string> overrides = sets;
  overrides.push_back("pipeline=" + app.get_subcommands().front()->get_name());
  if (!out_dir.empty()) overrides.push_back("output_dir=" + out_dir);
  if (seed) overrides.push_back("seed=" + std::to_string(*seed));

  fnls::RunConfig cfg;
  try {
    cfg = fnls::parse_config(text, overrides);
  } catch (const fnls::ConfigError& e) {
    std::cerr << "config error";
    if (!config_path.empty() && e.line > 0) std::cerr << " in " << config_path;
    std::cerr << ": " << e.what() << '\n';
    return fnls::kExitConfig;
  }

  try {
    const fnls::PipelineOutcome out = fnls::run_pipeline(cfg, assert_mode, &std::cerr);
    std::cout << out.directory << "/summary.json\n";
    return out.exit_code;
  } catch (const fnls::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return fnls::kExitIo;
  }
}
