#pragma once

// Pipeline orchestration behind the command-line front end. Every run writes
// <output_dir>/<pipeline>/summary.json (deterministic) and metadata.json
// (timestamps), plus pipeline-specific CSV and checkpoint files.

#include <iosfwd>
#include <string>
#include <vector>

#include "fnls/config.hpp"

namespace fnls {

enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitConfig = 2,
  kExitNonconvergence = 3,
  kExitAssertion = 4,
};

struct CheckOutcome {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
};

struct PipelineOutcome {
  int exit_code = kExitOk;
  bool converged = true;
  std::string directory;
  std::string summary_json;  // exact bytes written to summary.json
  std::vector<CheckOutcome> checks;
};

/// Runs cfg.pipeline. With assert_mode, a failed check yields kExitAssertion.
/// Nonconvergence yields kExitNonconvergence regardless. Throws IoError on
/// unwritable outputs.
PipelineOutcome run_pipeline(const RunConfig& cfg, bool assert_mode, std::ostream* log = nullptr);

/// Log-spaced tau grid with count points on [lo, hi].
std::vector<double> log_spaced(double lo, double hi, int count);

}  // namespace fnls
