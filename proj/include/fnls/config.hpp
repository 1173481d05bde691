#pragma once

// Plain key=value run configuration with [section] headers.
//
//   [problem]  N s b a potential c_shift L M
//   [solver]   step0 backtrack tol_energy tol_grad max_iters threshold_margin conjugate
//   [run]      pipeline output_dir seed a_fraction corpus_size starts tau_count r_far
//
// Keys before the first header belong to [run]. '#' starts a comment.

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "fnls/minimizer.hpp"

namespace fnls {

enum class Pipeline { GroundState, Minimize, Sweep, Eigen, VerifyGn, TrialCurve, Uniqueness };

std::string to_string(Pipeline p);
Pipeline pipeline_from_string(const std::string& name);

struct RunOptions {
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  // Coupling as a fraction of the computed a*. NaN selects the pipeline default
  // (minimize 0.5, trial-curve 1.2, uniqueness 0.05). Ignored when problem.a > 0.
  double a_fraction = std::numeric_limits<double>::quiet_NaN();
  int corpus_size = 100;  // verify-gn
  int starts = 5;         // uniqueness
  int tau_count = 24;     // trial-curve, tau log-spaced on [1, L/4]
  double r_far = -1.0;    // sweep far-field radius in rescaled coordinates; < 0 means L/4

  void validate() const;
};

struct RunConfig {
  ProblemParams problem;
  MinimizeOptions solver;
  Pipeline pipeline = Pipeline::GroundState;
  RunOptions run;
  bool pipeline_set = false;
  std::map<std::string, int> lines;  // "section.key" -> line it was set on (0: override)
};

/// Parses text, applies overrides ("key=value" or "section.key=value", bare keys
/// resolved by name across sections) and validates every block. Throws ConfigError
/// naming the line for unknown keys, type mismatches and invariant violations.
RunConfig parse_config(std::string_view text, std::span<const std::string> overrides = {});

/// Canonical "section.key=value" listing of every setting, defaults included.
std::string canonical_text(const RunConfig& cfg);

/// 64-bit FNV-1a of canonical_text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace fnls
