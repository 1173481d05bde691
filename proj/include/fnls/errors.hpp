#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fnls {

/// Parameters violate the standing hypotheses or grid constraints.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Two fields (or a field and a cache) live on different grids.
struct GridMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A dilation or cutoff would push content outside what the grid resolves.
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input is degenerate for the requested quantity (zero field, no interaction).
struct DegenerateInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Coupling at or above the critical threshold where no minimizer exists.
struct ThresholdError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Malformed run configuration. line is 1-based in the config text; 0 means the
/// value came from a default or a command-line override.
struct ConfigError : std::invalid_argument {
  ConfigError(const std::string& msg, int line_no, std::string where = {})
      : std::invalid_argument(msg), line(line_no), source(std::move(where)) {}
  int line = 0;
  std::string source;
};

/// A file could not be read or written.
struct IoError : std::runtime_error {
  IoError(const std::string& msg, std::string file)
      : std::runtime_error(msg + ": " + file), path(std::move(file)) {}
  std::string path;
};

}  // namespace fnls
