#include "fnls/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>
#include <vector>

namespace fnls {

std::string to_string(Pipeline p) {
  switch (p) {
    case Pipeline::GroundState:
      return "ground-state";
    case Pipeline::Minimize:
      return "minimize";
    case Pipeline::Sweep:
      return "sweep";
    case Pipeline::Eigen:
      return "eigen";
    case Pipeline::VerifyGn:
      return "verify-gn";
    case Pipeline::TrialCurve:
      return "trial-curve";
    case Pipeline::Uniqueness:
      return "uniqueness";
  }
  return "unknown";
}

Pipeline pipeline_from_string(const std::string& name) {
  for (Pipeline p : {Pipeline::GroundState, Pipeline::Minimize, Pipeline::Sweep, Pipeline::Eigen,
                     Pipeline::VerifyGn, Pipeline::TrialCurve, Pipeline::Uniqueness})
    if (to_string(p) == name) return p;
  throw ParameterError("unknown pipeline '" + name +
                       "' (expected ground-state, minimize, sweep, eigen, verify-gn, "
                       "trial-curve or uniqueness)");
}

void RunOptions::validate() const {
  if (output_dir.empty()) throw ParameterError("output_dir must not be empty");
  if (!std::isnan(a_fraction) && !(a_fraction > 0.0 && std::isfinite(a_fraction)))
    throw ParameterError("a_fraction must be positive");
  if (corpus_size < 1) throw ParameterError("corpus_size must be at least 1");
  if (starts < 3) throw ParameterError("starts must be at least 3");
  if (tau_count < 4) throw ParameterError("tau_count must be at least 4");
  if (!std::isfinite(r_far) || r_far == 0.0)
    throw ParameterError("r_far must be positive (or negative for the default L/4)");
}

namespace {

std::string trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

struct Located {
  int line;
  std::string where;
};

[[noreturn]] void fail(const std::string& msg, const Located& at) {
  std::string full = msg;
  if (at.line > 0)
    full = "line " + std::to_string(at.line) + ": " + msg;
  else if (!at.where.empty())
    full = at.where + ": " + msg;
  throw ConfigError(full, at.line, at.where);
}

double to_double(const std::string& v, const std::string& key, const Located& at) {
  double out = 0.0;
  const auto* first = v.data();
  const auto* last = v.data() + v.size();
  auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || p != last)
    fail("type mismatch for '" + key + "': expected a number, got '" + v + "'", at);
  return out;
}

long long to_int(const std::string& v, const std::string& key, const Located& at) {
  long long out = 0;
  const auto* last = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), last, out);
  if (ec != std::errc() || p != last)
    fail("type mismatch for '" + key + "': expected an integer, got '" + v + "'", at);
  return out;
}

bool to_bool(const std::string& v, const std::string& key, const Located& at) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail("type mismatch for '" + key + "': expected true or false, got '" + v + "'", at);
}

int to_int32(const std::string& v, const std::string& key, const Located& at) {
  const long long x = to_int(v, key, at);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    fail("value of '" + key + "' out of range: " + v, at);
  return static_cast<int>(x);
}

struct Draft {
  RunConfig cfg;
  std::string potential = "harmonic";
  double c_shift = 0.0;
};

using Setter = std::function<void(Draft&, const std::string&, const std::string&, const Located&)>;

struct KeyDef {
  std::string section;
  std::string key;
  Setter set;
  std::function<std::string(const Draft&)> show;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    std::vector<KeyDef> t;
    auto dbl = [&t](std::string sec, std::string key, double* (*field)(Draft&)) {
      t.push_back({sec, key,
                   [field](Draft& d, const std::string& k, const std::string& v, const Located& at) {
                     *field(d) = to_double(v, k, at);
                   },
                   [field](const Draft& d) { return num(*field(const_cast<Draft&>(d))); }});
    };
    auto i32 = [&t](std::string sec, std::string key, int* (*field)(Draft&)) {
      t.push_back({sec, key,
                   [field](Draft& d, const std::string& k, const std::string& v, const Located& at) {
                     *field(d) = to_int32(v, k, at);
                   },
                   [field](const Draft& d) {
                     return std::to_string(*field(const_cast<Draft&>(d)));
                   }});
    };
    dbl("problem", "s", [](Draft& d) { return &d.cfg.problem.s; });
    dbl("problem", "b", [](Draft& d) { return &d.cfg.problem.b; });
    dbl("problem", "a", [](Draft& d) { return &d.cfg.problem.a; });
    dbl("problem", "c_shift", [](Draft& d) { return &d.c_shift; });
    dbl("problem", "L", [](Draft& d) { return &d.cfg.problem.half_width; });
    i32("problem", "N", [](Draft& d) { return &d.cfg.problem.dim; });
    i32("problem", "M", [](Draft& d) { return &d.cfg.problem.points; });
    t.push_back({"problem", "potential",
                 [](Draft& d, const std::string&, const std::string& v, const Located& at) {
                   try {
                     potential_kind_from_string(v);
                   } catch (const ParameterError& e) {
                     fail(e.what(), at);
                   }
                   d.potential = v;
                 },
                 [](const Draft& d) { return d.potential; }});

    dbl("solver", "step0", [](Draft& d) { return &d.cfg.solver.step0; });
    dbl("solver", "backtrack", [](Draft& d) { return &d.cfg.solver.backtrack; });
    dbl("solver", "tol_energy", [](Draft& d) { return &d.cfg.solver.tol_energy; });
    dbl("solver", "tol_grad", [](Draft& d) { return &d.cfg.solver.tol_grad; });
    dbl("solver", "threshold_margin", [](Draft& d) { return &d.cfg.solver.threshold_margin; });
    i32("solver", "max_iters", [](Draft& d) { return &d.cfg.solver.max_iters; });
    t.push_back({"solver", "conjugate",
                 [](Draft& d, const std::string& k, const std::string& v, const Located& at) {
                   d.cfg.solver.conjugate = to_bool(v, k, at);
                 },
                 [](const Draft& d) { return std::string(d.cfg.solver.conjugate ? "true" : "false"); }});

    t.push_back({"run", "pipeline",
                 [](Draft& d, const std::string&, const std::string& v, const Located& at) {
                   try {
                     d.cfg.pipeline = pipeline_from_string(v);
                   } catch (const ParameterError& e) {
                     fail(e.what(), at);
                   }
                   d.cfg.pipeline_set = true;
                 },
                 [](const Draft& d) { return to_string(d.cfg.pipeline); }});
    // not part of the canonical text or hash
    t.push_back({"run", "output_dir",
                 [](Draft& d, const std::string&, const std::string& v, const Located&) {
                   d.cfg.run.output_dir = v;
                 },
                 nullptr});
    t.push_back({"run", "seed",
                 [](Draft& d, const std::string& k, const std::string& v, const Located& at) {
                   const long long x = to_int(v, k, at);
                   if (x < 0) fail("seed must be nonnegative, got " + v, at);
                   d.cfg.run.seed = static_cast<std::uint64_t>(x);
                   d.cfg.solver.seed = d.cfg.run.seed;
                 },
                 [](const Draft& d) { return std::to_string(d.cfg.run.seed); }});
    dbl("run", "a_fraction", [](Draft& d) { return &d.cfg.run.a_fraction; });
    dbl("run", "r_far", [](Draft& d) { return &d.cfg.run.r_far; });
    i32("run", "corpus_size", [](Draft& d) { return &d.cfg.run.corpus_size; });
    i32("run", "starts", [](Draft& d) { return &d.cfg.run.starts; });
    i32("run", "tau_count", [](Draft& d) { return &d.cfg.run.tau_count; });
    return t;
  }();
  return table;
}

const KeyDef* find_key(const std::string& section, const std::string& key) {
  for (const auto& k : key_table())
    if (k.section == section && k.key == key) return &k;
  return nullptr;
}

// Leading token of a validation message names the offending key.
std::string key_from_message(const std::string& section, const std::string& msg) {
  std::string tok = msg.substr(0, msg.find(' '));
  if (section == "problem" && tok == "potential") return "c_shift";
  return tok;
}

void assign(Draft& d, const std::string& section, const std::string& key, const std::string& value,
            const Located& at) {
  const KeyDef* def = find_key(section, key);
  if (def == nullptr) fail("unknown key '" + key + "' in section [" + section + "]", at);
  def->set(d, key, value, at);
  d.cfg.lines[section + "." + key] = at.line;
}

}  // namespace

RunConfig parse_config(std::string_view text, std::span<const std::string> overrides) {
  Draft d;
  std::string section = "run";
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const Located at{line_no, {}};
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header '" + line + "'", at);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "problem" && section != "solver" && section != "run")
        fail("unknown section [" + section + "]", at);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key=value, got '" + line + "'", at);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail("missing key before '='", at);
    if (d.cfg.lines.contains(section + "." + key))
      fail("duplicate key '" + key + "' in section [" + section + "]", at);
    assign(d, section, key, value, at);
  }

  int k = 0;
  for (const auto& ov : overrides) {
    ++k;
    const Located at{0, "--set #" + std::to_string(k) + " '" + ov + "'"};
    const auto eq = ov.find('=');
    if (eq == std::string::npos) fail("expected key=value", at);
    std::string key = trim(std::string_view(ov).substr(0, eq));
    const std::string value = trim(std::string_view(ov).substr(eq + 1));
    std::string sec;
    if (const auto dot = key.find('.'); dot != std::string::npos) {
      sec = key.substr(0, dot);
      key = key.substr(dot + 1);
    } else {
      for (const auto& def : key_table())
        if (def.key == key) sec = def.section;
      if (sec.empty()) fail("unknown key '" + key + "'", at);
    }
    assign(d, sec, key, value, at);
  }

  auto where = [&](const std::string& section_key) {
    const auto it = d.cfg.lines.find(section_key);
    if (it == d.cfg.lines.end()) return Located{0, "default of " + section_key};
    if (it->second == 0) return Located{0, "--set " + section_key};
    return Located{it->second, {}};
  };

  const PotentialKind kind = potential_kind_from_string(d.potential);
  if (kind == PotentialKind::ShiftedHarmonic)
    d.cfg.problem.potential = PotentialSpec::shifted(d.c_shift);
  else if (d.cfg.lines.contains("problem.c_shift") && d.c_shift != 0.0)
    fail("c_shift requires potential = shifted", where("problem.c_shift"));
  else
    d.cfg.problem.potential = {kind, 0.0};

  auto check = [&](const std::string& section, auto&& fn) {
    try {
      fn();
    } catch (const ParameterError& e) {
      fail(e.what(), where(section + "." + key_from_message(section, e.what())));
    }
  };
  check("problem", [&] { d.cfg.problem.validate(); });
  check("solver", [&] { d.cfg.solver.validate(); });
  check("run", [&] { d.cfg.run.validate(); });
  return d.cfg;
}

std::string canonical_text(const RunConfig& cfg) {
  Draft d;
  d.cfg = cfg;
  d.potential = to_string(cfg.problem.potential.kind);
  d.c_shift = cfg.problem.potential.shift;
  std::string out;
  for (const auto& def : key_table()) {
    if (!def.show) continue;
    out += def.section + "." + def.key + "=" + def.show(d) + "\n";
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fnls
