#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rbfmix/engine.hpp"

namespace rbfmix {

/// Malformed problem or configuration file. `where` is "line L, column C"
/// for syntax errors and a field path such as "variables[2].lower" otherwise.
class ProblemFileError : public Error {
 public:
  ProblemFileError(std::string where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct ProblemFile {
  std::string name;
  ProblemSpec spec;
  std::optional<double> known_best;
  /// Variable names in spec order (continuous, integer, categorical).
  std::vector<std::string> variable_names;
  /// Optimizer settings from the file's "config" object, if any.
  std::optional<OptimizerConfig> config;
};

/// Problem file: {"name", "variables": [{"name", "type", "lower", "upper"} |
/// {"name", "type": "categorical", "values": [...]}], "objective":
/// {"builtin": NAME} | {"command": [ARGV...]}, "config": {...}}.
/// A file may instead name a built-in instance: {"instance": NAME}.
ProblemFile parse_problem(std::string_view text);
ProblemFile load_problem(const std::filesystem::path& path);

/// Applies a JSON object of optimizer settings on top of `cfg`.
void apply_config(std::string_view json_text, OptimizerConfig& cfg);
OptimizerConfig load_config(const std::filesystem::path& path, OptimizerConfig base = {});

/// "lognormal:mu,sigma,cap"; "lognormal" alone gives the defaults.
std::optional<LatencyModel> parse_latency(std::string_view text);

/// "auto" gives an empty kind (automatic selection). Throws on unknown names.
std::optional<RbfKind> parse_rbf_option(std::string_view text);

/// Runs `argv` followed by the point's coordinates once per evaluation and
/// reads one number from its standard output.
Objective external_objective(std::vector<std::string> argv);

}  // namespace rbfmix
