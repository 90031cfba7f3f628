#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdekit/analysis.hpp"
#include "sdekit/sde_problem.hpp"

namespace sdekit::cli {

enum class StudyKind { validate, transform_check, simulate, convergence, occupation };

std::optional<StudyKind> parse_study(std::string_view name);
std::string_view to_string(StudyKind kind);

enum ExitCode : int {
  kSuccess = 0,
  kRuntimeFailure = 1,
  kInadmissible = 2,
  kConfigError = 3,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TransformGrid {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t points = 201;
};

struct SimulateOptions {
  std::size_t n = 64;
  std::uint64_t path_index = 0;
  bool z_column = false;
};

/// Fully parsed experiment. Every JSON key is known; see `parse_experiment`.
struct ExperimentConfig {
  StudyKind study = StudyKind::validate;
  nlohmann::json problem_json;
  StudyConfig study_config;
  std::vector<double> p_values{2.0};
  std::vector<ErrorKind> errors{ErrorKind::final_time};
  bool cross_check = false;
  double zero_tol = kDefaultZeroTolerance;
  std::optional<std::vector<double>> occupation_breakpoints;
  TransformGrid grid;
  SimulateOptions simulate;
  std::filesystem::path out_dir = ".";
};

/// Command line flags that sit on top of the config file.
struct RunOptions {
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::filesystem::path> out_dir;
  std::vector<std::string> overrides;  // "dotted.key=value"
};

/// Applies "a.b=value" to a JSON document. The value is parsed as JSON when
/// possible and stored as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Strict parse: unknown keys and unknown enum names raise ConfigError.
ExperimentConfig parse_experiment(const nlohmann::json& doc, StudyKind study);

/// Runs one subcommand and returns its exit code. Human-readable summary goes
/// to `out`, diagnostics to `err`.
int run(StudyKind study, const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace sdekit::cli
