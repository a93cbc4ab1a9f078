#pragma once

// Command-line front end: flat `key = value` configuration and the
// simulate / estimate / benchmark commands.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dvarimax/estimator.hpp"
#include "dvarimax/eval.hpp"
#include "dvarimax/init.hpp"
#include "dvarimax/model.hpp"
#include "dvarimax/rotation.hpp"

namespace dvarimax::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { Simulate, Estimate, Benchmark };

Command parse_command(const std::string& name);
const char* to_string(Command c);

using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines; `#` starts a comment. Later keys override
/// earlier ones. Malformed lines raise a Parse error naming the line.
KeyValues parse_config_text(std::string_view text,
                            const std::string& source = "<config>");
KeyValues parse_config_file(const std::filesystem::path& path);

/// Applies a `key=value` override.
void apply_override(KeyValues& entries, const std::string& assignment);

struct CliConfig {
  Command command = Command::Estimate;
  std::filesystem::path input;
  std::filesystem::path output = ".";

  SyntheticConfig synthetic;
  bool seed_given = false;
  bool rank_auto = false;
  Index r_max = 10;

  std::vector<EstimatorVariant> variants{EstimatorVariant::Base};
  std::vector<InitScheme> inits{MomInit{}};
  RotationSolveConfig solve;
  MomSubtraction mom_subtraction = MomSubtraction::AsWritten;
  bool auto_fallback = false;

  SweepParameter sweep = SweepParameter::N;
  std::vector<double> sweep_values;
  int replications = 100;
  int threads = 1;
  bool timing = false;

  /// Every key with its resolved value, defaults included.
  std::map<std::string, std::string> resolved;
};

/// Validates keys (unknown keys are rejected) and fills defaults.
CliConfig resolve_config(Command command, const KeyValues& entries);

/// Builds the benchmark grid from a resolved config.
ExperimentGrid make_grid(const CliConfig& config);

void cmd_simulate(const CliConfig& config, std::ostream& log);
void cmd_estimate(const CliConfig& config, std::ostream& log);
void cmd_benchmark(const CliConfig& config, std::ostream& log);

/// Entry point shared by the executable and tests. Exit codes: 0 success
/// (including benchmark runs with per-replication failures), 2 usage or
/// configuration errors, 3 I/O or parse errors, 1 anything else.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dvarimax::cli
