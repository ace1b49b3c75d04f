#pragma once

#include <optional>
#include <string>

#include "jitcert/model.hpp"
#include "jitcert/verify.hpp"

namespace jitcert::cli {

enum class Mode { kVerified, kApprox, kBoth };

struct Options {
  int taylor_order = 10;
  int approx_samples = 100;
  double lmi_tolerance = 1e-9;
  int heuristic_iterations = 3;
  Mode mode = Mode::kVerified;
};

struct JobConfig {
  model::ClosedLoopSystem system;
  Options options;
};

/// Raised on malformed configs; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

JobConfig parse_config(const std::string& json_text);
std::string serialize_config(const JobConfig& config);

/// Shortest decimal string that parses back to exactly `v`.
std::string decimal_string(double v);

// Exit codes of the `verify` tool.
inline constexpr int kExitStable = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnknown = 2;

struct RunResult {
  int exit_code = kExitError;
  std::string text_report;
  std::string json_report;
};

/// Full pipeline: decompose, synthesize P, certify (and/or approximate),
/// render reports. Never throws; input problems surface as exit code 1
/// with a diagnostic in text_report.
RunResult run_job(const JobConfig& config);

/// Command-line entry point (argument parsing + file IO around run_job).
int run_main(int argc, char** argv);

}  // namespace jitcert::cli
