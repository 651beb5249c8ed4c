#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "backoff/config.hpp"

namespace backoff {

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;
  bool synthetic = false;  // force synthetic-constants mode on
};

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 1 validation, 2 runtime, 3 invariant violations
  std::vector<std::string> files;
  std::string message;
};

// Executes one CLI command against a parsed config, writing artifacts under
// out_dir. Never throws; failures land in the exit code and message.
RunOutcome run_command(const std::string& command, const ExperimentConfig& config,
                       const std::string& out_dir, const RunOverrides& overrides);

// Convenience wrapper: parse + run.
RunOutcome run_command_text(const std::string& command, const std::string& config_text,
                            const std::string& out_dir, const RunOverrides& overrides);

}  // namespace backoff
