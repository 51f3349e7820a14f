#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdrl/episode_log.hpp"

namespace sdrl::app {

enum ExitCode : int { kOk = 0, kAuditFailure = 1, kUsageError = 2, kIoError = 3 };

/// Entry point behind the `sdrl` executable. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct Divergence {
  long line = 0;  // 1-based line in the log
  std::string message;
};

/// First record whose logged reward, step numbering or termination flags disagree with a
/// recomputation from its events under `reward`.
std::optional<Divergence> audit_log(const std::vector<env::StepRecord>& records,
                                    const env::RewardConfig& reward);

/// Sidecar paths derived from a log path: run.jsonl -> run.meta.json and so on.
std::filesystem::path sidecar(const std::filesystem::path& log, const std::string& suffix);

}  // namespace sdrl::app
