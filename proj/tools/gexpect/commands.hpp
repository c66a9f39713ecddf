#pragma once

#include <iosfwd>
#include <string_view>

#include <nlohmann/json.hpp>

#include "gexp/error.hpp"

namespace gexpect {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { ok = 0, check_failed = 1, usage = 2, numeric_failure = 3 };

struct CommandResult {
    int exit_code = ExitCode::ok;
    nlohmann::json report;
};

/// Runs the command named by config["command"] ("solve", "recover",
/// "decompose", "check"). Missing keys take their documented defaults.
/// Library errors propagate as gexp::Error.
CommandResult run_command(const nlohmann::json& config);

/// Re-runs the configuration embedded in a previous report.
CommandResult replay(const nlohmann::json& report);

/// The report without wall-clock timings, for determinism comparisons.
nlohmann::json without_timings(nlohmann::json report);

int exit_code_for(gexp::ErrorCode code) noexcept;

/// Full command-line entry point: argument and config-file parsing,
/// dispatch, report output and exit-code mapping.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gexpect
