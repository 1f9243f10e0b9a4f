#pragma once

#include <nlohmann/json.hpp>
#include <string>

namespace ppde::cli {

/// Exit codes: 0 success, 2 config/schema rejection, 3 numerical failure.
struct RunResult {
    int exit_code = 0;
    nlohmann::json output;
    std::string error;
};

/// Execute one subcommand (simulate, solve, fk, control, viscosity,
/// check-derivs, validate-f) on a parsed config. The output JSON carries
/// schema_version, value, std_error, n_samples, seed, runtime_ms,
/// diagnostics, and the fully resolved config (defaults materialized), so a
/// run can be reproduced bitwise from its own output.
RunResult run_subcommand(const std::string& name, const nlohmann::json& config);

/// Apply one `path.to.key=json_value` override to a config tree.
void apply_override(nlohmann::json& config, const std::string& assignment);

}  // namespace ppde::cli
