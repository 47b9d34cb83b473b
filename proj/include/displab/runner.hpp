#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace displab {

/// Exit codes of the experiment runner.
enum RunStatus : int {
    run_ok = 0,          // all checks pass
    run_check_failed = 1,
    run_config_error = 2,  // parse or validation failure
    run_internal_error = 3,
};

struct RunOptions {
    std::string config_path;
    std::string out_dir = ".";
    int workers = 0;  // 0: DISPERSIVE_LAB_WORKERS env var, else 1
    std::optional<std::uint64_t> seed_override;
};

/// Runs the config, persists <stem>.csv and <stem>.json under out_dir, and
/// returns a RunStatus; `message` carries the human-readable summary or the
/// error description.
int run_experiment(const RunOptions& opts, std::string& message);

/// The supported experiment kinds, in dispatch order.
std::vector<std::string> experiment_kinds();

}  // namespace displab
