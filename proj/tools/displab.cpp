#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "displab/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"dispersive lab experiment runner"};
    displab::RunOptions opts;
    bool list_kinds = false;
    std::uint64_t seed_flag = 0;

    app.add_option("--config,-c", opts.config_path, "path to the experiment config (JSON)");
    app.add_option("--out,-o", opts.out_dir, "directory for the CSV and JSON reports");
    app.add_option("--workers,-w", opts.workers,
                   "worker threads (0: DISPERSIVE_LAB_WORKERS env var, else 1)")
        ->check(CLI::NonNegativeNumber);
    auto* seed_opt =
        app.add_option("--seed", seed_flag, "override the seed declared in the config");
    app.add_flag("--list-kinds", list_kinds, "print the supported experiment kinds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? displab::run_config_error : displab::run_ok;
    }

    if (list_kinds) {
        for (const auto& kind : displab::experiment_kinds()) std::cout << kind << "\n";
        return displab::run_ok;
    }
    if (opts.config_path.empty()) {
        std::cerr << "validation error: --config is required\n";
        return displab::run_config_error;
    }
    if (seed_opt->count() > 0) opts.seed_override = seed_flag;

    std::string message;
    const int status = displab::run_experiment(opts, message);
    (status == displab::run_ok ? std::cout : std::cerr) << message << "\n";
    return status;
}
