#pragma once
// Experiment runner: loads a key=value config, validates it against the known
// schema (unknown keys rejected), dispatches one subcommand, and writes
// deterministic output files into the chosen directory.  Every CSV starts
// with a '# config_hash=<hex>' line followed by a column-header row; traces
// are newline-delimited JSON records with a fixed field order
// {step, gamma_t, beta_t, S, M, accepted} after one header record.
//
// Subcommands: sample, mcmc, anneal, solve, functionals, count-check,
// free-energy, distance.

#include <cstdint>
#include <optional>
#include <string>

namespace hopnet {

struct ExperimentOptions {
    std::string config_path;
    std::string subcommand;
    std::optional<std::uint64_t> seed; // overrides the config's seed
    std::string out_dir = ".";
    bool strict = false; // non-convergence and failed self-checks become fatal
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_budget_refusal = 3;
inline constexpr int exit_no_convergence = 4;

// Runs one subcommand.  On any refusal a single machine-readable JSON error
// record {"error": <category>, "message": <text>} is written to stderr and
// the matching exit code is returned.
int run_experiment(const ExperimentOptions& opts);

} // namespace hopnet
