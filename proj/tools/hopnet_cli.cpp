// Command-line entry point for the experiment runner.

#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hopnet/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Gibbsian message routeing in dense multihop networks: experiment runner"};
    app.require_subcommand(1);

    hopnet::ExperimentOptions opts;
    std::int64_t seed = 0;

    const std::vector<std::pair<std::string, std::string>> subcommands = {
        {"sample", "draw a point configuration and write it as CSV"},
        {"mcmc", "run Metropolis chains at fixed (gamma, beta)"},
        {"anneal", "run annealed chains with a logarithmic schedule"},
        {"solve", "solve for the limiting minimizer setting"},
        {"functionals", "evaluate the limiting functionals of a setting"},
        {"count-check", "verify the exact class-counting identities"},
        {"free-energy", "compare the partition rate with the variational value"},
        {"distance", "compare a chain's empirical setting with the solved one"},
    };
    for (const auto& [name, help] : subcommands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opts.config_path, "configuration file (key = value lines)")
            ->required();
        sub->add_option("--seed", seed, "override the config's seed");
        sub->add_option("--out", opts.out_dir, "output directory (default: current)");
        sub->add_flag("--strict", opts.strict, "treat non-convergence as a fatal error");
    }

    CLI11_PARSE(app, argc, argv);

    CLI::App* chosen = app.get_subcommands().front();
    opts.subcommand = chosen->get_name();
    if (chosen->count("--seed") > 0) {
        if (seed < 0) {
            std::fprintf(stderr, "{\"error\":\"config\",\"message\":\"--seed must be nonnegative\"}\n");
            return hopnet::exit_config_error;
        }
        opts.seed = std::uint64_t(seed);
    }
    return hopnet::run_experiment(opts);
}
