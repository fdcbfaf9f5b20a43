#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "magtrap/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"magtrap: magnetic trapping experiments on surfaces"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    bool force = false;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    struct Entry {
        magtrap::Command command;
        const char* help;
    };
    const Entry entries[] = {
        {magtrap::Command::simulate, "integrate one charged orbit (trajectory.csv)"},
        {magtrap::Command::levels, "trace level sets of B (level_NNN.csv)"},
        {magtrap::Command::twist, "action profile and degeneracy report (profile.csv, report.json)"},
        {magtrap::Command::trap, "trapping experiment over charges (trap.json, trap.csv)"},
        {magtrap::Command::drift, "drift per gyration against 1/e (drift.csv, drift.json)"},
        {magtrap::Command::reduce, "axisymmetric reduction to a surface problem (reduced.cfg)"},
    };
    std::vector<std::pair<CLI::App*, magtrap::Command>> subs;
    for (const auto& entry : entries) {
        CLI::App* sub = app.add_subcommand(magtrap::to_string(entry.command), entry.help);
        sub->add_option("--config,-c", config, "run configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out,-o", out, std::string("output directory (default: $") + magtrap::kOutDirEnv +
                                             " or magtrap-out/<command>)");
        sub->add_flag("--force", force, "run trap on degenerate levels");
        sub->add_option("--seed", seed, "random seed for initial conditions (overrides [trap] seed)");
        sub->add_option("--threads", threads, "worker threads for sweeps (0 = all cores)");
        subs.emplace_back(sub, entry.command);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    for (const auto& [sub, command] : subs) {
        if (!sub->parsed()) continue;
        magtrap::CommandOptions options;
        options.out_dir = magtrap::resolve_output_dir(out.empty() ? std::nullopt : std::optional<std::string>(out),
                                                      command);
        options.force = force;
        options.threads = threads;
        if (sub->count("--seed") > 0) options.seed = seed;
        return magtrap::run_command_reporting(config, command, options, std::cout, std::cerr);
    }
    return 1;
}
