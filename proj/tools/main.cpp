#include "commands.hpp"
#include "config.hpp"

#include "fstline/errors.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

void setup_logging()
{
    auto logger = spdlog::stderr_color_mt("fstline");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("FST_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps anything unknown to "off"
        if (level != spdlog::level::off || std::string(env) == "off")
            spdlog::set_level(level);
        else
            spdlog::warn("ignoring unknown FST_LOG level '{}'", env);
    }
}

} // namespace

int main(int argc, char** argv)
{
    using namespace fstline::cli;
    setup_logging();

    CLI::App app{"Two like charges on a line: fixed-point solver, reconstruction and checks"};
    app.require_subcommand(1);
    Options opt;

    auto* solve = app.add_subcommand("solve", "solve from a config file and write a run directory");
    solve->add_option("--config", opt.config, "INI or JSON config")->required()->check(CLI::ExistingFile);
    solve->add_option("--out", opt.out, "parent directory of the run directory");

    auto* recon = app.add_subcommand("reconstruct", "extend trajectory strips leg by leg");
    recon->add_option("--config", opt.config, "config with a [reconstruct] section")
        ->required()
        ->check(CLI::ExistingFile);
    recon->add_option("--out", opt.out, "parent directory of the run directory");
    recon->add_option("--oracle", opt.oracle, "solution.json (or its run directory) to compare legs against")
        ->check(CLI::ExistingPath);

    auto* check = app.add_subcommand("check", "residual and bound checks of trajectory files");
    check->add_option("run", opt.run, "run directory written by solve")->check(CLI::ExistingDirectory);
    check->add_option("--config", opt.config, "config with a [check] section")->check(CLI::ExistingFile);

    auto* sweep = app.add_subcommand("sweep", "grid of solves with an aggregated CSV table");
    sweep->add_option("--config", opt.config, "config with a [sweep] section")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", opt.out, "sweep directory (reused to resume)");
    sweep->add_option("--workers", opt.workers, "parallel runs")->check(CLI::PositiveNumber);

    auto* ladder = app.add_subcommand("ladder", "print the regularity breakpoint ladder of an FST solution");
    ladder->add_option("run", opt.run, "run directory or solution.json")->check(CLI::ExistingPath);
    ladder->add_option("--config", opt.config, "config with [check] solution and [output] ladder_count")
        ->check(CLI::ExistingFile);
    ladder->add_option("--count", opt.count, "number of rungs")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return Exit::usage;
    }

    try {
        if (*solve) return cmd_solve(opt);
        if (*recon) return cmd_reconstruct(opt);
        if (*check) return cmd_check(opt);
        if (*sweep) return cmd_sweep(opt);
        if (*ladder) return cmd_ladder(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return Exit::usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Exit::failed;
    }
    return Exit::usage;
}
