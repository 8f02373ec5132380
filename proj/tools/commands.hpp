#pragma once

#include <filesystem>

namespace fstline::cli {

/// Process exit codes.
enum Exit : int { ok = 0, failed = 1, usage = 2 };

struct Options {
    std::filesystem::path config;
    std::filesystem::path out = "runs";
    std::filesystem::path oracle;
    std::filesystem::path run;  // existing run directory (check, ladder)
    int workers = 1;
    int count = 0;  // ladder length override
};

int cmd_solve(const Options& opt);
int cmd_reconstruct(const Options& opt);
int cmd_check(const Options& opt);
int cmd_sweep(const Options& opt);
int cmd_ladder(const Options& opt);

} // namespace fstline::cli
