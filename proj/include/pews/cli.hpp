#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pews/config.hpp"
#include "pews/metrics.hpp"

namespace pews {

// Runs every seed of the battery; slots come back in seed order and the
// parallel path is bitwise-identical to the sequential one.
std::vector<RunLog> run_battery(const ConfigFile& cf, bool parallel_seeds);

// Subcommand bodies. Exit codes: 0 success, 2 usage/config, 3 I/O.
int cmd_run(const std::string& config_path, bool no_timing, bool parallel_seeds);
int cmd_gen_data(long long n, std::uint64_t seed, const std::string& out_path);
int cmd_report(const std::string& csv_dir, double target_pct);

// Full argv dispatcher used by the pews binary and by tests.
int run_cli(int argc, const char* const* argv);

}  // namespace pews
